"""Learning in rounds without ever starting over.

Two clients receive three batches of the same three-cluster mixture
over three rounds.  Their clusterers, and the server that fuses them,
are created once and only ever updated; after each round we score the
server's clustering of everything seen so far against the generator's
component labels.  The node count settling between rounds 2 and 3 is
the point: new data that brings no new structure changes little.

Run:  python3 demos/continual_rounds.py
"""

import math

import numpy as np

from fcac import FCAC, ari
from fcac.experiments import continual_protocol


def main():
    ds, schedule = continual_protocol(seed=3, scale=25)
    model = FCAC(num_clients=2, epsilon=math.inf, seed=3)
    print(f"dataset: {ds.points.shape[0]} points, "
          f"{ds.num_classes} generator components\n")
    print(f"{'round':>5}  {'fed/client':>10}  {'server nodes':>12}  "
          f"{'clusters':>8}  {'ARI':>6}")
    for r, parts in enumerate(schedule, start=1):
        labeling = model.fit_round([ds.points[p] for p in parts])
        pred = model.predict_many(ds.points)
        print(f"{r:>5}  {len(parts[0]):>10}  {model.server.num_nodes:>12}  "
              f"{labeling.num_clusters:>8}  {ari(ds.labels, pred):6.3f}")
    print(f"\nrounds completed: {model.rounds_completed}; "
          f"transfers logged: {len(model.transfer_log)} "
          "(one per client per round)")


if __name__ == "__main__":
    main()
