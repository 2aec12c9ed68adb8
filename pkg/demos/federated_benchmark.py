"""One-shot federation across many clients, with and without privacy.

Three well-separated Gaussian blobs are split across eight clients two
ways: evenly (iid) and with Dirichlet-skewed class mixes, so some
clients barely see some clusters.  Each client trains locally on
noised data and ships only its node weights and winning counts; the
server fuses those summaries in one shot.  We sweep two privacy
budgets and report how the fused clustering scores.

Run:  python3 demos/federated_benchmark.py
"""

from fcac import ExperimentConfig, cmd_benchmark

BLOBS = {"generator": {
    "kind": "gaussian-mixture",
    "components": [
        {"mean": [0.0, 0.0], "cov": 0.4, "n": 400},
        {"mean": [6.0, 0.0], "cov": 0.4, "n": 400},
        {"mean": [3.0, 5.0], "cov": 0.4, "n": 400},
    ],
    "scale_bounds": [0.0, 1.0],
}}


def main():
    for scenario in ({"kind": "iid"}, {"kind": "dirichlet", "alpha": 0.5}):
        config = ExperimentConfig.from_dict({
            "kind": "federated-benchmark",
            "seeds": [0, 1, 2],
            "num_clients": 8,
            "epsilons": ["inf", 25],
            "scenario": scenario,
            "dataset": BLOBS,
        })
        report = cmd_benchmark(config)
        print(f"scenario: {scenario['kind']}"
              + (f" (alpha={scenario['alpha']})" if "alpha" in scenario else ""))
        print(f"  {'epsilon':>8}  {'ARI':>12}  {'NMI':>12}  {'nodes':>10}")
        for row in report["aggregate"]["per_epsilon"]:
            print(f"  {str(row['epsilon']):>8}"
                  f"  {row['ari']['mean']:6.3f}±{row['ari']['std']:.3f}"
                  f"  {row['nmi']['mean']:6.3f}±{row['nmi']['std']:.3f}"
                  f"  {row['nodes']['mean']:6.1f}±{row['nodes']['std']:.1f}")
        print()
    print("On blobs this separated the structure comes through in every "
          "setting; at this small scale the budget and split effects sit "
          "inside seed-to-seed noise.  Larger runs separate them.")


if __name__ == "__main__":
    main()
