"""One-shot federated clustering orchestration.

Each client noises its own data locally, streams it once through an
edge-free clusterer, and ships only node weights and winning counts to the
server.  The server orders the union of client nodes by per-client winning
count percentile (important nodes first), then streams them once through a
topology-building clusterer.  Client and server states persist across
rounds, so newly arriving data extends earlier structure instead of
replacing it.

The privacy boundary is structural: the only object that crosses from
client to server is a ClientResult, which holds no raw data points.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .clusterer import CA_PLUS, CAE_FC, ArtClusterer, ClusterLabeling
from .kernels import percentile
from .privacy import PrivacyParams, privatize_dataset

# rng stream tag separating the server-side shuffle from client noise draws
_SHUFFLE_CHANNEL = 75


@dataclass(frozen=True)
class ClientResult:
    """Snapshot of one client's model: the only client->server payload."""

    nodes: np.ndarray
    winning_counts: np.ndarray
    client_id: int

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(
            self, "winning_counts", np.asarray(self.winning_counts, dtype=np.int64)
        )
        if self.nodes.ndim != 2:
            raise ValueError("nodes must be a 2-D matrix")
        if self.nodes.shape[0] != self.winning_counts.shape[0]:
            raise ValueError("one winning count per node required")
        if self.winning_counts.size and self.winning_counts.min() < 1:
            raise ValueError("winning counts must be positive")

    @property
    def num_nodes(self) -> int:
        return int(self.nodes.shape[0])


@dataclass(frozen=True)
class FederationConfig:
    num_clients: int
    epsilon: float = math.inf
    rng_seed: int = 0
    rounds: int = 1

    def __post_init__(self):
        if self.num_clients < 1:
            raise ValueError("need at least one client")
        if not (self.epsilon > 0):
            raise ValueError(f"epsilon must be positive (or inf), got {self.epsilon}")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")
        if self.rounds < 1:
            raise ValueError("rounds must be positive")


def client_seed(rng_seed: int, client_id: int, round_index: int = 0) -> list:
    """Noise-stream seed for one client in one round.

    The base is rng_seed XOR client_id; the round index is appended so
    successive rounds draw fresh noise.
    """
    return [rng_seed ^ client_id, round_index]


def run_client(local_data, epsilon, client_state: ArtClusterer, seed, client_id: int = 0):
    """Privatize one client's data, stream it through the client model, and
    snapshot the transferable result.

    The sensitivity of the noise mechanism is that client's own per-feature
    range.  Returns the (persisting) state and a ClientResult.
    """
    if client_state.variant.topology:
        raise ValueError("client state must use the edge-free variant")
    pts = np.atleast_2d(np.asarray(local_data, dtype=float))
    if pts.size == 0:
        warnings.warn(f"client {client_id} has no data; skipping", stacklevel=2)
        return client_state, ClientResult(
            np.zeros((0, pts.shape[1] if pts.ndim == 2 else 0)),
            np.zeros(0, dtype=np.int64),
            client_id,
        )
    params = PrivacyParams.from_data(pts, epsilon)
    noised = privatize_dataset(pts, params, np.random.default_rng(seed))
    client_state.train(noised)
    return client_state, ClientResult(
        client_state.node_weights, client_state.win_counts, client_id
    )


def sort_nodes(results, seed) -> np.ndarray:
    """Order the union of client nodes: high winning counts first.

    Within each client, nodes at or above that client's 75th count
    percentile form the high group; the two groups are pooled across
    clients, shuffled within themselves, and concatenated high-then-low.
    """
    highs, lows = [], []
    for res in results:
        if res.num_nodes == 0:
            continue
        cut = percentile(res.winning_counts, 75.0)
        mask = res.winning_counts >= cut
        highs.append(res.nodes[mask])
        lows.append(res.nodes[~mask])
    if not highs:
        raise ValueError("every client result is empty")
    rng = np.random.default_rng(seed)
    high = np.vstack(highs)
    low = np.vstack(lows) if lows else np.zeros((0, high.shape[1]))
    rng.shuffle(high)
    rng.shuffle(low)
    return np.vstack([high, low])


def run_server(server_state: ArtClusterer, stream) -> ArtClusterer:
    """Feed the sorted node stream once through the server model."""
    if not server_state.variant.topology:
        raise ValueError("server state must build a topology")
    pts = np.asarray(stream, dtype=float)
    if pts.size == 0:
        raise ValueError("server stream is empty")
    return server_state.train(pts)


def fcac_round(
    clients_data,
    config: FederationConfig,
    client_states,
    server_state,
    round_index: int = 0,
    transfer_log: list | None = None,
    max_workers: int | None = None,
):
    """One federated round: clients in isolation, one transfer, server pass.

    Appends the round's ClientResults to ``transfer_log`` when given, which
    doubles as the audit trail that exactly C transfers happened.  Client
    execution may be parallel (``max_workers``); results are identical
    either way because states are isolated and seeds are per-client.
    """
    if len(clients_data) != config.num_clients:
        raise ValueError(
            f"expected {config.num_clients} client datasets, got {len(clients_data)}"
        )
    if len(client_states) != config.num_clients:
        raise ValueError(
            f"expected {config.num_clients} client states, got {len(client_states)}"
        )

    def one(c):
        return run_client(
            clients_data[c],
            config.epsilon,
            client_states[c],
            client_seed(config.rng_seed, c, round_index),
            client_id=c,
        )[1]

    ids = range(config.num_clients)
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(one, ids))
    else:
        results = [one(c) for c in ids]

    if transfer_log is not None:
        transfer_log.extend(results)
    stream = sort_nodes(results, [config.rng_seed, round_index, _SHUFFLE_CHANNEL])
    run_server(server_state, stream)
    return client_states, server_state, server_state.extract_clusters()


class FCAC:
    """Parameter-free federated clustering entry point.

    Takes the federation shape (client count), the privacy budget, and a
    seed; every clustering quantity is estimated from the data.  Call
    ``fit_round`` once per batch of client data; states persist between
    calls.
    """

    def __init__(self, num_clients: int = 1, epsilon: float = math.inf, seed: int = 0):
        self.config = FederationConfig(num_clients, epsilon, seed)
        self.clients = [ArtClusterer(CA_PLUS) for _ in range(num_clients)]
        self.server = ArtClusterer(CAE_FC)
        self.transfer_log = []
        self.rounds_completed = 0
        self._tokens = [s.state_token for s in self.clients] + [self.server.state_token]

    def fit_round(self, clients_data, max_workers: int | None = None) -> ClusterLabeling:
        before = len(self.transfer_log)
        _, _, labeling = fcac_round(
            clients_data,
            self.config,
            self.clients,
            self.server,
            round_index=self.rounds_completed,
            transfer_log=self.transfer_log,
            max_workers=max_workers,
        )
        assert len(self.transfer_log) - before == self.config.num_clients
        tokens = [s.state_token for s in self.clients] + [self.server.state_token]
        assert tokens == self._tokens, "a state object was replaced mid-run"
        self.rounds_completed += 1
        return labeling

    def predict(self, x) -> int:
        return self.server.predict(x)

    def predict_many(self, points) -> np.ndarray:
        return self.server.predict_many(points)


def write_transfer_csv(results, path) -> None:
    """Dump transferred nodes as rows of ``client_id, M, w_0 .. w_{d-1}``."""
    d = max((r.nodes.shape[1] for r in results if r.num_nodes), default=0)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["client_id", "M"] + [f"w_{j}" for j in range(d)])
        for res in results:
            for m, w in zip(res.winning_counts, res.nodes):
                writer.writerow([res.client_id, int(m)] + [repr(float(v)) for v in w])


def write_transfer_json(results, path) -> None:
    """Dump transfers as one JSON envelope per client."""
    payload = [
        {
            "client_id": res.client_id,
            "d": int(res.nodes.shape[1]) if res.num_nodes else 0,
            "nodes": [
                {"m": int(m), "w": [float(v) for v in w]}
                for m, w in zip(res.winning_counts, res.nodes)
            ],
        }
        for res in results
    ]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
