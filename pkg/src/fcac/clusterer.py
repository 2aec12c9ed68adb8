"""Online topological clustering without tunable parameters.

One class implements a family of adaptive-resonance clusterers that differ
only in a small variant configuration:

- ``CAE``:    pairwise-similarity matrix built from exp(1 - CIM), grows a
              topology of nodes and aging edges.
- ``CAE_FC``: same topology rules, but the diversity matrix uses
              exp(correntropy), which saturates much earlier and keeps the
              node set small.  Used server-side in federation.
- ``CA_PLUS``: the edge-free variant; instead of neighbor updates it nudges
              the second winner only.  Used client-side in federation.

Every quantity the algorithm needs (bandwidths, the similarity threshold for
the vigilance test, buffer capacity, edge-deletion thresholds) is estimated
from the data stream itself, so the constructor takes a variant and nothing
else.

The lifecycle per input point: while the buffer capacity is undefined the
point is inserted directly as a node and the diversity of the buffered node
set is examined; once diversity collapses, the capacity and the similarity
threshold freeze and subsequent points go through winner selection and the
three-way vigilance test.  Edge aging, edge pruning, and periodic removal of
isolated nodes keep the topology plastic while protecting regions of the
space that are no longer being visited.
"""

from __future__ import annotations

import csv
import math
import uuid
from dataclasses import dataclass

import numpy as np

from .kernels import (
    DIVERSITY_COLLAPSE,
    SIGMA_FLOOR,
    cim_many,
    diversity,
    iqr,
    percentile,
    silverman_bandwidth,
    similarity_matrix,
)

CASE_NEW_NODE = 1
CASE_WINNER_UPDATE = 2
CASE_NEIGHBOR_UPDATE = 3


@dataclass(frozen=True)
class VariantConfig:
    """Knobs that distinguish the clusterer variants.

    matrix_kind : which pairwise-similarity matrix drives the diversity
        criterion ("cim-exp" or "correntropy-exp").
    topology : whether nodes are linked by aging edges.
    neighbor_divisor : damping of the secondary update (10 spreads the
        update over all neighbors of the winner; 100 nudges only the second
        winner in the edge-free variant).
    """

    matrix_kind: str
    topology: bool
    neighbor_divisor: int


CAE = VariantConfig(matrix_kind="cim-exp", topology=True, neighbor_divisor=10)
CAE_FC = VariantConfig(matrix_kind="correntropy-exp", topology=True, neighbor_divisor=10)
CA_PLUS = VariantConfig(matrix_kind="correntropy-exp", topology=False, neighbor_divisor=100)

VARIANTS = {"cae": CAE, "cae-fc": CAE_FC, "ca-plus": CA_PLUS}


@dataclass(frozen=True)
class ClusterLabeling:
    """Result of cluster extraction: node id -> cluster id."""

    node_to_cluster: dict
    num_clusters: int


def vigilance_case(v1: float, v2: float, threshold: float) -> int:
    """Three-way vigilance test on the winner similarities.

    Returns CASE_NEW_NODE when even the best node is too dissimilar
    (threshold < v1), CASE_WINNER_UPDATE when only the best node passes
    (v1 <= threshold < v2), CASE_NEIGHBOR_UPDATE when both pass
    (v2 <= threshold).
    """
    if v1 > v2:
        raise ValueError(f"winner dissimilarities out of order: {v1} > {v2}")
    if threshold < v1:
        return CASE_NEW_NODE
    if threshold < v2:
        return CASE_WINNER_UPDATE
    return CASE_NEIGHBOR_UPDATE


def similarity_threshold(weights, bandwidths) -> float:
    """Mean nearest-neighbor CIM over a node set.

    For each node, take the minimum CIM to any other node (at the mean of
    the supplied bandwidths); average those minima.  This is the data-driven
    threshold the vigilance test compares against.
    """
    mat = np.asarray(weights, dtype=float)
    bw = np.asarray(bandwidths, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 2:
        raise ValueError("need at least 2 nodes to estimate a similarity threshold")
    if bw.shape[0] != mat.shape[0]:
        raise ValueError("one bandwidth per node required")
    sbar = float(bw.mean())
    diff = mat[:, None, :] - mat[None, :, :]
    corr = np.exp(-(diff * diff) / (2.0 * sbar * sbar)).mean(axis=2)
    dist = np.sqrt(np.maximum(0.0, 1.0 - corr))
    np.fill_diagonal(dist, np.inf)
    return float(dist.min(axis=1).mean())


def _edge_key(a: int, b: int) -> tuple:
    return (a, b) if a < b else (b, a)


class ArtClusterer:
    """Parameter-free online clusterer; see the module docstring.

    Parameters
    ----------
    variant : VariantConfig or str
        One of the predefined variants (``CAE``, ``CAE_FC``, ``CA_PLUS``)
        or its registry name ("cae", "cae-fc", "ca-plus").
    """

    def __init__(self, variant):
        if isinstance(variant, str):
            try:
                variant = VARIANTS[variant]
            except KeyError:
                raise ValueError(
                    f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}"
                ) from None
        if not isinstance(variant, VariantConfig):
            raise TypeError(f"variant must be a VariantConfig or name, got {type(variant)}")
        self.variant = variant
        self.state_token = uuid.uuid4().hex  # identity witness for reset audits
        self._dim = None
        cap = 16
        self._weights = np.zeros((cap, 0))
        self._sigma = np.zeros(cap)
        self._wins = np.zeros(cap, dtype=np.int64)
        self._alive = np.zeros(cap, dtype=bool)
        self._live = np.empty(0, dtype=np.int64)  # ascending node ids
        self._next_id = 0
        self._edges = {}  # (lo_id, hi_id) -> age
        self._adj = {}  # node id -> set of neighbor ids
        self._active = []  # node ids, oldest first, newest last
        self._capacity = None  # buffer capacity; None = undefined, inf = still growing
        self._threshold = None  # vigilance similarity threshold
        self._del_count = 0  # deleted-edge running stats
        self._del_mean = 0.0
        self._seen = 0
        self.prune_events = []  # (inputs_seen, tuple of removed node ids)

    # ------------------------------------------------------------ inspection

    @property
    def dim(self):
        return self._dim

    @property
    def num_nodes(self) -> int:
        return int(self._live.size)

    @property
    def node_ids(self) -> np.ndarray:
        return self._live.copy()

    @property
    def node_weights(self) -> np.ndarray:
        """Live node weights, rows ordered by ascending node id."""
        return self._weights[self._live].copy()

    @property
    def win_counts(self) -> np.ndarray:
        return self._wins[self._live].copy()

    @property
    def bandwidths(self) -> np.ndarray:
        return self._sigma[self._live].copy()

    @property
    def edges(self) -> dict:
        return dict(self._edges)

    @property
    def active_ids(self) -> list:
        return list(self._active)

    @property
    def buffer_capacity(self):
        return self._capacity

    @property
    def threshold(self):
        return self._threshold

    @property
    def inputs_seen(self) -> int:
        return self._seen

    @property
    def deleted_edge_stats(self) -> tuple:
        return (self._del_count, self._del_mean if self._del_count else None)

    def degree(self, nid: int) -> int:
        return len(self._adj.get(nid, ()))

    def weight_of(self, nid: int) -> np.ndarray:
        self._check_node(nid)
        return self._weights[nid].copy()

    def win_count_of(self, nid: int) -> int:
        self._check_node(nid)
        return int(self._wins[nid])

    # -------------------------------------------------------------- training

    def train(self, stream) -> "ArtClusterer":
        """Feed every row of ``stream`` through ``train_one`` once."""
        for x in np.asarray(stream, dtype=float):
            self.train_one(x)
        return self

    def train_one(self, x) -> "ArtClusterer":
        """Process one data point; see the module docstring for the phases."""
        xv = np.asarray(x, dtype=float).ravel()
        if self._dim is None:
            if xv.size == 0:
                raise ValueError("input vector must be non-empty")
            self._dim = int(xv.size)
            self._weights = np.zeros((self._weights.shape[0], self._dim))
        elif xv.size != self._dim:
            raise ValueError(f"dimension mismatch: expected {self._dim}, got {xv.size}")
        if self._in_init_phase():
            self._insert_initial(xv)
        else:
            self._learn(xv)
        self._seen += 1
        if (
            self.variant.topology
            and isinstance(self._capacity, int)
            and self._seen % self._capacity == 0
        ):
            self.prune_isolated_nodes()
        return self

    def _in_init_phase(self) -> bool:
        if self._capacity is None or math.isinf(self._capacity):
            return True
        return self.num_nodes < self._capacity / 2 or self._threshold is None

    def _insert_initial(self, x):
        # Direct insertion: the point becomes a node; all buffered nodes are
        # re-assigned one shared bandwidth estimated from the buffer, and the
        # determinant of their similarity matrix decides whether the buffer
        # has saturated.
        nid = self._create_node(x, SIGMA_FLOOR)
        self._active.append(nid)
        buf = np.asarray(self._active, dtype=np.int64)
        pts = self._weights[buf]
        shared = silverman_bandwidth(pts)
        self._sigma[buf] = shared
        score = diversity(similarity_matrix(pts, shared, self.variant.matrix_kind))
        if score < DIVERSITY_COLLAPSE:
            self._capacity = 2 * len(buf)
            self._threshold = similarity_threshold(pts, self._sigma[buf])
        else:
            self._capacity = math.inf

    def _learn(self, x):
        s1, s2, v1, v2 = self.select_winners(x)
        case = vigilance_case(v1, v2, self._threshold)
        if case == CASE_NEW_NODE:
            sigma = self._fresh_node_bandwidth()
            nid = self._create_node(x, sigma)
            self._activate(nid)
        elif case == CASE_WINNER_UPDATE:
            self.apply_case_two(x, s1)
        else:
            self.apply_case_three(x, s1, s2)
        if self.variant.topology and self.degree(s1) > 0:
            self.prune_edges(s1, self.edge_deletion_threshold(s1))

    def _fresh_node_bandwidth(self) -> float:
        # New nodes estimate their bandwidth from the current buffer; if
        # pruning emptied it, fall back to the full node set.
        ids = np.asarray(self._active, dtype=np.int64) if self._active else self._live
        return silverman_bandwidth(self._weights[ids])

    # ------------------------------------------------------------ operations

    def select_winners(self, x) -> tuple:
        """Two most similar nodes to ``x`` by CIM at the mean bandwidth.

        Returns ``(first_id, second_id, first_cim, second_cim)``; ties go to
        the lower node id.
        """
        if self.num_nodes < 2:
            raise ValueError("winner selection needs at least 2 nodes")
        xv = np.asarray(x, dtype=float).ravel()
        live = self._live
        sbar = float(self._sigma[live].mean())
        vals = cim_many(xv, self._weights[live], sbar)
        i1 = int(np.argmin(vals))  # first occurrence wins the tie: lowest id
        v1 = float(vals[i1])
        vals[i1] = np.inf
        i2 = int(np.argmin(vals))
        v2 = float(vals[i2])
        return int(live[i1]), int(live[i2]), v1, v2

    def compute_threshold(self) -> float:
        """Similarity threshold estimated from the active buffer."""
        ids = np.asarray(self._active, dtype=np.int64)
        if ids.size < 2:
            raise ValueError("need at least 2 active nodes")
        return similarity_threshold(self._weights[ids], self._sigma[ids])

    def apply_case_two(self, x, s1: int) -> "ArtClusterer":
        """Winner update: bump the winning count, move the winner a
        1/count step toward ``x``, refresh its buffer slot, and age every
        edge at the winner."""
        self._check_node(s1)
        xv = np.asarray(x, dtype=float).ravel()
        self._wins[s1] += 1
        self._weights[s1] += (xv - self._weights[s1]) / self._wins[s1]
        self._activate(s1)
        if self.variant.topology:
            for nb in self._adj.get(s1, ()):
                self._edges[_edge_key(s1, nb)] += 1
        return self

    def apply_case_three(self, x, s1: int, s2: int) -> "ArtClusterer":
        """Winner update plus secondary update.

        Topology variants connect the two winners with a fresh age-1 edge
        (resetting an existing one) and pull every neighbor of the winner
        1/(divisor * count) toward ``x``.  The edge-free variant nudges only
        the second winner, more gently.
        """
        self._check_node(s2)
        if s1 == s2:
            raise ValueError("first and second winner must differ")
        self.apply_case_two(x, s1)
        xv = np.asarray(x, dtype=float).ravel()
        div = float(self.variant.neighbor_divisor)
        if self.variant.topology:
            self._edges[_edge_key(s1, s2)] = 1
            self._adj.setdefault(s1, set()).add(s2)
            self._adj.setdefault(s2, set()).add(s1)
            for nb in sorted(self._adj[s1]):
                self._weights[nb] += (xv - self._weights[nb]) / (div * self._wins[nb])
        else:
            self._weights[s2] += (xv - self._weights[s2]) / (div * self._wins[s2])
        return self

    def edge_deletion_threshold(self, s1: int) -> float:
        """Adaptive age limit for the winner's edges.

        Blends the 75th-percentile-plus-IQR of the current incident ages
        with the running mean age of previously deleted edges, weighted by
        how many deletions have happened.
        """
        self._check_node(s1)
        nbrs = self._adj.get(s1)
        if not nbrs:
            raise ValueError(f"node {s1} has no incident edges")
        ages = [float(self._edges[_edge_key(s1, nb)]) for nb in sorted(nbrs)]
        a_thr = percentile(ages, 75.0) + iqr(ages)
        if self._del_count == 0:
            return a_thr
        w = self._del_count / (self._del_count + len(ages))
        return self._del_mean * w + a_thr * (1.0 - w)

    def prune_edges(self, s1: int, a_max: float) -> list:
        """Remove the winner's edges older than ``a_max``; returns the
        removed neighbor ids.  Removed ages feed the running deletion
        statistics."""
        self._check_node(s1)
        removed = []
        for nb in sorted(self._adj.get(s1, set())):
            key = _edge_key(s1, nb)
            age = self._edges[key]
            if age > a_max:
                del self._edges[key]
                self._adj[s1].discard(nb)
                self._adj[nb].discard(s1)
                self._del_mean = (self._del_mean * self._del_count + age) / (
                    self._del_count + 1
                )
                self._del_count += 1
                removed.append(nb)
        return removed

    def prune_isolated_nodes(self) -> list:
        """Delete all degree-0 nodes (topology variants).

        If the node set shrinks below half the buffer capacity the state
        re-enters the growing phase: capacity and threshold become undefined
        again and subsequent points are inserted directly.
        """
        if not self.variant.topology:
            return []
        isolated = [int(nid) for nid in self._live if not self._adj.get(int(nid))]
        for nid in isolated:
            self._delete_node(nid)
        if isolated:
            self.prune_events.append((self._seen, tuple(isolated)))
        if (
            isinstance(self._capacity, int)
            and self.num_nodes < self._capacity / 2
        ):
            self._capacity = None
            self._threshold = None
        return isolated

    def extract_clusters(self) -> ClusterLabeling:
        """Group nodes into clusters.

        Topology variants take connected components of the edge graph
        (isolated nodes become singletons); the edge-free variant reports
        every node as its own cluster.
        """
        mapping = {}
        if not self.variant.topology:
            for idx, nid in enumerate(int(v) for v in self._live):
                mapping[nid] = idx
            return ClusterLabeling(mapping, len(mapping))
        cluster = 0
        for nid in (int(v) for v in self._live):
            if nid in mapping:
                continue
            stack = [nid]
            mapping[nid] = cluster
            while stack:
                cur = stack.pop()
                for nb in self._adj.get(cur, ()):
                    if nb not in mapping:
                        mapping[nb] = cluster
                        stack.append(nb)
            cluster += 1
        return ClusterLabeling(mapping, cluster)

    def predict(self, x, labeling: ClusterLabeling | None = None) -> int:
        """Cluster id of the node nearest to ``x`` (CIM at mean bandwidth)."""
        if self.num_nodes == 0:
            raise ValueError("cannot predict with an empty node set")
        if labeling is None:
            labeling = self.extract_clusters()
        xv = np.asarray(x, dtype=float).ravel()
        live = self._live
        sbar = float(self._sigma[live].mean())
        vals = cim_many(xv, self._weights[live], sbar)
        return labeling.node_to_cluster[int(live[int(np.argmin(vals))])]

    def predict_many(self, points, labeling: ClusterLabeling | None = None) -> np.ndarray:
        """Vectorized ``predict`` over the rows of ``points``."""
        if self.num_nodes == 0:
            raise ValueError("cannot predict with an empty node set")
        if labeling is None:
            labeling = self.extract_clusters()
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D matrix")
        live = self._live
        w = self._weights[live]
        sbar = float(self._sigma[live].mean())
        node_cluster = np.array(
            [labeling.node_to_cluster[int(nid)] for nid in live], dtype=np.int64
        )
        out = np.empty(pts.shape[0], dtype=np.int64)
        denom = 2.0 * sbar * sbar
        for start in range(0, pts.shape[0], 512):
            chunk = pts[start : start + 512]
            diff = chunk[:, None, :] - w[None, :, :]
            corr = np.exp(-(diff * diff) / denom).mean(axis=2)
            nearest = np.argmin(np.sqrt(np.maximum(0.0, 1.0 - corr)), axis=1)
            out[start : start + 512] = node_cluster[nearest]
        return out

    # -------------------------------------------------------------- plumbing

    def _check_node(self, nid) -> None:
        if not (0 <= nid < self._alive.size and self._alive[nid]):
            raise ValueError(f"unknown node id {nid}")

    def _create_node(self, x, sigma: float) -> int:
        nid = self._next_id
        self._next_id += 1
        if nid >= self._alive.size:
            grow = max(16, self._alive.size)
            self._weights = np.vstack([self._weights, np.zeros((grow, self._dim))])
            self._sigma = np.concatenate([self._sigma, np.zeros(grow)])
            self._wins = np.concatenate([self._wins, np.zeros(grow, dtype=np.int64)])
            self._alive = np.concatenate([self._alive, np.zeros(grow, dtype=bool)])
        self._weights[nid] = x
        self._sigma[nid] = max(float(sigma), SIGMA_FLOOR)
        self._wins[nid] = 1
        self._alive[nid] = True
        self._live = np.append(self._live, nid)  # ids are monotone: stays sorted
        if self.variant.topology:
            self._adj.setdefault(nid, set())
        return nid

    def _activate(self, nid: int) -> None:
        try:
            self._active.remove(nid)
        except ValueError:
            pass
        self._active.append(nid)
        cap = self._capacity
        if isinstance(cap, int):
            while len(self._active) > cap:
                self._active.pop(0)

    def _delete_node(self, nid: int) -> None:
        self._alive[nid] = False
        self._live = self._live[self._live != nid]
        try:
            self._active.remove(nid)
        except ValueError:
            pass
        self._adj.pop(nid, None)


def write_nodes_csv(clusterer: ArtClusterer, path) -> None:
    """Dump the live nodes to CSV.

    Columns: ``node_id, cluster_id, M, sigma, w_0 .. w_{d-1}`` where M is
    the winning count.  Cluster ids come from ``extract_clusters``.
    """
    labeling = clusterer.extract_clusters()
    d = clusterer.dim or 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "cluster_id", "M", "sigma"] + [f"w_{j}" for j in range(d)])
        for nid in clusterer.node_ids:
            nid = int(nid)
            writer.writerow(
                [nid, labeling.node_to_cluster[nid], clusterer.win_count_of(nid),
                 repr(float(clusterer._sigma[nid]))]
                + [repr(float(v)) for v in clusterer.weight_of(nid)]
            )
