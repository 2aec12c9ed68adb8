"""Clustering agreement metrics and a small optimal-transport diagnostic.

ARI, NMI, and AMI are computed from a shared contingency table; the
1-Wasserstein distance solves an exact assignment problem, with a cheap
paired upper bound for the original-vs-noised use case where row i of one
set corresponds to row i of the other.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import gammaln

MAX_EXACT_TRANSPORT = 2000


def contingency_table(truth, pred) -> np.ndarray:
    """Count matrix indexed by (label in ``truth``, label in ``pred``).

    Labels may be any hashable values; rows/columns follow sorted label
    order.
    """
    t = np.asarray(truth).ravel()
    p = np.asarray(pred).ravel()
    if t.size != p.size:
        raise ValueError(f"label lengths differ: {t.size} vs {p.size}")
    if t.size < 2:
        raise ValueError("need at least 2 samples")
    _, ti = np.unique(t, return_inverse=True)
    _, pi = np.unique(p, return_inverse=True)
    counts = np.zeros((int(ti.max()) + 1, int(pi.max()) + 1), dtype=np.int64)
    np.add.at(counts, (ti, pi), 1)
    return counts


def _comb2(v):
    return v * (v - 1) / 2.0


def ari(truth, pred) -> float:
    """Adjusted Rand index: pair-counting agreement corrected for chance."""
    counts = contingency_table(truth, pred)
    n = counts.sum()
    index = _comb2(counts.astype(float)).sum()
    sum_rows = _comb2(counts.sum(axis=1).astype(float)).sum()
    sum_cols = _comb2(counts.sum(axis=0).astype(float)).sum()
    expected = sum_rows * sum_cols / _comb2(float(n))
    maximum = (sum_rows + sum_cols) / 2.0
    if maximum == expected:
        # both partitions trivial (all-singletons or single-block): identical
        return 1.0
    return float((index - expected) / (maximum - expected))


def _entropy(marginal, n) -> float:
    p = marginal[marginal > 0] / n
    return float(-(p * np.log(p)).sum())


def _mutual_info(counts) -> float:
    n = counts.sum()
    nz = counts[counts > 0].astype(float)
    if counts.shape[0] == 1 or counts.shape[1] == 1:
        return 0.0
    outer = np.outer(counts.sum(axis=1), counts.sum(axis=0)).astype(float)
    outer = outer[counts > 0]
    pij = nz / n
    return float((pij * np.log(n * nz / outer)).sum())


def nmi(truth, pred) -> float:
    """Mutual information normalized by the geometric mean of the entropies."""
    counts = contingency_table(truth, pred)
    n = counts.sum()
    h_t = _entropy(counts.sum(axis=1), n)
    h_p = _entropy(counts.sum(axis=0), n)
    if h_t == 0.0 and h_p == 0.0:
        return 1.0
    if h_t == 0.0 or h_p == 0.0:
        return 0.0
    return float(_mutual_info(counts) / np.sqrt(h_t * h_p))


def _expected_mutual_info(counts) -> float:
    # expectation of MI over random tables with the observed marginals
    n = int(counts.sum())
    a = counts.sum(axis=1).astype(int)
    b = counts.sum(axis=0).astype(int)
    log_n = np.log(n)
    total = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1, dtype=float)
            info = nij / n * (log_n + np.log(nij) - np.log(ai) - np.log(bj))
            log_prob = (
                gammaln(ai + 1)
                + gammaln(bj + 1)
                + gammaln(n - ai + 1)
                + gammaln(n - bj + 1)
                - gammaln(n + 1)
                - gammaln(nij + 1)
                - gammaln(ai - nij + 1)
                - gammaln(bj - nij + 1)
                - gammaln(n - ai - bj + nij + 1)
            )
            total += float((info * np.exp(log_prob)).sum())
    return total


def ami(truth, pred) -> float:
    """Mutual information adjusted for chance, arithmetic-mean normalized."""
    counts = contingency_table(truth, pred)
    n = counts.sum()
    if counts.shape == (1, 1):
        return 1.0
    h_t = _entropy(counts.sum(axis=1), n)
    h_p = _entropy(counts.sum(axis=0), n)
    emi = _expected_mutual_info(counts)
    mi = _mutual_info(counts)
    denom = (h_t + h_p) / 2.0 - emi
    # keep the ratio finite when the normalizer degenerates
    eps = np.finfo(float).eps
    denom = min(denom, -eps) if denom < 0 else max(denom, eps)
    return float((mi - emi) / denom)


def wasserstein1(points_a, points_b) -> float:
    """Exact 1-Wasserstein distance between two equal-size point sets.

    Minimum mean Euclidean cost over perfect matchings; cubic in n, so the
    size is capped at MAX_EXACT_TRANSPORT.
    """
    a = np.atleast_2d(np.asarray(points_a, dtype=float))
    b = np.atleast_2d(np.asarray(points_b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"point sets differ in shape: {a.shape} vs {b.shape}")
    n = a.shape[0]
    if n > MAX_EXACT_TRANSPORT:
        raise ValueError(
            f"exact matching capped at {MAX_EXACT_TRANSPORT} points, got {n}"
        )
    cost = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / n)


def wasserstein1_paired(points_a, points_b) -> float:
    """Mean Euclidean distance under the identity matching.

    Upper-bounds ``wasserstein1``; exact whenever row i of one set is a
    perturbed copy of row i of the other and the perturbation is small.
    """
    a = np.atleast_2d(np.asarray(points_a, dtype=float))
    b = np.atleast_2d(np.asarray(points_b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"point sets differ in shape: {a.shape} vs {b.shape}")
    return float(np.sqrt(((a - b) ** 2).sum(axis=1)).mean())


def wasserstein1_marginal(points_a, points_b) -> float:
    """Mean over dimensions of the exact 1-D transport distance.

    For equal-size samples the 1-D optimal transport pairs sorted values,
    so each dimension costs ``mean |sort(a_j) - sort(b_j)|``.  Compares
    marginal distributions only; joint structure across dimensions is
    ignored, which makes this far less sensitive to independent
    per-coordinate noise than the full ``wasserstein1``.
    """
    a = np.atleast_2d(np.asarray(points_a, dtype=float))
    b = np.atleast_2d(np.asarray(points_b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"point sets differ in shape: {a.shape} vs {b.shape}")
    return float(np.abs(np.sort(a, axis=0) - np.sort(b, axis=0)).mean())


def count_clusters(labeling) -> int:
    """Number of distinct clusters in a labeling (mapping or label array)."""
    mapping = getattr(labeling, "node_to_cluster", labeling)
    if isinstance(mapping, dict):
        values = mapping.values()
    else:
        values = np.asarray(mapping).ravel().tolist()
    return len(set(values))
