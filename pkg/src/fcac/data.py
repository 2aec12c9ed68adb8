"""Dataset loading, scaling, synthesis, and client partitioning.

A LabeledDataset is a point matrix with parallel integer class labels.
Partitions are lists of index arrays, one per client; both splitters return
exact set partitions of the row indices.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np


@dataclass
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.points.ndim != 2:
            raise ValueError("points must be a 2-D matrix")
        if self.points.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.points.shape[0]} points but {self.labels.shape[0]} labels"
            )

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def num_classes(self) -> int:
        return int(np.unique(self.labels).size)

    def subset(self, indices, name: str | None = None) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.points[idx], self.labels[idx], name or self.name)


def load_csv(path, name: str | None = None) -> LabeledDataset:
    """Read a dataset from CSV: numeric feature columns, last column an
    integer class label.

    A first row that does not parse as numbers is treated as a header and
    skipped; any later unparseable cell is an error naming its row and
    column (1-based, as an editor would show them).
    """
    rows = []
    with open(path, newline="") as fh:
        raw = [r for r in csv.reader(fh) if r]
    if not raw:
        raise ValueError(f"{path}: no data rows")
    start = 0
    try:
        [float(v) for v in raw[0]]
    except ValueError:
        start = 1  # header line
    width = len(raw[start]) if start < len(raw) else 0
    if width < 2:
        raise ValueError(f"{path}: need at least one feature column plus a label")
    for i, row in enumerate(raw[start:], start=start + 1):
        if len(row) != width:
            raise ValueError(
                f"{path}: row {i} has {len(row)} columns, expected {width}"
            )
        parsed = []
        for j, cell in enumerate(row, start=1):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ValueError(
                    f"{path}: row {i}, column {j}: not a number: {cell!r}"
                ) from None
        rows.append(parsed)
    mat = np.asarray(rows, dtype=float)
    labels = mat[:, -1]
    if not np.all(labels == np.round(labels)):
        bad = int(np.argmax(labels != np.round(labels))) + start + 1
        raise ValueError(f"{path}: row {bad}: label column must hold integers")
    return LabeledDataset(
        mat[:, :-1], labels.astype(np.int64),
        name or os.path.splitext(os.path.basename(str(path)))[0],
    )


def minmax_scale(data, bounds=(0.0, 1.0)):
    """Affine-map each dimension's observed [min, max] onto ``bounds``.

    Accepts a matrix or a LabeledDataset (returned as the same kind).
    Constant dimensions map to the lower bound, which keeps their spread,
    and hence any range-derived noise scale, at zero.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if hi <= lo:
        raise ValueError(f"bounds must satisfy lo < hi, got {bounds}")
    if isinstance(data, LabeledDataset):
        return LabeledDataset(
            minmax_scale(data.points, bounds), data.labels, data.name
        )
    mat = np.asarray(data, dtype=float)
    if mat.size == 0:
        raise ValueError("cannot scale an empty matrix")
    mn = mat.min(axis=0)
    span = mat.max(axis=0) - mn
    safe = np.where(span == 0.0, 1.0, span)
    out = lo + (mat - mn) * (hi - lo) / safe
    out[:, span == 0.0] = lo
    return out


def _final_shuffle(parts, rng):
    # mix each client's stream so it does not arrive class-sorted
    return [rng.permutation(np.concatenate(p)) if p else np.empty(0, dtype=np.int64)
            for p in parts]


def split_iid(dataset: LabeledDataset, clients: int, seed: int) -> list:
    """Deal each class round-robin across clients after a per-class shuffle.

    Every client ends up with the same class mix to within one point per
    class.
    """
    n = len(dataset)
    if not 1 <= clients <= n:
        raise ValueError(f"need 1 <= clients <= {n}, got {clients}")
    rng = np.random.default_rng(seed)
    parts = [[] for _ in range(clients)]
    for cls in np.unique(dataset.labels):
        idx = rng.permutation(np.flatnonzero(dataset.labels == cls))
        for c in range(clients):
            parts[c].append(idx[c::clients])
    return _final_shuffle(parts, rng)


def split_dirichlet(
    dataset: LabeledDataset, clients: int, alpha: float, seed: int, max_tries: int = 1000
) -> list:
    """Allot each class to clients by Dirichlet(alpha)-drawn proportions.

    Draws are repeated until every client holds at least one point; an
    empty client would have nothing to train on.
    """
    if clients < 2:
        raise ValueError("dirichlet splitting needs at least 2 clients")
    if not (alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha}")
    n = len(dataset)
    if clients > n:
        raise ValueError(f"more clients ({clients}) than points ({n})")
    rng = np.random.default_rng(seed)
    classes = np.unique(dataset.labels)
    for _ in range(max_tries):
        parts = [[] for _ in range(clients)]
        for cls in classes:
            idx = rng.permutation(np.flatnonzero(dataset.labels == cls))
            props = rng.dirichlet(np.full(clients, alpha))
            cuts = np.round(np.cumsum(props)[:-1] * idx.size).astype(int)
            for c, chunk in enumerate(np.split(idx, cuts)):
                parts[c].append(chunk)
        if all(sum(len(chunk) for chunk in p) > 0 for p in parts):
            return _final_shuffle(parts, rng)
    raise RuntimeError(
        f"no draw filled every client in {max_tries} tries; alpha too small"
    )


def gen_gaussian_mixture(
    components, scale_bounds=(0.0, 1.0), seed: int = 0, name: str = "gaussian-mixture"
) -> LabeledDataset:
    """Sample labeled points from Gaussian components.

    ``components`` is a list of (mean, cov, n) tuples or of mappings with
    those keys; cov may be a scalar, a diagonal vector, or a full matrix.
    The pooled sample is min-max scaled to ``scale_bounds`` (pass None to
    skip scaling).
    """
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for k, comp in enumerate(components):
        if isinstance(comp, dict):
            mean, cov, count = comp["mean"], comp["cov"], comp["n"]
        else:
            mean, cov, count = comp
        mean = np.asarray(mean, dtype=float).ravel()
        d = mean.size
        cov = np.asarray(cov, dtype=float)
        if cov.ndim == 0:
            cov = np.eye(d) * float(cov)
        elif cov.ndim == 1:
            cov = np.diag(cov)
        if cov.shape != (d, d):
            raise ValueError(
                f"component {k}: covariance shape {cov.shape} does not fit dim {d}"
            )
        if np.linalg.eigvalsh((cov + cov.T) / 2.0).min() < -1e-9:
            raise ValueError(f"component {k}: covariance is not positive semidefinite")
        blocks.append(rng.multivariate_normal(mean, cov, int(count)))
        labels.append(np.full(int(count), k, dtype=np.int64))
    pts = np.vstack(blocks)
    lab = np.concatenate(labels)
    if scale_bounds is not None:
        pts = minmax_scale(pts, scale_bounds)
    return LabeledDataset(pts, lab, name)
