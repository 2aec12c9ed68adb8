"""Shared numerical kernels.

Correntropy and the correntropy-induced metric (CIM) are the similarity
measures used everywhere in this package: by the online clusterers for
winner selection and vigilance, and by the diversity criterion that decides
when a node buffer has stopped producing novel structure.  The module also
carries the bandwidth selector, linear-interpolation percentile statistics,
and the pairwise-similarity matrix whose determinant acts as the diversity
score.
"""

from __future__ import annotations

import numpy as np

# Bandwidth values are clamped from below so degenerate sample sets (a
# single point, or zero variance in every dimension) stay usable.
SIGMA_FLOOR = 1e-6

# Determinant level below which a similarity matrix counts as collapsed.
DIVERSITY_COLLAPSE = 1e-6

_MATRIX_KINDS = ("cim-exp", "correntropy-exp")


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    return arr


def _check_sigma(sigma) -> float:
    s = float(sigma)
    if not s > 0.0:
        raise ValueError(f"bandwidth must be positive, got {sigma!r}")
    return s


def correntropy(x, y, sigma) -> float:
    """Gaussian-kernel correntropy between two vectors.

    Averages the per-dimension Gaussian kernel:

        C(x, y) = (1/d) * sum_i exp(-(x_i - y_i)^2 / (2 sigma^2))

    Parameters
    ----------
    x, y : array_like, shape (d,)
        Input vectors of equal dimension.
    sigma : float
        Kernel bandwidth, strictly positive.

    Returns
    -------
    float
        Similarity in (0, 1]; equals 1 only when ``x == y``.
    """
    xv = _as_vector(x, "x")
    yv = _as_vector(y, "y")
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape} vs {yv.shape}")
    s = _check_sigma(sigma)
    diff = xv - yv
    return float(np.mean(np.exp(-(diff * diff) / (2.0 * s * s))))


def cim(x, y, sigma) -> float:
    """Correntropy-induced metric: ``sqrt(1 - correntropy(x, y, sigma))``.

    A bounded dissimilarity in [0, 1].  Zero only for identical vectors;
    approaches 1 as the vectors separate relative to the bandwidth.
    """
    c = correntropy(x, y, sigma)
    return float(np.sqrt(max(0.0, 1.0 - c)))


def cim_many(x, ys, sigma) -> np.ndarray:
    """CIM from one vector to each row of a matrix.

    Vectorized equivalent of ``[cim(x, y, sigma) for y in ys]``; used on the
    hot path of winner selection.

    Parameters
    ----------
    x : array_like, shape (d,)
    ys : array_like, shape (k, d)
    sigma : float

    Returns
    -------
    numpy.ndarray, shape (k,)
    """
    xv = _as_vector(x, "x")
    mat = np.asarray(ys, dtype=float)
    if mat.ndim != 2:
        raise ValueError(f"ys must be 2-D, got shape {mat.shape}")
    if mat.shape[1] != xv.shape[0]:
        raise ValueError(f"dimension mismatch: {xv.shape[0]} vs {mat.shape[1]}")
    s = _check_sigma(sigma)
    diff = mat - xv
    corr = np.exp(-(diff * diff) / (2.0 * s * s)).mean(axis=1)
    return np.sqrt(np.maximum(0.0, 1.0 - corr))


def silverman_factor(dim: int, count: int) -> float:
    """Scalar part of the bandwidth rule: ``(4/(2+d))^(1/(4+d)) * n^(-1/(4+d))``."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    expo = 1.0 / (4.0 + dim)
    return float((4.0 / (2.0 + dim)) ** expo * count ** (-expo))


def silverman_bandwidth(samples) -> float:
    """Single bandwidth for a sample set by the rule-of-thumb selector.

    Computes a per-dimension bandwidth ``H_j = factor * std_j`` (population
    standard deviation) and returns the median over dimensions, clamped from
    below by ``SIGMA_FLOOR``.

    Parameters
    ----------
    samples : array_like, shape (n, d)
        Row-per-sample matrix; a single sample yields the floor value.

    Returns
    -------
    float
        Bandwidth ``>= SIGMA_FLOOR``.
    """
    mat = np.asarray(samples, dtype=float)
    if mat.ndim == 1:
        mat = mat[:, None]
    if mat.ndim != 2 or mat.size == 0:
        raise ValueError(f"samples must be a non-empty (n, d) matrix, got shape {mat.shape}")
    n, d = mat.shape
    spread = mat.std(axis=0)  # population (ddof=0): one sample gives zero spread
    h = silverman_factor(d, n) * spread
    return float(max(np.median(h), SIGMA_FLOOR))


def percentile(values, p) -> float:
    """Percentile with linear interpolation between order statistics.

    The p-th percentile of n sorted values sits at fractional rank
    ``(p / 100) * (n - 1)``.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("values must be a non-empty 1-D sequence")
    if not 0.0 <= float(p) <= 100.0:
        raise ValueError(f"percentile rank must be in [0, 100], got {p!r}")
    return float(np.percentile(arr, float(p)))


def iqr(values) -> float:
    """Interquartile range: 75th minus 25th percentile."""
    return percentile(values, 75.0) - percentile(values, 25.0)


def similarity_matrix(weights, sigma, kind: str) -> np.ndarray:
    """Pairwise similarity matrix over a set of vectors.

    Two parameterizations are supported:

    - ``"cim-exp"``:          R[i, j] = exp(1 - CIM(w_i, w_j))
    - ``"correntropy-exp"``:  R[i, j] = exp(correntropy(w_i, w_j))

    Both yield entries in [1, e] with ``e`` on the diagonal, so duplicate
    rows make the matrix singular.

    Parameters
    ----------
    weights : array_like, shape (m, d)
    sigma : float
        Shared bandwidth for every pair.
    kind : str
        One of ``"cim-exp"`` or ``"correntropy-exp"``.

    Returns
    -------
    numpy.ndarray, shape (m, m)
        Symmetric matrix with ``exp(1)`` diagonal.
    """
    if kind not in _MATRIX_KINDS:
        raise ValueError(f"kind must be one of {_MATRIX_KINDS}, got {kind!r}")
    mat = np.asarray(weights, dtype=float)
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise ValueError(f"weights must be a non-empty (m, d) matrix, got shape {mat.shape}")
    s = _check_sigma(sigma)
    diff = mat[:, None, :] - mat[None, :, :]
    corr = np.exp(-(diff * diff) / (2.0 * s * s)).mean(axis=2)
    if kind == "cim-exp":
        c = np.sqrt(np.maximum(0.0, 1.0 - corr))
        return np.exp(1.0 - c)
    return np.exp(corr)


def diversity(matrix) -> float:
    """Determinant of a similarity matrix, used as a diversity score.

    Computed by LU factorization with partial pivoting; singular input
    returns 0.0 rather than raising.
    """
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
        raise ValueError(f"matrix must be square and non-empty, got shape {mat.shape}")
    return float(np.linalg.det(mat))
