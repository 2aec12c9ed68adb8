"""Local differential privacy via the Laplace mechanism.

Noise is produced by inverse-CDF sampling: a uniform draw v on (-0.5, 0.5)
maps to ``mu - (sensitivity / epsilon) * sgn(v) * ln(1 - 2|v|)``, which is
Laplace-distributed with location ``mu`` and scale ``sensitivity / epsilon``.
Each data dimension is perturbed independently with its own sensitivity,
taken as the per-dimension value range of the local dataset, so every data
holder calibrates noise to its own data without sharing anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Uniform draws this close to +-0.5 would send the log term to -inf; they
# are rejected and redrawn.
_EDGE = 0.5 - 1e-12


def local_sensitivity(points) -> np.ndarray:
    """Per-dimension sensitivity of a dataset: max minus min of each column.

    Parameters
    ----------
    points : array_like, shape (n, d)

    Returns
    -------
    numpy.ndarray, shape (d,)
        Non-negative; zero for constant columns.
    """
    mat = np.asarray(points, dtype=float)
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise ValueError(f"points must be a non-empty (n, d) matrix, got shape {mat.shape}")
    return mat.max(axis=0) - mat.min(axis=0)


@dataclass(frozen=True)
class PrivacyParams:
    """Laplace-mechanism parameters for one data holder.

    Attributes
    ----------
    epsilon : float
        Privacy budget, > 0; ``math.inf`` disables the mechanism.
    sensitivities : numpy.ndarray
        Per-dimension sensitivity, shape (d,), entries >= 0.
    mu : float
        Noise location, 0 by default.
    """

    epsilon: float
    sensitivities: np.ndarray = field(repr=False)
    mu: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        sens = np.asarray(self.sensitivities, dtype=float)
        if sens.ndim != 1 or sens.size == 0:
            raise ValueError("sensitivities must be a non-empty 1-D array")
        if np.any(sens < 0.0):
            raise ValueError("sensitivities must be non-negative")
        object.__setattr__(self, "sensitivities", sens)

    @classmethod
    def from_data(cls, points, epsilon: float, mu: float = 0.0) -> "PrivacyParams":
        """Calibrate sensitivities from the data holder's own points."""
        return cls(epsilon=float(epsilon), sensitivities=local_sensitivity(points), mu=mu)


def laplace_icdf(v: float, sensitivity: float, epsilon: float, mu: float = 0.0) -> float:
    """Map one uniform draw to a Laplace sample by the inverse CDF.

    Parameters
    ----------
    v : float
        Uniform draw in the open interval (-0.5, 0.5).
    sensitivity : float
        Query sensitivity, >= 0.
    epsilon : float
        Privacy budget, > 0 (``math.inf`` gives a noiseless ``mu``).
    mu : float
        Location of the distribution.

    Returns
    -------
    float
        ``mu - (sensitivity / epsilon) * sgn(v) * ln(1 - 2|v|)``.
    """
    if not -0.5 < v < 0.5:
        raise ValueError(f"v must lie strictly inside (-0.5, 0.5), got {v!r}")
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    if sensitivity < 0.0:
        raise ValueError(f"sensitivity must be non-negative, got {sensitivity!r}")
    scale = sensitivity / epsilon  # 0 when epsilon is inf
    if v == 0.0:
        return mu
    return mu - scale * math.copysign(1.0, v) * math.log1p(-2.0 * abs(v))


def privatize_dataset(points, params: PrivacyParams, rng) -> np.ndarray:
    """Perturb every entry of a dataset with independent Laplace noise.

    ``epsilon = inf`` returns the input unchanged (copied).  Dimensions with
    zero sensitivity receive zero noise.  Draws that would land on the
    rejection edge of the uniform interval are resampled.

    Parameters
    ----------
    points : array_like, shape (n, d)
    params : PrivacyParams
        Must carry one sensitivity per data dimension.
    rng : numpy.random.Generator or int
        Source of uniform draws; an int is used as a seed.

    Returns
    -------
    numpy.ndarray, shape (n, d)
        Freshly allocated noised copy.
    """
    mat = np.asarray(points, dtype=float)
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise ValueError(f"points must be a non-empty (n, d) matrix, got shape {mat.shape}")
    if params.sensitivities.shape[0] != mat.shape[1]:
        raise ValueError(
            f"sensitivity dimension {params.sensitivities.shape[0]} does not match "
            f"data dimension {mat.shape[1]}"
        )
    if math.isinf(params.epsilon):
        return mat.copy()
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    v = rng.uniform(-0.5, 0.5, size=mat.shape)
    bad = np.abs(v) >= _EDGE
    while np.any(bad):
        v[bad] = rng.uniform(-0.5, 0.5, size=int(bad.sum()))
        bad = np.abs(v) >= _EDGE
    scale = params.sensitivities / params.epsilon
    noise = params.mu - scale * np.sign(v) * np.log1p(-2.0 * np.abs(v))
    return mat + noise
