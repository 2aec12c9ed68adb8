import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fcac.kernels import (
    SIGMA_FLOOR,
    cim,
    cim_many,
    correntropy,
    diversity,
    iqr,
    percentile,
    silverman_bandwidth,
    silverman_factor,
    similarity_matrix,
)


# ---------------------------------------------------------------- oracles

def sort_percentile(values, p):
    """Independent percentile: explicit sort + linear interpolation."""
    v = sorted(float(x) for x in values)
    rank = (p / 100.0) * (len(v) - 1)
    lo = math.floor(rank)
    hi = math.ceil(rank)
    return v[lo] + (rank - lo) * (v[hi] - v[lo])


def cofactor_det(m):
    """Determinant by cofactor expansion along the first row."""
    m = [list(map(float, row)) for row in m]
    n = len(m)
    if n == 1:
        return m[0][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        total += ((-1.0) ** j) * m[0][j] * cofactor_det(minor)
    return total


# ------------------------------------------------------------ correntropy

def test_correntropy_identical_is_one():
    assert correntropy([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 0.5) == 1.0


def test_correntropy_1d_unit_gap():
    assert_allclose(correntropy([0.0], [1.0], 1.0), 0.6065306597126334, rtol=1e-12)


def test_correntropy_2d_mixed():
    # one matching dim, one unit gap: (1 + e^-0.5) / 2
    assert_allclose(
        correntropy([0.0, 0.0], [0.0, 1.0], 1.0), 0.8032653298563167, rtol=1e-12
    )


def test_correntropy_decreases_with_distance():
    base = np.zeros(3)
    vals = [correntropy(base, np.full(3, t), 1.0) for t in (0.0, 0.5, 1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_correntropy_dimension_mismatch():
    with pytest.raises(ValueError):
        correntropy([0.0, 1.0], [0.0], 1.0)


def test_correntropy_bad_sigma():
    with pytest.raises(ValueError):
        correntropy([0.0], [1.0], 0.0)
    with pytest.raises(ValueError):
        correntropy([0.0], [1.0], -2.0)


# -------------------------------------------------------------------- cim

def test_cim_unit_gap():
    assert_allclose(cim([0.0], [1.0], 1.0), 0.6272713450233213, rtol=1e-12)


def test_cim_identity_zero():
    assert cim([3.0, -1.0], [3.0, -1.0], 0.1) == 0.0


def test_cim_huge_bandwidth_flattens():
    assert cim([0.0], [1.0], 1e6) < 1e-5


def test_cim_properties_bulk():
    # randomized property sweep: range, symmetry, identity of indiscernibles
    rng = np.random.default_rng(7)
    n = 10_000
    d = 4
    xs = rng.normal(size=(n, d)) * 3.0
    ys = rng.normal(size=(n, d)) * 3.0
    sigmas = rng.uniform(0.05, 5.0, size=n)
    for i in range(0, n, 500):
        x, y, s = xs[i], ys[i], sigmas[i]
        assert cim(x, y, s) == cim(y, x, s)
    # vectorized bounds over the full sweep
    diff = xs - ys
    corr = np.exp(-(diff * diff) / (2.0 * sigmas[:, None] ** 2)).mean(axis=1)
    vals = np.sqrt(np.maximum(0.0, 1.0 - corr))
    assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
    # spot check the vectorized sweep against the scalar function
    for i in range(0, n, 997):
        assert_allclose(cim(xs[i], ys[i], sigmas[i]), vals[i], rtol=1e-12)


def test_cim_many_matches_scalar():
    rng = np.random.default_rng(3)
    x = rng.normal(size=5)
    ys = rng.normal(size=(11, 5))
    got = cim_many(x, ys, 0.8)
    want = np.array([cim(x, y, 0.8) for y in ys])
    assert_allclose(got, want, rtol=1e-12)


# -------------------------------------------------------------- bandwidth

def test_silverman_factor_d1_n1():
    assert_allclose(silverman_factor(1, 1), (4.0 / 3.0) ** 0.2, rtol=1e-12)
    assert_allclose(silverman_factor(1, 1), 1.0592238410488122, rtol=1e-12)


def test_silverman_single_sample_hits_floor():
    assert silverman_bandwidth([[2.0, 5.0]]) == SIGMA_FLOOR


def test_silverman_constant_samples_hit_floor():
    assert silverman_bandwidth(np.ones((10, 3))) == SIGMA_FLOOR


def test_silverman_2d_unit_spread_16_samples():
    # 8 copies of -1 and 8 of +1 per dim: population std exactly 1
    col = np.array([-1.0] * 8 + [1.0] * 8)
    samples = np.stack([col, col], axis=1)
    assert_allclose(silverman_bandwidth(samples), 2.0 ** (-2.0 / 3.0), rtol=1e-12)
    assert_allclose(silverman_bandwidth(samples), 0.6299605249474366, rtol=1e-12)


def test_silverman_median_over_dims():
    # three dims with spreads 0, 1, 100: median of per-dim bandwidths
    rng = np.random.default_rng(0)
    n = 50
    base = rng.normal(size=n)
    base = (base - base.mean()) / base.std()
    samples = np.stack([np.zeros(n), base, base * 100.0], axis=1)
    f = silverman_factor(3, n)
    assert_allclose(silverman_bandwidth(samples), f * 1.0, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=2, max_value=40),
    st.integers(min_value=1, max_value=5),
    st.floats(min_value=0.1, max_value=50.0),
    st.integers(min_value=0, max_value=2**31 - 1),
)
def test_silverman_scale_equivariance(n, d, scale, seed):
    samples = np.random.default_rng(seed).normal(size=(n, d))
    a = silverman_bandwidth(samples)
    b = silverman_bandwidth(samples * scale)
    if a > SIGMA_FLOOR and b > SIGMA_FLOOR:
        assert_allclose(b, a * scale, rtol=1e-9)


def test_silverman_rejects_empty():
    with pytest.raises(ValueError):
        silverman_bandwidth(np.empty((0, 2)))


# ------------------------------------------------------------- percentile

def test_percentile_expected_values():
    assert percentile([1, 2, 3, 4], 75) == 3.25
    assert percentile([1, 2, 3, 4], 25) == 1.75
    assert percentile([1, 2, 5, 8], 75) == 5.75


def test_percentile_endpoints_and_singleton():
    assert percentile([5.0], 75) == 5.0
    assert percentile([3, 1, 2], 0) == 1.0
    assert percentile([3, 1, 2], 100) == 3.0


def test_iqr_two_points():
    assert iqr([0.0, 10.0]) == 5.0


def test_iqr_constant_is_zero():
    assert iqr([4.0, 4.0, 4.0]) == 0.0


def test_percentile_validation():
    with pytest.raises(ValueError):
        percentile([], 50)
    with pytest.raises(ValueError):
        percentile([1.0], 101)


@settings(max_examples=120, deadline=None)
@given(
    st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=100),
    st.floats(min_value=0.0, max_value=100.0),
)
def test_percentile_matches_sort_oracle(values, p):
    assert_allclose(percentile(values, p), sort_percentile(values, p), rtol=1e-9, atol=1e-9)


# ------------------------------------------------- similarity / diversity

def test_similarity_matrix_single_node():
    r = similarity_matrix([[0.0, 0.0]], 1.0, "cim-exp")
    assert_allclose(r, [[math.e]], rtol=1e-12)
    r2 = similarity_matrix([[0.0, 0.0]], 1.0, "correntropy-exp")
    assert_allclose(r2, [[math.e]], rtol=1e-12)


def test_similarity_matrix_symmetry_and_diagonal():
    rng = np.random.default_rng(11)
    w = rng.normal(size=(6, 3))
    for kind in ("cim-exp", "correntropy-exp"):
        r = similarity_matrix(w, 0.7, kind)
        assert_allclose(r, r.T, rtol=1e-12)
        assert_allclose(np.diag(r), np.full(6, math.e), rtol=1e-12)
        assert np.all(r >= 1.0) and np.all(r <= math.e + 1e-12)


def test_similarity_matrix_matches_scalar_entries():
    rng = np.random.default_rng(12)
    w = rng.normal(size=(4, 2))
    r = similarity_matrix(w, 0.9, "cim-exp")
    for i in range(4):
        for j in range(4):
            assert_allclose(r[i, j], math.exp(1.0 - cim(w[i], w[j], 0.9)), rtol=1e-12)
    r2 = similarity_matrix(w, 0.9, "correntropy-exp")
    for i in range(4):
        for j in range(4):
            assert_allclose(r2[i, j], math.exp(correntropy(w[i], w[j], 0.9)), rtol=1e-12)


def test_similarity_matrix_rejects_unknown_kind():
    with pytest.raises(ValueError):
        similarity_matrix([[0.0]], 1.0, "gaussian")


def test_diversity_two_node_closed_form():
    # two 1-D nodes with CIM 0.5 apart: det = e^2 - exp(0.5)^2 = e^2 - e
    sigma = 1.0
    gap = math.sqrt(-2.0 * math.log(0.75))  # correntropy 0.75 -> cim 0.5
    w = np.array([[0.0], [gap]])
    assert_allclose(cim(w[0], w[1], sigma), 0.5, rtol=1e-12)
    r = similarity_matrix(w, sigma, "cim-exp")
    assert_allclose(diversity(r), 4.670774270471604, rtol=1e-10)


def test_diversity_duplicate_rows_singular():
    w = np.array([[1.0, 2.0], [1.0, 2.0]])
    for kind in ("cim-exp", "correntropy-exp"):
        r = similarity_matrix(w, 0.5, kind)
        assert abs(diversity(r)) < 1e-9


def test_diversity_matches_cofactor_oracle():
    rng = np.random.default_rng(21)
    for m in range(1, 7):
        for _ in range(4):
            w = rng.normal(size=(m, 2))
            r = similarity_matrix(w, 0.8, "cim-exp")
            assert_allclose(diversity(r), cofactor_det(r), rtol=1e-8, atol=1e-9)
    # also on raw non-symmetric matrices
    for m in range(2, 7):
        a = rng.normal(size=(m, m))
        assert_allclose(diversity(a), cofactor_det(a), rtol=1e-8, atol=1e-9)


def test_diversity_rejects_non_square():
    with pytest.raises(ValueError):
        diversity(np.zeros((2, 3)))
