import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cornerwave.covariance import (
    TrustLevelSet,
    build_corner_wave,
    corner_wave_cholesky,
    corner_wave_inverse,
    is_corner_wave,
)
from cornerwave.errors import (
    DuplicateLevelError,
    InvalidLevelError,
    OrderingError,
    SingularMatrixError,
)


def increasing_levels(max_size=12):
    """Strictly increasing levels built from positive increments."""
    return st.lists(
        st.floats(min_value=0.05, max_value=10.0), min_size=1, max_size=max_size
    ).map(lambda incs: np.cumsum(incs))


@pytest.mark.parametrize(
    "levels, expected",
    [
        ([1, 4], [[1, 1], [1, 4]]),
        ([0.7], [[0.7]]),
        ([2, 3, 5], [[2, 2, 2], [2, 3, 3], [2, 3, 5]]),
        ([5, 2, 3], [[2, 2, 2], [2, 3, 3], [2, 3, 5]]),
    ],
)
def test_build_corner_wave(levels, expected):
    np.testing.assert_array_equal(build_corner_wave(levels).sigma, expected)


@pytest.mark.parametrize("bad", [[0.0, 1.0], [-1.0], [1.0, np.nan], []])
def test_build_rejects_invalid_levels(bad):
    with pytest.raises(InvalidLevelError):
        build_corner_wave(bad)


def test_zero_level_only_when_allowed():
    cw = build_corner_wave([0.0, 2.0], allow_zero=True)
    np.testing.assert_array_equal(cw.sigma, [[0, 0], [0, 2]])
    with pytest.raises(SingularMatrixError):
        cw.inverse()


def test_trust_level_set_order_and_duplicates():
    t = TrustLevelSet((4.0, 1.0, 4.0, 2.0))
    np.testing.assert_array_equal(t.levels, [1.0, 2.0, 4.0])
    assert [t.levels[i] for i in t.index] == [4.0, 1.0, 4.0, 2.0]
    np.testing.assert_array_equal(t.order, [1, 3, 0])
    assert t.M == 3 and len(t) == 4
    assert t.to_request_order(["a", "b", "c"]) == ["c", "a", "c", "b"]


def test_request_matrix_is_pairwise_min():
    cw = build_corner_wave([4, 1, 2])
    np.testing.assert_array_equal(cw.request_matrix(), [[4, 1, 2], [1, 1, 1], [2, 1, 2]])


@pytest.mark.parametrize(
    "levels, expected",
    [
        ([1, 4], [[1, 0], [1, np.sqrt(3)]]),
        ([0.25], [[0.5]]),
        ([1, 2, 4], [[1, 0, 0], [1, 1, 0], [1, 1, np.sqrt(2)]]),
    ],
)
def test_corner_wave_cholesky(levels, expected):
    L = corner_wave_cholesky(levels)
    np.testing.assert_allclose(L, expected, rtol=0, atol=1e-15)
    # multiplication oracle
    np.testing.assert_allclose(L @ L.T, build_corner_wave(levels).sigma, rtol=0, atol=1e-14)


@pytest.mark.parametrize("bad, exc", [([4, 1], OrderingError), ([1, 1], DuplicateLevelError)])
def test_cholesky_requires_increasing(bad, exc):
    with pytest.raises(exc):
        corner_wave_cholesky(bad)


def test_corner_wave_inverse_examples():
    np.testing.assert_allclose(
        corner_wave_inverse([1, 4]), [[4 / 3, -1 / 3], [-1 / 3, 1 / 3]], atol=1e-15
    )
    np.testing.assert_allclose(corner_wave_inverse([2.5]), [[0.4]])
    sigma = build_corner_wave([1, 2, 4]).sigma
    np.testing.assert_allclose(corner_wave_inverse([1, 2, 4]) @ sigma, np.eye(3), atol=1e-12)
    # direct 2x2 inversion oracle
    np.testing.assert_allclose(corner_wave_inverse([1, 4]), np.linalg.inv([[1, 1], [1, 4]]))


def test_inverse_duplicate_guard():
    with pytest.raises(DuplicateLevelError):
        corner_wave_inverse([1.0, 2.0, 2.0])


@settings(max_examples=200, deadline=None)
@given(increasing_levels())
def test_inverse_times_matrix_is_identity(levels):
    sigma = build_corner_wave(levels).sigma
    inv = corner_wave_inverse(levels)
    np.testing.assert_allclose(inv @ sigma, np.eye(levels.size), rtol=0, atol=1e-10)


@settings(max_examples=200, deadline=None)
@given(increasing_levels())
def test_cholesky_reproduces_matrix(levels):
    sigma = build_corner_wave(levels).sigma
    L = corner_wave_cholesky(levels)
    assert np.all(np.diag(L) >= 0)
    assert np.allclose(np.triu(L, 1), 0)
    assert np.max(np.abs(L @ L.T - sigma)) <= 1e-10 * np.max(np.abs(sigma))
    # agrees with a generic Cholesky
    np.testing.assert_allclose(L, np.linalg.cholesky(sigma), rtol=1e-9, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(increasing_levels())
def test_inverse_column_sums_vanish_except_first(levels):
    inv = corner_wave_inverse(levels)
    sums = inv.sum(axis=0)
    scale = np.abs(inv).max()
    np.testing.assert_allclose(sums[1:], 0, atol=1e-10 * scale)
    # hence 1^T Sigma^-1 1 = 1 / smallest level
    assert sums.sum() == pytest.approx(1 / levels[0], rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(increasing_levels(), st.data())
def test_principal_submatrix_is_corner_wave(levels, data):
    sigma = build_corner_wave(levels).sigma
    idx = sorted(data.draw(st.sets(st.integers(0, levels.size - 1), min_size=1)))
    sub = sigma[np.ix_(idx, idx)]
    assert is_corner_wave(sub)
    np.testing.assert_array_equal(sub, build_corner_wave(levels[idx]).sigma)


@settings(max_examples=100, deadline=None)
@given(increasing_levels())
def test_corner_wave_structure(levels):
    sigma = build_corner_wave(levels).sigma
    assert is_corner_wave(sigma)
    np.testing.assert_array_equal(sigma, sigma.T)
    np.linalg.cholesky(sigma)


def test_is_corner_wave_rejects_other_patterns():
    assert not is_corner_wave(np.diag([1.0, 4.0]))
    assert not is_corner_wave([[1.0, 2.0], [2.0, 4.0]])
    assert is_corner_wave([[1.0, 1.0], [1.0, 1.0]])
