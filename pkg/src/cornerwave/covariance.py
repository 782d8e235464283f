"""Corner-wave trust-level covariance: construction, Cholesky factor, inverse.

All matrices here are the M x M *trust-level* factor Sigma; the full noise
covariance over M copies of an N-attribute tuple is ``kron(Sigma, K_X)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    DuplicateLevelError,
    InvalidLevelError,
    OrderingError,
    SingularMatrixError,
)

LevelsLike = Union["TrustLevelSet", Sequence[float], np.ndarray]


@dataclass(frozen=True)
class TrustLevelSet:
    """Perturbation magnitudes in request order plus their sorted view.

    Equal magnitudes collapse onto one sorted entry: copies released at the
    same level share a single noise realization.

    Attributes
    ----------
    requested : tuple of float
        Levels exactly as the caller supplied them.
    levels : ndarray
        Sorted, de-duplicated levels (strictly increasing).
    index : ndarray of int
        ``levels[index[k]] == requested[k]``.
    order : ndarray of int
        For each sorted level, the first request position that asked for it.
    """

    requested: tuple[float, ...]
    allow_zero: bool = False
    levels: np.ndarray = field(init=False, repr=False)
    index: np.ndarray = field(init=False, repr=False)
    order: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        req = np.asarray(self.requested, dtype=float).ravel()
        if req.size == 0:
            raise InvalidLevelError("at least one trust level is required")
        if not np.all(np.isfinite(req)):
            raise InvalidLevelError(f"non-finite perturbation level in {req.tolist()}")
        bad = req < 0 if self.allow_zero else req <= 0
        if np.any(bad):
            raise InvalidLevelError(
                f"perturbation levels must be {'>= 0' if self.allow_zero else '> 0'}, "
                f"got {req[bad].tolist()}"
            )
        levels, first, inverse = np.unique(req, return_index=True, return_inverse=True)
        object.__setattr__(self, "requested", tuple(float(v) for v in req))
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "index", inverse.ravel())
        object.__setattr__(self, "order", first)

    @classmethod
    def coerce(cls, levels: LevelsLike, allow_zero: bool = False) -> "TrustLevelSet":
        if isinstance(levels, TrustLevelSet):
            return levels
        return cls(tuple(np.asarray(levels, dtype=float).ravel()), allow_zero=allow_zero)

    @property
    def M(self) -> int:
        """Number of distinct levels."""
        return int(self.levels.size)

    def __len__(self) -> int:
        return len(self.requested)

    def to_request_order(self, per_level):
        """Map a per-sorted-level sequence back to request order."""
        return [per_level[i] for i in self.index]


@dataclass(frozen=True)
class CornerWaveCovariance:
    """Sigma[i, j] = levels[min(i, j)] over sorted distinct levels."""

    trust: TrustLevelSet

    @property
    def M(self) -> int:
        return self.trust.M

    @property
    def sigma(self) -> np.ndarray:
        lv = self.trust.levels
        return np.minimum.outer(lv, lv)

    def request_matrix(self) -> np.ndarray:
        """Covariance multipliers between copies in request order.

        Corner-wave in sorted order is equivalent to ``min(s_a, s_b)`` for any
        ordering, so this is just the pairwise minimum of requested levels.
        """
        req = np.asarray(self.trust.requested)
        return np.minimum.outer(req, req)

    def cholesky(self) -> np.ndarray:
        return corner_wave_cholesky(self.trust.levels)

    def inverse(self) -> np.ndarray:
        return corner_wave_inverse(self.trust.levels)


def build_corner_wave(levels: LevelsLike, allow_zero: bool = False) -> CornerWaveCovariance:
    """Build the corner-wave matrix over the sorted distinct ``levels``.

    >>> build_corner_wave([1, 4]).sigma.tolist()
    [[1.0, 1.0], [1.0, 4.0]]
    """
    return CornerWaveCovariance(TrustLevelSet.coerce(levels, allow_zero=allow_zero))


def _sorted_levels(levels: LevelsLike, allow_zero: bool) -> np.ndarray:
    if isinstance(levels, TrustLevelSet):
        return levels.levels
    lv = np.asarray(levels, dtype=float).ravel()
    if lv.size == 0:
        raise InvalidLevelError("at least one trust level is required")
    if not np.all(np.isfinite(lv)) or np.any(lv < 0) or (not allow_zero and np.any(lv == 0)):
        raise InvalidLevelError(f"invalid perturbation levels {lv.tolist()}")
    d = np.diff(lv)
    if np.any(d == 0):
        raise DuplicateLevelError(f"adjacent levels coincide in {lv.tolist()}")
    if np.any(d < 0):
        raise OrderingError(f"levels must be strictly increasing, got {lv.tolist()}")
    return lv


def corner_wave_cholesky(levels: LevelsLike, allow_zero: bool = True) -> np.ndarray:
    """Closed-form lower Cholesky factor ``U @ diag(v)`` of the corner-wave matrix.

    ``U`` is the all-ones lower triangle and ``v`` holds the square roots of
    the successive level increments, with ``v[0] = sqrt(levels[0])``.
    """
    lv = _sorted_levels(levels, allow_zero)
    v = np.sqrt(np.diff(lv, prepend=0.0))
    return np.tril(np.ones((lv.size, lv.size))) * v[None, :]


def corner_wave_inverse(levels: LevelsLike) -> np.ndarray:
    """Explicit tridiagonal inverse of the corner-wave matrix.

    With ``c_i = 1 / (s_{i+1}/s_1 - s_i/s_1)`` the inverse is ``1/s_1`` times
    a tridiagonal matrix whose off-diagonals are ``-c_i``, inner diagonal
    ``c_{i-1} + c_i``, last diagonal ``c_{M-1}`` and first diagonal
    ``c_1 * s_2 / s_1``.
    """
    lv = _sorted_levels(levels, allow_zero=True)
    s1 = lv[0]
    if s1 == 0:
        raise SingularMatrixError("corner-wave matrix with a zero level is singular")
    m = lv.size
    if m == 1:
        return np.array([[1.0 / s1]])
    c = 1.0 / (lv[1:] / s1 - lv[:-1] / s1)
    diag = np.empty(m)
    diag[0] = c[0] * lv[1] / s1
    diag[1:-1] = c[:-1] + c[1:]
    diag[-1] = c[-1]
    inv = np.diag(diag) - np.diag(c, 1) - np.diag(c, -1)
    return inv / s1


def is_corner_wave(matrix: np.ndarray, atol: float = 0.0) -> bool:
    """True when every entry right of / below the diagonal repeats that diagonal."""
    a = np.asarray(matrix, dtype=float)
    d = np.diag(a)
    expected = np.where(
        np.arange(a.shape[0])[:, None] <= np.arange(a.shape[1])[None, :],
        d[:, None],
        d[None, :],
    )
    return bool(np.allclose(a, expected, rtol=0.0, atol=atol))
