"""Generation of perturbed copies at multiple trust levels.

Every tuple (row) of the dataset is perturbed independently with noise whose
cross-copy covariance is ``kron(Sigma, K_X)``; ``Sigma`` is corner-wave for the
private schemes and diagonal for the independent baseline. Rows are processed
in fixed-size blocks, each with its own random substream.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .covariance import LevelsLike, TrustLevelSet, build_corner_wave, corner_wave_inverse
from .errors import (
    InsufficientSamplesError,
    SessionError,
    ShapeError,
    SingularMatrixError,
    ValidationError,
)
from .sampler import SeededRng, cholesky, kron_transform

BLOCK_SIZE = 4096

CORNER_WAVE = "cornerwave"
INDEPENDENT = "independent"


@dataclass
class Dataset:
    values: np.ndarray
    columns: list[str] = field(default_factory=list)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ShapeError(f"dataset must be a non-empty T x N matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("dataset contains non-finite entries")
        self.values = v
        if not self.columns:
            self.columns = [f"x{j}" for j in range(v.shape[1])]
        if len(self.columns) != v.shape[1]:
            raise ShapeError(f"{len(self.columns)} column names for {v.shape[1]} attributes")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]


@dataclass
class DataModel:
    """First and second order statistics of the original data."""

    mu: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).ravel()
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        n = self.mu.size
        if self.cov.shape != (n, n):
            raise ShapeError(f"covariance {self.cov.shape} does not match mean of length {n}")
        if not np.allclose(self.cov, self.cov.T, rtol=1e-10, atol=1e-12):
            raise ValidationError("model covariance is not symmetric")

    @property
    def N(self) -> int:
        return self.mu.size

    @classmethod
    def estimate(cls, values) -> "DataModel":
        """Sample mean and unbiased sample covariance of a T x N matrix."""
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] < 2:
            raise InsufficientSamplesError(f"need at least 2 tuples, got {v.shape[0]}")
        return cls(mu=v.mean(axis=0), cov=np.atleast_2d(np.cov(v, rowvar=False, ddof=1)))

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DataModel":
        try:
            return cls(mu=d["mu"], cov=d["cov"])
        except KeyError as exc:
            raise ValidationError(f"model is missing key {exc}") from None


@dataclass
class PerturbedCopy:
    level: float
    values: np.ndarray
    noise: Optional[np.ndarray] = field(default=None, repr=False)


def _check(X: Dataset, model: DataModel):
    if model.N != X.N:
        raise ShapeError(f"model has {model.N} attributes but dataset has {X.N}")


def _blocks(T: int, block_size: int = BLOCK_SIZE) -> Iterator[tuple[int, slice]]:
    for b, start in enumerate(range(0, T, block_size)):
        yield b, slice(start, min(start + block_size, T))


def _release(X: Dataset, level: float, noise: np.ndarray) -> PerturbedCopy:
    y = X.values + noise
    # the stored realization is exactly what the released copy embeds
    return PerturbedCopy(level=float(level), values=y, noise=y - X.values)


def corner_wave_noise(T: int, l_x: np.ndarray, levels: np.ndarray, rng: SeededRng) -> np.ndarray:
    """Noise of shape (M, T, N) with cross-copy covariance ``kron(Sigma_cw, K_X)``."""
    l_sigma = build_corner_wave(levels, allow_zero=True).cholesky()
    M, N = levels.size, l_x.shape[0]
    out = np.empty((M, T, N))
    for b, sl in _blocks(T):
        w = rng.substream(b).standard_normal((sl.stop - sl.start, M, N))
        out[:, sl, :] = kron_transform(w, l_sigma, l_x).transpose(1, 0, 2)
    return out


def batch_parallel(X: Dataset, model: DataModel, levels: LevelsLike, rng: SeededRng,
                   allow_zero: bool = False) -> list[PerturbedCopy]:
    """All copies at once: per tuple draw the stacked noise from ``N(0, kron(Sigma, K_X))``."""
    _check(X, model)
    trust = TrustLevelSet.coerce(levels, allow_zero=allow_zero)
    l_x = cholesky(model.cov)
    noise = corner_wave_noise(X.T, l_x, trust.levels, rng)
    per_level = [_release(X, lv, noise[i]) for i, lv in enumerate(trust.levels)]
    return trust.to_request_order(per_level)


def iter_sequential(X: Dataset, model: DataModel, levels: LevelsLike, rng: SeededRng,
                    allow_zero: bool = False) -> Iterator[PerturbedCopy]:
    """Yield copies in increasing level order, each the previous plus an independent increment.

    Only the previous copy is held between steps.
    """
    _check(X, model)
    trust = TrustLevelSet.coerce(levels, allow_zero=allow_zero)
    l_x = cholesky(model.cov)
    prev_level = 0.0
    y = X.values
    for i, lv in enumerate(trust.levels):
        scale = np.sqrt(lv - prev_level)
        stream = rng.substream(i)
        xi = np.empty_like(X.values)
        for b, sl in _blocks(X.T):
            w = stream.substream(b).standard_normal((sl.stop - sl.start, X.N))
            xi[sl] = scale * (w @ l_x.T)
        y = y + xi
        prev_level = lv
        yield PerturbedCopy(level=float(lv), values=y, noise=y - X.values)


def batch_sequential(X: Dataset, model: DataModel, levels: LevelsLike, rng: SeededRng,
                     allow_zero: bool = False) -> list[PerturbedCopy]:
    trust = TrustLevelSet.coerce(levels, allow_zero=allow_zero)
    return trust.to_request_order(list(iter_sequential(X, model, trust, rng)))


def independent_noise(X: Dataset, model: DataModel, levels: LevelsLike, rng: SeededRng,
                      allow_zero: bool = False) -> list[PerturbedCopy]:
    """Baseline: every requested copy gets its own independent ``N(0, s K_X)`` noise."""
    _check(X, model)
    trust = TrustLevelSet.coerce(levels, allow_zero=allow_zero)
    l_x = cholesky(model.cov)
    copies = []
    for k, lv in enumerate(trust.requested):
        stream = rng.substream(k)
        z = np.empty_like(X.values)
        for b, sl in _blocks(X.T):
            w = stream.substream(b).standard_normal((sl.stop - sl.start, X.N))
            z[sl] = np.sqrt(lv) * (w @ l_x.T)
        copies.append(_release(X, lv, z))
    return copies


@dataclass
class Release:
    level: float
    noise: np.ndarray = field(repr=False)


class PerturbSession:
    """Realized noise of every released copy, enough to extend the release on demand.

    Appends are serialized by an internal lock and readers get an immutable
    snapshot, so a concurrent reader never sees a half-registered release.
    """

    def __init__(self, model: DataModel, seed: int, scheme: str = CORNER_WAVE,
                 columns: Optional[Sequence[str]] = None, n_tuples: Optional[int] = None,
                 generation: int = 0, releases: Sequence[Release] = ()):
        if scheme not in (CORNER_WAVE, INDEPENDENT):
            raise ValidationError(f"unknown scheme {scheme!r}")
        self.model = model
        self.seed = int(seed)
        self.scheme = scheme
        self.columns = list(columns) if columns is not None else None
        self.n_tuples = n_tuples
        self.generation = int(generation)
        self._releases: tuple[Release, ...] = ()
        self._lock = threading.Lock()
        for r in releases:
            self.add(r.level, r.noise)

    @property
    def releases(self) -> tuple[Release, ...]:
        return self._releases

    @property
    def levels(self) -> list[float]:
        return [r.level for r in self._releases]

    def noise_for(self, level: float) -> np.ndarray:
        for r in self._releases:
            if r.level == level:
                return r.noise
        raise KeyError(level)

    def add(self, level: float, noise: np.ndarray):
        noise = np.asarray(noise, dtype=float)
        with self._lock:
            if self.n_tuples is None:
                self.n_tuples = noise.shape[0]
            if noise.shape != (self.n_tuples, self.model.N):
                raise SessionError(
                    f"noise of shape {noise.shape} does not fit session "
                    f"({self.n_tuples} x {self.model.N})"
                )
            if any(r.level == level for r in self._releases):
                raise SessionError(f"level {level!r} already released")
            self._releases = self._releases + (Release(float(level), noise),)

    def next_rng(self) -> SeededRng:
        """Fresh stream for the next generation call; advances the counter."""
        with self._lock:
            rng = SeededRng(self.seed, stream_id=self.generation)
            self.generation += 1
        return rng

    def check_dataset(self, X: Dataset):
        _check(X, self.model)
        if self.n_tuples is not None and X.T != self.n_tuples:
            raise SessionError(f"session holds {self.n_tuples} tuples, dataset has {X.T}")


def on_demand(session: PerturbSession, X: Dataset, new_levels: LevelsLike,
              rng: Optional[SeededRng] = None, allow_zero: bool = False) -> list[PerturbedCopy]:
    """Generate copies at arbitrary new levels consistent with everything already released.

    The new noise is drawn from its conditional distribution given the realized
    noise of previous releases, under the corner-wave joint over the union of
    old and new levels. Levels that were already released return the stored
    realization. An empty session reduces to ``batch_parallel``.
    """
    if session.scheme != CORNER_WAVE:
        raise SessionError("on-demand generation needs a corner-wave session")
    session.check_dataset(X)
    trust = TrustLevelSet.coerce(new_levels, allow_zero=allow_zero)
    if rng is None:
        rng = session.next_rng()
    snapshot = session.releases
    known = {r.level: r.noise for r in snapshot}
    fresh = np.array([lv for lv in trust.levels if lv not in known])

    released = {}
    if fresh.size:
        l_x = cholesky(session.model.cov)
        if not known:
            noise = corner_wave_noise(X.T, l_x, fresh, rng)
        else:
            noise = _conditional_noise(X.T, l_x, snapshot, fresh, rng)
        for lv, z in zip(fresh, noise):
            copy = _release(X, lv, z)
            session.add(copy.level, copy.noise)
            released[copy.level] = copy

    per_level = [
        released[lv] if lv in released else _release_existing(X, lv, known[lv])
        for lv in trust.levels
    ]
    return trust.to_request_order(per_level)


def _release_existing(X: Dataset, level: float, noise: np.ndarray) -> PerturbedCopy:
    return PerturbedCopy(level=float(level), values=X.values + noise, noise=noise)


def conditional_factors(old_levels: np.ndarray, new_levels: np.ndarray):
    """Trust-level gain and covariance of new noise given old noise.

    Returns ``(A, S)`` with ``E[z_new | z_old] = (A kron I) z_old`` and
    ``Cov[z_new | z_old] = S kron K_X``, both derived from the corner-wave
    matrix over the union of levels. ``old_levels`` must be sorted.
    """
    sig_oo = np.minimum.outer(old_levels, old_levels)
    sig_no = np.minimum.outer(new_levels, old_levels)
    sig_nn = np.minimum.outer(new_levels, new_levels)
    try:
        inv_oo = corner_wave_inverse(old_levels)
    except SingularMatrixError:
        inv_oo = np.linalg.pinv(sig_oo, hermitian=True)
    gain = sig_no @ inv_oo
    cond = sig_nn - gain @ sig_no.T
    return gain, 0.5 * (cond + cond.T)


def _conditional_noise(T: int, l_x: np.ndarray, snapshot: Sequence[Release],
                       fresh: np.ndarray, rng: SeededRng) -> np.ndarray:
    order = np.argsort([r.level for r in snapshot], kind="stable")
    old_levels = np.array([snapshot[i].level for i in order])
    old_noise = [snapshot[i].noise for i in order]
    gain, cond = conditional_factors(old_levels, fresh)
    l_cond = cholesky(cond)
    # gain is banded for corner-wave: only neighbouring old levels contribute
    used = np.flatnonzero(np.any(np.abs(gain) > 0, axis=0))
    M, N = fresh.size, l_x.shape[0]
    out = np.empty((M, T, N))
    for b, sl in _blocks(T):
        n_b = sl.stop - sl.start
        zo = np.stack([old_noise[j][sl].ravel() for j in used])
        mean = (gain[:, used] @ zo).reshape(M, n_b, N)
        w = rng.substream(b).standard_normal((n_b, M, N))
        out[:, sl, :] = mean + kron_transform(w, l_cond, l_x).transpose(1, 0, 2)
    return out
