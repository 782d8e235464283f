"""Seeded jointly Gaussian sampling with a Kronecker fast path.

Draws from ``N(mu, kron(Sigma, K0))`` are produced as
``mu + vec(L0 @ W @ L_Sigma.T)`` where ``W`` is a Q x P standard normal
matrix filled column-major, so the PQ x PQ covariance is never formed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import NotPSDError, ShapeError, SingularMatrixError



PSD_EIG_TOL = 1e-8
JITTER_SCALE = 1e-10


class SeededRng:
    """Reproducible uniform/normal stream identified by ``(seed, stream_id)``.

    Substreams are derived through ``numpy.random.SeedSequence`` spawn keys, so
    the numbers a block of tuples receives depend only on its own key and not
    on how many workers generate the other blocks.
    """

    def __init__(self, seed: int, stream_id: int = 0, _key: tuple[int, ...] = ()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id) & 0xFFFFFFFFFFFFFFFF
        self._key = (self.stream_id,) + tuple(_key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self._key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def substream(self, i: int) -> "SeededRng":
        return SeededRng(self.seed, self.stream_id, self._key[1:] + (int(i),))

    def uniform(self, size=None) -> np.ndarray:
        return self._gen.random(size)

    def standard_normal(self, size) -> np.ndarray:
        """Standard normals by the Marsaglia polar method, filled in C order."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape, dtype=np.int64))
        out = np.empty(n)
        filled = 0
        while filled < n:
            need = n - filled
            # acceptance is pi/4 and each accepted pair yields two normals
            pairs = int(need * 0.64) + 8
            u = 2.0 * self._gen.random((pairs, 2)) - 1.0
            s = u[:, 0] * u[:, 0] + u[:, 1] * u[:, 1]
            ok = (s > 0.0) & (s < 1.0)
            u, s = u[ok], s[ok]
            z = (u * np.sqrt(-2.0 * np.log(s) / s)[:, None]).ravel()
            take = min(need, z.size)
            out[filled:filled + take] = z[:take]
            filled += take
        return out.reshape(shape)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, key={self._key})"


@dataclass
class GaussianSpec:
    """Mean plus either a dense covariance or a Kronecker pair ``(sigma, k0)``."""

    mean: np.ndarray
    cov: Optional[np.ndarray] = None
    sigma: Optional[np.ndarray] = None
    k0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).ravel()
        if self.cov is None and (self.sigma is None or self.k0 is None):
            raise ShapeError("GaussianSpec needs a dense cov or both Kronecker factors")
        if self.cov is not None:
            self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if self.sigma is not None:
            self.sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
            self.k0 = np.atleast_2d(np.asarray(self.k0, dtype=float))
        if self.dense_cov().shape != (self.dim, self.dim):
            raise ShapeError(
                f"mean of length {self.mean.size} does not match covariance "
                f"{self.dense_cov().shape}"
            )

    @property
    def dim(self) -> int:
        return int(self.mean.size)

    @property
    def is_kron(self) -> bool:
        return self.cov is None

    def dense_cov(self) -> np.ndarray:
        if self.cov is not None:
            return self.cov
        return np.kron(self.sigma, self.k0)


def cholesky(cov, warn: bool = True) -> np.ndarray:
    """Lower Cholesky factor with a jitter fallback for semidefinite input.

    Raises NotPSDError when the smallest eigenvalue is below
    ``-1e-8 * max(diag)``.
    """
    a = np.atleast_2d(np.asarray(cov, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"covariance must be square, got {a.shape}")
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(a).max(initial=0.0))):
        raise NotPSDError("covariance is not symmetric")
    a = 0.5 * (a + a.T)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    dmax = float(np.max(np.diag(a), initial=0.0))
    min_eig = float(np.linalg.eigvalsh(a)[0])
    if min_eig < -PSD_EIG_TOL * max(dmax, 0.0) or dmax < 0:
        raise NotPSDError(f"matrix is indefinite (min eigenvalue {min_eig:.3e})")
    if dmax == 0.0:
        return np.zeros_like(a)
    jitter = JITTER_SCALE * np.trace(a) / a.shape[0]
    if warn:
        warnings.warn(
            f"covariance is only semidefinite; adding jitter {jitter:.3e} to the diagonal",
            RuntimeWarning,
            stacklevel=2,
        )
    try:
        return np.linalg.cholesky(a + jitter * np.eye(a.shape[0]))
    except np.linalg.LinAlgError:
        # rank-deficient beyond what jitter repairs: outer-product factorization
        # that zeroes columns whose pivot has vanished
        return _semidefinite_cholesky(a, tol=jitter)


def _semidefinite_cholesky(a: np.ndarray, tol: float) -> np.ndarray:
    n = a.shape[0]
    work = a.copy()
    L = np.zeros_like(a)
    for j in range(n):
        p = work[j, j]
        if p <= tol:
            continue
        L[j:, j] = work[j:, j] / np.sqrt(p)
        work[j:, j:] -= np.outer(L[j:, j], L[j:, j])
    return L


def kron_factors(sigma, k0):
    """Cholesky factors of both Kronecker factors."""
    return cholesky(sigma), cholesky(k0)


def kron_transform(normals: np.ndarray, l_sigma: np.ndarray, l0: np.ndarray) -> np.ndarray:
    """Map standard normals of shape (..., P, Q) to correlated draws (..., P, Q).

    Row ``p`` of the input is column ``p`` of the column-major Q x P matrix
    ``W``; row ``p`` of the output is the p-th length-Q block of
    ``vec(L0 @ W @ L_sigma.T)``.
    """
    return l_sigma @ (normals @ l0.T)


def sample_kron_gaussian(spec: GaussianSpec, rng: SeededRng, size: Optional[int] = None,
                         factors=None) -> np.ndarray:
    """Draw from ``N(spec.mean, kron(spec.sigma, spec.k0))``.

    Returns a vector of length P*Q, or an array of shape (size, P*Q).
    ``factors`` may carry precomputed ``(L_sigma, L0)``.
    """
    if not spec.is_kron:
        raise ShapeError("sample_kron_gaussian needs Kronecker factors")
    p, q = spec.sigma.shape[0], spec.k0.shape[0]
    if spec.sigma.shape != (p, p) or spec.k0.shape != (q, q):
        raise ShapeError("Kronecker factors must be square")
    l_sigma, l0 = factors if factors is not None else kron_factors(spec.sigma, spec.k0)
    n = 1 if size is None else int(size)
    w = rng.standard_normal((n, p, q))
    draws = kron_transform(w, l_sigma, l0).reshape(n, p * q) + spec.mean
    return draws[0] if size is None else draws


def sample_gaussian(spec: GaussianSpec, rng: SeededRng, size: Optional[int] = None) -> np.ndarray:
    """Dense route ``mu + L @ n``; the reference for the Kronecker path."""
    L = cholesky(spec.dense_cov())
    n = 1 if size is None else int(size)
    w = rng.standard_normal((n, spec.dim))
    draws = w @ L.T + spec.mean
    return draws[0] if size is None else draws


def conditional_gaussian(joint: GaussianSpec, n_observed: int, observed,
                         pseudo_inverse: bool = False) -> GaussianSpec:
    """Distribution of the trailing block given the leading ``n_observed`` entries.

    mean = mu2 + K21 K11^-1 (v1 - mu1), cov = K22 - K21 K11^-1 K21^T.
    """
    k = joint.dense_cov()
    n1 = int(n_observed)
    if not 0 < n1 < joint.dim:
        raise ShapeError(f"cannot split a {joint.dim}-vector after {n1} entries")
    v1 = np.asarray(observed, dtype=float).ravel()
    if v1.size != n1:
        raise ShapeError(f"observed block has {v1.size} entries, expected {n1}")
    k11, k21, k22 = k[:n1, :n1], k[n1:, :n1], k[n1:, n1:]
    gain = _right_solve(k21, k11, pseudo_inverse)
    mean = joint.mean[n1:] + gain @ (v1 - joint.mean[:n1])
    cov = k22 - gain @ k21.T
    return GaussianSpec(mean=mean, cov=0.5 * (cov + cov.T))


def _right_solve(b: np.ndarray, a: np.ndarray, pseudo_inverse: bool) -> np.ndarray:
    """Return ``b @ inv(a)`` for symmetric ``a``."""
    if pseudo_inverse:
        return b @ np.linalg.pinv(a, hermitian=True)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            return scipy.linalg.solve(a, b.T, assume_a="sym").T
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise SingularMatrixError(
            "conditioning block is singular; pass pseudo_inverse=True to use the pseudo-inverse"
        ) from exc
