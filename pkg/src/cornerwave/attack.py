"""Linear least-squares (LLSE) reconstruction attacks on perturbed copies.

For copies ``Y_i = X + Z_i`` with noise covariance ``kron(Sigma, K_X)`` the
joint estimate collapses to a weighted sum of centred copies,

    xhat = mu + sum_i w_i (Y_i - mu),   w = (11^T + Sigma)^-1 1,

with error covariance ``(1 - 1^T w) K_X``. ``llse_joint_dense`` builds the full
MN x MN system instead and is kept as a cross-check for small problems.
"""

from __future__ import annotations

import warnings

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    InsufficientSamplesError,
    ShapeError,
    SingularMatrixError,
    ValidationError,
)
from .perturb import DataModel, PerturbedCopy

PERFECT = "perfect"
PARTIAL = "partial"

DENSE_LIMIT = 64


@dataclass
class AdversaryKnowledge:
    """What the attacker believes about the data: exact for ``perfect``, estimated for ``partial``."""

    kind: str
    model: DataModel
    samples: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (PERFECT, PARTIAL):
            raise ValidationError(f"unknown knowledge kind {self.kind!r}")


@dataclass
class LLSEEstimate:
    xhat: np.ndarray
    subset: tuple[int, ...]
    predicted_error_cov: np.ndarray
    weights: Optional[np.ndarray] = None

    @property
    def predicted_distortion(self) -> float:
        return float(np.trace(self.predicted_error_cov) / self.predicted_error_cov.shape[0])


def perfect_knowledge(model: DataModel) -> AdversaryKnowledge:
    return AdversaryKnowledge(PERFECT, model)


def partial_knowledge(copies: Sequence[PerturbedCopy], samples: Optional[int] = None,
                      pooled: bool = False) -> AdversaryKnowledge:
    return AdversaryKnowledge(PARTIAL, estimate_model(copies, samples, pooled), samples)


def estimate_model(copies: Sequence[PerturbedCopy], samples: Optional[int] = None,
                   pooled: bool = False) -> DataModel:
    """Estimate ``(mu_X, K_X)`` from perturbed copies with known levels.

    Uses the sample mean and the unbiased sample covariance divided by
    ``1 + level``. By default only the least perturbed copy is used; ``pooled``
    averages the per-copy estimates. ``samples`` restricts every copy to its
    first ``samples`` tuples.
    """
    if not copies:
        raise ValidationError("no copies to estimate from")
    chosen = list(copies) if pooled else [min(copies, key=lambda c: c.level)]
    mus, covs = [], []
    for c in chosen:
        y = np.asarray(c.values, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if samples is not None:
            y = y[: int(samples)]
        if y.shape[0] < 2:
            raise InsufficientSamplesError(f"need at least 2 tuples, got {y.shape[0]}")
        mus.append(y.mean(axis=0))
        covs.append(np.atleast_2d(np.cov(y, rowvar=False, ddof=1)) / (1.0 + c.level))
    return DataModel(mu=np.mean(mus, axis=0), cov=np.mean(covs, axis=0))


def _values(copy: PerturbedCopy) -> np.ndarray:
    y = np.asarray(copy.values, dtype=float)
    return y[:, None] if y.ndim == 1 else y


def llse_single(copy: PerturbedCopy, knowledge: AdversaryKnowledge,
                index: int = 0) -> LLSEEstimate:
    """``xhat = mu + K_X K_Y^-1 (Y - mu)`` with ``K_Y = (1 + level) K_X``.

    The gain collapses to ``I / (1 + level)``, so no solve is needed and a
    rank-deficient ``K_X`` is fine (the centred data lives in its range).
    """
    model = knowledge.model
    y = _values(copy)
    if y.shape[1] != model.N:
        raise ShapeError(f"copy has {y.shape[1]} attributes, model has {model.N}")
    shrink = 1.0 / (1.0 + copy.level)
    xhat = model.mu + shrink * (y - model.mu)
    err = (1.0 - shrink) * model.cov
    return LLSEEstimate(xhat=xhat, subset=(index,), predicted_error_cov=err)


def joint_weights(noise_cov) -> np.ndarray:
    """Per-copy weights ``(11^T + Sigma)^-1 1`` of the joint LLSE.

    Identical copies (equal corner-wave levels) make the system singular but
    consistent; the minimum-norm solution is returned then.
    """
    sigma = np.atleast_2d(np.asarray(noise_cov, dtype=float))
    m = sigma.shape[0]
    a = sigma + 1.0
    ones = np.ones(m)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            return scipy.linalg.solve(a, ones, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
        pass
    w, *_ = np.linalg.lstsq(a, ones, rcond=None)
    if not np.allclose(a @ w, ones, atol=1e-9):
        raise SingularMatrixError("combined covariance of the copies is singular")
    return w


def predicted_joint_factor(noise_cov) -> float:
    """Scalar ``c`` with joint error covariance ``c * K_X``."""
    return float(max(0.0, 1.0 - joint_weights(noise_cov).sum()))


def _check_noise_cov(copies, noise_cov) -> np.ndarray:
    sigma = np.atleast_2d(np.asarray(noise_cov, dtype=float))
    m = len(copies)
    if sigma.shape != (m, m):
        raise ShapeError(f"noise covariance {sigma.shape} does not match {m} copies")
    levels = np.array([c.level for c in copies])
    if not np.allclose(np.diag(sigma), levels, rtol=1e-12, atol=0.0):
        raise ValidationError("diagonal of the noise covariance differs from the copy levels")
    if len({_values(c).shape for c in copies}) != 1:
        raise ShapeError("copies do not share a common shape")
    return sigma


def llse_joint(copies: Sequence[PerturbedCopy], noise_cov, knowledge: AdversaryKnowledge,
               subset: Optional[Sequence[int]] = None) -> LLSEEstimate:
    """Joint LLSE over several copies through the Kronecker reduction."""
    if not copies:
        raise ValidationError("llse_joint needs at least one copy")
    sigma = _check_noise_cov(copies, noise_cov)
    model = knowledge.model
    if _values(copies[0]).shape[1] != model.N:
        raise ShapeError("copies and model disagree on the attribute count")
    w = joint_weights(sigma)
    centred = sum(wi * (_values(c) - model.mu) for wi, c in zip(w, copies))
    xhat = model.mu + centred
    err = max(0.0, 1.0 - w.sum()) * model.cov
    idx = tuple(subset) if subset is not None else tuple(range(len(copies)))
    return LLSEEstimate(xhat=xhat, subset=idx, predicted_error_cov=err, weights=w)


def llse_joint_dense(copies: Sequence[PerturbedCopy], noise_cov,
                     knowledge: AdversaryKnowledge) -> LLSEEstimate:
    """Textbook joint LLSE ``K_X H^T (H K_X H^T + K_zz)^-1 (yy - H mu)``.

    Materializes the MN x MN covariance; limited to ``M * N <= 64``.
    """
    sigma = _check_noise_cov(copies, noise_cov)
    model = knowledge.model
    m, n = len(copies), model.N
    if m * n > DENSE_LIMIT:
        raise ShapeError(f"dense LLSE limited to M*N <= {DENSE_LIMIT}, got {m * n}")
    k = model.cov
    H = np.tile(np.eye(n), (m, 1))
    k_zz = np.kron(sigma, k)
    k_yy = H @ k @ H.T + k_zz
    gain = np.linalg.solve(k_yy, H @ k).T
    yy = np.concatenate([_values(c) for c in copies], axis=1)
    xhat = model.mu + (yy - H @ model.mu) @ gain.T
    err = k - gain @ H @ k
    return LLSEEstimate(xhat=xhat, subset=tuple(range(m)), predicted_error_cov=0.5 * (err + err.T))


def corner_wave_noise_cov(levels) -> np.ndarray:
    lv = np.asarray(levels, dtype=float)
    return np.minimum.outer(lv, lv)


def independent_noise_cov(levels) -> np.ndarray:
    return np.diag(np.asarray(levels, dtype=float))


def predict_error_independent(levels, model: DataModel) -> np.ndarray:
    """``(1 + sum 1/s_i)^-1 K_X`` for mutually independent noise."""
    lv = np.asarray(levels, dtype=float).ravel()
    if lv.size == 0 or np.any(lv < 0):
        raise ValidationError(f"invalid levels {lv.tolist()}")
    if np.any(lv == 0):
        return np.zeros_like(model.cov)
    return model.cov / (1.0 + np.sum(1.0 / lv))


def predict_error_corner_wave(levels, model: DataModel) -> float:
    """Joint distortion under corner-wave noise: only the smallest level matters."""
    lv = np.asarray(levels, dtype=float).ravel()
    if lv.size == 0 or np.any(lv < 0):
        raise ValidationError(f"invalid levels {lv.tolist()}")
    s = lv.min()
    return float(s / (s + 1.0) * np.trace(model.cov) / model.N)
