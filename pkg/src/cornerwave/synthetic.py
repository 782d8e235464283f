"""Synthetic stand-ins for the two-attribute census extract (Age, Income)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .perturb import Dataset
from .sampler import SeededRng, cholesky

CENSUS_COLUMNS = ("Age", "Income")
CENSUS_MEANS = (50.06, 16.57)
CENSUS_VARIANCES = (303.03, 219.92)


def gaussian_dataset(T: int, mu, cov, seed: int = 0,
                     columns: Sequence[str] | None = None) -> Dataset:
    """Plain i.i.d. draws from ``N(mu, cov)``."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    L = cholesky(np.atleast_2d(cov))
    w = SeededRng(seed, stream_id=0x5EED).standard_normal((int(T), mu.size))
    return Dataset(values=mu + w @ L.T, columns=list(columns or []))


def census_like(T: int = 100_000, seed: int = 0, lognormal: bool = False,
                means=CENSUS_MEANS, variances=CENSUS_VARIANCES, corr: float = 0.0,
                columns: Sequence[str] = CENSUS_COLUMNS) -> Dataset:
    """Dataset whose sample mean and sample covariance equal the targets exactly.

    Raw draws are Gaussian, or lognormal when ``lognormal`` is set to mimic the
    right skew of real income/age data. They are then affinely re-whitened,
    so the shape is kept and the first two sample moments hit the target.
    """
    means = np.asarray(means, dtype=float)
    sd = np.sqrt(np.asarray(variances, dtype=float))
    n = means.size
    if T < n + 1:
        raise ValueError(f"need more than {n} tuples to match {n}-dimensional moments")
    target = np.full((n, n), float(corr))
    np.fill_diagonal(target, 1.0)
    target = target * np.outer(sd, sd)
    raw = SeededRng(seed, stream_id=0xCE5).standard_normal((int(T), n))
    if lognormal:
        raw = np.exp(0.6 * raw)
    centred = raw - raw.mean(axis=0)
    s = np.atleast_2d(np.cov(centred, rowvar=False, ddof=1))
    white = np.linalg.solve(np.linalg.cholesky(s), centred.T).T
    values = means + white @ np.linalg.cholesky(target).T
    return Dataset(values=values, columns=list(columns))
