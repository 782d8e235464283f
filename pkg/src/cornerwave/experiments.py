"""Desk-scale experiments: attack error vs number of copies, and on-demand runtime."""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .attack import llse_joint, llse_single, partial_knowledge, perfect_knowledge
from .metrics import noise_cov_for, normalized_error
from .perturb import (
    CORNER_WAVE,
    INDEPENDENT,
    DataModel,
    Dataset,
    PerturbSession,
    Release,
    batch_parallel,
    independent_noise,
    on_demand,
)
from .sampler import SeededRng
from .synthetic import census_like

SAMPLE_FACTORS = (100, 200, 300)
LEVEL_STREAM = 0x1E7E1


def random_levels(m: int, lo: float, hi: float, seed: int, distinct: bool = True) -> np.ndarray:
    """``m`` levels uniform in ``[lo, hi]``; redrawn until pairwise distinct."""
    if not 0 < lo <= hi:
        raise ValueError(f"invalid level range [{lo}, {hi}]")
    rng = SeededRng(seed, stream_id=LEVEL_STREAM)
    while True:
        lv = lo + (hi - lo) * rng.uniform(m)
        if not distinct or np.unique(lv).size == m:
            return lv


def _joint_error(x, copies, scheme, know, model):
    lv = np.array([c.level for c in copies])
    est = llse_joint(copies, noise_cov_for(scheme, lv), know)
    return normalized_error(x, est.xhat, model)


def experiment1(m: int = 30, T: int = 100_000, lo: float = 0.25, hi: float = 1.0,
                seed: int = 0, dataset: Optional[Dataset] = None,
                sample_factors: Sequence[int] = SAMPLE_FACTORS) -> list[dict]:
    """Release ``m`` copies one at a time and attack all copies released so far.

    Corner-wave copies come from on-demand generation; the baseline adds
    independent noise. Each row holds normalized joint-attack errors for
    perfect knowledge and for partial knowledge with ``f * N^2`` samples.
    """
    X = dataset if dataset is not None else census_like(T, seed=seed)
    model = DataModel.estimate(X.values)
    levels = random_levels(m, lo, hi, seed)
    session = PerturbSession(model, seed=seed, scheme=CORNER_WAVE, columns=X.columns)
    perfect = perfect_knowledge(model)
    cw, ind = [], []
    rows = []
    base = SeededRng(seed, stream_id=0x1AD)
    for k, lv in enumerate(levels, start=1):
        cw += on_demand(session, X, [lv])
        ind += independent_noise(X, model, [lv], base.substream(k))
        least = min(cw, key=lambda c: c.level)
        row = {
            "copies": k,
            "level": float(lv),
            "min_level": float(least.level),
            "indep_perfect": _joint_error(X.values, ind, INDEPENDENT, perfect, model),
            "cw_perfect": _joint_error(X.values, cw, CORNER_WAVE, perfect, model),
            "cw_least_perturbed": normalized_error(
                X.values, llse_single(least, perfect).xhat, model),
            "indep_predicted": 1.0 / (1.0 + float(np.sum(1.0 / levels[:k]))),
            "cw_predicted": float(least.level / (1.0 + least.level)),
        }
        for f in sample_factors:
            n_samples = f * X.N ** 2
            for scheme, copies in ((INDEPENDENT, ind), (CORNER_WAVE, cw)):
                tag = "indep" if scheme == INDEPENDENT else "cw"
                know = partial_knowledge(copies, samples=n_samples)
                row[f"{tag}_partial_{f}N2"] = _joint_error(X.values, copies, scheme, know, model)
        rows.append(row)
    return rows


def partial_knowledge_trend(seeds: Sequence[int], m: int = 10, T: int = 20_000,
                            lo: float = 0.25, hi: float = 1.0,
                            sample_factors: Sequence[int] = (100, 300)) -> dict:
    """Mean normalized error per (scheme, sample factor) averaged over seeds and copy counts."""
    acc: dict[str, list[float]] = {}
    for s in seeds:
        rows = experiment1(m=m, T=T, lo=lo, hi=hi, seed=int(s), sample_factors=sample_factors)
        for key in rows[0]:
            if "partial" in key or key.endswith("perfect"):
                acc.setdefault(key, []).extend(r[key] for r in rows)
    return {k: float(np.mean(v)) for k, v in acc.items()}


@dataclass
class TimingRow:
    M: int
    L: int
    fraction: str
    new_copies: int
    T: int
    reps: int
    ondemand_mean_s: float
    ondemand_median_s: float
    per_tuple_s: float
    independent_mean_s: float
    independent_median_s: float


def _time(fn, reps: int) -> list[float]:
    fn()  # warm-up, discarded
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return out


def experiment2(m_list: Sequence[int] = (8, 16, 32, 64), T: int = 100_000, reps: int = 3,
                fractions=((1, 4), (1, 2), (3, 4)), seed: int = 0, n_attributes: int = 2,
                lo: float = 0.25, hi: float = 1.0) -> list[TimingRow]:
    """Time on-demand generation of ``M - L`` copies given ``L = floor(f * M)`` released ones."""
    X = census_like(T, seed=seed, means=np.full(n_attributes, 10.0),
                    variances=np.ones(n_attributes),
                    columns=[f"x{j}" for j in range(n_attributes)])
    model = DataModel.estimate(X.values)
    rows = []
    for M in m_list:
        levels = random_levels(M, lo, hi, seed + M)
        for num, den in fractions:
            L = (num * M) // den
            old, new = levels[:L], levels[L:]
            released = batch_parallel(X, model, old, SeededRng(seed, 1)) if L else []
            prior = [Release(c.level, c.noise) for c in released]

            def run_ondemand():
                session = PerturbSession(model, seed=seed, releases=prior, n_tuples=X.T)
                on_demand(session, X, new, SeededRng(seed, 2))

            def run_independent():
                independent_noise(X, model, new, SeededRng(seed, 3))

            t_od = _time(run_ondemand, reps)
            t_in = _time(run_independent, reps)
            med = statistics.median(t_od)
            rows.append(TimingRow(
                M=M, L=L, fraction=f"{num}/{den}", new_copies=M - L, T=T, reps=reps,
                ondemand_mean_s=statistics.fmean(t_od), ondemand_median_s=med,
                per_tuple_s=med / T,
                independent_mean_s=statistics.fmean(t_in),
                independent_median_s=statistics.median(t_in),
            ))
    return rows


def loglog_slopes(rows: Sequence[TimingRow]) -> dict[str, float]:
    """Least-squares slope of log(per-tuple time) against log(M), per L fraction."""
    out = {}
    for frac in dict.fromkeys(r.fraction for r in rows):
        sub = [r for r in rows if r.fraction == frac]
        m = np.log([r.M for r in sub])
        t = np.log([r.per_tuple_s for r in sub])
        out[frac] = float(np.polyfit(m, t, 1)[0])
    return out


def write_rows(path, rows: Sequence[dict], float_fmt: str = "%.17g"):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        keys = list(rows[0].keys())
        w.writerow(keys)
        for r in rows:
            w.writerow([float_fmt % r[k] if isinstance(r[k], float) else r[k] for k in keys])
