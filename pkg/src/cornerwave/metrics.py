"""Distortion, normalized error, privacy-goal verification and attack reports."""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .attack import (
    PARTIAL,
    PERFECT,
    AdversaryKnowledge,
    corner_wave_noise_cov,
    independent_noise_cov,
    llse_joint,
    partial_knowledge,
    perfect_knowledge,
    predicted_joint_factor,
)
from .errors import ShapeError, ValidationError
from .perturb import CORNER_WAVE, INDEPENDENT, DataModel, PerturbedCopy

ANALYTIC_TOL = 1e-9
EMPIRICAL_TOL = 0.05
EXHAUSTIVE_MAX = 12
ALL_MAX = 20
SAMPLED_DEFAULT = 200

SubsetSpec = Union[str, int, Sequence[Sequence[int]]]


def distortion(a, b) -> float:
    """Mean squared difference per entry; symmetric in its arguments."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def attribute_distortion(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    d = (a - b) ** 2
    return d.mean(axis=0) if d.ndim == 2 else np.atleast_1d(d.mean())


def normalized_error(x, xhat, model: DataModel) -> float:
    """Distortion relative to the mean attribute variance ``Tr(K_X) / N``.

    0 is a perfect reconstruction; a blind guess at the mean scores 1.
    """
    tr = float(np.trace(model.cov))
    if tr <= 0:
        raise ValidationError("model covariance has zero trace")
    return distortion(x, xhat) / (tr / model.N)


def noise_cov_for(scheme: str, levels) -> np.ndarray:
    if scheme == CORNER_WAVE:
        return corner_wave_noise_cov(levels)
    if scheme == INDEPENDENT:
        return independent_noise_cov(levels)
    raise ValidationError(f"unknown scheme {scheme!r}")


def enumerate_subsets(m: int, spec: SubsetSpec = "auto", levels=None,
                      seed: int = 0) -> list[tuple[int, ...]]:
    """Subsets of copy indices (0-based) to attack.

    ``"all"`` gives every non-empty subset (``m <= 20``); ``"auto"`` does that
    up to ``m = 12`` and otherwise 200 random subsets plus every prefix of the
    level-sorted order; an integer ``k`` gives ``k`` random subsets; a
    sequence of index lists is taken as is (empty ones are skipped).
    """
    if isinstance(spec, str) and spec == "auto":
        spec = "all" if m <= EXHAUSTIVE_MAX else SAMPLED_DEFAULT
        if spec == SAMPLED_DEFAULT:
            order = np.argsort(levels if levels is not None else np.arange(m), kind="stable")
            prefixes = [tuple(sorted(order[: k + 1].tolist())) for k in range(m)]
            return _dedupe(prefixes + _random_subsets(m, SAMPLED_DEFAULT, seed))
    if isinstance(spec, str):
        if spec != "all":
            raise ValidationError(f"unknown subset spec {spec!r}")
        if m > ALL_MAX:
            raise ValidationError(f"'all' subsets limited to M <= {ALL_MAX}")
        return [c for k in range(1, m + 1) for c in itertools.combinations(range(m), k)]
    if isinstance(spec, (int, np.integer)):
        return _random_subsets(m, int(spec), seed)
    out = []
    for s in spec:
        idx = tuple(sorted(int(i) for i in s))
        if not idx:
            continue
        if idx[0] < 0 or idx[-1] >= m:
            raise ValidationError(f"subset {list(idx)} out of range for {m} copies")
        out.append(idx)
    return _dedupe(out)


def _random_subsets(m: int, k: int, seed: int) -> list[tuple[int, ...]]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(k):
        mask = rng.random(m) < 0.5
        if not mask.any():
            mask[rng.integers(m)] = True
        out.append(tuple(np.flatnonzero(mask).tolist()))
    return out


def _dedupe(subsets):
    seen, out = set(), []
    for s in subsets:
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out


@dataclass
class Verdict:
    subset: tuple[int, ...]
    levels: tuple[float, ...]
    joint_distortion: float
    min_single_distortion: float
    ratio: float
    passed: bool


def analytic_joint_distortion(noise_cov, model: DataModel) -> float:
    return predicted_joint_factor(noise_cov) * float(np.trace(model.cov)) / model.N


def analytic_single_distortion(level: float, model: DataModel) -> float:
    return level / (1.0 + level) * float(np.trace(model.cov)) / model.N


def verify_privacy_goal(levels, model: DataModel, subsets: SubsetSpec = "auto",
                        scheme: str = CORNER_WAVE, seed: int = 0) -> list[Verdict]:
    """Compare joint LLSE distortion with the best single copy for every subset.

    The joint value comes from the general weighted-sum formula on the
    sub-covariance, not from the min-level shortcut, so the check is not
    circular. PASS means equal within 1e-9.
    """
    lv = np.asarray(levels, dtype=float).ravel()
    sigma = noise_cov_for(scheme, lv)
    out = []
    for sub in enumerate_subsets(lv.size, subsets, levels=lv, seed=seed):
        idx = np.array(sub)
        joint = analytic_joint_distortion(sigma[np.ix_(idx, idx)], model)
        best = min(analytic_single_distortion(lv[i], model) for i in idx)
        ratio = joint / best if best > 0 else (1.0 if joint == 0 else np.inf)
        passed = abs(joint - best) <= ANALYTIC_TOL * max(1.0, abs(best))
        out.append(Verdict(sub, tuple(lv[idx].tolist()), joint, best, float(ratio), bool(passed)))
    return out


@dataclass
class AttackRecord:
    subset: tuple[int, ...]
    levels: tuple[float, ...]
    knowledge: str
    predicted_distortion: float
    empirical_distortion: float
    normalized_error: float
    predicted_min_single: float
    empirical_min_single: float
    analytic_ratio: float
    empirical_ratio: float
    analytic_pass: bool
    empirical_pass: bool
    consistent: bool
    attribute_distortion: list[float] = field(default_factory=list)
    attribute_normalized: list[float] = field(default_factory=list)


@dataclass
class AttackReport:
    scheme: str
    columns: list[str]
    samples: Optional[int]
    records: list[AttackRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        recs = []
        for r in self.records:
            d = asdict(r)
            d["subset"] = [i + 1 for i in r.subset]
            d["levels"] = list(r.levels)
            recs.append(d)
        return {"scheme": self.scheme, "columns": self.columns, "samples": self.samples,
                "records": recs}

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def write_csv(self, path):
        """One row per (subset, knowledge, attribute)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["subset", "levels", "knowledge", "attribute",
                        "empirical_distortion", "normalized_error"])
            for r in self.records:
                sub = " ".join(str(i + 1) for i in r.subset)
                lv = " ".join(repr(x) for x in r.levels)
                for name, d, ne in zip(self.columns, r.attribute_distortion,
                                       r.attribute_normalized):
                    w.writerow([sub, lv, r.knowledge, name, f"{d:.17g}", f"{ne:.17g}"])


def _knowledge_for(kind: str, held: Sequence[PerturbedCopy], model: Optional[DataModel],
                   samples: Optional[int], pooled: bool) -> AdversaryKnowledge:
    if kind == PERFECT:
        if model is None:
            raise ValidationError("perfect knowledge needs the true data model")
        return perfect_knowledge(model)
    if kind == PARTIAL:
        return partial_knowledge(held, samples=samples, pooled=pooled)
    raise ValidationError(f"unknown knowledge kind {kind!r}")


def attack_report(x, copies: Sequence[PerturbedCopy], scheme: str, model: DataModel,
                  subsets: SubsetSpec = "auto", knowledge: Sequence[str] = (PERFECT,),
                  samples: Optional[int] = None, pooled: bool = False,
                  columns: Optional[Sequence[str]] = None, seed: int = 0,
                  tolerance: float = EMPIRICAL_TOL) -> AttackReport:
    """Run joint and single-copy LLSE attacks over subsets and score them against ``x``.

    ``model`` is the owner's model; it normalizes errors and is what a
    perfect-knowledge adversary uses. Partial-knowledge adversaries estimate
    their own model from the copies they hold.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    levels = np.array([c.level for c in copies])
    sigma = noise_cov_for(scheme, levels)
    names = list(columns) if columns else [f"x{j}" for j in range(x.shape[1])]
    report = AttackReport(scheme=scheme, columns=names, samples=samples)
    var = np.diag(model.cov)
    mean_var = float(np.trace(model.cov)) / model.N
    for kind in knowledge:
        for sub in enumerate_subsets(len(copies), subsets, levels=levels, seed=seed):
            held = [copies[i] for i in sub]
            know = _knowledge_for(kind, held, model, samples, pooled)
            idx = np.array(sub)
            joint = llse_joint(held, sigma[np.ix_(idx, idx)], know, subset=sub)
            emp = distortion(x, joint.xhat)
            singles = [llse_joint([c], [[c.level]], know) for c in held]
            emp_single = min(distortion(x, s.xhat) for s in singles)
            pred_single = min(s.predicted_distortion for s in singles)
            pred = joint.predicted_distortion
            a_ratio = pred / pred_single if pred_single > 0 else 1.0
            e_ratio = emp / emp_single if emp_single > 0 else 1.0
            attr = attribute_distortion(x, joint.xhat)
            report.records.append(AttackRecord(
                subset=sub,
                levels=tuple(levels[idx].tolist()),
                knowledge=kind,
                predicted_distortion=pred,
                empirical_distortion=emp,
                normalized_error=emp / mean_var,
                predicted_min_single=pred_single,
                empirical_min_single=emp_single,
                analytic_ratio=float(a_ratio),
                empirical_ratio=float(e_ratio),
                analytic_pass=bool(abs(pred - pred_single) <= ANALYTIC_TOL * max(1.0, pred_single)),
                empirical_pass=bool(abs(e_ratio - 1.0) <= tolerance),
                consistent=bool(pred > 0 and abs(emp / pred - 1.0) <= tolerance),
                attribute_distortion=attr.tolist(),
                attribute_normalized=(attr / var).tolist(),
            ))
    return report
