"""Command-line entry point: ``cornerwave gen|attack|exp1|exp2|synth``.

Exit codes: 0 success, 2 validation error, 3 IO error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import NumericalError, SessionError, ValidationError
from .experiments import (
    experiment1,
    experiment2,
    loglog_slopes,
    random_levels,
    write_rows,
)
from .metrics import attack_report
from .perturb import (
    CORNER_WAVE,
    INDEPENDENT,
    DataModel,
    Dataset,
    PerturbSession,
    batch_parallel,
    batch_sequential,
    independent_noise,
    on_demand,
)
from .synthetic import census_like

log = logging.getLogger("cornerwave")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

BATCH_MODES = {
    "parallel": (CORNER_WAVE, batch_parallel),
    "sequential": (CORNER_WAVE, batch_sequential),
    "independent": (INDEPENDENT, independent_noise),
}


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _levels(args) -> list[float]:
    if args.levels is not None:
        return args.levels
    spec = args.random_levels
    if len(spec) != 3 or spec[0] != int(spec[0]) or spec[0] < 1:
        raise ValidationError("--random-levels expects M,lo,hi")
    return random_levels(int(spec[0]), spec[1], spec[2], args.seed).tolist()


def _dataset(args, out: Path) -> Dataset:
    if args.input is not None:
        return io.read_dataset(args.input)
    X = census_like(args.synthetic, seed=args.seed, lognormal=args.lognormal)
    out.mkdir(parents=True, exist_ok=True)
    io.write_dataset(out / "original.csv", X)
    return X


def cmd_gen(args) -> int:
    out = Path(args.out)
    levels = _levels(args)
    if args.mode == "ondemand":
        if not (out / io.SESSION_FILE).exists():
            raise SessionError(f"--mode ondemand needs an existing session in {out}")
        if args.input is None:
            raise ValidationError("--mode ondemand needs --input with the original data")
        X = io.read_dataset(args.input)
        with io.session_lock(out):
            session = io.load_session(out)
            if args.model is not None:
                given = io.read_model(args.model)
                if not (np.allclose(given.mu, session.model.mu)
                        and np.allclose(given.cov, session.model.cov)):
                    raise SessionError("--model differs from the model stored in the session")
            copies = on_demand(session, X, levels)
            _write_copies(out, copies, X.columns)
            io.save_session(session, out)
    else:
        if (out / io.SESSION_FILE).exists():
            raise SessionError(
                f"{out} already holds a session; use --mode ondemand or a fresh directory"
            )
        X = _dataset(args, out)
        model = io.read_model(args.model) if args.model else DataModel.estimate(X.values)
        scheme, generate = BATCH_MODES[args.mode]
        if scheme == INDEPENDENT and len(set(levels)) != len(levels):
            raise ValidationError("independent mode needs distinct levels")
        out.mkdir(parents=True, exist_ok=True)
        with io.session_lock(out):
            session = PerturbSession(model, seed=args.seed, scheme=scheme, columns=X.columns)
            copies = generate(X, model, levels, session.next_rng())
            for c in copies:
                if c.level not in session.levels:
                    session.add(c.level, c.noise)
            _write_copies(out, copies, X.columns)
            io.save_session(session, out)
    print("level\tpredicted_normalized_error\tfile")
    for c in copies:
        print(f"{c.level!r}\t{c.level / (1.0 + c.level):.6f}\t{io.copy_filename(c.level)}")
    return EXIT_OK


def _write_copies(out: Path, copies, columns):
    written = set()
    for c in copies:
        if c.level not in written:
            io.write_copy(out, c, columns)
            written.add(c.level)


def _subset_spec(text: str):
    if text in ("all", "auto"):
        return text
    groups = [g for g in text.split(";") if g.strip()]
    try:
        return [[int(i) - 1 for i in g.split(",") if i.strip()] for g in groups]
    except ValueError:
        raise ValidationError(f"bad subset spec {text!r}") from None


def cmd_attack(args) -> int:
    session_dir = Path(args.session)
    session, copies = io.load_released_copies(session_dir)
    if not copies:
        raise SessionError("session has no released copies")
    if args.input is not None:
        x = io.read_dataset(args.input).values
    else:
        # owner-side evaluation: the session's realized noise recovers X
        x = copies[0].values - session.releases[0].noise
    kinds = ("perfect", "partial") if args.knowledge == "both" else (args.knowledge,)
    samples = args.samples
    if samples is None and "partial" in kinds:
        samples = 100 * session.model.N ** 2
    report = attack_report(
        x, copies, session.scheme, session.model, subsets=_subset_spec(args.subset),
        knowledge=kinds, samples=samples, pooled=args.pooled, columns=session.columns,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write_json(out / "attack_report.json")
    report.write_csv(out / "attack_report.csv")
    print("knowledge\tsubset\tpredicted\tempirical\tnormalized\tratio\tgoal")
    for r in report.records:
        sub = ",".join(str(i + 1) for i in r.subset)
        goal = "PASS" if r.analytic_pass else "FAIL"
        print(f"{r.knowledge}\t{sub}\t{r.predicted_distortion:.6g}\t"
              f"{r.empirical_distortion:.6g}\t{r.normalized_error:.6g}\t"
              f"{r.empirical_ratio:.4f}\t{goal}")
    return EXIT_OK


def cmd_exp1(args) -> int:
    lo, hi = args.range
    X = io.read_dataset(args.input) if args.input else None
    rows = experiment1(m=args.m, T=args.t, lo=lo, hi=hi, seed=args.seed, dataset=X)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "exp1.csv", rows)
    last = rows[-1]
    print(f"M={args.m}: independent {last['indep_perfect']:.4f}, "
          f"corner-wave {last['cw_perfect']:.4f}, "
          f"least-perturbed {last['cw_least_perturbed']:.4f}")
    return EXIT_OK


def cmd_exp2(args) -> int:
    rows = experiment2(m_list=args.m_list, T=args.t, reps=args.reps, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "exp2.csv", [dataclasses.asdict(r) for r in rows])
    slopes = loglog_slopes(rows)
    write_rows(out / "exp2_slopes.csv",
               [{"fraction": k, "loglog_slope": v} for k, v in slopes.items()])
    for r in rows:
        print(f"M={r.M} L={r.L}: on-demand median {r.ondemand_median_s:.4f}s, "
              f"independent median {r.independent_median_s:.4f}s")
    for k, v in slopes.items():
        print(f"L={k}M: log-log slope of per-tuple cost {v:.3f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    X = census_like(args.t, seed=args.seed, lognormal=args.lognormal)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_dataset(out, X)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cornerwave",
        description="Release data copies at several trust levels and simulate attacks on them.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate perturbed copies")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--input", help="CSV with header row and numeric columns")
    src.add_argument("--synthetic", type=int, metavar="T",
                     help="use a synthetic Age/Income dataset of T tuples")
    g.add_argument("--lognormal", action="store_true", help="skewed synthetic data")
    lv = g.add_mutually_exclusive_group(required=True)
    lv.add_argument("--levels", type=_floats)
    lv.add_argument("--random-levels", type=_floats, metavar="M,LO,HI")
    g.add_argument("--mode", choices=["parallel", "sequential", "ondemand", "independent"],
                   default="parallel")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    mg = g.add_mutually_exclusive_group()
    mg.add_argument("--model", help="JSON file {\"mu\": [...], \"cov\": [[...]]}")
    mg.add_argument("--estimate", action="store_true",
                    help="estimate the model from the data (default)")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("attack", help="simulate LLSE diversity attacks on a session")
    a.add_argument("--session", required=True)
    a.add_argument("--input", help="original data; recovered from the session when omitted")
    a.add_argument("--subset", default="all",
                   help="all | auto | 1,3,4 (several subsets separated by ';')")
    a.add_argument("--knowledge", choices=["perfect", "partial", "both"], default="both")
    a.add_argument("--samples", type=int, help="tuples available to a partial adversary")
    a.add_argument("--pooled", action="store_true",
                   help="partial adversary pools its model estimate over all held copies")
    a.add_argument("--seed", type=int, default=0, help="seed for sampled subsets")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_attack)

    e1 = sub.add_parser("exp1", help="normalized attack error vs number of released copies")
    e1.add_argument("--m", type=int, default=30)
    e1.add_argument("--t", type=int, default=100_000)
    e1.add_argument("--range", type=_floats, default=[0.25, 1.0], metavar="LO,HI")
    e1.add_argument("--seed", type=int, default=0)
    e1.add_argument("--input", help="dataset CSV instead of the synthetic one")
    e1.add_argument("--out", required=True)
    e1.set_defaults(func=cmd_exp1)

    e2 = sub.add_parser("exp2", help="on-demand generation runtime vs M")
    e2.add_argument("--m-list", type=_ints, default=[8, 16, 32, 64])
    e2.add_argument("--t", type=int, default=100_000)
    e2.add_argument("--reps", type=int, default=3)
    e2.add_argument("--seed", type=int, default=0)
    e2.add_argument("--out", required=True)
    e2.set_defaults(func=cmd_exp2)

    s = sub.add_parser("synth", help="write a synthetic Age/Income CSV")
    s.add_argument("--t", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--lognormal", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "gen" and args.input is None and args.synthetic is None \
            and args.mode != "ondemand":
        parser.error("gen needs --input or --synthetic")
    if args.command == "exp1" and len(args.range) != 2:
        parser.error("--range expects LO,HI")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
