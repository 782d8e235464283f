"""CSV datasets, model JSON files and on-disk perturbation sessions.

Numbers are written with 17 significant digits so doubles round-trip exactly.
A session directory holds ``session.json`` plus one ``noise_<level>.csv`` per
released level; writers hold ``session.lock`` and the metadata file is
replaced atomically after the noise files are in place.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from filelock import FileLock

from .errors import DataFormatError, SessionError
from .perturb import DataModel, Dataset, PerturbedCopy, PerturbSession, Release

FLOAT_FMT = "%.17g"
SESSION_FILE = "session.json"
LOCK_FILE = "session.lock"
SESSION_VERSION = 1


def format_level(level: float) -> str:
    return repr(float(level))


def copy_filename(level: float) -> str:
    return f"copy_{format_level(level)}.csv"


def noise_filename(level: float) -> str:
    return f"noise_{format_level(level)}.csv"


def read_dataset(path) -> Dataset:
    """Read a numeric CSV with a header row; bad cells are reported by row and column."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            vals = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(
                        f"{path}:{lineno}: column {col!r} has non-numeric value {cell!r}"
                    ) from None
                if not np.isfinite(v):
                    raise DataFormatError(f"{path}:{lineno}: column {col!r} is not finite")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return Dataset(values=np.array(rows), columns=header)


def _atomic_write_text(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_matrix(path, values, columns: Sequence[str]):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        np.savetxt(fh, np.atleast_2d(values), delimiter=",", fmt=FLOAT_FMT,
                   header=",".join(columns), comments="")
    os.replace(tmp, path)


def write_dataset(path, dataset: Dataset):
    write_matrix(path, dataset.values, dataset.columns)


def write_copy(directory, copy: PerturbedCopy, columns: Sequence[str]) -> Path:
    path = Path(directory) / copy_filename(copy.level)
    write_matrix(path, copy.values, columns)
    return path


def read_model(path) -> DataModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from None
    return DataModel.from_dict(data)


def write_model(path, model: DataModel):
    _atomic_write_text(Path(path), json.dumps(model.to_dict(), indent=2) + "\n")


def session_lock(directory) -> FileLock:
    return FileLock(str(Path(directory) / LOCK_FILE))


def save_session(session: PerturbSession, directory):
    """Write noise files first, then the metadata that references them."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    columns = session.columns or [f"x{j}" for j in range(session.model.N)]
    releases = session.releases
    for r in releases:
        write_matrix(directory / noise_filename(r.level), r.noise, columns)
    levels = [r.level for r in releases]
    meta = {
        "version": SESSION_VERSION,
        "scheme": session.scheme,
        "seed": session.seed,
        "generation": session.generation,
        "columns": columns,
        "n_tuples": session.n_tuples,
        "model": session.model.to_dict(),
        "levels": levels,
        "sorted_order": np.argsort(levels, kind="stable").tolist(),
        "noise_files": [noise_filename(lv) for lv in levels],
    }
    _atomic_write_text(directory / SESSION_FILE, json.dumps(meta, indent=2) + "\n")


def load_session(directory) -> PerturbSession:
    directory = Path(directory)
    meta_path = directory / SESSION_FILE
    if not meta_path.exists():
        raise SessionError(f"no session found in {directory}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{meta_path}: invalid JSON ({exc})") from None
    if meta.get("version") != SESSION_VERSION:
        raise SessionError(f"unsupported session version {meta.get('version')!r}")
    releases = []
    for lv, name in zip(meta["levels"], meta["noise_files"]):
        noise = read_dataset(directory / name).values
        releases.append(Release(float(lv), noise))
    return PerturbSession(
        model=DataModel.from_dict(meta["model"]),
        seed=meta["seed"],
        scheme=meta["scheme"],
        columns=meta["columns"],
        n_tuples=meta["n_tuples"],
        generation=meta["generation"],
        releases=releases,
    )


def load_released_copies(directory, session: Optional[PerturbSession] = None):
    """Copies of a session directory in release order, as the adversary sees them."""
    directory = Path(directory)
    session = session or load_session(directory)
    copies = []
    for r in session.releases:
        path = directory / copy_filename(r.level)
        if not path.exists():
            raise SessionError(f"missing released copy {path.name}")
        copies.append(PerturbedCopy(level=r.level, values=read_dataset(path).values))
    return session, copies
