"""CSV/JSON data products.

Every table is plain CSV with a header row; floats are written with
``repr`` so files round-trip exactly and identical runs give identical
bytes.  Writes go through a temporary file and ``os.replace``.
"""
from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from lrxxz import __version__
from lrxxz.evolution import CorrelationSeries
from lrxxz.fitting import PhaseDiagramGrid
from lrxxz.observables import ConductivitySpectrum, TransportSummary


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def atomic_write(path: str | os.PathLike, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return atomic_write(path, buf.getvalue())


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def sidecar(path) -> Path:
    path = Path(path)
    return path.with_suffix(".meta.json")


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- correlators -------------------------------------------------------------

def write_series(path, series: CorrelationSeries) -> list[Path]:
    """``path``: C_j(t); ``*_stderr.csv``: standard errors; ``*.meta.json``: provenance."""
    path = Path(path)
    header = ["t"] + [str(int(j)) for j in series.sites]
    out = [write_table(path, header, ([t, *series.c[:, n]] for n, t in enumerate(series.times)))]
    err_path = path.with_name(path.stem + "_stderr.csv")
    out.append(write_table(err_path, header, ([t, *series.stderr[:, n]] for n, t in enumerate(series.times))))
    meta = dict(series.meta)
    meta.update(method=series.method, n_samples=series.n_samples, code_version=__version__)
    out.append(write_json(sidecar(path), meta))
    return out


def read_series(path) -> CorrelationSeries:
    path = Path(path)
    header, data = read_table(path)
    sites = np.array([int(h) for h in header[1:]])
    times = data[:, 0]
    c = data[:, 1:].T
    err_path = path.with_name(path.stem + "_stderr.csv")
    stderr = read_table(err_path)[1][:, 1:].T if err_path.exists() else None
    meta = json.loads(sidecar(path).read_text()) if sidecar(path).exists() else {}
    return CorrelationSeries(times, sites, c, meta.get("method", "unknown"), meta.get("n_samples", 0), stderr, meta)


# -- transport / conductivity ------------------------------------------------

def write_transport(path, summary: TransportSummary, meta: dict | None = None) -> list[Path]:
    cols = [summary.times, summary.msd, summary.d_coeff, summary.gamma_t]
    cols = [np.full(summary.times.shape, np.nan) if c is None else c for c in cols]
    out = [write_table(path, ["t", "msd", "d_coeff", "gamma_t"], zip(*cols))]
    info = dict(meta or {})
    info.update(gamma_mean=summary.gamma_mean, gamma_std=summary.gamma_std,
                gamma_window=list(summary.window), code_version=__version__)
    out.append(write_json(sidecar(path), info))
    return out


def read_transport(path) -> TransportSummary:
    _, data = read_table(path)
    meta = json.loads(sidecar(path).read_text())
    return TransportSummary(data[:, 0], data[:, 1], data[:, 2], data[:, 3],
                            meta["gamma_mean"], meta["gamma_std"], tuple(meta["gamma_window"]))


def write_conductivity(path, spec: ConductivitySpectrum, meta: dict | None = None) -> list[Path]:
    path = Path(path)
    out = [write_table(path, ["omega", "sigma_re", "sigma_abs"], zip(spec.omegas, spec.sigma_re, spec.sigma_abs))]
    jj_path = path.with_name("current_correlator.csv")
    out.append(write_table(jj_path, ["t", "jj"], zip(spec.times, spec.jj)))
    info = dict(meta or {})
    info.update(t_max=spec.t_max, code_version=__version__)
    out.append(write_json(sidecar(path), info))
    return out


# -- phase diagram ---------------------------------------------------------

def write_phase_grid(path, grid: PhaseDiagramGrid) -> Path:
    """Matrix CSV: first row ``delta\\alpha, alpha_1, ...``; then ``delta, gamma...``."""
    header = ["delta\\alpha"] + [_fmt(a) for a in grid.alphas]
    return write_table(path, header, ([d, *row] for d, row in zip(grid.deltas, grid.gamma)))


def read_phase_grid(path) -> PhaseDiagramGrid:
    header, data = read_table(path)
    return PhaseDiagramGrid(data[:, 0], [float(a) for a in header[1:]], data[:, 1:])


# -- manifest ------------------------------------------------------------------

class Manifest:
    """``manifest.json`` in the output directory: tasks, seeds, timings, file hashes."""

    def __init__(self, out_dir, plan: dict | None = None):
        self.out_dir = Path(out_dir)
        self.path = self.out_dir / "manifest.json"
        if self.path.exists():
            self.data = json.loads(self.path.read_text())
        else:
            self.data = {"tasks": {}, "files": {}}
        if plan is not None:
            self.data["plan"] = plan
        self.data["code_version"] = __version__
        self.data["versions"] = _versions()

    def completed(self, task_id: str) -> bool:
        """True if the task finished and every file it wrote is intact."""
        task = self.data["tasks"].get(task_id)
        if not task or task.get("status") != "done":
            return False
        for rel, digest in task.get("files", {}).items():
            p = self.out_dir / rel
            if not p.exists() or sha256_file(p) != digest:
                return False
        return True

    def record(self, task_id: str, status: str, files: Iterable[Path] = (), **info) -> None:
        hashes = {}
        for f in files:
            rel = str(Path(f).resolve().relative_to(self.out_dir.resolve()))
            hashes[rel] = sha256_file(f)
        entry = {"status": status, "files": hashes, **info}
        self.data["tasks"][task_id] = entry
        self.data["files"].update(hashes)
        self.save()

    def add_files(self, files: Iterable[Path]) -> None:
        for f in files:
            rel = str(Path(f).resolve().relative_to(self.out_dir.resolve()))
            self.data["files"][rel] = sha256_file(f)
        self.save()

    def save(self) -> None:
        write_json(self.path, self.data)


def _versions() -> dict:
    import platform

    import scipy

    return {"lrxxz": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}
