"""Command-line orchestration of correlator, transport, conductivity, spectral,
sweep and fit runs.

    lrxxz transport --config run.yaml --out results/ --seed 7 --method dqt

The config file is YAML (JSON also parses).  Chain keys sit at the top level
(``L, J, delta, alpha, h_z, disorder_amplitude, seed``); the remaining
sections are listed in :data:`PLAN_KEYS`.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from lrxxz import io as lio
from lrxxz.evolution import (
    EXACT_TRACE_MAX_L,
    CorrelationSeries,
    PropagatorConfig,
    correlator_dqt,
    correlator_exact_trace,
    correlator_sampled,
    default_n_typical,
    time_grid,
)
from lrxxz.fitting import PhaseDiagramGrid, classify, fit_boundary, fit_late_time, fit_short_time
from lrxxz.hamiltonian import CONFIG_KEYS, ChainSpec, build_couplings
from lrxxz.observables import conductivity, current_autocorrelator, transport_summary
from lrxxz.spectral import ED_MAX_L, BDReference, bd_reference, spectral_diagnostics

log = logging.getLogger("lrxxz")

MODES = ("correlate", "transport", "conductivity", "spectral", "sweep", "fit")
METHODS = ("dqt", "sampled", "exact")
PLAN_KEYS = {
    "method", "n_typical", "n_samples", "times", "propagator", "gamma_window",
    "conductivity", "spectral", "sweep", "fit", "memory_budget_gib",
}
_SECTION_KEYS = {
    "times": {"t_max", "spacing"},
    "propagator": {"method", "dt", "taylor_order", "krylov_dim", "norm_tolerance", "max_halvings"},
    "conductivity": {"omega_max", "n_omega", "t_max", "damping_time"},
    "spectral": {"count", "n_disorder", "fraction", "mu_bd", "sigma_bd"},
    "sweep": {"deltas", "alphas"},
    "fit": {"input", "window", "t_cut"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass
class ExperimentPlan:
    mode: str
    spec: ChainSpec
    method: str = "dqt"
    out_dir: Path = Path("out")
    master_seed: int = 0
    resume: bool = False
    threads: int = 1
    n_typical: int | None = None
    n_samples: int = 40
    t_max: float = 10.0
    spacing: float = 0.05
    propagator: PropagatorConfig = field(default_factory=PropagatorConfig)
    gamma_window: tuple[float, float] = (3.0, 5.0)
    deltas: tuple[float, ...] = ()
    alphas: tuple[float, ...] = ()
    omega_max: float = 10.0
    n_omega: int = 201
    cond_t_max: float | None = None
    damping_time: float | None = None
    count: int | None = None
    n_disorder: int = 1
    fraction: float = 0.5
    bd: BDReference | None = None
    fit_input: Path | None = None
    fit_window: tuple[float, float] | None = None
    t_cut: float = 0.1
    memory_budget_gib: float = 4.0

    @property
    def times(self) -> np.ndarray:
        return time_grid(self.t_max, self.spacing)

    def grid_cells(self) -> list[tuple[float, float]]:
        if self.deltas and self.alphas:
            return [(d, a) for d in self.deltas for a in self.alphas]
        return [(self.spec.delta, self.spec.alpha)]

    def describe(self) -> dict:
        d = asdict(self)
        d["spec"] = self.spec.to_config()
        d["out_dir"] = str(self.out_dir)
        d["fit_input"] = str(self.fit_input) if self.fit_input else None
        d.pop("resume")
        d.pop("threads")
        return d


# -- config --------------------------------------------------------------------

def load_config(path) -> dict:
    try:
        cfg = yaml.safe_load(Path(path).read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a key-value mapping")
    return cfg


def _num(cfg, key, kind=float):
    try:
        return kind(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key '{key}': {exc}") from exc


def plan_from_config(mode: str, cfg: dict, **overrides) -> ExperimentPlan:
    """Translate a config mapping (plus CLI overrides) into an ExperimentPlan."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode '{mode}'")
    unknown = set(cfg) - set(CONFIG_KEYS) - PLAN_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    for sec, allowed in _SECTION_KEYS.items():
        if sec in cfg:
            if not isinstance(cfg[sec], dict):
                raise ConfigError(f"config key '{sec}' must be a mapping")
            bad = set(cfg[sec]) - allowed
            if bad:
                raise ConfigError(f"unknown config key(s): {', '.join(f'{sec}.{b}' for b in sorted(bad))}")

    chain = {k: cfg[k] for k in CONFIG_KEYS if k in cfg}
    sweep = cfg.get("sweep", {})
    if "L" not in chain:
        raise ConfigError("config key 'L' is required")
    for key in ("delta", "alpha"):
        if key not in chain:
            axis = sweep.get(key + "s")
            if not axis:
                raise ConfigError(f"config key '{key}' is required")
            chain[key] = axis[0]
    if overrides.get("seed") is not None:
        chain["seed"] = overrides["seed"]
    try:
        spec = ChainSpec.from_config(chain)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"chain config: {exc}") from exc

    kw: dict[str, Any] = {"mode": mode, "spec": spec, "master_seed": spec.rng_seed}
    method = overrides.get("method") or cfg.get("method", "dqt")
    if method not in METHODS:
        raise ConfigError(f"config key 'method': expected one of {METHODS}, got {method!r}")
    kw["method"] = method
    if "n_typical" in cfg:
        kw["n_typical"] = _num(cfg, "n_typical", int)
    if "n_samples" in cfg:
        kw["n_samples"] = _num(cfg, "n_samples", int)
    times = cfg.get("times", {})
    if "t_max" in times:
        kw["t_max"] = _num(times, "t_max")
    if "spacing" in times:
        kw["spacing"] = _num(times, "spacing")
    if "propagator" in cfg:
        try:
            kw["propagator"] = PropagatorConfig(**cfg["propagator"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key 'propagator': {exc}") from exc
    if "gamma_window" in cfg:
        w = cfg["gamma_window"]
        if not isinstance(w, (list, tuple)) or len(w) != 2:
            raise ConfigError("config key 'gamma_window' must be a [lo, hi] pair")
        kw["gamma_window"] = (float(w[0]), float(w[1]))
    if sweep:
        kw["deltas"] = tuple(float(x) for x in sweep.get("deltas", [spec.delta]))
        kw["alphas"] = tuple(float(x) for x in sweep.get("alphas", [spec.alpha]))
    cond = cfg.get("conductivity", {})
    for src, dst, kind in (("omega_max", "omega_max", float), ("n_omega", "n_omega", int),
                           ("t_max", "cond_t_max", float), ("damping_time", "damping_time", float)):
        if cond.get(src) is not None:
            kw[dst] = _num(cond, src, kind)
    spc = cfg.get("spectral", {})
    for src, kind in (("count", int), ("n_disorder", int), ("fraction", float)):
        if spc.get(src) is not None:
            kw[src] = _num(spc, src, kind)
    if "mu_bd" in spc or "sigma_bd" in spc:
        try:
            kw["bd"] = BDReference(float(spc["mu_bd"]), float(spc["sigma_bd"]))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"config keys 'spectral.mu_bd'/'spectral.sigma_bd': {exc}") from exc
    fit = cfg.get("fit", {})
    if fit.get("input"):
        kw["fit_input"] = Path(fit["input"])
    if fit.get("window"):
        kw["fit_window"] = (float(fit["window"][0]), float(fit["window"][1]))
    if "t_cut" in fit:
        kw["t_cut"] = _num(fit, "t_cut")
    if "memory_budget_gib" in cfg:
        kw["memory_budget_gib"] = _num(cfg, "memory_budget_gib")
    for key in ("out_dir", "resume", "threads"):
        if overrides.get(key) is not None:
            kw[key] = overrides[key]
    return ExperimentPlan(**kw)


# -- validation ------------------------------------------------------------------

@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    memory_bytes: int = 0

    @property
    def ok(self) -> bool:
        return not self.errors

    def __str__(self) -> str:
        lines = [f"memory estimate: {self.memory_bytes / 2**30:.3f} GiB"]
        lines += [f"error: {e}" for e in self.errors]
        lines += [f"warning: {w}" for w in self.warnings]
        lines.append("ok" if self.ok else "refused")
        return "\n".join(lines)


def live_vectors(plan: ExperimentPlan) -> int:
    """Full-space vectors held at once by the propagation of one sample."""
    columns = 2  # dqt: psi and sz_c psi; sampled: a configuration and its conjugate
    p = plan.propagator
    per_column = 5 if p.method == "taylor" else p.krylov_dim + 3
    return columns * per_column


def estimate_memory(plan: ExperimentPlan) -> int:
    """16 bytes x 2^L x live-vector count (zero for ED-only modes)."""
    if plan.mode == "spectral" or plan.method == "exact":
        return 0
    if plan.mode == "fit" and plan.fit_input is not None:
        return 0
    return 16 * (1 << plan.spec.L) * live_vectors(plan)


def _transport_like(plan: ExperimentPlan) -> bool:
    return plan.mode in ("correlate", "transport", "conductivity", "sweep") or (
        plan.mode == "fit" and plan.fit_input is None
    )


def validate(plan: ExperimentPlan) -> ValidationReport:
    rep = ValidationReport()
    L = plan.spec.L
    if _transport_like(plan):
        if L % 2 == 0:
            rep.errors.append(f"L={L}: transport runs need odd L so the chain has a unique central site")
        if plan.method == "exact" and L > EXACT_TRACE_MAX_L:
            rep.errors.append(f"L={L}: exact method is limited to L <= {EXACT_TRACE_MAX_L}")
        if plan.method == "sampled" and (plan.n_samples < 2 or plan.n_samples % 2):
            rep.errors.append(f"n_samples={plan.n_samples} must be even (conjugate pairs)")
        if plan.t_max <= 0 or plan.spacing <= 0 or plan.spacing > plan.t_max:
            rep.errors.append("times: need 0 < spacing <= t_max")
        lo, hi = plan.gamma_window
        if not 0 < lo < hi:
            rep.errors.append(f"gamma_window [{lo}, {hi}] must satisfy 0 < lo < hi")
        elif hi > plan.t_max + 1e-12:
            rep.errors.append(f"gamma_window upper edge {hi} exceeds t_max={plan.t_max}")
        if plan.mode in ("sweep", "fit") and plan.t_max <= 1.0 / 0.8:
            rep.errors.append("late-time fit needs t_max > 1.25 (window [1, 0.8 t_max])")
    if plan.mode == "spectral":
        if L % 2 or L > ED_MAX_L:
            rep.errors.append(f"L={L}: spectral diagnostics need even L <= {ED_MAX_L} (half filling)")
        if plan.bd is None and L not in (12, 14):
            rep.errors.append(f"L={L}: no built-in Bianchi-Dona reference; set spectral.mu_bd and spectral.sigma_bd")
        if plan.count is not None and plan.count < 2:
            rep.errors.append("spectral.count must be >= 2")
    if plan.mode == "sweep" or plan.deltas or plan.alphas:
        for name in ("deltas", "alphas"):
            axis = np.asarray(getattr(plan, name))
            if axis.size == 0 or np.any(np.diff(axis) <= 0):
                rep.errors.append(f"sweep.{name} must be non-empty and strictly increasing")
    if plan.mode == "fit" and plan.fit_input is not None and not Path(plan.fit_input).exists():
        rep.errors.append(f"fit.input: file {plan.fit_input} not found")
    rep.memory_bytes = estimate_memory(plan)
    budget = plan.memory_budget_gib * 2**30
    if rep.memory_bytes > budget:
        rep.errors.append(
            f"memory estimate {rep.memory_bytes / 2**30:.2f} GiB exceeds budget {plan.memory_budget_gib:g} GiB "
            f"(16 B x 2^{L} x {live_vectors(plan)} vectors)"
        )
    return rep


# -- tasks -----------------------------------------------------------------------

def task_seed(master: int, kind: str, delta: float, alpha: float, L: int) -> int:
    """Stable 64-bit seed for one grid cell; independent of the rest of the grid."""
    key = f"{master}|{kind}|{float(delta)!r}|{float(alpha)!r}|{L}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def cell_id(delta: float, alpha: float) -> str:
    return f"d{delta:g}_a{alpha:g}"


def compute_series(plan: ExperimentPlan, spec: ChainSpec) -> CorrelationSeries:
    if plan.method == "exact":
        return correlator_exact_trace(spec, plan.times)
    if plan.method == "sampled":
        return correlator_sampled(spec, plan.propagator, plan.times, plan.n_samples)
    return correlator_dqt(spec, plan.propagator, plan.times, plan.n_typical)


def cell_spec(plan: ExperimentPlan, delta: float, alpha: float, kind: str = "transport") -> ChainSpec:
    seed = task_seed(plan.master_seed, kind, delta, alpha, plan.spec.L)
    return plan.spec.replace(delta=delta, alpha=alpha, rng_seed=seed)


def _omegas(plan: ExperimentPlan) -> np.ndarray:
    return np.linspace(0.0, plan.omega_max, plan.n_omega)


def run_transport_cell(plan: ExperimentPlan, delta: float, alpha: float, out: Path, with_conductivity: bool = False) -> dict:
    """Correlator, transport summary, late-time fit (and optionally conductivity) for one cell."""
    spec = cell_spec(plan, delta, alpha)
    t0 = time.perf_counter()
    series = compute_series(plan, spec)
    summary = transport_summary(series, plan.gamma_window)
    files = lio.write_series(out / "correlator.csv", series)
    files += lio.write_transport(out / "transport.csv", summary, {"spec": spec.to_config(), "method": plan.method})
    result = {"delta": delta, "alpha": alpha, "seed": spec.rng_seed,
              "gamma_mean": summary.gamma_mean, "gamma_std": summary.gamma_std}
    try:
        fit = fit_late_time(series.times, series.autocorrelator, plan.fit_window)
        files.append(lio.atomic_write(out / "fit.txt", fit.report()))
        result["gamma_fit"] = fit.gamma
    except ValueError as exc:
        log.warning("cell %s: late-time fit skipped (%s)", cell_id(delta, alpha), exc)
        result["gamma_fit"] = float("nan")
    if with_conductivity:
        tj, jj = current_autocorrelator(summary)
        cond = conductivity(tj, jj, _omegas(plan), plan.cond_t_max, plan.damping_time)
        files += lio.write_conductivity(out / "conductivity.csv", cond, {"spec": spec.to_config()})
        result["sigma0_abs"] = float(cond.sigma_abs[0])
    files.append(lio.write_json(out / "cell.json", result))
    result["files"] = [str(f) for f in files]
    result["wall_time"] = time.perf_counter() - t0
    return result


def _cell_worker(args):
    plan, delta, alpha, out = args
    import numba

    numba.set_num_threads(1)
    return run_transport_cell(plan, delta, alpha, Path(out))


# -- modes --------------------------------------------------------------------------

def _single(plan: ExperimentPlan, manifest: lio.Manifest) -> int:
    task = f"{plan.mode}:{cell_id(plan.spec.delta, plan.spec.alpha)}"
    if plan.resume and manifest.completed(task):
        log.info("%s already complete; skipping", task)
        return 0
    t0 = time.perf_counter()
    out = plan.out_dir
    spec = cell_spec(plan, plan.spec.delta, plan.spec.alpha)
    series = compute_series(plan, spec)
    files = lio.write_series(out / "correlator.csv", series)
    if plan.mode in ("transport", "conductivity"):
        summary = transport_summary(series, plan.gamma_window)
        files += lio.write_transport(out / "transport.csv", summary, {"spec": spec.to_config(), "method": plan.method})
        log.info("gamma over %s: %.4f +- %.4f", plan.gamma_window, summary.gamma_mean, summary.gamma_std)
    if plan.mode == "conductivity":
        tj, jj = current_autocorrelator(summary)
        cond = conductivity(tj, jj, _omegas(plan), plan.cond_t_max, plan.damping_time)
        files += lio.write_conductivity(out / "conductivity.csv", cond, {"spec": spec.to_config()})
        log.info("|T sigma(0)| = %.6g", cond.sigma_abs[0])
    manifest.record(task, "done", files, seed=spec.rng_seed, wall_time=time.perf_counter() - t0)
    return 0


def _sweep(plan: ExperimentPlan, manifest: lio.Manifest) -> int:
    cells = plan.grid_cells()
    results: dict[tuple[float, float], dict] = {}
    todo = []
    for d, a in cells:
        task = f"cell:{cell_id(d, a)}"
        cell_dir = plan.out_dir / "cells" / cell_id(d, a)
        if plan.resume and manifest.completed(task):
            results[(d, a)] = json.loads((cell_dir / "cell.json").read_text())
            log.info("%s already complete; skipping", task)
        else:
            todo.append((d, a, cell_dir))
    failed = []

    def _done(d, a, res):
        files = [Path(f) for f in res.pop("files")]
        wall = res.pop("wall_time")
        manifest.record(f"cell:{cell_id(d, a)}", "done", files, seed=res["seed"], wall_time=wall)
        results[(d, a)] = res

    def _fail(d, a, exc):
        log.error("cell %s failed: %s", cell_id(d, a), exc)
        manifest.record(f"cell:{cell_id(d, a)}", "failed", error=str(exc))
        failed.append(cell_id(d, a))

    if plan.threads > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=plan.threads) as pool:
            futs = [(d, a, pool.submit(_cell_worker, (plan, d, a, str(cd)))) for d, a, cd in todo]
            for d, a, fut in futs:
                try:
                    _done(d, a, fut.result())
                except Exception as exc:  # noqa: BLE001 - keep other cells
                    _fail(d, a, exc)
    else:
        for d, a, cd in todo:
            try:
                _done(d, a, run_transport_cell(plan, d, a, cd))
            except Exception as exc:  # noqa: BLE001
                _fail(d, a, exc)

    deltas = plan.deltas or (plan.spec.delta,)
    alphas = plan.alphas or (plan.spec.alpha,)
    g_msd = np.full((len(deltas), len(alphas)), np.nan)
    g_fit = np.full_like(g_msd, np.nan)
    rows = []
    for i, d in enumerate(deltas):
        for k, a in enumerate(alphas):
            r = results.get((d, a))
            if r is None:
                continue
            g_msd[i, k] = r["gamma_mean"]
            g_fit[i, k] = r.get("gamma_fit", np.nan)
            rows.append([d, a, r["gamma_mean"], r["gamma_std"], g_fit[i, k], classify(r["gamma_mean"]), r["seed"]])
    files = [
        lio.write_phase_grid(plan.out_dir / "phase.csv", PhaseDiagramGrid(deltas, alphas, g_msd)),
        lio.write_phase_grid(plan.out_dir / "phase_fit.csv", PhaseDiagramGrid(deltas, alphas, g_fit)),
        lio.write_table(plan.out_dir / "cells.csv",
                        ["delta", "alpha", "gamma_msd", "gamma_msd_std", "gamma_fit", "class_msd", "seed"], rows),
    ]
    try:
        bfit = fit_boundary(PhaseDiagramGrid(deltas, alphas, g_msd))
        lines = [f"intercept = {bfit.intercept!r}"]
        lines += [f"alpha_star[{d!r}] = {a!r}  residual = {bfit.residuals[d]!r}" for d, a in bfit.alpha_star.items()]
        lines += [f"excluded_delta = {d!r}" for d in bfit.excluded]
        files.append(lio.atomic_write(plan.out_dir / "boundary.txt", "\n".join(lines) + "\n"))
    except ValueError as exc:
        log.warning("boundary fit skipped: %s", exc)
    manifest.add_files(files)
    manifest.data["failed_cells"] = failed
    manifest.save()
    if failed:
        print("failed cells: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def _spectral(plan: ExperimentPlan, manifest: lio.Manifest) -> int:
    ref = plan.bd or bd_reference(plan.spec.L)
    rows, files = [], []
    for d, a in plan.grid_cells():
        task = f"spectral:{cell_id(d, a)}"
        row_path = plan.out_dir / "spectral_cells" / f"{cell_id(d, a)}.csv"
        header = ["delta", "alpha", "L", "r_mean", "mu_e", "sigma_e", "d_kl", "n_samples", "n_disorder", "seed"]
        if plan.resume and manifest.completed(task):
            rows.append(lio.read_table(row_path)[1][0].tolist())
            continue
        t0 = time.perf_counter()
        spec = cell_spec(plan, d, a, kind="spectral")
        diag = spectral_diagnostics(spec, plan.count, plan.n_disorder, ref, plan.fraction)
        row = [d, a, spec.L, diag.r_mean, diag.mu_e, diag.sigma_e, diag.d_kl, diag.ee_samples.size,
               diag.n_disorder, spec.rng_seed]
        f = lio.write_table(row_path, header, [row])
        manifest.record(task, "done", [f], seed=spec.rng_seed, wall_time=time.perf_counter() - t0)
        rows.append(row)
    header = ["delta", "alpha", "L", "r_mean", "mu_e", "sigma_e", "d_kl", "n_samples", "n_disorder", "seed"]
    rows = [[r[0], r[1], int(r[2]), *r[3:7], int(r[7]), int(r[8]), int(r[9])] for r in rows]
    files.append(lio.write_table(plan.out_dir / "spectral.csv", header, rows))
    manifest.add_files(files)
    return 0


def _fit(plan: ExperimentPlan, manifest: lio.Manifest) -> int:
    task = "fit"
    if plan.resume and manifest.completed(task):
        return 0
    t0 = time.perf_counter()
    files = []
    if plan.fit_input is not None:
        series = lio.read_series(plan.fit_input)
        spec = ChainSpec.from_config(series.meta["spec"]) if "spec" in series.meta else None
    else:
        spec = cell_spec(plan, plan.spec.delta, plan.spec.alpha)
        series = compute_series(plan, spec)
        files += lio.write_series(plan.out_dir / "correlator.csv", series)
    fit = fit_late_time(series.times, series.autocorrelator, plan.fit_window)
    text = fit.report()
    try:
        st = fit_short_time(series.times, series.autocorrelator, plan.t_cut,
                            build_couplings(spec) if spec is not None else None)
        text += f"short_time_kappa = {st.kappa!r}\nshort_time_reference = {st.reference!r}\n"
    except ValueError:
        pass
    files.append(lio.atomic_write(plan.out_dir / "fit.txt", text))
    print(text, end="")
    manifest.record(task, "done", files, wall_time=time.perf_counter() - t0)
    return 0


def run(plan: ExperimentPlan) -> int:
    """Execute ``plan``; returns a process exit status."""
    report = validate(plan)
    if not report.ok:
        for e in report.errors:
            print(f"error: {e}", file=sys.stderr)
        return 2
    plan.out_dir.mkdir(parents=True, exist_ok=True)
    manifest = lio.Manifest(plan.out_dir, plan.describe())
    manifest.save()
    if plan.mode == "sweep":
        return _sweep(plan, manifest)
    if plan.mode == "spectral":
        return _spectral(plan, manifest)
    if plan.mode == "fit":
        return _fit(plan, manifest)
    return _single(plan, manifest)


# -- entry point -----------------------------------------------------------------------

def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrxxz", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES + ("validate",):
        p = sub.add_parser(mode)
        if mode == "validate":
            p.add_argument("target", choices=MODES, help="mode whose plan is checked")
        p.add_argument("--config", required=True, type=Path, help="YAML/JSON config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=_seed, default=None, help="master seed (overrides config 'seed')")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--resume", action="store_true", help="skip tasks recorded as complete in the manifest")
        p.add_argument("--method", choices=METHODS, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    mode = args.target if args.mode == "validate" else args.mode
    try:
        plan = plan_from_config(mode, load_config(args.config), seed=args.seed, method=args.method,
                                out_dir=args.out, resume=args.resume, threads=args.threads)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.mode == "validate":
        report = validate(plan)
        print(report)
        return 0 if report.ok else 2
    if plan.threads > 1 and plan.mode != "sweep":
        import numba

        numba.set_num_threads(min(plan.threads, numba.config.NUMBA_NUM_THREADS))
    return run(plan)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
