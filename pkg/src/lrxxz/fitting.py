"""Least-squares fits of correlator data to hydrodynamic and perturbative forms."""
from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares

from lrxxz.evolution import SHORT_TIME_PREFACTOR
from lrxxz.hamiltonian import CouplingTable

log = logging.getLogger(__name__)

PARAM_NAMES = ("a", "tau", "beta_osc", "phi1", "b", "gamma", "c", "eta", "omega", "phi2")
START_GAMMAS = (0.5, 0.75, 1.0, 1.25)
START_OMEGAS = (1.0, 2.0, 4.0, 8.0)
SCAN_NFEV = 200
POLISH_NFEV = 3000
N_POLISH = 3

# (upper bound exclusive) -> label; |gamma - 1/2| <= 0.05 is diffusive
_BANDS = ((0.45, "subdiffusive"), (0.55 + 1e-12, "diffusive"), (0.9, "superdiffusive"), (np.inf, "ballistic"))


def late_time_model(t, a, tau, beta_osc, phi1, b, gamma, c, eta, omega, phi2):
    """a e^{-t/tau} cos(beta t + phi1) + b t^-gamma [1 + c t^-eta sin(omega t + phi2)]."""
    t = np.asarray(t, dtype=float)
    return a * np.exp(-t / tau) * np.cos(beta_osc * t + phi1) + b * t ** (-gamma) * (
        1.0 + c * t ** (-eta) * np.sin(omega * t + phi2)
    )


@dataclass
class LateTimeFit:
    a: float
    tau: float
    beta_osc: float
    phi1: float
    b: float
    gamma: float
    c: float
    eta: float
    omega: float
    phi2: float
    residual_rms: float
    fit_window: tuple[float, float]
    converged: bool = True
    stderr: dict = field(default_factory=dict)
    n_points: int = 0

    def params(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in PARAM_NAMES])

    def __call__(self, t):
        return late_time_model(t, *self.params())

    def report(self) -> str:
        lines = [f"fit_window = [{self.fit_window[0]:.6g}, {self.fit_window[1]:.6g}]"]
        for k in PARAM_NAMES:
            lines.append(f"{k:<9s} = {getattr(self, k): .10g} +- {self.stderr.get(k, float('nan')):.3g}")
        lines.append(f"residual_rms = {self.residual_rms:.6g}")
        lines.append(f"n_points = {self.n_points}")
        lines.append(f"converged = {self.converged}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit_window"] = list(self.fit_window)
        return d


def _model_jacobian(t, a, tau, beta_osc, phi1, b, gamma, c, eta, omega, phi2) -> np.ndarray:
    """d model / d params, shape (len(t), 10)."""
    e = np.exp(-t / tau)
    cos1, sin1 = np.cos(beta_osc * t + phi1), np.sin(beta_osc * t + phi1)
    lt = np.log(t)
    pw = t ** (-gamma)
    osc = t ** (-eta)
    sin2, cos2 = np.sin(omega * t + phi2), np.cos(omega * t + phi2)
    tail = b * pw * (1.0 + c * osc * sin2)
    return np.column_stack([
        e * cos1,
        a * e * cos1 * t / tau**2,
        -a * e * sin1 * t,
        -a * e * sin1,
        pw * (1.0 + c * osc * sin2),
        -lt * tail,
        b * pw * osc * sin2,
        -b * pw * c * osc * lt * sin2,
        b * pw * c * osc * cos2 * t,
        b * pw * c * osc * cos2,
    ])


def _canonical(p: np.ndarray) -> np.ndarray:
    """Fold the model's sign/phase symmetries: a, c, beta, omega >= 0; phases in [0, 2pi)."""
    a, tau, beta, phi1, b, gamma, c, eta, omega, phi2 = p
    if beta < 0:
        beta, phi1 = -beta, -phi1
    if a < 0:
        a, phi1 = -a, phi1 + np.pi
    if omega < 0:
        omega, phi2 = -omega, -phi2 + np.pi
    if c < 0:
        c, phi2 = -c, phi2 + np.pi
    two_pi = 2 * np.pi
    return np.array([a, tau, beta, phi1 % two_pi, b, gamma, c, eta, omega, phi2 % two_pi])


def _starts(t: np.ndarray, y: np.ndarray):
    for gamma, omega in itertools.product(START_GAMMAS, START_OMEGAS):
        b0 = float(np.median(y * t**gamma))
        head = y[0] - b0 * t[0] ** (-gamma)
        yield np.array([head * np.exp(t[0]), 1.0, omega, 0.0, b0, gamma, 0.1, 0.5, omega, 0.0])


def fit_late_time(times, c0, window: tuple[float, float] | None = None) -> LateTimeFit:
    """Fit the late-time autocorrelator to :func:`late_time_model`.

    Residuals are weighted by sqrt(d log t) so every decade of time counts
    equally.  The default window is ``[1, 0.8 * t_max]``.  Sixteen
    deterministic starts (gamma x omega grid) are tried and the lowest cost
    wins; ``gamma`` is the headline result.
    """
    times = np.asarray(times, dtype=float)
    c0 = np.asarray(c0, dtype=float)
    if window is None:
        window = (1.0, 0.8 * times[-1])
    lo, hi = window
    if lo < 1.0 - 1e-12 or hi > times[-1] + 1e-12 or hi <= lo:
        raise ValueError(f"fit window {window} must satisfy 1 <= lo < hi <= t_max")
    sel = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    t, y = times[sel], c0[sel]
    if t.size < len(PARAM_NAMES) + 1:
        raise ValueError("not enough points in the fit window")
    weight = np.sqrt(np.gradient(np.log(t)))

    def resid(p):
        return weight * (late_time_model(t, *p) - y)

    def jac(p):
        return weight[:, None] * _model_jacobian(t, *p)

    lower = [-np.inf, 1e-6, -np.inf, -np.inf, -np.inf, 0.0, -np.inf, 0.0, -np.inf, -np.inf]
    upper = [np.inf, np.inf, np.inf, np.inf, np.inf, 2.0, np.inf, np.inf, np.inf, np.inf]
    def solve(p0, nfev):
        return least_squares(resid, p0, jac=jac, bounds=(lower, upper), method="trf", x_scale="jac",
                             xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=nfev)

    # short budget per start, then polish the most promising few
    scanned = []
    for p0 in _starts(t, y):
        p0 = np.clip(p0, np.array(lower) + 1e-9, np.array(upper) - 1e-9)
        try:
            r = solve(p0, SCAN_NFEV)
        except (ValueError, FloatingPointError) as exc:  # pragma: no cover - defensive
            log.debug("start %s failed: %s", p0, exc)
            continue
        if np.isfinite(r.cost):
            scanned.append(r)
    scanned.sort(key=lambda r: r.cost)
    best = scanned[0] if scanned else None
    for r in scanned[:N_POLISH]:
        if not r.success:
            r = solve(r.x, POLISH_NFEV)
        if np.isfinite(r.cost) and r.cost < best.cost:
            best = r
    if best is None:
        nan = float("nan")
        return LateTimeFit(*([nan] * 10), residual_rms=nan, fit_window=(lo, hi), converged=False, n_points=t.size)

    p = _canonical(best.x)
    raw = late_time_model(t, *p) - y
    rms = float(np.sqrt(np.mean(raw**2)))
    dof = max(t.size - p.size, 1)
    try:
        cov = np.linalg.pinv(best.jac.T @ best.jac) * (2 * best.cost / dof)
        err = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:  # pragma: no cover
        err = np.full(p.size, np.nan)
    converged = bool(best.success) and np.isfinite(rms)
    return LateTimeFit(*p, residual_rms=rms, fit_window=(float(lo), float(hi)), converged=converged,
                       stderr=dict(zip(PARAM_NAMES, map(float, err))), n_points=int(t.size))


@dataclass
class ShortTimeFit:
    kappa: float
    reference: float  # 4 * sum_{i != c} J_ic^2, or NaN without a coupling table
    n_points: int


def fit_short_time(times, c0, t_cut: float = 0.1, table: CouplingTable | None = None) -> ShortTimeFit:
    """Least-squares kappa in 1 - C_0(t) = kappa t^2 over 0 < t <= t_cut."""
    times = np.asarray(times, dtype=float)
    c0 = np.asarray(c0, dtype=float)
    sel = (times > 0) & (times <= t_cut + 1e-12)
    if sel.sum() < 2:
        raise ValueError("need at least two points in (0, t_cut]")
    t2 = times[sel] ** 2
    kappa = float(np.sum(t2 * (1.0 - c0[sel])) / np.sum(t2**2))
    ref = float("nan")
    if table is not None:
        ref = SHORT_TIME_PREFACTOR * float(np.sum(table.pair_coupling[:, table.center] ** 2))
    return ShortTimeFit(kappa, ref, int(sel.sum()))


@dataclass
class PowerLawFit:
    exponent: float  # p in C_j ~ j^-p
    intercept: float
    n_used: int
    n_excluded: int


def loglog_slope(x, y) -> tuple[float, float]:
    """Ordinary least-squares slope and intercept of log y against log x."""
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def fit_spatial_powerlaw(sites, profile) -> PowerLawFit:
    """Fit C_j ~ j^-p over j >= 1; non-positive values are dropped and counted."""
    sites = np.asarray(sites)
    profile = np.asarray(profile, dtype=float)
    right = sites >= 1
    j, cj = sites[right].astype(float), profile[right]
    ok = cj > 0
    if ok.sum() < 2:
        raise ValueError("fewer than two positive profile values for j >= 1")
    slope, icpt = loglog_slope(j[ok], cj[ok])
    return PowerLawFit(-slope, icpt, int(ok.sum()), int((~ok).sum()))


def classify(gamma: float) -> str:
    if not np.isfinite(gamma):
        return "undetermined"
    for upper, label in _BANDS:
        if gamma < upper:
            return label
    return "ballistic"  # pragma: no cover


@dataclass
class PhaseDiagramGrid:
    deltas: np.ndarray
    alphas: np.ndarray
    gamma: np.ndarray  # (n_delta, n_alpha)

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.alphas = np.asarray(self.alphas, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        if self.gamma.shape != (self.deltas.size, self.alphas.size):
            raise ValueError("gamma must have shape (n_delta, n_alpha)")
        for name, axis in (("deltas", self.deltas), ("alphas", self.alphas)):
            if axis.size == 0 or np.any(np.diff(axis) <= 0):
                raise ValueError(f"{name} must be non-empty and strictly increasing")

    @property
    def classification(self) -> np.ndarray:
        return np.vectorize(classify, otypes=[object])(self.gamma)


@dataclass
class BoundaryFit:
    intercept: float  # c0 in log(delta) = -alpha* + c0
    alpha_star: dict  # delta -> ridge position
    residuals: dict
    excluded: list


def ridge_position(alphas: np.ndarray, row: np.ndarray) -> float | None:
    """Interior argmax of ``row``, refined by a parabola through its neighbours."""
    k = int(np.nanargmax(row))
    if k == 0 or k == row.size - 1:
        return None
    x0, x1, x2 = alphas[k - 1 : k + 2]
    y0, y1, y2 = row[k - 1 : k + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    B = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if A >= 0:
        return float(x1)
    return float(np.clip(-B / (2 * A), x0, x2))


def fit_boundary(grid: PhaseDiagramGrid) -> BoundaryFit:
    """Locate the per-delta ridge alpha*(delta) and fit log(delta) = -alpha* + c0."""
    stars, excluded = {}, []
    for d, row in zip(grid.deltas, grid.gamma):
        a = ridge_position(grid.alphas, row)
        if a is None:
            excluded.append(float(d))
            log.info("delta=%g: no interior maximum, row excluded", d)
        else:
            stars[float(d)] = a
    if not stars:
        raise ValueError("no row has an interior maximum")
    vals = np.array([np.log(d) + a for d, a in stars.items()])
    c0 = float(vals.mean())
    residuals = {d: float(np.log(d) + a - c0) for d, a in stars.items()}
    return BoundaryFit(c0, stars, residuals, excluded)
