"""Transport observables derived from a correlator profile.

Mean-square displacement, D(t), the dynamical exponent gamma(t), the
current autocorrelator (as half the second derivative of the MSD) and the
one-sided Fourier transform giving T*sigma(omega).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lrxxz.evolution import CorrelationSeries

DEFAULT_GAMMA_WINDOW = (3.0, 5.0)


@dataclass
class TransportSummary:
    times: np.ndarray
    msd: np.ndarray
    d_coeff: np.ndarray | None = None
    gamma_t: np.ndarray | None = None
    gamma_mean: float = float("nan")
    gamma_std: float = float("nan")
    window: tuple[float, float] = DEFAULT_GAMMA_WINDOW

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.msd = np.asarray(self.msd, dtype=float)
        if self.times.shape != self.msd.shape:
            raise ValueError("times and msd must have the same shape")


@dataclass
class ConductivitySpectrum:
    omegas: np.ndarray
    times: np.ndarray
    jj: np.ndarray
    sigma_re: np.ndarray
    sigma_abs: np.ndarray
    t_max: float


def msd(series: CorrelationSeries, normalize: bool = False) -> TransportSummary:
    """Sigma^2(t) = sum_j j^2 C_j - (sum_j j C_j)^2.

    With ``normalize`` the moments are divided by sum_j C_j(t), which is 1 up
    to sampling noise.
    """
    j = series.sites.astype(float)[:, None]
    m1 = (j * series.c).sum(axis=0)
    m2 = (j**2 * series.c).sum(axis=0)
    if normalize:
        w = series.c.sum(axis=0)
        m1, m2 = m1 / w, m2 / w
    return TransportSummary(series.times.copy(), m2 - m1**2)


def diffusion_coefficient(summary: TransportSummary) -> np.ndarray:
    """D(t) = (1/2) dSigma^2/dt, second-order differences (one-sided at the ends)."""
    if summary.times.size < 3:
        raise ValueError("need at least 3 time points")
    d = 0.5 * np.gradient(summary.msd, summary.times, edge_order=2)
    summary.d_coeff = d
    return d


def dynamical_exponent(
    summary: TransportSummary,
    window: tuple[float, float] | None = None,
    n_log: int | None = None,
) -> tuple[np.ndarray, float, float]:
    """gamma(t) = dlog Sigma^2 / (2 dlog t).

    log Sigma^2 is resampled linearly in log t onto a log-spaced grid,
    differentiated there, and mapped back onto ``summary.times`` (gamma is
    NaN at t = 0).  The window mean/std are taken over log-grid points with
    t inside ``window``.
    """
    window = summary.window if window is None else tuple(window)
    t, s2 = summary.times, summary.msd
    pos = t > 0
    in_win = pos & (t >= window[0]) & (t <= window[1])
    if np.any(s2[in_win] <= 0):
        raise ValueError("MSD must be positive inside the evaluation window")
    keep = pos & (s2 > 0)
    lt, ls = np.log(t[keep]), np.log(s2[keep])
    n_log = n_log or max(int(keep.sum()), 8)
    grid = np.linspace(lt[0], lt[-1], n_log)
    slope = 0.5 * np.gradient(np.interp(grid, lt, ls), grid, edge_order=2)
    gamma_t = np.full(t.shape, np.nan)
    gamma_t[keep] = np.interp(lt, grid, slope)
    sel = (grid >= np.log(window[0]) - 1e-12) & (grid <= np.log(window[1]) + 1e-12)
    if not sel.any():
        raise ValueError(f"window {window} not covered by the time grid")
    summary.gamma_t = gamma_t
    summary.gamma_mean = float(slope[sel].mean())
    summary.gamma_std = float(slope[sel].std())
    summary.window = window
    return gamma_t, summary.gamma_mean, summary.gamma_std


def transport_summary(series: CorrelationSeries, window=DEFAULT_GAMMA_WINDOW, normalize: bool = False) -> TransportSummary:
    s = msd(series, normalize=normalize)
    s.window = tuple(window)
    diffusion_coefficient(s)
    dynamical_exponent(s)
    return s


def _uniform_step(times: np.ndarray, min_points: int) -> float:
    if times.size < min_points:
        raise ValueError(f"need at least {min_points} time points")
    steps = np.diff(times)
    dt = steps.mean()
    if np.max(np.abs(steps - dt)) > 1e-8 * max(dt, 1.0):
        raise ValueError("time grid must be uniform")
    return float(dt)


def current_autocorrelator(summary: TransportSummary) -> tuple[np.ndarray, np.ndarray]:
    """<J(t)J(0)>/L as (1/2) d^2 Sigma^2/dt^2; endpoints are dropped.

    Returns ``(times[1:-1], jj)``.
    """
    dt = _uniform_step(summary.times, 5)
    s = summary.msd
    jj = 0.5 * (s[2:] - 2.0 * s[1:-1] + s[:-2]) / dt**2
    return summary.times[1:-1].copy(), jj


def conductivity(
    times: np.ndarray,
    jj: np.ndarray,
    omegas,
    t_max: float | None = None,
    damping_time: float | None = None,
) -> ConductivitySpectrum:
    """T*sigma(omega) = int_0^t_max dt jj(t) e^{i omega t}, trapezoid rule.

    If the grid starts after t = 0, jj(0) is filled in from the two first
    points assuming jj is even in t (jj = a + b t^2).  ``damping_time``
    multiplies jj by exp(-(t/damping_time)^2 / 2); off by default.
    """
    times = np.asarray(times, dtype=float)
    jj = np.asarray(jj, dtype=float)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if times.size == 0 or omegas.size == 0:
        raise ValueError("empty grid")
    if t_max is not None:
        keep = times <= t_max + 1e-12
        times, jj = times[keep], jj[keep]
    if times.size == 0:
        raise ValueError("empty grid")
    if times[0] > 0:
        if times.size >= 2:
            t1, t2 = times[0], times[1]
            j0 = (t2**2 * jj[0] - t1**2 * jj[1]) / (t2**2 - t1**2)
        else:
            j0 = jj[0]
        times = np.concatenate([[0.0], times])
        jj = np.concatenate([[j0], jj])
    f = jj if damping_time is None else jj * np.exp(-0.5 * (times / damping_time) ** 2)
    kernel = np.exp(1j * np.outer(omegas, times)) * f
    sigma = np.trapezoid(kernel, times, axis=1)
    return ConductivitySpectrum(
        omegas=omegas,
        times=times,
        jj=jj,
        sigma_re=sigma.real,
        sigma_abs=np.abs(sigma),
        t_max=float(times[-1]),
    )
