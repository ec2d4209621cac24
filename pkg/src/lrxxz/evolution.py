"""Real-time propagation and infinite-temperature spin correlators.

Three routes to ``C_j(t) = 2^-L Tr[sz_j(t) sz_c]`` (c = central site):

* :func:`correlator_dqt` - typical random states, full Hilbert space.
* :func:`correlator_sampled` - random sz product states with conjugate pairing.
* :func:`correlator_exact_trace` - sector-wise exact diagonalisation (small L).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from lrxxz.hamiltonian import (
    ChainSpec,
    CouplingTable,
    XXZOperator,
    build_couplings,
    build_sector_matrix,
    magnetization,
    n_sites_of,
    spin_signs,
)

log = logging.getLogger(__name__)

EXACT_TRACE_MAX_L = 12

# sub-stream tags so disorder, DQT and product-state draws never share a stream
_STREAM_DQT = 1
_STREAM_SAMPLED = 2


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float = 0.01
    taylor_order: int = 4
    method: str = "taylor"
    krylov_dim: int = 20
    norm_tolerance: float = 1e-9
    max_halvings: int = 10

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.taylor_order < 2:
            raise ValueError("taylor_order must be >= 2")
        if self.krylov_dim < 2:
            raise ValueError("krylov_dim must be >= 2")
        if self.method not in ("taylor", "krylov"):
            raise ValueError(f"method must be 'taylor' or 'krylov', got {self.method!r}")
        if not self.norm_tolerance > 0:
            raise ValueError("norm_tolerance must be > 0")


@dataclass
class CorrelationSeries:
    """C_j(t) on a site x time grid.

    ``c[k, n]`` holds site offset ``sites[k]`` (relative to the centre) at
    ``times[n]``.
    """

    times: np.ndarray
    sites: np.ndarray
    c: np.ndarray
    method: str
    n_samples: int = 0
    stderr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.sites = np.asarray(self.sites, dtype=int)
        self.c = np.asarray(self.c, dtype=float)
        if self.stderr is None:
            self.stderr = np.zeros_like(self.c)
        if self.c.shape != (self.sites.size, self.times.size):
            raise ValueError("c must have shape (n_sites, n_times)")

    def at(self, offset: int) -> np.ndarray:
        """Time series at site offset ``offset``."""
        k = np.flatnonzero(self.sites == offset)
        if k.size == 0:
            raise KeyError(offset)
        return self.c[k[0]]

    def stderr_at(self, offset: int) -> np.ndarray:
        return self.stderr[np.flatnonzero(self.sites == offset)[0]]

    @property
    def autocorrelator(self) -> np.ndarray:
        return self.at(0)

    def total(self) -> np.ndarray:
        """sum_j C_j(t); equals 1 by magnetization conservation."""
        return self.c.sum(axis=0)


def time_grid(t_max: float = 10.0, spacing: float = 0.05) -> np.ndarray:
    n = int(round(t_max / spacing))
    return np.linspace(0.0, n * spacing, n + 1)


def log_time_grid(t_min: float, t_max: float, n: int, include_zero: bool = True) -> np.ndarray:
    t = np.geomspace(t_min, t_max, n)
    return np.concatenate([[0.0], t]) if include_zero else t


def default_n_typical(L: int) -> int:
    """5, 2, 1, 1 typical states at L = 17, 19, 21, 23, scaled as 2^(-L/2) elsewhere."""
    return max(1, round(2 ** ((17 - L) / 2) * 5))


def sample_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


def draw_typical_state(L: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-norm state with i.i.d. complex Gaussian amplitudes."""
    dim = 1 << L
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D grid")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-negative and strictly increasing")
    return times


class Evolver:
    """Advance blocks of states (shape (dim, k)) under e^{-iHt}.

    The uniform-field term h_z * M commutes with the rest of H, so it is
    applied as an exact diagonal phase and only the remainder is expanded.
    """

    def __init__(self, table: CouplingTable, delta: float, config: PropagatorConfig):
        self.config = config
        self.op = XXZOperator(table, delta, uniform_field=False)
        self.dim = self.op.dim
        h = table.uniform_field
        self._field_energy = h * magnetization(table.L).astype(float) if h != 0 else None
        self.dt = config.dt
        self.n_steps = 0
        self.n_halvings = 0
        self.max_norm_drift = 0.0

    # -- public ---------------------------------------------------------
    def evolve(self, block: np.ndarray, times) -> Iterator[tuple[float, np.ndarray]]:
        """Yield ``(t, state)`` for each requested time, starting from t = 0."""
        times = _check_times(times)
        block = np.array(block, dtype=np.complex128, copy=True)
        if block.ndim == 1:
            block = block[:, None]
        if block.shape[0] != self.dim:
            raise ValueError(f"state has length {block.shape[0]}, expected {self.dim}")
        self._norm0 = np.linalg.norm(block, axis=0)
        self._steps_since_start = 0
        if self.config.method == "taylor":
            yield from self._evolve_taylor(block, times)
        else:
            yield from self._evolve_krylov(block, times)

    # -- helpers ---------------------------------------------------------
    def _field_phase(self, block: np.ndarray, tau: float) -> None:
        if self._field_energy is not None and tau != 0:
            block *= np.exp(-1j * tau * self._field_energy)[:, None]

    def _drift_ok(self, block: np.ndarray) -> bool:
        drift = np.max(np.abs(np.linalg.norm(block, axis=0) - self._norm0) / np.maximum(self._norm0, 1e-300))
        allowed = self.config.norm_tolerance * max(self._steps_since_start, 1)
        self.max_norm_drift = max(self.max_norm_drift, float(drift))
        return drift <= allowed

    def _halve(self) -> None:
        self.dt *= 0.5
        self.n_halvings += 1
        if self.n_halvings > self.config.max_halvings:
            raise PropagationError(
                f"norm tolerance {self.config.norm_tolerance:g} not reached after "
                f"{self.config.max_halvings} step halvings (dt={self.dt:g})"
            )
        log.debug("halving time step to %g", self.dt)

    # -- Taylor ------------------------------------------------------------
    def _evolve_taylor(self, block, times):
        t_cur = 0.0
        term = np.empty_like(block)
        tmp = np.empty_like(block)
        for t in times:
            remaining = t - t_cur
            while remaining > 1e-14:
                n = max(1, math.ceil(remaining / self.dt - 1e-9))
                h = remaining / n
                saved = block.copy()
                self._taylor_step(block, h, term, tmp)
                self._steps_since_start += 1
                if not self._drift_ok(block):
                    block[...] = saved
                    self._steps_since_start -= 1
                    self._halve()
                    continue
                self._field_phase(block, h)
                self.n_steps += 1
                remaining -= h
            t_cur = t
            yield t, block.copy()

    def _taylor_step(self, block, h, term, tmp):
        term[...] = block
        for k in range(1, self.config.taylor_order + 1):
            self.op.matvec(term, out=tmp)
            np.multiply(tmp, -1j * h / k, out=term)
            block += term

    # -- Krylov ------------------------------------------------------------
    def _lanczos(self, block):
        m = self.config.krylov_dim
        dim, k = block.shape
        norms = np.linalg.norm(block, axis=0)
        V = np.zeros((k, m, dim), dtype=np.complex128)
        alpha = np.zeros((k, m))
        beta = np.zeros((k, m))
        safe = np.where(norms > 0, norms, 1.0)
        for c in range(k):
            V[c, 0] = block[:, c] / safe[c]
        vin = np.empty((dim, k), dtype=np.complex128)
        w = np.empty((dim, k), dtype=np.complex128)
        live = norms > 0
        for j in range(m):
            for c in range(k):
                vin[:, c] = V[c, j]
            self.op.matvec(vin, out=w)
            for c in range(k):
                if not live[c]:
                    continue
                wc = w[:, c]
                alpha[c, j] = np.vdot(V[c, j], wc).real
                basis = V[c, : j + 1]
                for _ in range(2):
                    wc -= basis.T @ (basis.conj() @ wc)
                b = np.linalg.norm(wc)
                scale = abs(alpha[c, : j + 1]).max() + beta[c, :j].max(initial=0.0) + 1.0
                if b <= 1e-12 * scale:
                    live[c] = False
                    continue
                beta[c, j] = b
                if j + 1 < m:
                    V[c, j + 1] = wc / b
        return V, alpha, beta, norms

    def _krylov_coeffs(self, alpha_c, beta_c, taus):
        m = alpha_c.size
        theta, S = eigh_tridiagonal(alpha_c, beta_c[: m - 1])
        phases = np.exp(-1j * np.outer(taus, theta))  # (ntau, m)
        return (phases * S[0]) @ S.T  # (ntau, m): e^{-iT tau} e_1

    def _evolve_krylov(self, block, times):
        t_cur = 0.0
        pending = list(times)
        tol = self.config.norm_tolerance
        while pending:
            if pending[0] - t_cur <= 1e-14:
                yield pending.pop(0), block.copy()
                continue
            reach = t_cur + self.dt * (1 + 1e-9)
            group = [t for t in pending if t <= reach]
            if not group:
                gap = pending[0] - t_cur
                group_t = [t_cur + gap / math.ceil(gap / self.dt)]
                emit = 0
            else:
                group_t = group
                emit = len(group)
            V, alpha, beta, norms = self._lanczos(block)
            taus = np.asarray(group_t) - t_cur
            k = block.shape[1]
            coeffs = [self._krylov_coeffs(alpha[c], beta[c], taus) for c in range(k)]
            err = max(norms[c] * beta[c, -1] * abs(coeffs[c][-1, -1]) for c in range(k))
            if err > tol:
                self._halve()
                continue
            self.n_steps += 1
            for n, tau in enumerate(taus):
                out = np.empty_like(block)
                for c in range(k):
                    out[:, c] = norms[c] * (coeffs[c][n] @ V[c])
                self._field_phase(out, tau)
                if n < emit:
                    yield pending.pop(0), out
                last = out
            block = last
            t_cur = t_cur + taus[-1]


def propagate(
    state: np.ndarray,
    table: CouplingTable,
    delta: float,
    config: PropagatorConfig | None = None,
    t_target: float = 0.0,
) -> np.ndarray:
    """Return e^{-iH t_target} |state> (a fresh array, same shape as ``state``)."""
    config = config or PropagatorConfig()
    if t_target < 0:
        raise ValueError("t_target must be >= 0")
    ev = Evolver(table, delta, config)
    (_, out), = ev.evolve(state, [t_target])
    return out[:, 0] if state.ndim == 1 else out


def _site_profile(w: np.ndarray, L: int) -> np.ndarray:
    """sum_x s_j(x) w(x) for every site j; ``w`` real, length 2**L."""
    out = np.empty(L)
    for j in range(L):
        halves = w.reshape(-1, 2, 1 << j).sum(axis=(0, 2))
        out[j] = halves[1] - halves[0]
    return out


def _series_from_samples(samples: np.ndarray, times, spec: ChainSpec, method: str, n_states: int, meta: dict):
    """Mean and standard error over the leading sample axis of (n, L, T)."""
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    sites = np.arange(spec.L) - spec.center
    return CorrelationSeries(times, sites, mean, method, n_states, stderr, meta)


def correlator_dqt(
    spec: ChainSpec,
    config: PropagatorConfig | None = None,
    times=None,
    n_typical: int | None = None,
    seed: int | None = None,
) -> CorrelationSeries:
    """Dynamical-typicality estimate of C_j(t), averaged over ``n_typical`` states.

    Each typical |psi> is co-propagated with sz_c|psi> and
    ``Re <psi(t)| sz_j |phi(t)>`` is recorded.  Sample ``k`` uses its own
    generator derived from ``(seed, k)``, so results do not depend on the
    order in which samples are processed.
    """
    spec.require_odd()
    config = config or PropagatorConfig()
    times = _check_times(time_grid() if times is None else times)
    n_typical = default_n_typical(spec.L) if n_typical is None else int(n_typical)
    if n_typical < 1:
        raise ValueError("n_typical must be >= 1")
    seed = spec.rng_seed if seed is None else seed
    table = build_couplings(spec)
    ev = Evolver(table, spec.delta, config)
    sc = spin_signs(spec.L, spec.center)
    samples = np.empty((n_typical, spec.L, times.size))
    for k in range(n_typical):
        psi = draw_typical_state(spec.L, sample_rng(seed, _STREAM_DQT, k))
        norm2 = np.vdot(psi, psi).real
        block = np.stack([psi, sc * psi], axis=1)
        for n, (_, st) in enumerate(ev.evolve(block, times)):
            w = (st[:, 0].conj() * st[:, 1]).real
            samples[k, :, n] = _site_profile(w, spec.L) / norm2
        log.info("dqt sample %d/%d done (L=%d)", k + 1, n_typical, spec.L)
    meta = _run_meta(spec, config, ev, seed)
    return _series_from_samples(samples, times, spec, "dqt", n_typical, meta)


def conjugate_configuration(x: int, L: int, center: int) -> int:
    """Flip every spin except the central one."""
    return x ^ (((1 << L) - 1) ^ (1 << center))


def correlator_sampled(
    spec: ChainSpec,
    config: PropagatorConfig | None = None,
    times=None,
    n_samples: int = 40,
    seed: int | None = None,
    exhaustive: bool = False,
) -> CorrelationSeries:
    """Product-state estimate of C_j(t) with conjugate pairing.

    ``n_samples/2`` configurations are drawn uniformly; each is paired with
    its conjugate (all spins flipped except the centre).  Since sz_c acts
    diagonally, ``<i| sz_j(t) sz_c |i> = s_c(i) <i(t)| sz_j |i(t)>`` and a
    single propagated vector per configuration suffices.  The standard error
    is computed over pair means.

    ``exhaustive=True`` enumerates all 2**L configurations instead, which
    reproduces the exact trace.
    """
    spec.require_odd()
    config = config or PropagatorConfig()
    times = _check_times(time_grid() if times is None else times)
    seed = spec.rng_seed if seed is None else seed
    L, c = spec.L, spec.center
    if exhaustive:
        # representatives: configurations with the top non-central bit clear
        top = L - 1 if c != L - 1 else L - 2
        reps = [x for x in range(1 << L) if not (x >> top) & 1]
    else:
        if n_samples < 2 or n_samples % 2:
            raise ValueError("n_samples must be a positive even number")
        reps = [int(sample_rng(seed, _STREAM_SAMPLED, k).integers(0, 1 << L)) for k in range(n_samples // 2)]
    table = build_couplings(spec)
    ev = Evolver(table, spec.delta, config)
    dim = 1 << L
    samples = np.empty((len(reps), L, times.size))
    for k, x in enumerate(reps):
        xc = conjugate_configuration(x, L, c)
        block = np.zeros((dim, 2), dtype=np.complex128)
        block[x, 0] = 1.0
        block[xc, 1] = 1.0
        s_center = 1.0 if (x >> c) & 1 else -1.0
        for n, (_, st) in enumerate(ev.evolve(block, times)):
            prob = np.abs(st) ** 2
            samples[k, :, n] = 0.5 * s_center * (_site_profile(prob[:, 0], L) + _site_profile(prob[:, 1], L))
    meta = _run_meta(spec, config, ev, seed)
    meta["exhaustive"] = exhaustive
    return _series_from_samples(samples, times, spec, "sampled", 2 * len(reps), meta)


def correlator_exact_trace(spec: ChainSpec, times=None, max_L: int = EXACT_TRACE_MAX_L) -> CorrelationSeries:
    """Exact infinite-temperature correlator from sector-wise diagonalisation.

    Uses ``C_j(t) = 2^-L sum_{n,m} <n|sz_j|m><m|sz_c|n> cos((E_n - E_m) t)``
    within each magnetization sector (sz operators never mix sectors).
    Even L is accepted, with centre ``(L-1)//2``.
    """
    if spec.L > max_L:
        raise ValueError(f"exact trace limited to L <= {max_L}, got L={spec.L}")
    times = _check_times(time_grid() if times is None else times)
    L, c = spec.L, spec.center
    total = np.zeros((L, times.size))
    for M in range(-L, L + 1, 2):
        H, basis = build_sector_matrix(spec, M)
        E, V = np.linalg.eigh(H)
        signs = 2.0 * ((basis[:, None] >> np.arange(L)[None, :]) & 1) - 1.0  # (d, L)
        A_c = V.T @ (signs[:, c, None] * V)
        u = np.exp(1j * np.outer(E, times))  # (d, T)
        for j in range(L):
            A_j = A_c if j == c else V.T @ (signs[:, j, None] * V)
            W = A_j * A_c
            total[j] += np.einsum("nt,nt->t", u.conj(), W @ u).real
    sites = np.arange(L) - c
    meta = {"spec": spec.to_config()}
    return CorrelationSeries(times, sites, total / 2.0**L, "exact", 0, None, meta)


# sz_j(t) to second order: each anti-aligned pair (i, j) flips with probability
# (2 J_ij t)^2 and is anti-aligned half the time at infinite temperature
SHORT_TIME_PREFACTOR = 4.0


def short_time_prediction(table: CouplingTable, times) -> CorrelationSeries:
    """Second-order short-time correlator.

    C_0 = 1 - 4 t^2 sum_{i != c} J_ic^2 and C_j = 4 t^2 J_jc^2 (Pauli
    convention).  Valid for J t << 1.
    """
    times = _check_times(times)
    L, c = table.L, table.center
    Jc2 = table.pair_coupling[:, c] ** 2
    t2 = times**2
    corr = SHORT_TIME_PREFACTOR * np.outer(Jc2, t2)
    corr[c] = 1.0 - SHORT_TIME_PREFACTOR * Jc2.sum() * t2
    return CorrelationSeries(times, np.arange(L) - c, corr, "perturbative")


def _run_meta(spec: ChainSpec, config: PropagatorConfig, ev: Evolver, seed: int) -> dict:
    return {
        "spec": spec.to_config(),
        "propagator": {
            "method": config.method,
            "dt": config.dt,
            "dt_final": ev.dt,
            "taylor_order": config.taylor_order,
            "krylov_dim": config.krylov_dim,
            "norm_tolerance": config.norm_tolerance,
            "halvings": ev.n_halvings,
            "max_norm_drift": ev.max_norm_drift,
        },
        "seed": seed,
    }
