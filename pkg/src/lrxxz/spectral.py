"""Exact-diagonalisation chaos diagnostics.

Level-spacing ratio, mid-spectrum half-chain entanglement entropies under
weak disorder, and their Kullback-Leibler divergence from the Bianchi-Dona
random-state distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from lrxxz.hamiltonian import ChainSpec, build_sector_matrix

DEFAULT_MID_COUNT = {12: 100, 14: 300}
ED_MAX_L = 14


@dataclass(frozen=True)
class BDReference:
    mu_bd: float
    sigma_bd: float

    def __post_init__(self):
        if not self.sigma_bd > 0:
            raise ValueError("sigma_bd must be > 0")


# half-chain cut, half-filling sector
BD_REFERENCES = {
    12: BDReference(3.5745, 0.0199),
    14: BDReference(4.2652, 0.0103),
}


def bd_reference(L: int) -> BDReference:
    try:
        return BD_REFERENCES[L]
    except KeyError:
        raise KeyError(f"no built-in Bianchi-Dona reference for L={L}; pass mu_bd/sigma_bd explicitly") from None


@dataclass
class SpectralDiagnostics:
    eigenvalues: np.ndarray
    r_mean: float
    ee_samples: np.ndarray
    mu_e: float
    sigma_e: float
    d_kl: float
    n_disorder: int
    r_per_realization: np.ndarray = field(default_factory=lambda: np.empty(0))
    ee_by_realization: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))


def collapse_degeneracies(eigenvalues, rel_tol: float = 1e-12) -> np.ndarray:
    e = np.sort(np.asarray(eigenvalues, dtype=float))
    if e.size < 2:
        return e
    width = e[-1] - e[0]
    keep = np.concatenate([[True], np.diff(e) > rel_tol * width])
    return e[keep]


def spacing_ratios(eigenvalues, fraction: float = 0.5) -> np.ndarray:
    """r_k = min(d_k, d_k+1) / max(d_k, d_k+1) over the central ``fraction`` of levels."""
    e = collapse_degeneracies(eigenvalues)
    if e.size < 3:
        raise ValueError("need at least 3 distinct levels")
    n = e.size
    cut = int(round(n * (1 - fraction) / 2))
    core = e[cut : n - cut] if n - 2 * cut >= 3 else e
    gaps = np.diff(core)
    return np.minimum(gaps[1:], gaps[:-1]) / np.maximum(gaps[1:], gaps[:-1])


def level_spacing_ratio(eigenvalues, fraction: float = 0.5) -> float:
    return float(spacing_ratios(eigenvalues, fraction).mean())


def select_mid_spectrum(eigenvalues, count: int) -> np.ndarray:
    """Indices of the ``count`` states closest to the centre of the densest DOS bin."""
    e = np.asarray(eigenvalues, dtype=float)
    n = e.size
    if count > n:
        raise ValueError(f"count={count} exceeds spectrum size {n}")
    if count == n:
        return np.arange(n)
    hist, edges = np.histogram(e, bins=math.ceil(math.sqrt(n)))
    k = int(np.argmax(hist))
    centre = 0.5 * (edges[k] + edges[k + 1])
    return np.sort(np.argsort(np.abs(e - centre), kind="stable")[:count])


def entanglement_entropy(vector, basis, L: int, cut: int) -> float:
    """Von Neumann entropy (natural log) of sites [0, cut) for a sector eigenvector."""
    vector = np.asarray(vector)
    if not 1 <= cut < L:
        raise ValueError(f"cut must satisfy 1 <= cut < L, got {cut}")
    if abs(np.vdot(vector, vector).real - 1.0) > 1e-8:
        raise ValueError("vector is not normalised")
    full = np.zeros(1 << L, dtype=vector.dtype)
    full[np.asarray(basis)] = vector
    # rows: sites [cut, L) (high bits); columns: sites [0, cut)
    s = np.linalg.svd(full.reshape(1 << (L - cut), 1 << cut), compute_uv=False)
    p = s**2
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))


def realization_spec(spec: ChainSpec, index: int) -> ChainSpec:
    """Disorder realization ``index`` with a seed derived from the master seed."""
    seq = np.random.SeedSequence(spec.rng_seed, spawn_key=(3, index))
    return spec.replace(rng_seed=int(seq.generate_state(1, np.uint64)[0]))


def diagnose_realization(spec: ChainSpec, count: int, cut: int | None = None, fraction: float = 0.5):
    """Eigenvalues, <r> and mid-spectrum EEs for one chain (half-filling)."""
    if spec.L > ED_MAX_L:
        raise ValueError(f"ED limited to L <= {ED_MAX_L}")
    if spec.L % 2:
        raise ValueError("half filling needs even L")
    cut = spec.L // 2 if cut is None else cut
    H, basis = build_sector_matrix(spec, 0)
    E, V = np.linalg.eigh(H)
    idx = select_mid_spectrum(E, count)
    ee = np.array([entanglement_entropy(V[:, k], basis, spec.L, cut) for k in idx])
    return E, level_spacing_ratio(E, fraction), ee


def ee_distribution(spec: ChainSpec, count: int | None = None, n_disorder: int = 1, fraction: float = 0.5):
    """Pool mid-spectrum half-chain entropies over disorder realizations.

    Returns ``(mu_e, sigma_e, samples, extras)``; ``extras`` holds the per
    realization entropies (shape (n_disorder, count)), <r> values and the
    eigenvalues of the last realization.
    """
    count = DEFAULT_MID_COUNT.get(spec.L, 100) if count is None else count
    per_real, rs = [], []
    E = None
    for k in range(n_disorder):
        E, r, ee = diagnose_realization(realization_spec(spec, k), count, fraction=fraction)
        per_real.append(ee)
        rs.append(r)
    ee_by = np.array(per_real)
    samples = ee_by.ravel()
    extras = {"ee_by_realization": ee_by, "r_per_realization": np.array(rs), "eigenvalues": E}
    return float(samples.mean()), float(samples.std()), samples, extras


def kl_gaussian(mu_e: float, sigma_e: float, ref: BDReference) -> float:
    """KL divergence D(P_E || P_BD) between two Gaussians."""
    if not sigma_e > 0:
        raise ValueError("sigma_e must be > 0")
    ratio = sigma_e / ref.sigma_bd
    return float((mu_e - ref.mu_bd) ** 2 / (2 * ref.sigma_bd**2) + 0.5 * (ratio**2 - 1) - math.log(ratio))


def kl_binned(samples_p, samples_q, bins: int = 50) -> float:
    """Histogram estimate of sum_b P_b log(P_b / Q_b) on shared bin edges.

    Empty Q bins get the floor probability 1/(10 |Q|).
    """
    p_s = np.asarray(samples_p, dtype=float)
    q_s = np.asarray(samples_q, dtype=float)
    if p_s.size == 0 or q_s.size == 0:
        raise ValueError("both sample sets must be non-empty")
    lo, hi = min(p_s.min(), q_s.min()), max(p_s.max(), q_s.max())
    if not hi > lo or bins < 1:
        raise ValueError("degenerate binning")
    edges = np.linspace(lo, hi, bins + 1)
    P = np.histogram(p_s, edges)[0] / p_s.size
    Q = np.histogram(q_s, edges)[0] / q_s.size
    Q = np.where(Q > 0, Q, 1.0 / (10 * q_s.size))
    occ = P > 0
    return float(np.sum(P[occ] * np.log(P[occ] / Q[occ])))


def bootstrap_kl(ee_by_realization: np.ndarray, ref: BDReference, n_boot: int = 1000, seed: int = 0) -> np.ndarray:
    """D_KL recomputed on realization-level bootstrap resamples."""
    ee = np.asarray(ee_by_realization)
    rng = np.random.default_rng(seed)
    n = ee.shape[0]
    out = np.empty(n_boot)
    for b in range(n_boot):
        pick = ee[rng.integers(0, n, n)].ravel()
        out[b] = kl_gaussian(pick.mean(), pick.std(), ref)
    return out


def spectral_diagnostics(
    spec: ChainSpec,
    count: int | None = None,
    n_disorder: int = 1,
    ref: BDReference | None = None,
    fraction: float = 0.5,
) -> SpectralDiagnostics:
    ref = bd_reference(spec.L) if ref is None else ref
    mu, sigma, samples, extras = ee_distribution(spec, count, n_disorder, fraction)
    return SpectralDiagnostics(
        eigenvalues=extras["eigenvalues"],
        r_mean=float(extras["r_per_realization"].mean()),
        ee_samples=samples,
        mu_e=mu,
        sigma_e=sigma,
        d_kl=kl_gaussian(mu, sigma, ref),
        n_disorder=n_disorder,
        r_per_realization=extras["r_per_realization"],
        ee_by_realization=extras["ee_by_realization"],
    )
