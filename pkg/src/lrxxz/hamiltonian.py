"""Long-range XXZ chain with Kac-normalised power-law couplings.

Conventions used throughout the package:

* Pauli operators (eigenvalues +-1), not spin-1/2 operators.
* Open boundary conditions.
* Site ``i`` is bit ``i`` of the basis index (site 0 = least significant bit);
  a set bit is spin up.

    H = sum_{i<j} J_ij (sx_i sx_j + sy_i sy_j + delta sz_i sz_j) + sum_i f_i sz_i

with ``J_ij = -J / (kac * |i-j|**alpha)`` and ``f_i = h_z + h_i``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from math import comb
from typing import Any, Mapping

import numpy as np

from lrxxz import _kernels

# Keys accepted in chain config files, mapped to ChainSpec field names.
CONFIG_KEYS = {
    "L": "L",
    "J": "J",
    "delta": "delta",
    "alpha": "alpha",
    "h_z": "h_z",
    "disorder_amplitude": "disorder_amplitude",
    "seed": "rng_seed",
}


class DimensionError(ValueError):
    """State vector does not match the Hilbert space of the chain."""


@dataclass(frozen=True)
class ChainSpec:
    """Physical and numerical parameters of one chain.

    ``disorder_amplitude`` W draws on-site fields uniformly from
    ``[-W|J|, W|J|]`` using ``rng_seed``.
    """

    L: int
    delta: float
    alpha: float
    J: float = 1.0
    h_z: float = 3.0
    disorder_amplitude: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"L must be an integer >= 2, got {self.L!r}")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha!r}")
        if self.J == 0:
            raise ValueError("J must be non-zero")
        if self.disorder_amplitude < 0:
            raise ValueError("disorder_amplitude must be >= 0")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    @property
    def center(self) -> int:
        return (self.L - 1) // 2

    def require_odd(self) -> None:
        if self.L % 2 == 0:
            raise ValueError(
                f"transport runs need odd L (unique central site), got L={self.L}"
            )

    def replace(self, **changes) -> "ChainSpec":
        return dataclasses.replace(self, **changes)

    def to_config(self) -> dict[str, Any]:
        return {key: getattr(self, attr) for key, attr in CONFIG_KEYS.items()}

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "ChainSpec":
        """Build from a config mapping; unknown keys raise ``KeyError``."""
        unknown = set(cfg) - set(CONFIG_KEYS)
        if unknown:
            raise KeyError(f"unknown chain config key(s): {sorted(unknown)}")
        kwargs = {CONFIG_KEYS[k]: v for k, v in cfg.items()}
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class CouplingTable:
    kac: float
    pair_coupling: np.ndarray  # (L, L), symmetric, zero diagonal
    site_field: np.ndarray  # (L,), h_z + h_i
    uniform_field: float  # the h_z part of site_field

    @property
    def L(self) -> int:
        return self.site_field.shape[0]

    @property
    def center(self) -> int:
        return (self.L - 1) // 2


def kac_norm(L: int, alpha: float) -> float:
    """Kac normalisation sum_{i<j} |i-j|^-alpha / (L-1)."""
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    # L - r pairs sit at distance r
    r = np.arange(1, L, dtype=float)
    return float(np.sum((L - r) * r ** (-alpha)) / (L - 1))


def disorder_fields(spec: ChainSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.rng_seed)
    u = rng.uniform(-1.0, 1.0, spec.L)
    return u * spec.disorder_amplitude * abs(spec.J)


def build_couplings(spec: ChainSpec) -> CouplingTable:
    kac = kac_norm(spec.L, spec.alpha)
    idx = np.arange(spec.L)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    with np.errstate(divide="ignore"):
        pair = -spec.J / kac * dist ** (-spec.alpha)
    np.fill_diagonal(pair, 0.0)
    field = spec.h_z + disorder_fields(spec)
    pair.setflags(write=False)
    field.setflags(write=False)
    return CouplingTable(kac=kac, pair_coupling=pair, site_field=field, uniform_field=float(spec.h_z))


def n_sites_of(dim: int) -> int:
    L = int(dim).bit_length() - 1
    if dim < 2 or 1 << L != dim:
        raise DimensionError(f"state length {dim} is not a power of two")
    return L


def spin_signs(L: int, site: int) -> np.ndarray:
    """sigma^z eigenvalue of ``site`` for every basis index, as +-1.0."""
    x = np.arange(1 << L)
    return 2.0 * ((x >> site) & 1) - 1.0


def magnetization(L: int) -> np.ndarray:
    """Total sigma^z (n_up - n_down) for every basis index."""
    x = np.arange(1 << L, dtype=np.uint64)
    return 2 * np.bitwise_count(x).astype(np.int64) - L


class XXZOperator:
    """Matrix-free H on the full 2**L space.

    With ``uniform_field=False`` the h_z * total-magnetization term is left
    out; it commutes with everything else in H, so propagators apply it as an
    exact phase instead.
    """

    def __init__(self, table: CouplingTable, delta: float, uniform_field: bool = True):
        self.L = table.L
        self.dim = 1 << self.L
        self.delta = float(delta)
        field = np.array(table.site_field, dtype=float)
        if not uniform_field:
            field = field - table.uniform_field
        self.diag = _kernels.diagonal_energies(
            self.L, np.ascontiguousarray(table.pair_coupling), self.delta, field
        )
        lo, hi = np.triu_indices(self.L, k=1)
        self.lo_site = lo.astype(np.int64)
        self.hi_site = hi.astype(np.int64)
        # sx sx + sy sy maps |up,down> -> 2 |down,up>
        self.flip_amp = 2.0 * table.pair_coupling[lo, hi]

    def matvec(self, psi: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        vec = psi.ndim == 1
        block = psi.reshape(self.dim, -1) if psi.shape[0] == self.dim else None
        if block is None:
            raise DimensionError(f"state has length {psi.shape[0]}, expected {self.dim}")
        block = np.ascontiguousarray(block, dtype=np.complex128)
        if out is None:
            out = np.empty_like(block)
        else:
            out = out.reshape(block.shape)
        _kernels.xxz_matvec(self.diag, self.lo_site, self.hi_site, self.flip_amp, block, out)
        return out[:, 0] if vec else out

    __matmul__ = matvec


def apply_hamiltonian(table: CouplingTable, delta: float, psi: np.ndarray) -> np.ndarray:
    """Return H|psi> without building a matrix. ``psi`` may be (dim,) or (dim, k)."""
    if psi.shape[0] != 1 << table.L:
        raise DimensionError(f"state has length {psi.shape[0]}, expected {1 << table.L}")
    return XXZOperator(table, delta).matvec(psi)


def apply_sigma_z(site: int, psi: np.ndarray) -> np.ndarray:
    L = n_sites_of(psi.shape[0])
    if not 0 <= site < L:
        raise IndexError(f"site {site} out of range for L={L}")
    signs = spin_signs(L, site)
    if psi.ndim > 1:
        signs = signs.reshape((-1,) + (1,) * (psi.ndim - 1))
    return psi * signs


def sector_basis(L: int, magnetization: int) -> np.ndarray:
    """Ascending basis indices with total sigma^z equal to ``magnetization``."""
    if abs(magnetization) > L or (L + magnetization) % 2:
        raise ValueError(f"no sector with magnetization {magnetization} at L={L}")
    n_up = (L + magnetization) // 2
    x = np.arange(1 << L, dtype=np.uint64)
    return np.flatnonzero(np.bitwise_count(x) == n_up)


def build_sector_matrix(spec: ChainSpec, magnetization: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Dense real-symmetric H restricted to a fixed-magnetization sector.

    Returns
    -------
    H : (d, d) ndarray
    basis : (d,) ndarray
        Full-space basis index of each sector state.
    """
    basis = sector_basis(spec.L, magnetization)
    d = basis.size
    if d == 0:
        raise ValueError("empty sector")
    table = build_couplings(spec)
    diag = _kernels.diagonal_energies(
        spec.L, np.ascontiguousarray(table.pair_coupling), float(spec.delta), np.array(table.site_field)
    )
    H = np.zeros((d, d))
    H[np.arange(d), np.arange(d)] = diag[basis]
    lookup = np.full(1 << spec.L, -1, dtype=np.int64)
    lookup[basis] = np.arange(d)
    for i in range(spec.L):
        for j in range(i + 1, spec.L):
            mask = (1 << i) | (1 << j)
            bits = basis & mask
            rows = np.flatnonzero((bits != 0) & (bits != mask))
            cols = lookup[basis[rows] ^ mask]
            H[rows, cols] += 2.0 * table.pair_coupling[i, j]
    return H, basis


def sector_dimension(L: int, magnetization: int) -> int:
    return comb(L, (L + magnetization) // 2)
