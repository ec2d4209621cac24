"""Numba kernels for the bit-encoded full Hilbert space.

Basis index ``x`` encodes site ``i`` in bit ``i`` (site 0 is the least
significant bit); a set bit is spin up, sigma^z = +1.
"""
import warnings

import numpy as np
from numba import njit, prange

# older system TBB builds make numba fall back to its OpenMP/workqueue layer; the fallback is fine
warnings.filterwarnings("ignore", message="The TBB threading layer")


@njit(cache=True, nogil=True)
def diagonal_energies(n_sites, pair_coupling, delta, site_field):
    """Diagonal of H: Delta * sum_{i<j} J_ij s_i s_j + sum_i f_i s_i."""
    dim = 1 << n_sites
    out = np.empty(dim)
    for x in range(dim):
        e = 0.0
        for i in range(n_sites):
            si = 2.0 * ((x >> i) & 1) - 1.0
            e += site_field[i] * si
            for j in range(i + 1, n_sites):
                sj = 2.0 * ((x >> j) & 1) - 1.0
                e += delta * pair_coupling[i, j] * si * sj
        out[x] = e
    return out


@njit(cache=True, nogil=True, parallel=True)
def xxz_matvec(diag, lo_site, hi_site, flip_amp, psi, out):
    """out = H psi for a block ``psi`` of shape (dim, k).

    The flip part is applied pair by pair; every output element receives its
    contributions in pair order, so the result does not depend on the
    thread count.
    """
    dim, k = psi.shape
    for x in prange(dim):
        for c in range(k):
            out[x, c] = diag[x] * psi[x, c]
    for p in range(lo_site.shape[0]):
        mi = 1 << lo_site[p]
        mj = 1 << hi_site[p]
        a = flip_amp[p]
        shift = mj - mi
        nmid = mj // (2 * mi)
        # x: bit lo set, bit hi clear; y = x with both bits swapped
        for b in prange(dim // (4 * mi)):
            base = (b // nmid) * 2 * mj + (b % nmid) * 2 * mi
            for x in range(base + mi, base + 2 * mi):
                y = x + shift
                for c in range(k):
                    out[x, c] += a * psi[y, c]
                    out[y, c] += a * psi[x, c]
    return out
