"""Numba kernels for the matrix-free Rydberg Hamiltonian.

All loops run in a fixed order so results are bit-for-bit reproducible
regardless of how many worker threads the caller uses.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def apply_rydberg(diag, amp, masks, psi, out):
    """out <- diag*psi + amp * sum_k psi[b ^ masks[k]], elementwise over b."""
    dim = psi.shape[0]
    m = masks.shape[0]
    for b in range(dim):
        acc = diag[b] * psi[b]
        for k in range(m):
            acc += amp * psi[b ^ masks[k]]
        out[b] = acc


@numba.njit(cache=True)
def basis_tables(n_s):
    """Per-basis-state occupation count and staggered occupation.

    Site j (1-based) maps to bit j-1; the stagger weight is (-1)^j,
    so bit 0 carries weight -1.
    """
    dim = 1 << n_s
    occ = np.empty(dim, dtype=np.float64)
    stag = np.empty(dim, dtype=np.float64)
    for b in range(dim):
        o = 0.0
        s = 0.0
        for k in range(n_s):
            if (b >> k) & 1:
                o += 1.0
                s += -1.0 if k % 2 == 0 else 1.0
        occ[b] = o
        stag[b] = s
    return occ, stag


@numba.njit(cache=True)
def pair_table(n_s, vmat):
    """Per-basis-state interaction energy sum_{i<j} V_ij n_i n_j."""
    dim = 1 << n_s
    out = np.zeros(dim, dtype=np.float64)
    for b in range(dim):
        acc = 0.0
        for i in range(n_s):
            if (b >> i) & 1:
                for j in range(i + 1, n_s):
                    if (b >> j) & 1:
                        acc += vmat[i, j]
        out[b] = acc
    return out
