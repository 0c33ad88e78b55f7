"""Expectation values: Neel order parameter, k-bubble densities, two-point
correlations, and state fidelities.

All operators here are diagonal in the site basis except none; expectation
values reduce to weighted sums of |psi_b|^2 over cached per-basis-state
tables, so repeated measurement along a trajectory is cheap.

Bubble windows follow the standard k-bubble operators: a (k+2)-site window
holding one domain of flipped Z2 order plus its two bounding sites, summed
over both domain types.  `wrap` windowing closes the ring (n_s windows,
consistent with the periodic Hamiltonian); `open` uses the open-chain
sums with n_s-k-1 windows.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidParameterError
from .evolution import require_normalized, z2_minus_index, z2_plus_index
from . import kernels

WINDOWING_MODES = ("wrap", "open")
FULL_BUBBLE_PATTERNS = ("anti-initial", "initial", "both")


@dataclass(frozen=True)
class ObservableRecord:
    """A named scalar measurement, optionally time stamped."""

    name: str
    value: float
    time: float | None = None
    meta: dict = field(default_factory=dict)


def _infer_sites(psi):
    n = int(round(np.log2(len(psi))))
    if 1 << n != len(psi):
        raise InvalidParameterError("state length is not a power of two")
    return n


@lru_cache(maxsize=32)
def _stagger_table(n_s):
    _, stag = kernels.basis_tables(n_s)
    return stag


@lru_cache(maxsize=32)
def _bit_matrix(n_s):
    b = np.arange(1 << n_s, dtype=np.int64)
    return ((b[:, None] >> np.arange(n_s, dtype=np.int64)[None, :]) & 1).astype(np.float64)


def neel_values(n_s):
    """Per-basis-state Neel OP (1/n_s) sum_j (-1)^j sigma_z_j with sigma_z = 1-2n."""
    return (-2.0 / n_s) * _stagger_table(n_s)


def neel_op(psi):
    """<N> for a normalized state; +1 on |1010...10>, -1 on |0101...01>."""
    require_normalized(psi)
    n_s = _infer_sites(psi)
    return float(np.sum(np.abs(psi) ** 2 * neel_values(n_s)))


def _window_pattern(k):
    """Occupations of the type-A k-bubble window (length k+2).

    Alternating background starting occupied, with the k interior sites
    flipped: k=1 -> (1,1,1), k=2 -> (1,1,0,0).  Type B is the complement.
    """
    w = np.empty(k + 2, dtype=np.int64)
    w[0] = 1
    for i in range(1, k + 1):
        w[i] = 1 if i % 2 == 1 else 0
    w[k + 1] = 1 if (k + 1) % 2 == 0 else 0
    return w


@lru_cache(maxsize=128)
def bubble_values(n_s, k, windowing="wrap", pattern="anti-initial"):
    """Per-basis-state k-bubble density table.

    For k = n_s the density is a projector onto a full alternating pattern:
    'anti-initial' selects |0101...01| (the order opposite to the usual
    initial state), 'initial' the literal |1010...10| pattern, and 'both'
    the average of the two.  The pattern argument is ignored for k < n_s,
    where both domain types are always summed.
    """
    if windowing not in WINDOWING_MODES:
        raise InvalidParameterError(f"windowing must be one of {WINDOWING_MODES}")
    if pattern not in FULL_BUBBLE_PATTERNS:
        raise InvalidParameterError(f"pattern must be one of {FULL_BUBBLE_PATTERNS}")
    if not 1 <= k <= n_s:
        raise InvalidParameterError(f"bubble size k={k} outside [1, {n_s}]")

    dim = 1 << n_s
    if k == n_s:
        table = np.zeros(dim)
        if pattern == "anti-initial":
            table[z2_minus_index(n_s)] = 1.0
        elif pattern == "initial":
            table[z2_plus_index(n_s)] = 1.0
        else:
            table[z2_minus_index(n_s)] = 0.5
            table[z2_plus_index(n_s)] = 0.5
        return table
    if k == n_s - 1:
        raise InvalidParameterError(
            f"k = n_s - 1 = {k} has no valid (k+2)-site window on {n_s} sites")

    pat = _window_pattern(k)
    length = k + 2
    starts = range(n_s) if windowing == "wrap" else range(n_s - k - 1)
    norm = n_s if windowing == "wrap" else n_s - k - 1

    idx = np.arange(dim, dtype=np.int64)
    counts = np.zeros(dim, dtype=np.int64)
    for start in starts:
        sites = [(start + i) % n_s for i in range(length)]
        mask = 0
        want_a = 0
        for site, occ in zip(sites, pat):
            mask |= 1 << site
            if occ:
                want_a |= 1 << site
        want_b = mask & ~want_a
        sel = idx & mask
        counts += (sel == want_a)
        counts += (sel == want_b)
    return counts / float(norm)


def bubble_density(psi, k, windowing="wrap", pattern="anti-initial"):
    """Expectation of the k-bubble density operator on a normalized state."""
    require_normalized(psi)
    n_s = _infer_sites(psi)
    table = bubble_values(n_s, k, windowing, pattern)
    return float(np.sum(np.abs(psi) ** 2 * table))


def tpcf(psi, connected=True):
    """Two-point correlation matrix g_ij of sigma_z = 1 - 2n.

    Connected form g_ij = <z_i z_j> - <z_i><z_j> by default; the raw
    <z_i z_j> matrix is available with connected=False.
    """
    require_normalized(psi)
    n_s = _infer_sites(psi)
    prob = np.abs(psi) ** 2
    zmat = 1.0 - 2.0 * _bit_matrix(n_s)
    # einsum without optimize keeps a fixed single-threaded reduction order
    corr = np.einsum("b,bi,bj->ij", prob, zmat, zmat)
    if not connected:
        return corr
    mean = prob @ zmat
    return corr - np.outer(mean, mean)


def tpcf_neel(g):
    """Neel-weighted pair average of a correlation matrix, in [-1, 1].

    (1 / n_pairs) * sum_{i<j} (-1)^(i+j) g_ij with n_pairs = n_s(n_s-1)/2.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if g.shape != (n, n) or not np.allclose(g, g.T, atol=1e-9):
        raise InvalidParameterError("g must be a square symmetric matrix")
    signs = (-1.0) ** (np.arange(n)[:, None] + np.arange(n)[None, :])
    iu = np.triu_indices(n, k=1)
    return float(np.sum((signs * g)[iu]) / (n * (n - 1) / 2))


def fidelity(psi, phi):
    """|<phi|psi>|^2 for two normalized states of equal dimension."""
    if len(psi) != len(phi):
        raise InvalidParameterError("fidelity requires equal-dimension states")
    require_normalized(psi)
    require_normalized(phi)
    return float(np.abs(np.vdot(phi, psi)) ** 2)
