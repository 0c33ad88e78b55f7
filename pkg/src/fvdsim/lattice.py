"""Chain geometry, physical parameters, drive waveforms, and the Rydberg Hamiltonian.

Conventions used throughout the package:

* sites are numbered j = 1..n_s and site j lives on bit j-1 of the basis
  index; bit value 1 means the atom is in the Rydberg state,
* the staggered sign is s_j = (-1)^j, so s_1 = -1 and a positive staggered
  detuning amplitude raises the energy of |1010...10> (site 1 excited),
  making it the metastable Z2 state,
* all frequencies are angular (rad/us), lengths are um.  The config layer
  accepts plain MHz and multiplies by 2*pi at the boundary.

The Hamiltonian is

    H = (Omega/2) sum_j sigma_x_j - sum_j Delta_j n_j + sum_{j<k} V_jk n_j n_k

with Delta_j = Delta_glob + (-1)^j Delta_loc and V_jk = C6 / r_jk^6.  It is
kept matrix-free: a real diagonal of length 2^n_s plus a uniform amplitude
Omega/2 on every single-bit flip.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidParameterError, ScheduleDomainError

GEOMETRY_MODES = ("chord", "arc")


def _check_even_sites(n_s):
    if n_s < 2 or n_s % 2 != 0:
        raise InvalidParameterError(f"n_s must be even and >= 2, got {n_s}")


@dataclass(frozen=True)
class PhysicalParams:
    """All Hamiltonian couplings plus chain geometry parameters.

    Attributes
    ----------
    n_s : even site count
    a : atom separation (um)
    omega : Rabi angular frequency (rad/us)
    delta_glob : global detuning (rad/us)
    delta_loc : staggered local detuning amplitude (rad/us)
    c6 : van der Waals coefficient (rad/us * um^6)
    geometry_mode : 'chord' (atoms physically on a circle) or 'arc'
    """

    n_s: int
    a: float
    omega: float
    delta_glob: float
    delta_loc: float
    c6: float
    geometry_mode: str = "chord"

    def __post_init__(self):
        _check_even_sites(self.n_s)
        if self.a <= 0:
            raise InvalidParameterError(f"a must be > 0, got {self.a}")
        if self.omega < 0:
            raise InvalidParameterError(f"omega must be >= 0, got {self.omega}")
        if self.c6 <= 0:
            raise InvalidParameterError(f"c6 must be > 0, got {self.c6}")
        if self.geometry_mode not in GEOMETRY_MODES:
            raise InvalidParameterError(
                f"geometry_mode must be one of {GEOMETRY_MODES}, got {self.geometry_mode!r}"
            )

    @classmethod
    def from_dimensionless(cls, n_s, rb_over_a, alpha, beta, omega_mhz=1.0,
                           a=8.13, geometry_mode="chord", c6=None):
        """Build params from the dimensionless knobs (R_b/a, alpha, beta).

        Unless an explicit c6 is given, it is derived as Omega * R_b^6 with
        R_b = rb_over_a * a, which makes the blockade ratio exact.
        """
        omega = 2.0 * np.pi * omega_mhz
        if c6 is None:
            if omega <= 0:
                raise InvalidParameterError("deriving c6 from rb_over_a requires omega > 0")
            c6 = omega * (rb_over_a * a) ** 6
        delta_glob = alpha * omega
        delta_loc = beta * delta_glob
        return cls(n_s=n_s, a=a, omega=omega, delta_glob=delta_glob,
                   delta_loc=delta_loc, c6=c6, geometry_mode=geometry_mode)

    @property
    def blockade_radius(self):
        """R_b = (C6/Omega)^(1/6); infinite at Omega = 0."""
        if self.omega == 0:
            return np.inf
        return (self.c6 / self.omega) ** (1.0 / 6.0)

    @property
    def rb_over_a(self):
        return self.blockade_radius / self.a

    @property
    def alpha(self):
        """Delta_glob / Omega."""
        if self.omega == 0:
            raise InvalidParameterError("alpha undefined for omega = 0")
        return self.delta_glob / self.omega

    @property
    def beta(self):
        """Delta_loc / Delta_glob; defined only for Delta_glob != 0."""
        if self.delta_glob == 0:
            raise InvalidParameterError("beta undefined for delta_glob = 0")
        return self.delta_loc / self.delta_glob

    @property
    def v1(self):
        """Nearest-neighbour interaction C6/a^6 (same in chord and arc mode)."""
        return self.c6 / self.a ** 6

    def geometry(self):
        return ring_positions(self.n_s, self.a, self.geometry_mode)

    def hamiltonian(self, geom=None):
        if geom is None:
            geom = self.geometry()
        return build_hamiltonian(geom, self.c6, self.omega,
                                 self.delta_glob, self.delta_loc)

    def replace(self, **kwargs):
        from dataclasses import replace as _replace
        return _replace(self, **kwargs)


@dataclass(frozen=True)
class AtomGeometry:
    """Atom positions on the ring and the pairwise distance matrix (um)."""

    positions: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        d = self.distances
        n = d.shape[0]
        if d.shape != (n, n):
            raise InvalidParameterError("distance matrix must be square")
        if not np.allclose(d, d.T, atol=1e-12):
            raise InvalidParameterError("distance matrix must be symmetric")
        if np.any(np.abs(np.diag(d)) > 0):
            raise InvalidParameterError("distance matrix diagonal must be zero")
        off = d[~np.eye(n, dtype=bool)]
        if np.any(off <= 0):
            raise InvalidParameterError("off-diagonal distances must be > 0")

    @property
    def n_s(self):
        return self.distances.shape[0]

    def nearest_neighbor_distance(self):
        n = self.n_s
        off = self.distances[~np.eye(n, dtype=bool)]
        return float(off.min())


def ring_positions(n_s, a, mode="chord"):
    """Place n_s atoms on a circle with nearest-neighbour separation a.

    chord mode: atoms at angles 2*pi*j/n_s on a circle of radius
    R = a / (2 sin(pi/n_s)); distance(i, j) = 2 R sin(pi |i-j| / n_s).
    arc mode: same positions but the minimal-image path length
    min(|i-j|, n_s-|i-j|) * a is used as the interaction distance.
    """
    _check_even_sites(n_s)
    if a <= 0:
        raise InvalidParameterError(f"a must be > 0, got {a}")
    if mode not in GEOMETRY_MODES:
        raise InvalidParameterError(f"unknown geometry mode {mode!r}")
    radius = a / (2.0 * np.sin(np.pi / n_s))
    angles = 2.0 * np.pi * np.arange(n_s) / n_s
    positions = np.column_stack([radius * np.cos(angles), radius * np.sin(angles)])
    steps = np.abs(np.arange(n_s)[:, None] - np.arange(n_s)[None, :])
    if mode == "chord":
        distances = 2.0 * radius * np.sin(np.pi * steps / n_s)
    else:
        distances = np.minimum(steps, n_s - steps) * float(a)
    np.fill_diagonal(distances, 0.0)
    return AtomGeometry(positions=positions, distances=distances)


def pair_potential(c6, r):
    """Van der Waals pair energy C6 / r^6."""
    if r <= 0:
        raise InvalidParameterError(f"pair distance must be > 0, got {r}")
    return c6 / r ** 6


def interaction_matrix(geom, c6):
    """Full V_jk = C6/r_jk^6 matrix with zero diagonal (no truncation)."""
    n = geom.n_s
    vmat = np.zeros((n, n))
    mask = ~np.eye(n, dtype=bool)
    vmat[mask] = c6 / geom.distances[mask] ** 6
    return vmat


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-linear waveform; evaluation outside the breakpoints is an error."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise InvalidParameterError("waveform needs matching times/values with >= 2 points")
        if np.any(np.diff(t) <= 0):
            raise InvalidParameterError("waveform breakpoints must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        eps = 1e-12 * max(1.0, abs(self.times[-1]))
        if t < self.times[0] - eps or t > self.times[-1] + eps:
            raise ScheduleDomainError(
                f"t={t} outside waveform domain [{self.times[0]}, {self.times[-1]}]"
            )
        return float(np.interp(t, self.times, self.values))

    def slew_rates(self):
        """Exact slope of each linear segment (per us^2 units of the value)."""
        return np.diff(self.values) / np.diff(self.times)


@dataclass(frozen=True)
class DriveSchedule:
    """Drive waveforms Omega(t), Delta_glob(t), Delta_loc(t) plus the stagger pattern.

    The local detuning waveform is the amplitude Delta_loc(t); site j sees
    (-1)^j * Delta_loc(t).
    """

    n_s: int
    omega_wf: PiecewiseLinear
    delta_glob_wf: PiecewiseLinear
    delta_loc_wf: PiecewiseLinear

    def __post_init__(self):
        _check_even_sites(self.n_s)
        t0, t1 = self.domain
        for wf in (self.omega_wf, self.delta_glob_wf, self.delta_loc_wf):
            if abs(wf.times[0] - t0) > 1e-12 or abs(wf.times[-1] - t1) > 1e-12:
                raise InvalidParameterError("all waveforms must share the same time domain")

    @property
    def domain(self):
        return float(self.omega_wf.times[0]), float(self.omega_wf.times[-1])

    @property
    def stagger(self):
        """s_j = (-1)^j for j = 1..n_s, so s_1 = -1."""
        return np.array([(-1.0) ** j for j in range(1, self.n_s + 1)])

    def values_at(self, t):
        """(omega, delta_glob, delta_loc) at time t."""
        return self.omega_wf(t), self.delta_glob_wf(t), self.delta_loc_wf(t)

    @classmethod
    def constant(cls, n_s, t0, t1, omega, delta_glob, delta_loc):
        times = np.array([t0, t1], dtype=float)
        return cls(
            n_s=n_s,
            omega_wf=PiecewiseLinear(times, np.full(2, float(omega))),
            delta_glob_wf=PiecewiseLinear(times, np.full(2, float(delta_glob))),
            delta_loc_wf=PiecewiseLinear(times, np.full(2, float(delta_loc))),
        )

    @classmethod
    def beta_ramp(cls, params, beta_start, beta_stop, tau):
        """Linear ramp beta(t) = beta_start - t/tau at fixed Omega, Delta_glob.

        The ramp runs from t = 0 until beta reaches beta_stop,
        i.e. over a duration (beta_start - beta_stop) * tau.
        """
        if tau <= 0:
            raise InvalidParameterError(f"tau must be > 0, got {tau}")
        if beta_start <= beta_stop:
            raise InvalidParameterError("beta ramp requires beta_start > beta_stop")
        duration = (beta_start - beta_stop) * tau
        times = np.array([0.0, duration])
        dl = params.delta_glob * np.array([beta_start, beta_stop])
        return cls(
            n_s=params.n_s,
            omega_wf=PiecewiseLinear(times, np.full(2, params.omega)),
            delta_glob_wf=PiecewiseLinear(times, np.full(2, params.delta_glob)),
            delta_loc_wf=PiecewiseLinear(times, dl),
        )


class HamiltonianOperator:
    """Matrix-free Rydberg Hamiltonian: real diagonal plus uniform bit-flip coupling.

    The diagonal of the all-ground basis state (index 0) is exactly 0; no
    constant offset is ever added.
    """

    def __init__(self, n_s, diag, rabi_amplitude):
        _check_even_sites(n_s)
        diag = np.ascontiguousarray(diag, dtype=np.float64)
        if diag.shape != (1 << n_s,):
            raise InvalidParameterError("diag must have length 2^n_s")
        self.n_s = n_s
        self.diag = diag
        self.rabi_amplitude = float(rabi_amplitude)
        self._masks = np.array([1 << k for k in range(n_s)], dtype=np.int64)

    @property
    def dim(self):
        return 1 << self.n_s

    def norm_bound(self):
        """Upper bound on the spectral norm (Gershgorin)."""
        return float(np.abs(self.diag).max() + self.n_s * abs(self.rabi_amplitude))

    def apply(self, psi):
        """H |psi> for a complex amplitude vector of length 2^n_s."""
        psi = np.ascontiguousarray(psi, dtype=np.complex128)
        out = np.empty_like(psi)
        kernels.apply_rydberg(self.diag, self.rabi_amplitude, self._masks, psi, out)
        return out

    def expectation(self, psi):
        """<psi|H|psi>, real for any normalized state."""
        return float(np.vdot(psi, self.apply(psi)).real)

    def scaled(self, factor):
        """factor * H as a new operator (used e.g. for time reversal via -H)."""
        return HamiltonianOperator(self.n_s, factor * self.diag,
                                   factor * self.rabi_amplitude)

    def dense(self):
        """Dense matrix representation; intended for small n_s only."""
        dim = self.dim
        mat = np.diag(self.diag.astype(np.complex128))
        amp = self.rabi_amplitude
        for b in range(dim):
            for k in range(self.n_s):
                mat[b ^ (1 << k), b] += amp
        return mat


def hamiltonian_terms(geom, c6):
    """Precomputed diagonal pieces (occ, stag, pair) for time-dependent drives.

    diag(t) = pair - Delta_glob(t)*occ - Delta_loc(t)*stag, which makes
    rebuilding H along a ramp three vector operations.
    """
    occ, stag = kernels.basis_tables(geom.n_s)
    pair = kernels.pair_table(geom.n_s, interaction_matrix(geom, c6))
    return occ, stag, pair


def build_hamiltonian(geom, c6, omega, delta_glob, delta_loc):
    """Construct the matrix-free Hamiltonian for constant drive values."""
    occ, stag, pair = hamiltonian_terms(geom, c6)
    diag = pair - delta_glob * occ - delta_loc * stag
    return HamiltonianOperator(geom.n_s, diag, omega / 2.0)
