"""Time evolution of state vectors under constant and time-dependent Hamiltonians.

States are plain numpy complex128 arrays of length 2^n_s using the site/bit
convention documented in :mod:`fvdsim.lattice`.  Every public operation
returns a state normalized to 1e-10; a norm drift of more than 1e-8 inside
the propagator is treated as a numerical failure.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import (CapabilityError, InvalidParameterError,
                     NumericalFailureError, ScheduleDomainError)
from .lattice import HamiltonianOperator, hamiltonian_terms

DEFAULT_TOL = 1e-10
DEFAULT_KRYLOV_DIM = 16
_DENSE_ORACLE_MAX_SITES = 10
_MAX_HALVINGS = 60


# ---------------------------------------------------------------------------
# state helpers

def basis_state(n_s, index):
    """Computational basis state |index> as an amplitude vector."""
    dim = 1 << n_s
    if not 0 <= index < dim:
        raise InvalidParameterError(f"basis index {index} out of range for n_s={n_s}")
    psi = np.zeros(dim, dtype=np.complex128)
    psi[index] = 1.0
    return psi


def z2_plus_index(n_s):
    """Basis index of |1010...10> (site 1 Rydberg, odd sites occupied)."""
    return sum(1 << k for k in range(0, n_s, 2))


def z2_minus_index(n_s):
    """Basis index of |0101...01> (site 2 Rydberg, even sites occupied)."""
    return sum(1 << k for k in range(1, n_s, 2))


def z2_plus_state(n_s):
    return basis_state(n_s, z2_plus_index(n_s))


def z2_minus_state(n_s):
    return basis_state(n_s, z2_minus_index(n_s))


def all_ground_state(n_s):
    return basis_state(n_s, 0)


def random_state(n_s, rng):
    """Haar-ish random normalized state (Gaussian amplitudes)."""
    dim = 1 << n_s
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def require_normalized(psi, tol=1e-10):
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > tol:
        raise InvalidParameterError(f"state not normalized: ||psi|| = {nrm}")
    return psi


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class Trajectory:
    """Sampled observable records along an evolution.

    times are strictly increasing sample times in us; observables maps a
    column name to an equal-length float array.  meta echoes the schedule
    and solver settings that produced the run.
    """

    times: np.ndarray
    observables: dict
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise InvalidParameterError("trajectory times must be strictly increasing")
        for name, col in self.observables.items():
            if len(col) != len(t):
                raise InvalidParameterError(f"observable column {name!r} length mismatch")

    def column(self, name):
        return np.asarray(self.observables[name], dtype=float)


# ---------------------------------------------------------------------------
# Krylov propagator

def _krylov_substep(ham, psi, dt, krylov_dim, budget):
    """One Lanczos exp(-i dt H) substep.

    Grows the Krylov basis until the local error estimate (from the last
    subdiagonal element) drops below budget or the dimension cap is hit.
    Returns (result, err) on success or (None, err) if the cap was reached
    without convergence.
    """
    dim = psi.shape[0]
    m_max = min(krylov_dim, dim)
    basis = np.empty((m_max, dim), dtype=np.complex128)
    alphas = np.empty(m_max)
    betas = np.empty(m_max)
    basis[0] = psi
    err = np.inf
    for j in range(m_max):
        w = ham.apply(basis[j])
        a = np.vdot(basis[j], w).real
        w -= a * basis[j]
        if j > 0:
            w -= betas[j - 1] * basis[j - 1]
        # full reorthogonalization keeps the basis orthonormal to machine precision
        for i in range(j + 1):
            w -= np.vdot(basis[i], w) * basis[i]
        b = np.linalg.norm(w)
        alphas[j] = a
        betas[j] = b
        m = j + 1
        if b < 1e-13 * max(1.0, abs(a)):
            # invariant subspace: the projected exponential is exact
            evals, evecs = eigh_tridiagonal(alphas[:m], betas[:m - 1])
            y = evecs @ (np.exp(-1j * dt * evals) * evecs[0])
            return basis[:m].T @ y, 0.0
        if m >= 3 or m == m_max:
            evals, evecs = eigh_tridiagonal(alphas[:m], betas[:m - 1])
            y = evecs @ (np.exp(-1j * dt * evals) * evecs[0])
            err = abs(b * y[-1] * dt)
            if err <= budget:
                return basis[:m].T @ y, err
        if m < m_max:
            basis[m] = w / b
    return None, err


def evolve_constant(ham, psi, t, tol=DEFAULT_TOL, krylov_dim=DEFAULT_KRYLOV_DIM):
    """exp(-i H t) |psi> by adaptive Krylov subspace approximation.

    The step is subdivided until each substep's local truncation estimate is
    below its proportional share of tol.  Negative t is allowed (it is the
    same exponential with a negated phase).
    """
    if tol <= 0:
        raise InvalidParameterError("tol must be > 0")
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    require_normalized(psi)
    if t == 0:
        return psi.copy()

    total = abs(t)
    sign = 1.0 if t > 0 else -1.0
    remaining = total
    v = psi
    dt = total
    halvings = 0
    while remaining > 1e-15 * total:
        dt = min(dt, remaining)
        budget = tol * dt / total
        w, err = _krylov_substep(ham, v, sign * dt, krylov_dim, budget)
        if w is None:
            halvings += 1
            if halvings > _MAX_HALVINGS:
                raise NumericalFailureError(
                    f"Krylov propagator did not converge (residual {err:.3e})",
                    residual=err,
                )
            dt /= 2.0
            continue
        v = w
        remaining -= dt
        if err < 0.05 * budget:
            dt *= 1.5
    drift = abs(np.linalg.norm(v) - 1.0)
    if drift > 1e-8:
        raise NumericalFailureError(
            f"norm drift {drift:.3e} exceeds 1e-8", residual=drift)
    if drift > 0:
        v = v / np.linalg.norm(v)
    return v


def dense_expm_oracle(ham, psi, t):
    """Exact dense evolution exp(-i H t)|psi> via eigendecomposition.

    Independent of the Krylov path; restricted to n_s <= 10 where the dense
    2^n_s matrix is cheap.
    """
    if ham.n_s > _DENSE_ORACLE_MAX_SITES:
        raise CapabilityError(
            f"dense oracle limited to n_s <= {_DENSE_ORACLE_MAX_SITES}, got {ham.n_s}")
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    require_normalized(psi)
    evals, evecs = np.linalg.eigh(ham.dense())
    return evecs @ (np.exp(-1j * evals * t) * (evecs.conj().T @ psi))


# ---------------------------------------------------------------------------
# time-dependent evolution

def evolve_schedule(geom, c6, sched, psi, t0, t1, dt=None, tol=1e-7,
                    sampler=None, n_samples=401, krylov_dim=DEFAULT_KRYLOV_DIM):
    """Evolve under drive waveforms with a piecewise-constant midpoint rule.

    Each micro-step [t, t+h] uses the Hamiltonian built from the waveform
    values at t + h/2.  Observables are sampled on a uniform grid of
    n_samples points between t0 and t1 through `sampler(t, psi) -> dict`.
    Halving dt changes the final state fidelity by less than 10*tol.
    """
    lo, hi = sched.domain
    eps = 1e-9 * max(1.0, abs(hi))
    if t0 < lo - eps or t1 > hi + eps or t1 <= t0:
        raise ScheduleDomainError(
            f"[{t0}, {t1}] outside schedule domain [{lo}, {hi}]")
    if dt is None:
        dt = (t1 - t0) / 400.0
    if dt <= 0:
        raise InvalidParameterError("dt must be > 0")

    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    require_normalized(psi)
    occ, stag, pair = hamiltonian_terms(geom, c6)

    sample_times = np.linspace(t0, t1, n_samples)
    records = {}

    def record(t, state):
        if sampler is None:
            return
        for name, value in sampler(t, state).items():
            records.setdefault(name, []).append(float(value))

    total = t1 - t0
    v = psi
    record(sample_times[0], v)
    for i in range(1, n_samples):
        seg0, seg1 = sample_times[i - 1], sample_times[i]
        n_sub = max(1, int(np.ceil((seg1 - seg0) / dt - 1e-12)))
        h = (seg1 - seg0) / n_sub
        for s in range(n_sub):
            tm = seg0 + (s + 0.5) * h
            omega, dg, dl = sched.values_at(tm)
            ham = HamiltonianOperator(geom.n_s, pair - dg * occ - dl * stag,
                                      omega / 2.0)
            v = evolve_constant(ham, v, h, tol=tol * h / total,
                                krylov_dim=krylov_dim)
        record(seg1, v)

    traj = Trajectory(times=sample_times,
                      observables={k: np.asarray(col) for k, col in records.items()},
                      meta={"t0": t0, "t1": t1, "dt": dt, "tol": tol,
                            "n_samples": n_samples})
    return traj, v
