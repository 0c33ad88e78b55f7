"""Closed-form three-level model of the two-atom annealing ramp.

In the nearest-neighbour blockade subspace {|00>, |01>, |10>} the chain
reduces to

    H_r = diag(Delta_glob, -Delta_loc, +Delta_loc) + (Omega/2) couplings
          |00><01| + |00><10| + h.c.

(an overall shift of Delta_glob is included so the all-ground state sits at
Delta_glob).  Under the linear ramp beta(t) = beta_start - t/tau the top
eigenvalue track E3 shows Landau-Zener avoided crossings against E2 at
t = (beta_start -+ 1) tau, i.e. Delta_loc = +-Delta_glob, and E1/E2 meet at
t = beta_start tau where Delta_loc = 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

_BASIS = ("00", "01", "10")


def restricted_hamiltonian(omega, delta_glob, delta_loc):
    """3x3 blockade-subspace Hamiltonian in the basis (|00>, |01>, |10>)."""
    return np.array([
        [delta_glob, omega / 2.0, omega / 2.0],
        [omega / 2.0, -delta_loc, 0.0],
        [omega / 2.0, 0.0, +delta_loc],
    ])


def lz_crossing_times(beta_start, tau):
    """(t-, t0, t+) of the avoided crossings under beta(t) = beta_start - t/tau.

    At t- = (beta_start - 1) tau the local detuning equals +Delta_glob, at
    t+ = (beta_start + 1) tau it equals -Delta_glob, and at t0 it vanishes.
    """
    if tau <= 0:
        raise InvalidParameterError(f"tau must be > 0, got {tau}")
    return ((beta_start - 1.0) * tau, beta_start * tau, (beta_start + 1.0) * tau)


def _fixed_phase_eigh(h):
    """eigh with the |00> component made non-negative (fallback |01>).

    H_r is real symmetric, so the eigenvectors are real up to sign.
    """
    evals, evecs = np.linalg.eigh(h)
    for i in range(evecs.shape[1]):
        anchor = evecs[0, i] if abs(evecs[0, i]) > 1e-12 else evecs[1, i]
        if anchor < 0:
            evecs[:, i] = -evecs[:, i]
    return evals, evecs


def eigenvalues_vs_time(omega, delta_glob, beta_start, tau, times):
    """Instantaneous eigenvalues E1 <= E2 <= E3 along the ramp.

    Sorted ascending per sample; the avoided crossings keep finite gaps, so
    the sorted order is itself continuous in t.
    """
    times = np.asarray(times, dtype=float)
    out = np.empty((len(times), 3))
    for i, t in enumerate(times):
        beta = beta_start - t / tau
        out[i] = np.linalg.eigvalsh(restricted_hamiltonian(omega, delta_glob,
                                                           beta * delta_glob))
    return out


@dataclass
class TwoAtomTrajectory:
    """Sampled ramp evolution of the restricted three-level state."""

    times: np.ndarray
    coefficients: np.ndarray   # (n, 3) complex amplitudes (c_00, c_01, c_10)
    eigenvalues: np.ndarray    # (n, 3) instantaneous eigenvalues, ascending
    populations: np.ndarray    # (n, 3) |c|^2 in basis order
    p_false_vacuum: np.ndarray  # (n,) overlap with the instantaneous top eigenstate
    meta: dict

    def basis_labels(self):
        return _BASIS


def evolve_two_atom(omega=1.0, delta_glob=2.0, beta_start=2.0, tau=8.0,
                    t_end=None, n_samples=601, dt=None):
    """Integrate the ramped three-level Schrodinger equation from |10>.

    Same piecewise-constant midpoint stepper contract as the full evolution
    module, realized with exact 3x3 exponentials.  The default horizon
    (beta_start + 2) tau covers both Landau-Zener crossings plus settling.
    """
    if tau <= 0:
        raise InvalidParameterError(f"tau must be > 0, got {tau}")
    if t_end is None:
        t_end = (beta_start + 2.0) * tau
    if t_end <= 0:
        raise InvalidParameterError(f"t_end must be > 0, got {t_end}")
    if dt is None:
        dt = min(tau / 400.0, 0.005 * tau if omega <= 10 else 0.005)
        dt = min(dt, t_end / (4 * (n_samples - 1)))

    times = np.linspace(0.0, t_end, n_samples)
    psi = np.zeros(3, dtype=np.complex128)
    psi[2] = 1.0  # |10>: site 1 excited, the initial Z2 product state

    coeffs = np.empty((n_samples, 3), dtype=np.complex128)
    evals_out = np.empty((n_samples, 3))
    p_fv = np.empty(n_samples)

    def record(i, t, state):
        h = restricted_hamiltonian(omega, delta_glob,
                                   (beta_start - t / tau) * delta_glob)
        evals, evecs = _fixed_phase_eigh(h)
        coeffs[i] = state
        evals_out[i] = evals
        p_fv[i] = abs(np.vdot(evecs[:, 2], state)) ** 2

    record(0, 0.0, psi)
    for i in range(1, n_samples):
        seg0, seg1 = times[i - 1], times[i]
        n_sub = max(1, int(np.ceil((seg1 - seg0) / dt - 1e-12)))
        h_step = (seg1 - seg0) / n_sub
        for s in range(n_sub):
            tm = seg0 + (s + 0.5) * h_step
            hmat = restricted_hamiltonian(omega, delta_glob,
                                          (beta_start - tm / tau) * delta_glob)
            evals, evecs = np.linalg.eigh(hmat)
            psi = evecs @ (np.exp(-1j * evals * h_step) * (evecs.T @ psi))
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > 1e-10:
            psi = psi / nrm
        record(i, seg1, psi)

    return TwoAtomTrajectory(
        times=times,
        coefficients=coeffs,
        eigenvalues=evals_out,
        populations=np.abs(coeffs) ** 2,
        p_false_vacuum=p_fv,
        meta={"omega": omega, "delta_glob": delta_glob,
              "beta_start": beta_start, "tau": tau, "t_end": t_end, "dt": dt},
    )
