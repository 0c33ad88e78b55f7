"""End-to-end experiment drivers: decay quench, rate scalings, decay-rate
phase diagram, and the annealing ramp, plus a deterministic sweep harness.

Every driver is a pure function of its spec; optional file emission goes
through fvdsim.output.  Sweeps may run points concurrently but results are
always assembled in grid order, so outputs are identical for any worker
count.
"""

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import (critical_bubble_size, fit_exponential,
                       fit_rate_scaling, hopping_energy_estimate,
                       savitzky_golay, select_fit_window)
from .errors import (FitDomainError, FvdsimError, InvalidParameterError,
                     WindowNotFoundError)
from .evolution import (Trajectory, evolve_constant, evolve_schedule,
                        z2_minus_state, z2_plus_state)
from .lattice import DriveSchedule
from .observables import bubble_values, neel_values
from .spectrum import gap_e20
from . import output


@dataclass(frozen=True)
class ExperimentSpec:
    """Parameters of one experiment run (see the drivers for which apply)."""

    kind: str
    params: object
    horizon_cycles: float = 1.0
    n_samples: int = 401
    fit_interval_cycles: tuple = (0.1, 0.4)
    sg_window: int = 21
    sg_order: int = 3
    beta_start: float = 2.0
    beta_stop: float = -1.5
    tau: float = 16.0
    anneal_samples: int = 600
    tol: float = 1e-9
    anneal_tol: float = 1e-7
    krylov_dim: int = 16
    anneal_krylov_dim: int = 24
    dt_max: float = 0.005

    def __post_init__(self):
        if self.kind not in ("decay", "anneal", "gap_scan", "rate_diagram"):
            raise InvalidParameterError(f"unknown experiment kind {self.kind!r}")
        if self.kind == "decay":
            beta = self.params.beta
            if not 0.0 < beta:
                raise InvalidParameterError("decay requires beta > 0")
            if self.params.alpha <= 0:
                raise InvalidParameterError("decay requires alpha > 0")
        if self.kind == "anneal":
            if self.tau <= 0:
                raise InvalidParameterError("anneal requires tau > 0")
            if not self.beta_start > self.beta_stop:
                raise InvalidParameterError("anneal requires beta_start > beta_stop")


@dataclass
class DecayResult:
    trajectory: Trajectory
    fit: object            # ExpFit or None when the window search failed
    fit_error: str
    diagnostics: dict
    params: object


@dataclass
class SweepResult:
    """One record (or failure marker) per grid point, in grid order."""

    axes: dict
    records: list
    failures: list = field(default_factory=list)

    def values(self, key):
        return [None if r is None else r[key] for r in self.records]


def _observable_sampler(n_s):
    neel_tab = neel_values(n_s)
    s1 = bubble_values(n_s, 1, "wrap")
    s2 = bubble_values(n_s, 2, "wrap")
    sns = bubble_values(n_s, n_s, pattern="anti-initial")
    z2p = z2_plus_state(n_s)
    z2m = z2_minus_state(n_s)

    def sample(t, psi):
        prob = np.abs(psi) ** 2
        return {
            "neel": float(prob @ neel_tab),
            "sigma_1": float(prob @ s1),
            "sigma_2": float(prob @ s2),
            "sigma_ns": float(prob @ sns),
            "fidelity_z2p": float(np.abs(np.vdot(z2p, psi)) ** 2),
            "fidelity_z2m": float(np.abs(np.vdot(z2m, psi)) ** 2),
            "fidelity_zero": float(np.abs(psi[0]) ** 2),
        }

    return sample


def decay_conditions(params):
    """Regime flags for the decay parameter requirements."""
    beta = abs(params.beta)
    return {
        "critical_bubble_size": critical_bubble_size(params.delta_glob, params.delta_loc),
        "thin_wall": beta < 1.0,                      # |Delta_loc| < Delta_glob
        "supercritical_possible": beta * params.n_s > 1.0,  # Delta_glob < |Delta_loc| n_s
        "hopping_energy_estimate": hopping_energy_estimate(
            params.omega, params.delta_glob, params.v1) if params.delta_glob > 0 else None,
    }


def fit_decay_curve(times, neel, omega, interval_cycles=(0.1, 0.4),
                    sg_window=21, sg_order=3):
    """Smoothed 10-90% window selection followed by a raw log-domain fit.

    The window is truncated just before the first non-positive raw sample,
    keeping the log-domain fit valid.
    """
    smoothed = savitzky_golay(neel, sg_window, sg_order)
    cycle = 2.0 * np.pi / omega
    t_a, t_b = select_fit_window(times, smoothed,
                                 interval_cycles[0] * cycle,
                                 interval_cycles[1] * cycle)
    idx = np.where((times >= t_a) & (times <= t_b))[0]
    bad = idx[neel[idx] <= 0.0]
    if len(bad):
        if bad[0] == idx[0]:
            raise FitDomainError("first window sample already non-positive")
        t_b = float(times[bad[0] - 1])
    return fit_exponential(times, neel, (t_a, t_b))


def run_decay(spec, out_dir=None, formats=("csv", "json")):
    """Quench from |1010...10> under constant drives, fit the Neel decay.

    A failed window search is reported in the result (and the trajectory is
    still emitted); any other error propagates.
    """
    if spec.kind != "decay":
        raise InvalidParameterError(f"run_decay needs kind='decay', got {spec.kind!r}")
    p = spec.params
    horizon = spec.horizon_cycles * 2.0 * np.pi / p.omega
    times = np.linspace(0.0, horizon, spec.n_samples)
    sampler = _observable_sampler(p.n_s)
    ham = p.hamiltonian()

    psi = z2_plus_state(p.n_s)
    records = {k: [v] for k, v in sampler(0.0, psi).items()}
    for i in range(1, spec.n_samples):
        psi = evolve_constant(ham, psi, times[i] - times[i - 1],
                              tol=spec.tol / spec.n_samples,
                              krylov_dim=spec.krylov_dim)
        for k, v in sampler(times[i], psi).items():
            records[k].append(v)

    traj = Trajectory(times=times,
                      observables={k: np.asarray(v) for k, v in records.items()},
                      meta={"kind": "decay", "horizon_cycles": spec.horizon_cycles,
                            "alpha": p.alpha, "beta": p.beta,
                            "rb_over_a": p.rb_over_a, "n_s": p.n_s})

    fit = None
    fit_error = ""
    try:
        fit = fit_decay_curve(times, traj.column("neel"), p.omega,
                              spec.fit_interval_cycles, spec.sg_window,
                              spec.sg_order)
    except (WindowNotFoundError, FitDomainError) as exc:
        fit_error = str(exc)

    result = DecayResult(trajectory=traj, fit=fit, fit_error=fit_error,
                         diagnostics=decay_conditions(p), params=p)
    if out_dir is not None:
        if "csv" in formats:
            output.write_trajectory_csv(os.path.join(out_dir, "trajectory.csv"),
                                        traj, p.omega)
        if "json" in formats:
            payload = {"kind": "decay", "fit": fit.to_dict() if fit else None,
                       "fit_error": fit_error, "diagnostics": result.diagnostics,
                       "inputs_hash": output.content_hash(traj.meta)}
            output.write_json(os.path.join(out_dir, "fits.json"), payload)
    return result


def run_sweep(points, worker, parallelism=1):
    """Deterministic map over grid points with per-point failure isolation.

    Results are collected in the order of `points` whatever the worker
    count; one failing point never aborts the sweep.
    """
    points = list(points)
    if not points:
        raise InvalidParameterError("empty sweep grid")
    parallelism = max(1, int(parallelism))

    def guarded(pt):
        try:
            return worker(pt), None
        except FvdsimError as exc:
            return None, f"{type(exc).__name__}: {exc}"

    if parallelism == 1:
        outcomes = [guarded(pt) for pt in points]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(guarded, points))

    records, failures = [], []
    for i, (rec, err) in enumerate(outcomes):
        records.append(rec)
        if err is not None:
            failures.append((i, err))
    return records, failures


def _gamma_worker(spec):
    def worker(params):
        res = run_decay(replace(spec, kind="decay", params=params))
        if res.fit is None:
            raise WindowNotFoundError(res.fit_error)
        return {"gamma": res.fit.gamma, "r_squared": res.fit.r_squared,
                "window": res.fit.window, "diagnostics": res.diagnostics}
    return worker


def run_rate_vs_confinement(spec, beta_values, parallelism=1,
                            fit_window_betainv=(2.5, 4.0)):
    """gamma(beta) sweep and the confinement-scaling fit over 1/beta.

    Only points with 1/beta inside fit_window_betainv enter the fit; fewer
    than 3 surviving points yields a warning and no fit.
    """
    beta_values = [float(b) for b in beta_values]
    if len(beta_values) < 3:
        raise InvalidParameterError("need >= 3 beta values")
    if any(not 0 < b < 1 for b in beta_values):
        raise InvalidParameterError("decay sweep needs beta in (0, 1)")
    base = spec.params
    points = [base.replace(delta_loc=b * base.delta_glob) for b in beta_values]
    records, failures = run_sweep(points, _gamma_worker(spec), parallelism)

    for rec, beta in zip(records, beta_values):
        if rec is not None:
            rec["beta"] = beta
            rec["beta_inv"] = 1.0 / beta
            rec["gamma_over_omega"] = rec["gamma"] / base.omega

    lo, hi = fit_window_betainv
    fit_pts = [(r["beta_inv"], r["gamma"]) for r in records
               if r is not None and lo - 1e-9 <= r["beta_inv"] <= hi + 1e-9]
    fit = None
    if len(fit_pts) >= 3:
        fit = fit_rate_scaling(fit_pts, "confinement")
    else:
        warnings.warn(f"confinement fit skipped: only {len(fit_pts)} usable points")
    sweep = SweepResult(axes={"beta": beta_values}, records=records,
                        failures=failures)
    return sweep, fit


def run_rate_vs_gap(spec, rba_values, parallelism=1):
    """gamma at the spec's beta vs the beta = 0 gap, scanned over R_b/a."""
    rba_values = [float(r) for r in rba_values]
    if len(rba_values) < 3:
        raise InvalidParameterError("need >= 3 R_b/a values")
    base = spec.params

    def make_params(rba):
        return base.from_dimensionless(
            n_s=base.n_s, rb_over_a=rba, alpha=base.alpha, beta=base.beta,
            omega_mhz=base.omega / (2 * np.pi), a=base.a,
            geometry_mode=base.geometry_mode)

    def worker(rba):
        params = make_params(rba)
        gap = gap_e20(params)
        res = run_decay(replace(spec, kind="decay", params=params))
        if res.fit is None:
            raise WindowNotFoundError(res.fit_error)
        return {"rb_over_a": rba, "gap": gap, "gap_over_omega": gap / base.omega,
                "gamma": res.fit.gamma, "gamma_over_omega": res.fit.gamma / base.omega,
                "r_squared": res.fit.r_squared}

    records, failures = run_sweep(rba_values, worker, parallelism)
    fit_pts = [(r["gap_over_omega"], r["gamma"]) for r in records if r is not None]
    fit = fit_rate_scaling(fit_pts, "gap") if len(fit_pts) >= 3 else None
    if fit is None:
        warnings.warn("gap fit skipped: fewer than 3 usable points")
    sweep = SweepResult(axes={"rb_over_a": rba_values}, records=records,
                        failures=failures)
    return sweep, fit


def run_q_vs_alpha(spec, alpha_values, rba_values, parallelism=1):
    """Gap-scaling exponent q at several alpha, fitted to q = u (alpha0 - alpha)."""
    alpha_values = [float(a) for a in alpha_values]
    if len(alpha_values) < 3:
        raise InvalidParameterError("need >= 3 alpha values")
    base = spec.params
    q_points = []
    per_alpha = []
    for alpha in alpha_values:
        params = base.from_dimensionless(
            n_s=base.n_s, rb_over_a=base.rb_over_a, alpha=alpha, beta=base.beta,
            omega_mhz=base.omega / (2 * np.pi), a=base.a,
            geometry_mode=base.geometry_mode)
        sweep, fit = run_rate_vs_gap(replace(spec, params=params), rba_values,
                                     parallelism)
        per_alpha.append((alpha, sweep, fit))
        if fit is not None:
            q_points.append((alpha, fit.params[1]))
    qfit = fit_rate_scaling(q_points, "q_vs_alpha") if len(q_points) >= 3 else None
    return per_alpha, qfit


def run_rate_diagram(spec, alpha_values, rba_values, parallelism=1):
    """Decay rate over an (alpha, R_b/a) grid at the spec's beta.

    The matrix layout matches the ground-state phase diagram (rows constant
    R_b/a) for overlay.
    """
    alpha_values = [float(a) for a in alpha_values]
    rba_values = [float(r) for r in rba_values]
    if not alpha_values or not rba_values:
        raise InvalidParameterError("empty rate-diagram grid")
    base = spec.params
    grid = [(r, c) for r in range(len(rba_values)) for c in range(len(alpha_values))]

    def worker(point):
        r, c = point
        params = base.from_dimensionless(
            n_s=base.n_s, rb_over_a=rba_values[r], alpha=alpha_values[c],
            beta=base.beta, omega_mhz=base.omega / (2 * np.pi), a=base.a,
            geometry_mode=base.geometry_mode)
        res = run_decay(replace(spec, kind="decay", params=params))
        if res.fit is None:
            raise WindowNotFoundError(res.fit_error)
        return {"gamma": res.fit.gamma, "gamma_over_omega": res.fit.gamma / base.omega}

    records, failures = run_sweep(grid, worker, parallelism)
    values = np.full((len(rba_values), len(alpha_values)), np.nan)
    for (r, c), rec in zip(grid, records):
        if rec is not None:
            values[r, c] = rec["gamma_over_omega"]
    sweep = SweepResult(axes={"alpha": alpha_values, "rb_over_a": rba_values},
                        records=records, failures=failures)
    return sweep, values


def run_anneal(spec, out_dir=None, formats=("csv", "json")):
    """Linear beta ramp from |1010...10>, sampling the nucleation observables."""
    if spec.kind != "anneal":
        raise InvalidParameterError(f"run_anneal needs kind='anneal', got {spec.kind!r}")
    p = spec.params
    sched = DriveSchedule.beta_ramp(p, spec.beta_start, spec.beta_stop, spec.tau)
    t0, t1 = sched.domain
    dt = min(spec.tau / 400.0, spec.dt_max)
    sampler = _observable_sampler(p.n_s)
    geom = p.geometry()
    traj, _ = evolve_schedule(geom, p.c6, sched, z2_plus_state(p.n_s), t0, t1,
                              dt=dt, tol=spec.anneal_tol, sampler=sampler,
                              n_samples=spec.anneal_samples,
                              krylov_dim=spec.anneal_krylov_dim)
    beta_t = spec.beta_start - traj.times / spec.tau
    traj.observables["delta_loc_over_v1"] = beta_t * p.delta_glob / p.v1
    traj.meta.update({"kind": "anneal", "beta_start": spec.beta_start,
                      "beta_stop": spec.beta_stop, "tau": spec.tau,
                      "alpha": p.alpha, "rb_over_a": p.rb_over_a,
                      "n_s": p.n_s, "v1": p.v1})
    if out_dir is not None and "csv" in formats:
        output.write_trajectory_csv(os.path.join(out_dir, "trajectory.csv"),
                                    traj, p.omega)
    return traj


def find_cliff_midpoints(traj, sg_window=21, sg_order=3):
    """Half-crossing midpoints of the two Neel cliffs, in Delta_loc/V1 units.

    The condensation cliff is searched where Delta_loc/V1 > 0.5 and the
    decondensation cliff where Delta_loc/V1 < -0.5; within each region the
    plateau levels are the medians of the smoothed curve over the leading
    and trailing 15% of samples, and the midpoint is where the curve first
    crosses halfway between them.  (A steepest-descent estimator wanders by
    more than 0.1 with the smoothing window because the cliffs carry
    oscillatory substructure; the half-crossing is stable.)
    """
    x = traj.column("delta_loc_over_v1")
    neel = savitzky_golay(traj.column("neel"), sg_window, sg_order)

    def half_crossing(mask):
        if not np.any(mask):
            raise InvalidParameterError("cliff search region is empty")
        idx = np.where(mask)[0]
        edge = max(2, int(0.15 * len(idx)))
        hi = float(np.median(neel[idx[:edge]]))
        lo = float(np.median(neel[idx[-edge:]]))
        level = 0.5 * (hi + lo)
        for i in idx[1:]:
            if neel[i] < level <= neel[i - 1]:
                frac = (neel[i - 1] - level) / (neel[i - 1] - neel[i])
                return float(x[i - 1] + frac * (x[i] - x[i - 1]))
        raise InvalidParameterError("no cliff crossing found in the region")

    return half_crossing(x > 0.5), half_crossing(x < -0.5)
