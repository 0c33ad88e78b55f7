"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  The heavy runs (A4-A7) use the production drivers at n_s = 16; the
whole suite is sized for a laptop-scale machine.

Three clauses are known to fail and are asserted faithfully anyway:

* A6's final clause (u < 0): the measured gap-scaling exponent q decreases
  with alpha, so under the stated model q = u (alpha0 - alpha) the fitted
  u is positive.  Note the quoted expectations q > 0 (asserted earlier
  in A6), u < 0, and alpha0 > alpha are mutually inconsistent under that
  model for any data.
* A7's last clause (sigma_ns >= 0.8 at ramp end): the full-Hilbert-space
  dynamics at n_s = 16, tau = 16 leave a per-site defect density of a few
  percent after the decondensation cliff, capping the perfect-order
  projector at 0.48.  The value is bit-stable under dt and tolerance
  refinement and decreases for slower ramps, so it is physical for this
  model, not numerical.
* A8's first clause (p(0) > 0.97): the exact overlap of |10> with the top
  eigenstate of the stated restricted Hamiltonian at Omega = 1,
  Delta_glob = 2, beta_start = 2 is 0.94562.  Values above 0.97 require
  Delta_glob near 5.
"""

import json
import os
import time

import numpy as np
import pytest

from fvdsim.analysis import ising_reference_exponent
from fvdsim.cli import main as cli_main
from fvdsim.drivers import (ExperimentSpec, find_cliff_midpoints, run_anneal,
                            run_decay, run_q_vs_alpha,
                            run_rate_vs_confinement, run_rate_vs_gap)
from fvdsim.evolution import (_krylov_substep, dense_expm_oracle,
                              evolve_constant, random_state, z2_plus_state)
from fvdsim.lattice import DriveSchedule, PhysicalParams, PiecewiseLinear
from fvdsim.protocol import (HardwareConstraints, layout_decay_protocol,
                             validate)
from fvdsim.spectrum import lowest_eigenpairs
from fvdsim.twoatom import (eigenvalues_vs_time, evolve_two_atom,
                            lz_crossing_times)

OMEGA = 2 * np.pi


def report(criterion, ok, detail):
    print(f"\n[{criterion}] {'PASS' if ok else 'FAIL'}: {detail}", flush=True)


def params16(rb=1.2, alpha=2.5, beta=0.3):
    return PhysicalParams.from_dimensionless(16, rb, alpha, beta)


def test_a1_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.time()
    worst = 0.0
    for n_s in (2, 4, 6, 8):
        for _ in range(5):
            p = PhysicalParams.from_dimensionless(
                n_s, 1.0 + rng.random(), 3.0 * rng.random(),
                float(rng.uniform(-0.5, 0.5)))
            ham = p.hamiltonian()
            psi = random_state(n_s, rng)
            t = float(rng.uniform(0.2, 1.0))
            err = np.abs(evolve_constant(ham, psi, t)
                         - dense_expm_oracle(ham, psi, t)).max()
            worst = max(worst, err)
    elapsed = time.time() - t0
    ok = worst < 1e-8 and elapsed < 60.0
    report("A1", ok, f"20 sets, max amplitude error {worst:.2e} "
                     f"(< 1e-8), runtime {elapsed:.1f} s (< 60 s)")
    assert worst < 1e-8
    assert elapsed < 60.0


def test_a2_unitarity_energy_conservation():
    p = params16()
    ham = p.hamiltonian()
    horizon = 2 * np.pi / p.omega  # Omega t / 2 pi = 1
    steps = 400
    dt = horizon / steps
    psi = z2_plus_state(16)
    e0 = ham.expectation(psi)
    tol = 1e-10
    max_energy_drift = 0.0
    # raw propagation without intermediate renormalization
    for _ in range(steps):
        out, _ = _krylov_substep(ham, psi, dt, 16, tol * dt / horizon)
        assert out is not None
        psi = out
        max_energy_drift = max(max_energy_drift,
                               abs(ham.expectation(psi / np.linalg.norm(psi)) - e0))
    norm_drift = abs(np.linalg.norm(psi) - 1.0)
    diag_norm = np.abs(ham.diag).max()
    ok = norm_drift < 1e-8 and max_energy_drift < 1e-6 * diag_norm
    report("A2", ok, f"norm drift {norm_drift:.2e} (< 1e-8), <H> drift "
                     f"{max_energy_drift:.2e} (< {1e-6 * diag_norm:.2e})")
    assert norm_drift < 1e-8
    assert max_energy_drift < 1e-6 * diag_norm


def test_a3_eigensolver():
    rng = np.random.default_rng(7)
    worst = 0.0
    for n_s in (8, 10):
        p = PhysicalParams.from_dimensionless(
            n_s, 1.1 + 0.3 * rng.random(), 2.0 + rng.random(), 0.0)
        ham = p.hamiltonian()
        got = lowest_eigenpairs(ham, k=3).eigenvalues
        want = np.sort(np.linalg.eigvalsh(ham.dense()))[:3]
        worst = max(worst, float(np.abs(got - want).max() / max(1.0, np.abs(want).max())))
    # quasi-degenerate Z2 pair below a finite gap; the splitting is a
    # finite-size tunneling amplitude, so this clause runs at the desk-scale
    # limit n_s = 20 where it drops below 1e-4 Omega
    p20 = PhysicalParams.from_dimensionless(20, 1.2, 3.0, 0.0)
    evals = lowest_eigenpairs(p20.hamiltonian(), k=3).eigenvalues
    split = (evals[1] - evals[0]) / p20.omega
    gap = (evals[2] - evals[0]) / p20.omega
    ok = worst < 1e-8 and split < 1e-4 and gap > 0.1
    report("A3", ok, f"dense-match rel err {worst:.2e} (< 1e-8); n_s=20: "
                     f"(E1-E0)/Omega {split:.2e} (< 1e-4), gap/Omega {gap:.3f} (> 0.1)")
    assert worst < 1e-8
    assert split < 1e-4
    assert gap > 0.1


def test_a4_decay_curves():
    gammas = {}
    cycle = 2 * np.pi / OMEGA
    for beta in (0.1, 0.3, 0.5):
        t0 = time.time()
        res = run_decay(ExperimentSpec(kind="decay", params=params16(beta=beta)))
        per_curve = time.time() - t0
        assert per_curve < 900.0, f"curve took {per_curve:.0f} s"
        assert res.fit is not None, res.fit_error
        t_a, t_b = res.fit.window
        assert 0.1 * cycle - 1e-9 <= t_a < t_b <= 0.4 * cycle + 1e-9
        assert res.fit.r_squared >= 0.9
        gammas[beta] = res.fit.gamma / OMEGA
    increasing = gammas[0.1] < gammas[0.3] < gammas[0.5]
    report("A4", increasing,
           "gamma/Omega = " + ", ".join(f"{b}: {g:.4f}" for b, g in gammas.items())
           + " (strictly increasing, windows in [0.1, 0.4] cycles, r^2 >= 0.9)")
    assert increasing


def test_a5_confinement_scaling():
    spec = ExperimentSpec(kind="decay", params=params16(beta=0.3))
    betas = [0.4, 0.3, 0.25]  # beta^-1 = 2.5, 10/3, 4.0
    _, fit = run_rate_vs_confinement(spec, betas, parallelism=1)
    assert fit is not None
    b, p = fit.params
    ok = fit.r_squared >= 0.95 and p > 0
    report("A5", ok, f"ln gamma linear in 1/beta: r^2 = {fit.r_squared:.4f} "
                     f"(>= 0.95), p = {p:.4f} (> 0), b = {b:.4f}")
    assert fit.r_squared >= 0.95
    assert p > 0


@pytest.fixture(scope="module")
def gap_scaling_results():
    rbas = [1.14, 1.18, 1.22, 1.26]
    spec = ExperimentSpec(kind="decay", params=params16(alpha=2.5, beta=0.25))
    per_alpha, qfit = run_q_vs_alpha(spec, [2.5, 3.0, 3.5], rbas, parallelism=1)
    return per_alpha, qfit


def test_a6_gap_scaling(gap_scaling_results):
    per_alpha, qfit = gap_scaling_results
    alpha, sweep, fit = per_alpha[0]
    assert alpha == 2.5 and fit is not None
    k, q = fit.params
    first_ok = fit.r_squared >= 0.9 and q > 0
    qs = {a: f.params[1] for a, _, f in per_alpha if f is not None}
    assert qfit is not None
    u, alpha0 = qfit.params
    u_ok = u < 0
    report("A6", first_ok and u_ok,
           f"alpha=2.5: r^2 = {fit.r_squared:.4f} (>= 0.9), q = {q:.4f} (> 0); "
           f"q(alpha) = {({a: round(v, 4) for a, v in qs.items()})}, "
           f"fitted u = {u:.4f} (criterion: u < 0), alpha0 = {alpha0:.3f}")
    assert first_ok
    # Faithful assertion of the stated criterion.  The measured q decreases
    # with alpha, so u comes out positive and this clause fails; see the
    # module docstring and the decisions ledger.
    assert u_ok, (f"u = {u:.4f} >= 0: measured q decreases with alpha "
                  f"({qs}), so q = u(alpha0 - alpha) fits with u > 0")


@pytest.fixture(scope="module")
def anneal_trajectory():
    p = PhysicalParams.from_dimensionless(16, 1.2, 5.0, 2.0)
    spec = ExperimentSpec(kind="anneal", params=p, beta_start=2.0,
                          beta_stop=-1.5, tau=16.0)
    return run_anneal(spec)


def test_a7_annealing(anneal_trajectory):
    traj = anneal_trajectory
    neel = traj.column("neel")
    x = traj.column("delta_loc_over_v1")
    first, second = find_cliff_midpoints(traj)
    mid = int(np.argmin(np.abs(x - 0.15)))  # middle of the all-zero plateau
    fid0 = traj.column("fidelity_zero")[mid]
    fid_p = traj.column("fidelity_z2p")[mid]
    fid_m = traj.column("fidelity_z2m")[mid]
    sigma_ns_end = traj.column("sigma_ns")[-1]

    checks = {
        "N(0) > 0.9": neel[0] > 0.9,
        "N(end) < -0.9": neel[-1] < -0.9,
        "first cliff in [1.5, 2.1]": 1.5 <= first <= 2.1,
        "second cliff in [-2.1, -1.1]": -2.1 <= second <= -1.1,
        "mid-plateau |0...0> dominant": fid0 > fid_p and fid0 > fid_m,
        # faithful assertion; measured 0.48, converged in dt and tol, see
        # the module docstring and the decisions ledger
        "sigma_ns(end) >= 0.8": sigma_ns_end >= 0.8,
    }
    report("A7", all(checks.values()),
           f"N {neel[0]:.3f} -> {neel[-1]:.3f}; cliffs {first:.3f}, {second:.3f}; "
           f"mid-plateau fid0 {fid0:.3f} vs ({fid_p:.3f}, {fid_m:.3f}); "
           f"sigma_ns(end) {sigma_ns_end:.3f}")
    for name, ok in checks.items():
        assert ok, name


def test_a8_two_atom_model():
    traj = evolve_two_atom(omega=1.0, delta_glob=2.0, beta_start=2.0, tau=8.0)
    p0 = traj.p_false_vacuum[0]
    final_p01 = traj.populations[-1, 1]

    # minimum-gap times at figure resolution (101 samples over the full
    # horizon); the finite-Omega level repulsion shifts the true minima
    # about 0.23 time units off the ideal crossing times
    times = np.linspace(0.0, 32.0, 101)
    evals = eigenvalues_vs_time(1.0, 2.0, 2.0, 8.0, times)
    step = times[1] - times[0]
    gap23 = evals[:, 2] - evals[:, 1]
    t_minus, _, t_plus = lz_crossing_times(2.0, 8.0)
    gaps_ok = True
    measured = []
    for target in (t_minus, t_plus):
        sel = np.abs(times - target) < 3.0
        local = times[sel][np.argmin(gap23[sel])]
        measured.append(local)
        gaps_ok = gaps_ok and abs(local - target) <= step + 1e-12

    checks = {
        "p(0) > 0.97": p0 > 0.97,
        "gap minima within one grid step": gaps_ok,
        "final |c01|^2 > 0.9": final_p01 > 0.9,
    }
    report("A8", all(checks.values()),
           f"p(0) = {p0:.5f} (criterion > 0.97); gap minima at "
           f"{measured[0]:.2f}, {measured[1]:.2f} vs {t_minus}, {t_plus} "
           f"(step {step:.2f}); final |c01|^2 = {final_p01:.4f} (> 0.9)")
    assert checks["gap minima within one grid step"]
    assert checks["final |c01|^2 > 0.9"]
    # Faithful assertion of the quoted overlap; exact value 0.94562 at the
    # stated parameters, see the module docstring and the decisions ledger.
    assert checks["p(0) > 0.97"], f"p(0) = {p0:.5f} <= 0.97 at the stated parameters"


def test_a9_protocol_geometry():
    layout = layout_decay_protocol(16, a=8.27, b=10.0)
    d_x, d_y = layout.footprint
    in_range = 64.7 <= d_x <= 64.9 and 48.1 <= d_y <= 48.3

    big = layout_decay_protocol(28, a=8.27, b=10.0, n_y=9)
    times = np.array([0.0, 0.5, 2.0, 2.05, 4.0])
    sched = DriveSchedule(
        n_s=16,
        omega_wf=PiecewiseLinear(times, np.array([0.0, OMEGA, OMEGA, OMEGA, OMEGA])),
        delta_glob_wf=PiecewiseLinear(times, np.array([-15.7, -15.7, 15.7, 15.7, 15.7])),
        delta_loc_wf=PiecewiseLinear(times, np.array([0.0, 0.0, 0.0, 4.7, 4.7])))
    base_fov = validate(big, sched)
    upgraded = validate(big, sched, HardwareConstraints().with_upgraded_fov())
    fov_gating = (not base_fov.ok) and upgraded.ok

    step_times = np.array([0.0, 2.0, 2.0 + 1e-6, 4.0])
    quench = DriveSchedule(
        n_s=16,
        omega_wf=PiecewiseLinear(step_times, np.full(4, OMEGA)),
        delta_glob_wf=PiecewiseLinear(step_times, np.array([-15.7, -15.7, 15.7, 15.7])),
        delta_loc_wf=PiecewiseLinear(step_times, np.zeros(4)))
    slew_report = validate(layout, quench)
    slew_fails = any(c.name == "delta_glob_slew" and not c.passed
                     for c in slew_report.checks)

    ok = in_range and fov_gating and slew_fails
    report("A9", ok, f"d_x = {d_x:.2f} um in [64.7, 64.9], d_y = {d_y:.2f} um "
                     f"in [48.1, 48.3]; n_s=28 rejected/accepted by FOV "
                     f"{(not base_fov.ok, upgraded.ok)}; step quench fails slew: {slew_fails}")
    assert in_range
    assert fov_gating
    assert slew_fails


def test_a10_ising_reference_exponent():
    hx = 0.5
    values = {hz: ising_reference_exponent(hx, hz) for hz in (0.05, 0.1, 0.2)}
    products = [v * hz for hz, v in values.items()]
    spread = (max(products) - min(products)) / max(products)

    phi0 = abs(np.log(hx))
    nodes, weights = np.polynomial.legendre.leggauss(200)
    umax = np.sqrt(phi0)
    u = 0.5 * umax * (nodes + 1.0)
    w = 0.5 * umax * weights
    f = np.sqrt(np.maximum(1 + hx**2 - 2 * hx * np.cosh(phi0 - u**2), 0.0)) * 2 * u
    oracle = 2.0 * np.sum(w * f) / (0.1 * (1 - hx**2) ** 0.125)
    rel = abs(values[0.1] - oracle) / oracle

    ok = spread < 1e-12 and rel < 1e-8
    report("A10", ok, f"1/|h_z| scaling spread {spread:.2e} (< 1e-12); "
                      f"dual-quadrature rel diff {rel:.2e} (< 1e-8)")
    assert spread < 1e-12
    assert rel < 1e-8


def test_a11_determinism(tmp_path):
    # the data outputs must match byte for byte across worker counts;
    # meta.json echoes the thread count by contract and is compared
    # modulo that field
    args = ["sweep", "--ns", "6", "--beta", "0.25",
            "--alpha-values", "2.5,3.0", "--rba-values", "1.2,1.26",
            "--n-samples", "81"]
    out1, out8 = str(tmp_path / "t1"), str(tmp_path / "t8")
    assert cli_main(args + ["--threads", "1", "--out", out1]) == 0
    assert cli_main(args + ["--threads", "8", "--out", out8]) == 0

    identical = True
    for name in ("grid.csv", "fits.json"):
        a = open(os.path.join(out1, name), "rb").read()
        b = open(os.path.join(out8, name), "rb").read()
        identical = identical and a == b
    meta1 = json.load(open(os.path.join(out1, "meta.json")))
    meta8 = json.load(open(os.path.join(out8, "meta.json")))
    assert meta1.pop("threads") == 1
    assert meta8.pop("threads") == 8
    for meta in (meta1, meta8):
        meta["config"]["compute"].pop("threads")
        meta["config"]["io"].pop("out_dir")  # differs by construction
        meta.pop("inputs_hash")              # hash of the echoed config
    identical = identical and meta1 == meta8
    report("A11", identical, "grid.csv and fits.json byte-identical at "
                             "threads 1 vs 8; meta identical modulo thread count")
    assert identical
