"""Command-line interface: subcommand dispatch and deterministic output files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 partial sweep failure (some grid points failed, results still written).
"""

import argparse
import os
import sys

import numpy as np

from . import __version__, output
from .config import parse_config
from .drivers import (ExperimentSpec, find_cliff_midpoints, run_anneal,
                      run_decay, run_q_vs_alpha, run_rate_diagram,
                      run_rate_vs_confinement, run_rate_vs_gap)
from .errors import ConfigError, FvdsimError, NumericalFailureError, OutputExistsError
from .lattice import DriveSchedule, PiecewiseLinear
from .protocol import HardwareConstraints, layout_decay_protocol, validate
from .spectrum import ground_phase_diagram
from .twoatom import evolve_two_atom

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4


def _add_common(p):
    p.add_argument("--config", help="TOML or JSON configuration file")
    p.add_argument("--out", help="output directory (overrides io.out_dir)")
    p.add_argument("--force", action="store_true", help="overwrite previous results")
    p.add_argument("--threads", type=int, help="worker pool size")
    p.add_argument("--ns", type=int, dest="n_s", help="site count")
    p.add_argument("--rb-over-a", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--omega-mhz", type=float)
    p.add_argument("--geometry-mode", choices=("chord", "arc"))


def _parse_values(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fvdsim",
        description="False-vacuum decay and nucleation simulator for 1D Rydberg chains")
    parser.add_argument("--version", action="version",
                        version=f"fvdsim {__version__} (python {sys.version.split()[0]})")
    sub = parser.add_subparsers(dest="command", required=True)

    def _add_decay_knobs(p):
        p.add_argument("--horizon-cycles", type=float)
        p.add_argument("--n-samples", type=int)

    p = sub.add_parser("decay", help="quench decay run with exponential fit")
    _add_common(p)
    _add_decay_knobs(p)

    p = sub.add_parser("anneal", help="linear local-detuning ramp")
    _add_common(p)
    p.add_argument("--beta-start", type=float)
    p.add_argument("--beta-stop", type=float)
    p.add_argument("--tau", type=float, help="ramp timescale in us")

    p = sub.add_parser("rate-vs-beta", help="confinement scaling sweep")
    _add_common(p)
    _add_decay_knobs(p)
    p.add_argument("--beta-values", type=_parse_values,
                   help="comma separated, e.g. 0.25,0.3,0.4")

    p = sub.add_parser("rate-vs-gap", help="gap scaling sweep over R_b/a")
    _add_common(p)
    _add_decay_knobs(p)
    p.add_argument("--rba-values", type=_parse_values)
    p.add_argument("--alpha-values", type=_parse_values,
                   help="optional: also fit q(alpha) across these alphas")

    p = sub.add_parser("rate-diagram", help="decay rate over an (alpha, R_b/a) grid")
    _add_common(p)
    _add_decay_knobs(p)
    p.add_argument("--alpha-range", type=_parse_values, help="min,max")
    p.add_argument("--rba-range", type=_parse_values, help="min,max")
    p.add_argument("--resolution", type=int, default=5)

    p = sub.add_parser("sweep", help="generic parallel decay-rate sweep")
    _add_common(p)
    _add_decay_knobs(p)
    p.add_argument("--alpha-values", type=_parse_values)
    p.add_argument("--rba-values", type=_parse_values)

    p = sub.add_parser("phase-diagram", help="ground-state TPCF-Neel diagram at beta=0")
    _add_common(p)
    p.add_argument("--alpha-range", type=_parse_values, default=[0.0, 6.0])
    p.add_argument("--rba-range", type=_parse_values, default=[1.0, 2.0])
    p.add_argument("--resolution", type=int, default=9)

    p = sub.add_parser("two-atom", help="restricted three-level ramp model")
    _add_common(p)
    p.add_argument("--tau", type=float, default=8.0)
    p.add_argument("--beta-start", type=float, default=2.0)
    p.add_argument("--t-end", type=float)
    p.add_argument("--delta-glob", type=float, default=2.0)
    p.add_argument("--omega", type=float, default=1.0)

    p = sub.add_parser("protocol", help="experimental layout and constraint checks")
    _add_common(p)
    p.add_argument("--a", type=float, default=8.27, help="main-chain spacing (um)")
    p.add_argument("--b", type=float, default=10.0, help="main-ancilla distance (um)")
    p.add_argument("--n-y", type=int, help="vertical main-chain atoms per side")
    p.add_argument("--upgraded-fov", action="store_true")
    return parser


def _config_from_args(args, experiment_kind):
    overrides = {"system": {}, "experiment": {"kind": experiment_kind},
                 "io": {}, "compute": {}}
    for key in ("n_s", "rb_over_a", "alpha", "beta", "omega_mhz", "geometry_mode"):
        value = getattr(args, key, None)
        if value is not None:
            overrides["system"][key] = value
    mapping = {"horizon_cycles": "horizon_cycles", "n_samples": "n_samples",
               "beta_start": "beta_start", "beta_stop": "beta_stop",
               "tau": "tau_us", "beta_values": "beta_values",
               "rba_values": "rba_values", "alpha_values": "alpha_values"}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides["experiment"][key] = value
    if getattr(args, "out", None):
        overrides["io"]["out_dir"] = args.out
    if getattr(args, "force", False):
        overrides["io"]["force"] = True
    if getattr(args, "threads", None):
        overrides["compute"]["threads"] = args.threads
    return parse_config(args.config, overrides)


def _spec(cfg, kind):
    e = cfg.experiment
    c = cfg.compute
    return ExperimentSpec(
        kind=kind, params=cfg.physical_params(),
        horizon_cycles=e["horizon_cycles"], n_samples=e["n_samples"],
        fit_interval_cycles=tuple(e["fit_interval_cycles"]),
        sg_window=e["sg_window"], sg_order=e["sg_order"],
        beta_start=e["beta_start"], beta_stop=e["beta_stop"], tau=e["tau_us"],
        anneal_samples=e["anneal_samples"], tol=c["tol"],
        anneal_tol=c["anneal_tol"], krylov_dim=c["krylov_dim"],
        anneal_krylov_dim=c["anneal_krylov_dim"], dt_max=c["dt_max"])


def _finish(cfg, out_dir, extra=None):
    output.write_meta(out_dir, cfg.echo(), cfg.compute["threads"], extra)
    print(f"results written to {out_dir}")


def _grid_axis(rng, resolution):
    if len(rng) != 2 or rng[0] >= rng[1]:
        raise ConfigError(f"range must be min,max with min < max, got {rng}")
    return np.linspace(rng[0], rng[1], resolution)


def cmd_decay(args):
    cfg = _config_from_args(args, "decay")
    out_dir = output.prepare_out_dir(cfg.io["out_dir"], cfg.io["force"])
    result = run_decay(_spec(cfg, "decay"), out_dir=out_dir,
                       formats=tuple(cfg.io["formats"]))
    _finish(cfg, out_dir)
    if result.fit is None:
        print(f"fit window not found: {result.fit_error}")
        return EXIT_NUMERICAL
    print(f"gamma/Omega = {result.fit.gamma / cfg.physical_params().omega:.6f} "
          f"(r^2 = {result.fit.r_squared:.4f})")
    return EXIT_OK


def cmd_anneal(args):
    cfg = _config_from_args(args, "anneal")
    out_dir = output.prepare_out_dir(cfg.io["out_dir"], cfg.io["force"])
    traj = run_anneal(_spec(cfg, "anneal"), out_dir=out_dir,
                      formats=tuple(cfg.io["formats"]))
    first, second = find_cliff_midpoints(traj, cfg.experiment["sg_window"],
                                         cfg.experiment["sg_order"])
    if "json" in cfg.io["formats"]:
        output.write_json(os.path.join(out_dir, "fits.json"),
                          {"kind": "anneal",
                           "cliffs_delta_loc_over_v1": [first, second],
                           "inputs_hash": output.content_hash(traj.meta)})
    _finish(cfg, out_dir)
    print(f"cliff midpoints at Delta_loc/V1 = {first:.3f}, {second:.3f}")
    return EXIT_OK


def cmd_rate_vs_beta(args):
    cfg = _config_from_args(args, "rate_vs_beta")
    betas = cfg.experiment["beta_values"] or [0.25, 0.3, 0.4]
    out_dir = output.prepare_out_dir(cfg.io["out_dir"], cfg.io["force"])
    sweep, fit = run_rate_vs_confinement(
        _spec(cfg, "decay"), betas, cfg.compute["threads"],
        tuple(cfg.experiment["fit_window_betainv"]))
    rows = [(r["beta"], r["beta_inv"], r["gamma"], r["gamma_over_omega"],
             r["r_squared"]) for r in sweep.records if r is not None]
    if "csv" in cfg.io["formats"]:
        output.write_csv(os.path.join(out_dir, "grid.csv"),
                         ["beta", "beta_inv", "gamma", "gamma_over_omega",
                          "r_squared"], rows)
    if "json" in cfg.io["formats"]:
        output.write_json(os.path.join(out_dir, "fits.json"),
                          {"kind": "rate_vs_beta",
                           "fit": fit.to_dict() if fit else None,
                           "failures": sweep.failures,
                           "inputs_hash": output.content_hash(
                               {"kind": "rate_vs_beta", "betas": betas,
                                "system": cfg.system})})
    _finish(cfg, out_dir)
    return EXIT_PARTIAL if sweep.failures else EXIT_OK


def cmd_rate_vs_gap(args):
    cfg = _config_from_args(args, "rate_vs_gap")
    rbas = cfg.experiment["rba_values"] or [1.14, 1.18, 1.22, 1.26]
    out_dir = output.prepare_out_dir(cfg.io["out_dir"], cfg.io["force"])
    spec = _spec(cfg, "decay")
    alphas = cfg.experiment["alpha_values"]
    payload = {"kind": "rate_vs_gap"}
    failures = []
    if alphas:
        per_alpha, qfit = run_q_vs_alpha(spec, alphas, rbas, cfg.compute["threads"])
        rows = []
        for alpha, sweep, fit in per_alpha:
            failures.extend(sweep.failures)
            for r in sweep.records:
                if r is not None:
                    rows.append((alpha, r["rb_over_a"], r["gap_over_omega"],
                                 r["gamma_over_omega"]))
        if "csv" in cfg.io["formats"]:
            output.write_csv(os.path.join(out_dir, "grid.csv"),
                             ["alpha", "rb_over_a", "gap_over_omega",
                              "gamma_over_omega"], rows)
        payload["fits"] = {f"alpha={a}": (f.to_dict() if f else None)
                           for a, _, f in per_alpha}
        payload["q_vs_alpha"] = qfit.to_dict() if qfit else None
    else:
        sweep, fit = run_rate_vs_gap(spec, rbas, cfg.compute["threads"])
        failures = sweep.failures
        rows = [(r["rb_over_a"], r["gap_over_omega"], r["gamma"],
                 r["gamma_over_omega"], r["r_squared"])
                for r in sweep.records if r is not None]
        if "csv" in cfg.io["formats"]:
            output.write_csv(os.path.join(out_dir, "grid.csv"),
                             ["rb_over_a", "gap_over_omega", "gamma",
                              "gamma_over_omega", "r_squared"], rows)
        payload["fit"] = fit.to_dict() if fit else None
    payload["failures"] = failures
    payload["inputs_hash"] = output.content_hash(
        {"kind": "rate_vs_gap", "rbas": rbas, "alphas": alphas,
         "system": cfg.system})
    if "json" in cfg.io["formats"]:
        output.write_json(os.path.join(out_dir, "fits.json"), payload)
    _finish(cfg, out_dir)
    return EXIT_PARTIAL if failures else EXIT_OK


def _write_matrix_csv(path, alphas, rbas, values):
    cols = ["rb_over_a"] + [f"alpha_{a:g}" for a in alphas]
    rows = [[rbas[r]] + list(values[r]) for r in range(len(rbas))]
    output.write_csv(path, cols, rows)


def _run_rate_grid(args, kind):
    cfg = _config_from_args(args, kind)
    if getattr(args, "alpha_values", None):
        alphas = np.asarray(args.alpha_values)
    else:
        alphas = _grid_axis(getattr(args, "alpha_range", None) or [2.5, 3.5],
                            getattr(args, "resolution", 5))
    if getattr(args, "rba_values", None):
        rbas = np.asarray(args.rba_values)
    else:
        rbas = _grid_axis(getattr(args, "rba_range", None) or [1.14, 1.26],
                          getattr(args, "resolution", 5))
    out_dir = output.prepare_out_dir(cfg.io["out_dir"], cfg.io["force"])
    sweep, values = run_rate_diagram(_spec(cfg, "decay"), list(alphas),
                                     list(rbas), cfg.compute["threads"])
    if "csv" in cfg.io["formats"]:
        _write_matrix_csv(os.path.join(out_dir, "grid.csv"), alphas, rbas, values)
    if "json" in cfg.io["formats"]:
        output.write_json(os.path.join(out_dir, "fits.json"),
                          {"kind": kind, "failures": sweep.failures,
                           "inputs_hash": output.content_hash(
                               {"kind": kind, "alphas": list(alphas),
                                "rbas": list(rbas), "system": cfg.system})})
    _finish(cfg, out_dir)
    return EXIT_PARTIAL if sweep.failures else EXIT_OK


def cmd_rate_diagram(args):
    return _run_rate_grid(args, "rate_diagram")


def cmd_sweep(args):
    return _run_rate_grid(args, "sweep")


def cmd_phase_diagram(args):
    cfg = _config_from_args(args, "phase_diagram")
    alphas = _grid_axis(args.alpha_range, args.resolution)
    rbas = _grid_axis(args.rba_range, max(2, args.resolution // 2))
    out_dir = output.prepare_out_dir(cfg.io["out_dir"], cfg.io["force"])
    grid = ground_phase_diagram(cfg.physical_params(), alphas, rbas,
                                threads=cfg.compute["threads"])
    _write_matrix_csv(os.path.join(out_dir, "grid.csv"), alphas, rbas, grid.values)
    output.write_json(os.path.join(out_dir, "boundary_points.json"),
                      {"boundary_points": grid.boundary_points,
                       "failures": grid.failures, "meta": grid.meta})
    _finish(cfg, out_dir)
    return EXIT_PARTIAL if grid.failures else EXIT_OK


def cmd_two_atom(args):
    cfg = _config_from_args(args, "decay")
    out_dir = output.prepare_out_dir(args.out or cfg.io["out_dir"], cfg.io["force"])
    traj = evolve_two_atom(omega=args.omega, delta_glob=args.delta_glob,
                           beta_start=args.beta_start, tau=args.tau,
                           t_end=args.t_end)
    cols = ["t", "E1", "E2", "E3", "p00", "p01", "p10", "p_phi3"]
    rows = []
    for i, t in enumerate(traj.times):
        rows.append([t, *traj.eigenvalues[i], *traj.populations[i],
                     traj.p_false_vacuum[i]])
    output.write_csv(os.path.join(out_dir, "two_atom.csv"), cols, rows)
    _finish(cfg, out_dir, extra={"two_atom": traj.meta})
    return EXIT_OK


def cmd_protocol(args):
    cfg = _config_from_args(args, "decay")
    out_dir = output.prepare_out_dir(args.out or cfg.io["out_dir"], cfg.io["force"])
    n_s = cfg.system["n_s"]
    layout = layout_decay_protocol(n_s, args.a, args.b, args.n_y)
    hc = HardwareConstraints()
    if args.upgraded_fov:
        hc = hc.with_upgraded_fov()
    omega = 2 * np.pi * cfg.system["omega_mhz"]
    dglob = cfg.system["alpha"] * omega
    dloc = cfg.system["beta"] * dglob
    times = np.array([0.0, 0.5, 2.0, 2.05, 4.0])
    sched = DriveSchedule(
        n_s=n_s,
        omega_wf=PiecewiseLinear(times, np.array([0.0, omega, omega, omega, omega])),
        delta_glob_wf=PiecewiseLinear(times, np.array([-dglob, -dglob, dglob, dglob, dglob])),
        delta_loc_wf=PiecewiseLinear(times, np.array([0.0, 0.0, 0.0, dloc, dloc])))
    report = validate(layout, sched, hc)
    atoms = ([{"x": float(x), "y": float(y), "role": "main"}
              for x, y in layout.main_positions]
             + [{"x": float(x), "y": float(y), "role": "ancilla"}
                for x, y in layout.ancilla_positions])
    output.write_json(os.path.join(out_dir, "layout.json"),
                      {"atoms": atoms, "a": layout.a, "b": layout.b,
                       "footprint": list(layout.footprint)})
    output.write_json(os.path.join(out_dir, "validation.json"), report.to_dict())
    _finish(cfg, out_dir)
    for check in report.checks:
        status = "pass" if check.passed else "FAIL"
        print(f"{status:4s} {check.name}: {check.measured:.6g} vs {check.limit:.6g}")
    return EXIT_OK if report.ok else EXIT_NUMERICAL


_COMMANDS = {
    "decay": cmd_decay,
    "anneal": cmd_anneal,
    "rate-vs-beta": cmd_rate_vs_beta,
    "rate-vs-gap": cmd_rate_vs_gap,
    "rate-diagram": cmd_rate_diagram,
    "sweep": cmd_sweep,
    "phase-diagram": cmd_phase_diagram,
    "two-atom": cmd_two_atom,
    "protocol": cmd_protocol,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, OutputExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FvdsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
