"""One render function per figure kind.

Each function takes the input directory and an output path, reads only the
simulator's published file schemas, and writes a vector image.  Fits are
drawn dashed, with small vertical bars marking the fit window.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import PlotInputError, read_csv, read_json, read_matrix_csv, require_columns

matplotlib.rcParams["svg.hashsalt"] = "fvdsim-plot"


def _save(fig, out_path, deterministic):
    metadata = None
    ext = os.path.splitext(out_path)[1].lower()
    if deterministic and ext == ".svg":
        metadata = {"Date": None}
    fig.savefig(out_path, metadata=metadata)
    plt.close(fig)


def _window_bars(ax, window, y):
    for t in window:
        ax.plot([t, t], [y * 0.7, y * 1.3], color="k", lw=1.2)


def render_decay(in_dir, out_path, deterministic=False):
    """Semilog Neel decay with the fitted exponential overlaid."""
    traj_path = os.path.join(in_dir, "trajectory.csv")
    cols = read_csv(traj_path)
    t_cyc, neel = require_columns(cols, ["omega_t_over_2pi", "neel"], traj_path)
    t_us = require_columns(cols, ["t_us"], traj_path)[0]
    t_cyc, t_us, neel = map(np.asarray, (t_cyc, t_us, neel))

    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    pos = neel > 0
    dropped = int((~pos).sum())
    if dropped:
        print(f"decay: dropped {dropped} non-positive samples from the log plot")
    if not pos.any():
        raise PlotInputError("decay: no positive Neel samples to plot")
    ax.semilogy(t_cyc[pos], neel[pos], color="C0", lw=1.0, label="N")

    fits = read_json(os.path.join(in_dir, "fits.json"))
    fit = fits.get("fit")
    if fit:
        t_a, t_b = fit["window"]
        tt = np.linspace(t_a, t_b, 100)
        curve = fit["amplitude"] * np.exp(-fit["gamma"] * tt)
        cycles_per_us = t_cyc[-1] / t_us[-1] if t_us[-1] else 1.0
        ax.semilogy(tt * cycles_per_us, curve, "k--", lw=1.0,
                    label=f"fit, gamma = {fit['gamma']:.3g}")
        mid = fit["amplitude"] * np.exp(-fit["gamma"] * t_a)
        _window_bars(ax, [t_a * cycles_per_us, t_b * cycles_per_us], mid)
    ax.set_xlabel(r"$\Omega t / 2\pi$")
    ax.set_ylabel(r"$N$")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, out_path, deterministic)


def render_rates(in_dir, out_path, deterministic=False):
    """Semilog decay rate vs 1/beta or vs the gap, with the fitted line."""
    grid_path = os.path.join(in_dir, "grid.csv")
    cols = read_csv(grid_path)
    if "beta_inv" in cols:
        xname, xlabel = "beta_inv", r"$\beta^{-1}$"
    elif "gap_over_omega" in cols:
        xname, xlabel = "gap_over_omega", r"$\Delta E_{20}/\Omega$"
    else:
        raise PlotInputError(
            f"{grid_path}: expected a beta_inv or gap_over_omega column; "
            f"found {', '.join(cols)}")
    x, g = require_columns(cols, [xname, "gamma_over_omega"], grid_path)
    x, g = np.asarray(x), np.asarray(g)

    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    keep = g > 0
    dropped = int((~keep).sum())
    if dropped:
        print(f"rates: dropped {dropped} non-positive rates from the log plot")
    if not keep.any():
        raise PlotInputError("rates: no positive rates to plot")
    ax.semilogy(x[keep], g[keep], "o", color="C0", ms=5)

    fits = read_json(os.path.join(in_dir, "fits.json"))
    fit = fits.get("fit")
    if fit and "params" in fit:
        prefac = fit["params"].get("b", fit["params"].get("k"))
        expo = fit["params"].get("p", fit["params"].get("q"))
        if prefac is not None and expo is not None:
            # the stored prefactor is for gamma in rad/us; the gamma and
            # gamma_over_omega columns give the 1/Omega conversion
            gamma_raw = require_columns(cols, ["gamma"], grid_path)[0]
            inv_omega = g[keep][0] / np.asarray(gamma_raw)[keep][0]
            lo, hi = fit["window"]
            tt = np.linspace(lo, hi, 50)
            ax.semilogy(tt, inv_omega * prefac * np.exp(-expo * tt), "k--", lw=1.0)
            _window_bars(ax, [lo, hi], np.interp(lo, x[keep], g[keep]))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(r"$\gamma/\Omega$")
    fig.tight_layout()
    _save(fig, out_path, deterministic)


def render_phase_diagram(in_dir, out_path, deterministic=False):
    """Heatmap of a grid.csv matrix with optional boundary stars."""
    alphas, rbas, matrix = read_matrix_csv(os.path.join(in_dir, "grid.csv"))
    values = np.asarray(matrix, dtype=float)

    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    da = (alphas[1] - alphas[0]) / 2 if len(alphas) > 1 else 0.5
    dr = (rbas[1] - rbas[0]) / 2 if len(rbas) > 1 else 0.05
    im = ax.imshow(values, origin="lower", aspect="auto",
                   extent=[alphas[0] - da, alphas[-1] + da,
                           rbas[0] - dr, rbas[-1] + dr],
                   cmap="viridis")
    fig.colorbar(im, ax=ax)

    sidecar = os.path.join(in_dir, "boundary_points.json")
    if os.path.exists(sidecar):
        payload = read_json(sidecar, required=("boundary_points",))
        pts = payload["boundary_points"]
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, "k*", ms=9)
    ax.set_xlabel(r"$\Delta_{glob}/\Omega$")
    ax.set_ylabel(r"$R_b/a$")
    fig.tight_layout()
    _save(fig, out_path, deterministic)


def render_anneal(in_dir, out_path, deterministic=False):
    """Neel OP and bubble density panels vs Delta_loc/V1."""
    traj_path = os.path.join(in_dir, "trajectory.csv")
    cols = read_csv(traj_path)
    x, neel, s1, s2, sns = require_columns(
        cols, ["delta_loc_over_v1", "neel", "sigma_1", "sigma_2", "sigma_ns"],
        traj_path)

    fig, axes = plt.subplots(2, 2, figsize=(7.0, 5.0), sharex=True)
    panels = [("$N$", neel), (r"$\sigma_1$", s1),
              (r"$\sigma_2$", s2), (r"$\sigma_{n_s}$", sns)]
    for ax, (label, series) in zip(axes.flat, panels):
        ax.plot(x, series, lw=1.0)
        ax.set_ylabel(label)
        ax.invert_xaxis()  # the ramp sweeps the detuning downward
    for ax in axes[1]:
        ax.set_xlabel(r"$\Delta_{loc}/V_1$")
    fig.tight_layout()
    _save(fig, out_path, deterministic)


def render_two_atom(in_dir, out_path, deterministic=False):
    """Eigenvalue tracks and basis populations of the ramped three-level model."""
    path = os.path.join(in_dir, "two_atom.csv")
    cols = read_csv(path)
    t, e1, e2, e3, p00, p01, p10, pfv = require_columns(
        cols, ["t", "E1", "E2", "E3", "p00", "p01", "p10", "p_phi3"], path)

    fig, (top, bottom) = plt.subplots(2, 1, figsize=(5.0, 5.6), sharex=True)
    for series, label in ((e1, "$E_1$"), (e2, "$E_2$"), (e3, "$E_3$")):
        top.plot(t, series, lw=1.0, label=label)
    top.set_ylabel("eigenvalues")
    top.legend(frameon=False, fontsize=8)
    for series, label in ((p00, "$|c_{00}|^2$"), (p01, "$|c_{01}|^2$"),
                          (p10, "$|c_{10}|^2$"), (pfv, "$p_{\\phi_3}$")):
        bottom.plot(t, series, lw=1.0, label=label)
    bottom.set_xlabel("$t$")
    bottom.set_ylabel("populations")
    bottom.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, out_path, deterministic)


RENDERERS = {
    "decay": render_decay,
    "rates": render_rates,
    "phase-diagram": render_phase_diagram,
    "anneal": render_anneal,
    "two-atom": render_two_atom,
}


def render(kind, in_dir, out_path, deterministic=False):
    if kind not in RENDERERS:
        raise PlotInputError(f"unknown figure kind {kind!r}; "
                             f"choose from {', '.join(sorted(RENDERERS))}")
    RENDERERS[kind](in_dir, out_path, deterministic=deterministic)
