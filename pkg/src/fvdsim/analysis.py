"""Decay-curve fitting pipeline and analytic nucleation estimates.

Smoothing, fit-window selection, and the exponential / scaling fits stay in
the log domain wherever a rate is extracted: that keeps the fits linear,
deterministic, and free of initialization choices.  Windows that would
include non-positive samples are the caller's problem (see FitDomainError);
the decay driver truncates at the first non-positive sample before fitting.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (FitDomainError, InvalidParameterError,
                     WindowNotFoundError)

SCALING_KINDS = ("confinement", "gap", "q_vs_alpha")


@dataclass(frozen=True)
class ExpFit:
    """N(t) = amplitude * exp(-gamma t) on the window (t_a, t_b)."""

    amplitude: float
    gamma: float
    window: tuple
    r_squared: float
    residual_rms: float
    n_points: int

    def evaluate(self, t):
        return self.amplitude * np.exp(-self.gamma * np.asarray(t))

    def to_dict(self):
        return {"amplitude": self.amplitude, "gamma": self.gamma,
                "window": list(self.window), "r_squared": self.r_squared,
                "residual_rms": self.residual_rms, "n_points": self.n_points}


@dataclass(frozen=True)
class RateScalingFit:
    """One of the rate-scaling laws.

    confinement: gamma = b exp(-p x) with x = 1/beta, params (b, p)
    gap:         gamma = k exp(-q x) with x = gap/Omega, params (k, q)
    q_vs_alpha:  q = u (alpha0 - alpha), params (u, alpha0)
    """

    kind: str
    params: tuple
    param_names: tuple
    window: tuple
    r_squared: float
    n_points: int

    def to_dict(self):
        return {"kind": self.kind,
                "params": dict(zip(self.param_names, self.params)),
                "window": list(self.window), "r_squared": self.r_squared,
                "n_points": self.n_points}


def savitzky_golay(series, window_len, order):
    """Least-squares polynomial smoothing with shrunken one-sided edge windows.

    Each point is replaced by the value at the center of a polynomial of the
    given order fitted over the surrounding window.  Polynomials of degree
    <= order are reproduced exactly.
    """
    series = np.asarray(series, dtype=float)
    if window_len % 2 == 0 or window_len <= order:
        raise InvalidParameterError(
            f"window_len must be odd and > order, got {window_len}, {order}")
    if order < 0:
        raise InvalidParameterError("order must be >= 0")
    n = len(series)
    if n < window_len:
        raise InvalidParameterError(f"series length {n} < window_len {window_len}")
    half = window_len // 2
    out = np.empty(n)
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        x = np.arange(lo, hi, dtype=float) - i
        eff_order = min(order, hi - lo - 1)
        coeffs = np.polynomial.polynomial.polyfit(x, series[lo:hi], eff_order)
        out[i] = coeffs[0]
    return out


def select_fit_window(times, values, t_lo, t_hi):
    """(10-90)% amplitude window of a descending curve on [t_lo, t_hi].

    The amplitude range is max - min of the curve restricted to the
    interval; t_a is the first time after the maximum at which the curve
    descends below max - 0.1*range, t_b the first below max - 0.9*range.
    Crossing times are refined by linear interpolation.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if t_lo < times[0] - 1e-12 or t_hi > times[-1] + 1e-12 or t_lo >= t_hi:
        raise InvalidParameterError(
            f"[{t_lo}, {t_hi}] outside the sampled range [{times[0]}, {times[-1]}]")
    mask = (times >= t_lo) & (times <= t_hi)
    t = times[mask]
    v = values[mask]
    if len(t) < 3:
        raise InvalidParameterError("fewer than 3 samples in the interval")
    vmax = v.max()
    vrange = vmax - v.min()
    if vrange <= 0:
        raise WindowNotFoundError("curve has zero amplitude range on the interval")
    start = int(np.argmax(v))

    def first_descent(threshold):
        for i in range(start + 1, len(t)):
            if v[i] < threshold:
                frac = (v[i - 1] - threshold) / (v[i - 1] - v[i])
                return t[i - 1] + frac * (t[i] - t[i - 1])
        return None

    t_a = first_descent(vmax - 0.1 * vrange)
    t_b = first_descent(vmax - 0.9 * vrange)
    if t_a is None or t_b is None or not t_a < t_b:
        raise WindowNotFoundError(
            "10-90% amplitude thresholds not crossed in order on the interval")
    return float(t_a), float(t_b)


def fit_exponential(times, values, window):
    """Least-squares fit of A exp(-gamma t) in the log domain over a window."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_a, t_b = window
    if not t_a < t_b:
        raise InvalidParameterError(f"empty window ({t_a}, {t_b})")
    mask = (times >= t_a) & (times <= t_b)
    t = times[mask]
    v = values[mask]
    if len(t) < 5:
        raise FitDomainError(f"only {len(t)} samples in the fit window, need >= 5")
    if np.any(v <= 0):
        raise FitDomainError("non-positive values in the fit window")
    y = np.log(v)
    coeffs, (ss_res, r2) = _linear_lsq(t, y)
    resid = y - (coeffs[0] + coeffs[1] * t)
    return ExpFit(amplitude=float(np.exp(coeffs[0])), gamma=float(-coeffs[1]),
                  window=(float(t_a), float(t_b)), r_squared=r2,
                  residual_rms=float(np.sqrt(np.mean(resid ** 2))),
                  n_points=len(t))


def _linear_lsq(x, y):
    design = np.column_stack([np.ones_like(x), x])
    coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
    pred = design @ coeffs
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else -np.inf)
    return coeffs, (ss_res, float(r2))


def fit_rate_scaling(points, kind):
    """Fit one of the rate-scaling laws to (x, value) pairs.

    Exponential kinds are fitted linearly in the log domain; q_vs_alpha is a
    plain linear fit.  Requires >= 3 points with non-degenerate x values.
    """
    if kind not in SCALING_KINDS:
        raise InvalidParameterError(f"kind must be one of {SCALING_KINDS}")
    pts = [(float(x), float(g)) for x, g in points]
    if len(pts) < 3:
        raise InvalidParameterError(f"need >= 3 points, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    g = np.array([p[1] for p in pts])
    if np.ptp(x) < 1e-14 * max(1.0, np.abs(x).max()):
        raise InvalidParameterError("degenerate x values (all equal)")

    if kind in ("confinement", "gap"):
        if np.any(g <= 0):
            raise FitDomainError("rates must be > 0 for exponential scaling fits")
        coeffs, (_, r2) = _linear_lsq(x, np.log(g))
        prefactor = float(np.exp(coeffs[0]))
        rate = float(-coeffs[1])
        names = ("b", "p") if kind == "confinement" else ("k", "q")
        params = (prefactor, rate)
    else:
        # q = u * (alpha0 - alpha): slope -u, intercept u*alpha0
        coeffs, (_, r2) = _linear_lsq(x, g)
        u = float(-coeffs[1])
        if u == 0:
            raise FitDomainError("flat q(alpha): alpha0 undefined")
        params = (u, float(coeffs[0] / u))
        names = ("u", "alpha0")
    return RateScalingFit(kind=kind, params=params, param_names=names,
                          window=(float(x.min()), float(x.max())),
                          r_squared=r2, n_points=len(pts))


def critical_bubble_size(delta_glob, delta_loc):
    """Classical critical bubble size Delta_glob / |Delta_loc| in sites."""
    if delta_loc == 0:
        raise InvalidParameterError("critical bubble size undefined at delta_loc = 0")
    return float(delta_glob / abs(delta_loc))


def classical_bubble_energy(eps0, delta_glob, delta_loc, n):
    """Energy of a single true-vacuum bubble of n sites, V2 tails ignored."""
    if n < 0:
        raise InvalidParameterError("bubble size must be >= 0")
    return float(eps0 + delta_glob - n * delta_loc)


def hopping_energy_estimate(omega, delta_glob, v1):
    """Domain-wall two-step hopping scale Omega^2/Delta_glob + Omega^2/V1.

    Regime diagnostic only: compared against the zero-confinement gap to
    flag whether the band width is small against the gap.
    """
    if delta_glob <= 0 or v1 <= 0:
        raise InvalidParameterError("hopping estimate needs delta_glob, v1 > 0")
    return float(omega ** 2 / delta_glob + omega ** 2 / v1)


def ising_reference_exponent(h_x, h_z):
    """Decay-rate exponent of the ferromagnetic Ising chain in the thin-wall limit.

    Returns |f(theta_0)| / (|h_z| M) with M = (1 - h_x^2)^(1/8) and

        |f(theta_0)| = 2 * integral_0^{|ln h_x|} sqrt(1 + h_x^2 - 2 h_x cosh(phi)) dphi,

    evaluated by adaptive quadrature to 1e-10 relative accuracy.  The
    integrand is real on the whole interval and vanishes at the upper limit.
    """
    if not 0 < abs(h_x) < 1:
        raise InvalidParameterError(f"need 0 < |h_x| < 1, got {h_x}")
    if h_z == 0:
        raise InvalidParameterError("h_z must be nonzero")
    hx = abs(h_x)
    upper = abs(np.log(hx))

    def integrand(phi):
        radicand = 1.0 + hx * hx - 2.0 * hx * np.cosh(phi)
        return np.sqrt(max(radicand, 0.0))

    integral, _ = quad(integrand, 0.0, upper, epsabs=0.0, epsrel=1e-12,
                       limit=200)
    magnetization = (1.0 - hx * hx) ** 0.125
    return float(2.0 * integral / (abs(h_z) * magnetization))
