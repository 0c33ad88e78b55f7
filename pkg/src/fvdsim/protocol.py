"""Experimental atom layouts (racetrack main chain + ancilla chains) and
validation of layouts/waveforms against the hardware constraint table.

The main chain is a ring of n_s = 2*n_x + 2*n_y atoms with constant
spacing a, laid out as a racetrack: two horizontal rows of n_x atoms, two
vertical columns of n_y atoms, joined by 45-degree diagonal steps (which is
where the sqrt(2) terms in the footprint come from).  One ancilla atom sits
opposite every odd main-chain site at distance b, giving the footprint

    d_x = (n_x - 1 + sqrt(2)) a + 2 b      (n_x = 5: (4 + sqrt(2)) a + 2 b)
    d_y = (n_y - 1 + sqrt(2)) a + 2 b      (n_y = 3: (2 + sqrt(2)) a + 2 b)

Validation is report-based: every constraint check carries its measured
value so a pass/fail is reproducible from the report alone.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

_N_X = 5  # horizontal row size of the racetrack; maximal for the base field of view


@dataclass(frozen=True)
class HardwareConstraints:
    """Constraint table of a prototypical neutral-atom analog simulator."""

    t_max: float = 4.0                       # us
    a_min: float = 4.0                       # um
    a_min_y: float = 4.0                     # um, vertical row spacing
    field_of_view: tuple = (75.0, 76.0)      # um
    omega_range: tuple = (0.0, 15.8)         # rad/us
    omega_slew_max: float = 250.0            # rad/us^2
    delta_glob_range: tuple = (-125.0, 125.0)  # rad/us
    delta_glob_slew_max: float = 2500.0      # rad/us^2
    delta_loc_range: tuple = (-125.0, 125.0)  # rad/us, includes ancilla freeze fields

    def with_upgraded_fov(self):
        from dataclasses import replace
        return replace(self, field_of_view=(75.0, 120.0))


@dataclass(frozen=True)
class ProtocolLayout:
    """Main-ring and ancilla coordinates (um) plus the spacing parameters."""

    main_positions: np.ndarray
    ancilla_positions: np.ndarray
    a: float
    b: float

    @property
    def all_positions(self):
        return np.vstack([self.main_positions, self.ancilla_positions])

    @property
    def footprint(self):
        pos = self.all_positions
        return (float(pos[:, 0].max() - pos[:, 0].min()),
                float(pos[:, 1].max() - pos[:, 1].min()))

    def min_pairwise_distance(self):
        pos = self.all_positions
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        n = len(pos)
        return float(dist[~np.eye(n, dtype=bool)].min())

    def min_row_spacing(self):
        """Smallest gap between distinct y rows (1e-9 um coincidence tol)."""
        ys = np.sort(self.all_positions[:, 1])
        gaps = np.diff(ys)
        gaps = gaps[gaps > 1e-9]
        return float(gaps.min()) if len(gaps) else np.inf


def layout_decay_protocol(n_s, a, b, n_y=None):
    """Racetrack main chain with per-odd-site ancillas at distance b.

    n_s = 2*n_x + 2*n_y with n_x = 5 (the racetrack shape whose horizontal
    width is maximal); the vertical count n_y >= 3 grows in steps of 2 per
    side (4 atoms total).  Construction is separate from validation: any
    positive a, b build a layout, and the hardware checks happen in
    validate().
    """
    if n_s % 2 != 0 or n_s < 16:
        raise InvalidParameterError(f"racetrack needs even n_s >= 16, got {n_s}")
    if a <= 0 or b <= 0:
        raise InvalidParameterError("spacings a and b must be > 0")
    if n_y is None:
        n_y = n_s // 2 - _N_X
    if n_s // 2 - n_y != _N_X:
        raise InvalidParameterError(
            f"shape violation: n_s = 2*{_N_X} + 2*n_y requires n_y = {n_s // 2 - _N_X}")
    if n_y < 3 or (n_y - 3) % 2 != 0:
        raise InvalidParameterError(
            f"vertical extension must be in steps of 4 atoms (n_y odd >= 3), got n_y={n_y}")

    s = a / np.sqrt(2.0)
    x_right = (_N_X - 1) * a + s
    y_bottom = -((n_y - 1) * a + 2 * s)

    main = []
    normals = []
    # top row, left to right
    for i in range(_N_X):
        main.append((i * a, 0.0))
        normals.append((0.0, 1.0))
    # right column, top to bottom
    for i in range(n_y):
        main.append((x_right, -s - i * a))
        normals.append((1.0, 0.0))
    # bottom row, right to left
    for i in range(_N_X):
        main.append(((_N_X - 1 - i) * a, y_bottom))
        normals.append((0.0, -1.0))
    # left column, bottom to top
    for i in range(n_y):
        main.append((-s, y_bottom + s + i * a))
        normals.append((-1.0, 0.0))

    main = np.asarray(main)
    normals = np.asarray(normals)
    # one ancilla opposite every odd site (site j = index + 1)
    odd = np.arange(0, n_s, 2)
    ancilla = main[odd] + b * normals[odd]
    return ProtocolLayout(main_positions=main, ancilla_positions=ancilla,
                          a=float(a), b=float(b))


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    passed: bool
    measured: float
    limit: float
    note: str = ""


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, measured, limit, note=""):
        self.checks.append(ConstraintCheck(name, bool(passed), float(measured),
                                           float(limit), note))

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        return {"ok": self.ok,
                "checks": [{"name": c.name, "passed": c.passed,
                            "measured": c.measured, "limit": c.limit,
                            "note": c.note} for c in self.checks]}


def validate(layout, schedule, constraints=None):
    """Check a layout and drive schedule against the hardware constraint table.

    Pure predicate: the same inputs always produce the same report, and
    every verdict can be reproduced from the measured value and limit alone.
    """
    hc = constraints if constraints is not None else HardwareConstraints()
    report = ValidationReport()

    t0, t1 = schedule.domain
    report.add("duration", t1 - t0 <= hc.t_max, t1 - t0, hc.t_max, "us")

    report.add("min_spacing", layout.min_pairwise_distance() >= hc.a_min,
               layout.min_pairwise_distance(), hc.a_min, "um")
    row_gap = layout.min_row_spacing()
    report.add("min_row_spacing_y", row_gap >= hc.a_min_y, row_gap, hc.a_min_y, "um")

    d_x, d_y = layout.footprint
    report.add("footprint_x", d_x <= hc.field_of_view[0], d_x, hc.field_of_view[0], "um")
    report.add("footprint_y", d_y <= hc.field_of_view[1], d_y, hc.field_of_view[1], "um")

    for name, wf, rng in (("omega", schedule.omega_wf, hc.omega_range),
                          ("delta_glob", schedule.delta_glob_wf, hc.delta_glob_range),
                          ("delta_loc", schedule.delta_loc_wf, hc.delta_loc_range)):
        lo, hi = float(wf.values.min()), float(wf.values.max())
        report.add(f"{name}_min", lo >= rng[0], lo, rng[0], "rad/us")
        report.add(f"{name}_max", hi <= rng[1], hi, rng[1], "rad/us")

    for name, wf, limit in (("omega", schedule.omega_wf, hc.omega_slew_max),
                            ("delta_glob", schedule.delta_glob_wf, hc.delta_glob_slew_max)):
        rate = float(np.abs(wf.slew_rates()).max())
        report.add(f"{name}_slew", rate <= limit, rate, limit, "rad/us^2")
    return report
