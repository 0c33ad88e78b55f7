"""Low-lying eigenpairs, the zero-confinement gap E2 - E0, ground-state
phase diagrams, and inflection-point phase boundaries.

The eigensolver is Lanczos-based (ARPACK through scipy.sparse.linalg.eigsh
on the matrix-free operator) with a deterministic start vector, followed by
residual/orthogonality verification and a deterministic ordering and phase
convention for degenerate pairs.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import InvalidParameterError, NumericalFailureError
from .evolution import z2_plus_index
from .observables import tpcf, tpcf_neel

_DEGENERACY_CLUSTER = 1e-10
_RESIDUAL_FRACTION = 1e-8
_DENSE_CUTOFF = 512


@dataclass
class EigenResult:
    """Eigenvalues sorted ascending, eigenvectors as rows, residual norms."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray

    def __iter__(self):
        return iter((self.eigenvalues, self.eigenvectors))


def _fix_phase(vec):
    """Global phase such that the largest-magnitude amplitude is real positive."""
    i = int(np.argmax(np.abs(vec)))
    ph = vec[i] / abs(vec[i])
    return vec * np.conj(ph)


def _order_degenerate(evals, evecs, n_s):
    """Order eigenvectors inside degeneracy clusters by overlap with |1010...>."""
    scale = max(1.0, float(np.abs(evals).max()))
    z2p = z2_plus_index(n_s)
    order = np.arange(len(evals))
    i = 0
    while i < len(evals):
        j = i + 1
        while j < len(evals) and evals[j] - evals[i] < _DEGENERACY_CLUSTER * scale:
            j += 1
        if j - i > 1:
            ov = [abs(evecs[k][z2p]) for k in range(i, j)]
            order[i:j] = i + np.argsort(-np.asarray(ov), kind="stable")
        i = j
    return evals[order], evecs[order]


def lowest_eigenpairs(ham, k=3, maxiter=None):
    """k lowest eigenpairs of a Hermitian matrix-free Hamiltonian.

    Small systems fall back to a dense solve; large ones use implicitly
    restarted Lanczos with a fixed start vector so results are reproducible.
    Residuals are verified against 1e-8 * ||H|| before returning.
    """
    if not 1 <= k <= 8:
        raise InvalidParameterError(f"k must be in [1, 8], got {k}")
    dim = ham.dim
    if k >= dim:
        raise InvalidParameterError(f"k={k} must be < dim={dim}")

    if dim <= _DENSE_CUTOFF:
        evals, evecs = np.linalg.eigh(ham.dense())
        evals = evals[:k]
        vecs = evecs[:, :k].T.copy()
    else:
        def matvec(v):
            return ham.apply(v.astype(np.complex128))

        op = LinearOperator((dim, dim), matvec=matvec, dtype=np.complex128)
        # fixed-seed start vector: deterministic, yet with no exact lattice
        # symmetry that could hide one member of a quasi-degenerate pair
        v0 = np.random.default_rng(0x5EED).standard_normal(dim)
        v0 /= np.linalg.norm(v0)
        ncv = min(dim - 1, max(2 * k + 1, 24))
        try:
            evals, evecs = eigsh(op, k=k, which="SA", v0=v0, ncv=ncv,
                                 tol=1e-10, maxiter=maxiter)
        except ArpackNoConvergence as exc:
            raise NumericalFailureError(
                f"Lanczos failed to converge {k} eigenpairs", residual=None) from exc
        order = np.argsort(evals)
        evals = evals[order]
        vecs = evecs[:, order].T.copy()

    evals, vecs = _order_degenerate(evals, vecs, ham.n_s)
    vecs = np.array([_fix_phase(v / np.linalg.norm(v)) for v in vecs])

    hnorm = ham.norm_bound()
    residuals = np.array([np.linalg.norm(ham.apply(v) - e * v)
                          for e, v in zip(evals, vecs)])
    worst = residuals.max()
    if worst > _RESIDUAL_FRACTION * max(hnorm, 1.0):
        raise NumericalFailureError(
            f"eigenpair residual {worst:.3e} exceeds tolerance", residual=worst)
    return EigenResult(eigenvalues=evals, eigenvectors=vecs, residuals=residuals)


def gap_e20(params, geom=None):
    """Zero-confinement gap E2 - E0; the local detuning is forced to zero."""
    zero_conf = params.replace(delta_loc=0.0)
    ham = zero_conf.hamiltonian(geom)
    res = lowest_eigenpairs(ham, k=3)
    gap = float(res.eigenvalues[2] - res.eigenvalues[0])
    return max(gap, 0.0)


@dataclass
class PhaseGrid:
    """TPCF-Neel order parameter over a (Delta_glob/Omega, R_b/a) grid.

    values[r, c] corresponds to rba_values[r], alpha_values[c].  Failed
    points carry value 0 with valid[r, c] = False.
    """

    alpha_values: np.ndarray
    rba_values: np.ndarray
    values: np.ndarray
    valid: np.ndarray
    failures: list = field(default_factory=list)
    boundary_points: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("phase grid values must be finite")


def ground_phase_diagram(base_params, alpha_values, rba_values, threads=1):
    """Ground state at beta = 0 for each grid point, reduced to a TPCF-Neel scalar.

    Grid points are independent; they may be computed concurrently but are
    always assembled in grid order, so the result does not depend on the
    thread count.  Per-point solver failures mark the point invalid and the
    scan continues.
    """
    alpha_values = np.asarray(alpha_values, dtype=float)
    rba_values = np.asarray(rba_values, dtype=float)
    if np.any(alpha_values < 0) or np.any(alpha_values > 6):
        raise InvalidParameterError("alpha grid must stay within [0, 6]")
    if np.any(rba_values < 1) or np.any(rba_values > 2):
        raise InvalidParameterError("R_b/a grid must stay within [1, 2]")

    points = [(r, c) for r in range(len(rba_values)) for c in range(len(alpha_values))]

    def solve(point):
        r, c = point
        p = base_params.from_dimensionless(
            n_s=base_params.n_s,
            rb_over_a=rba_values[r],
            alpha=alpha_values[c],
            beta=0.0,
            omega_mhz=base_params.omega / (2.0 * np.pi),
            a=base_params.a,
            geometry_mode=base_params.geometry_mode,
        )
        res = lowest_eigenpairs(p.hamiltonian(), k=1)
        return tpcf_neel(tpcf(res.eigenvectors[0]))

    values = np.zeros((len(rba_values), len(alpha_values)))
    valid = np.ones_like(values, dtype=bool)
    failures = []
    if threads <= 1:
        results = []
        for pt in points:
            try:
                results.append(solve(pt))
            except NumericalFailureError as exc:
                results.append(exc)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(solve, pt) for pt in points]
            results = []
            for fut in futures:
                try:
                    results.append(fut.result())
                except NumericalFailureError as exc:
                    results.append(exc)
    for (r, c), out in zip(points, results):
        if isinstance(out, Exception):
            valid[r, c] = False
            failures.append(((r, c), str(out)))
        else:
            values[r, c] = out

    grid = PhaseGrid(alpha_values=alpha_values, rba_values=rba_values,
                     values=values, valid=valid, failures=failures,
                     meta={"n_s": base_params.n_s,
                           "geometry_mode": base_params.geometry_mode,
                           "resolution": [len(rba_values), len(alpha_values)]})
    grid.boundary_points = phase_boundary_points(grid)
    return grid


def phase_boundary_points(grid):
    """Inflection points of each constant-R_b/a row of the phase grid.

    Second derivatives come from central differences on a uniform alpha
    grid; sign changes are refined by linear interpolation.  At most the
    first and last crossing per row are reported (entering and leaving the
    ordered phase).  Rows with fewer than 5 points are skipped.
    """
    x = np.asarray(grid.alpha_values, dtype=float)
    points = []
    if len(x) >= 2:
        dx = np.diff(x)
        if np.any(np.abs(dx - dx[0]) > 1e-9 * max(abs(x[-1]), 1.0)):
            raise InvalidParameterError("boundary extraction requires a uniform alpha grid")
    for r, rba in enumerate(grid.rba_values):
        if len(x) < 5 or not grid.valid[r].all():
            warnings.warn(f"phase boundary: skipping row R_b/a={rba} (too short or invalid)")
            continue
        y = grid.values[r]
        d2 = y[:-2] - 2.0 * y[1:-1] + y[2:]
        crossings = []
        for i in range(len(d2) - 1):
            if d2[i] == 0.0:
                crossings.append(x[i + 1])
            elif d2[i] * d2[i + 1] < 0:
                frac = d2[i] / (d2[i] - d2[i + 1])
                crossings.append(x[i + 1] + frac * (x[i + 2] - x[i + 1]))
        if not crossings:
            continue
        keep = [crossings[0]] if len(crossings) == 1 else [crossings[0], crossings[-1]]
        points.extend((float(c), float(rba)) for c in keep)
    return points
