"""fvdsim: false-vacuum decay and nucleation dynamics in 1D Rydberg chains."""

__version__ = "0.1.0"

from .lattice import (AtomGeometry, DriveSchedule, HamiltonianOperator,
                      PhysicalParams, PiecewiseLinear, build_hamiltonian,
                      pair_potential, ring_positions)

__all__ = [
    "AtomGeometry",
    "DriveSchedule",
    "HamiltonianOperator",
    "PhysicalParams",
    "PiecewiseLinear",
    "build_hamiltonian",
    "pair_potential",
    "ring_positions",
    "__version__",
]
