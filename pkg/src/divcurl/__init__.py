"""Numerical toolkit for generalized div-curl boundary value problems.

Solves the magnetostatic system curl(sigma u) = J, div u = rho, u.n =
lam and the electric system curl u = J, div(eps u) = rho, u x n = Lam on
multiply connected tetrahedral domains: solvability checks, harmonic
space bases, particular solutions, weighted Hodge-type decompositions
and discrete Friedrichs constants.
"""

from .compat import (CompatibilityError, CompatReport, check_compatibility,
                     check_electric, check_magnetostatic, discretize_data)
from .decompose import (DecompositionResult, FriedrichsEstimate,
                        friedrichs_constant, hw_electric, hw_magnetic)
from .fields import CoefficientField
from .generators import cube, solid_torus, spherical_shell
from .harmonic import HarmonicBasis, electric_basis, magnetic_basis
from .linsolve import SolverConfig, SolverError, SolveStats
from .mesh import CutSurface, Mesh
from .mshio import load_msh, save_msh
from .presets import (COEFF_PRESETS, DATA_PRESETS, ProblemData,
                      coefficient_preset, data_preset)
from .solve import (PotentialResult, SolutionBundle, electric_diagnostics,
                    magnetostatic_diagnostics, solve_divcurl,
                    solve_electric, solve_magnetostatic,
                    vector_potential_normal, vector_potential_tangential)
from .vtkio import write_vtk
from .whitney import DofVector, incidence_matrices, interpolate, l2_norm

__version__ = "0.1.0"

__all__ = [
    "CoefficientField", "CompatReport", "CompatibilityError", "CutSurface",
    "DecompositionResult", "DofVector", "FriedrichsEstimate",
    "HarmonicBasis", "Mesh", "PotentialResult", "ProblemData",
    "SolutionBundle", "SolveStats", "SolverConfig", "SolverError",
    "COEFF_PRESETS", "DATA_PRESETS",
    "check_compatibility", "check_electric", "check_magnetostatic",
    "coefficient_preset", "cube", "data_preset", "discretize_data",
    "electric_basis", "electric_diagnostics", "friedrichs_constant",
    "hw_electric", "hw_magnetic", "incidence_matrices", "interpolate",
    "l2_norm", "load_msh", "magnetic_basis", "magnetostatic_diagnostics",
    "save_msh", "solid_torus", "solve_divcurl", "solve_electric",
    "solve_magnetostatic", "spherical_shell", "vector_potential_normal",
    "vector_potential_tangential", "write_vtk",
]
