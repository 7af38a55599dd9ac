"""Digitized two-plaquette SU(2) lattice Hamiltonian: build, diagonalize, compile, simulate."""
from .digitize import DigitizationConfig, omega_max_analytic
from .errors import (
    DimensionError,
    NumericError,
    QubitBudgetError,
    SingularityError,
    Su2LabError,
    UnsupportedConfigurationError,
    ValidityError,
)
from .hamiltonian import build_irrep, build_mixed, magnetic_observable, pauli_decomposition
from .operator import OperatorMatrix
from .pauli import PauliDecomposition, PauliString, decompose, truncate, weight

__version__ = "0.1.0"

__all__ = [
    "DigitizationConfig",
    "DimensionError",
    "NumericError",
    "OperatorMatrix",
    "PauliDecomposition",
    "PauliString",
    "QubitBudgetError",
    "SingularityError",
    "Su2LabError",
    "UnsupportedConfigurationError",
    "ValidityError",
    "build_irrep",
    "build_mixed",
    "decompose",
    "magnetic_observable",
    "omega_max_analytic",
    "pauli_decomposition",
    "truncate",
    "weight",
]
