"""Finite grids for the gauge-field angles omega_1, omega_2.

Each angle is sampled on ``N`` midpoints of ``[0, omega_max]``:
``omega_n = d_omega * (n + 1/2)`` with ``d_omega = omega_max / N``.  The
second derivative is the exact Dirichlet Laplacian diagonalized by a type-II
discrete sine transform; the first derivative is a central difference.

The central-difference step is a convention choice.  ``"interior"`` uses
``h = omega_max / (N + 1)``, the spacing of the Dirichlet interior grid that
the sine transform is exact on, and is the default.  ``"cell"`` uses
``h = d_omega``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Callable, Literal

import numpy as np

from .errors import SingularityError, ValidityError
from .pauli import PauliDecomposition, decompose

TWO_PI = 2.0 * math.pi
SPACINGS = ("interior", "cell")


def omega_max_analytic(g: float, N: int) -> float:
    """Heuristic optimal cutoff ``min(g (N-1) sqrt(sqrt(8) pi / N), 2 pi)``."""
    if g <= 0:
        raise ValidityError("g must be positive")
    if N < 2:
        raise ValidityError("N must be at least 2")
    return min(g * (N - 1) * math.sqrt(math.sqrt(8.0) * math.pi / N), TWO_PI)


@dataclass(frozen=True)
class DigitizationConfig:
    """Parameters fixing the finite Hilbert space.

    ``omega_max="auto"`` resolves to :func:`omega_max_analytic`.  ``n_omega``
    overrides ``2**n_q`` for purely classical studies on grids whose size is
    not a power of two; circuit and Pauli routines reject such configs.
    """

    g: float
    n_q: int | None = 2
    nu_max: int = 1
    omega_max: float | str = "auto"
    derivative_spacing: Literal["interior", "cell"] = "interior"
    n_omega: int | None = None

    def __post_init__(self):
        if not (self.g > 0 and math.isfinite(self.g)):
            raise ValidityError(f"g must be a positive finite number, got {self.g}")
        if self.nu_max < 0:
            raise ValidityError("nu_max must be non-negative")
        if self.derivative_spacing not in SPACINGS:
            raise ValidityError(f"derivative_spacing must be one of {SPACINGS}")
        if self.n_omega is None:
            if self.n_q is None or self.n_q < 0:
                raise ValidityError("n_q must be a non-negative integer")
        else:
            if self.n_omega < 1:
                raise ValidityError("n_omega must be positive")
            if self.n_q is not None and (1 << self.n_q) != self.n_omega:
                raise ValidityError("n_q and n_omega disagree")
            if self.n_omega & (self.n_omega - 1) == 0:
                object.__setattr__(self, "n_q", self.n_omega.bit_length() - 1)
        if isinstance(self.omega_max, str):
            if self.omega_max != "auto":
                raise ValidityError("omega_max must be a number or 'auto'")
            object.__setattr__(self, "omega_max", omega_max_analytic(self.g, max(self.N, 2)))
        w = float(self.omega_max)
        if not (0 < w <= TWO_PI + 1e-12):
            raise ValidityError(f"omega_max must lie in (0, 2pi], got {w}")
        object.__setattr__(self, "omega_max", min(w, TWO_PI))

    @property
    def N(self) -> int:
        return self.n_omega if self.n_omega is not None else 1 << self.n_q

    @property
    def delta_omega(self) -> float:
        return self.omega_max / self.N

    @property
    def derivative_step(self) -> float:
        if self.derivative_spacing == "interior":
            return self.omega_max / (self.N + 1)
        return self.delta_omega

    @property
    def n_nu(self) -> int:
        """Qubits needed for the nu register."""
        return (self.nu_max).bit_length()

    @property
    def is_qubit_grid(self) -> bool:
        return self.N & (self.N - 1) == 0

    def replace(self, **changes) -> "DigitizationConfig":
        d = asdict(self)
        d.update(changes)
        if "n_omega" in changes and "n_q" not in changes:
            d["n_q"] = None
        if "n_q" in changes and "n_omega" not in changes:
            d["n_omega"] = None
        return DigitizationConfig(**d)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DigitizationConfig":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class GridOperator:
    """Matrix acting on a single omega register."""

    matrix: np.ndarray
    kind: Literal["diagonal-function", "first-derivative", "laplacian", "dst"]

    @property
    def N(self) -> int:
        return self.matrix.shape[0]


def grid_points(cfg: DigitizationConfig) -> np.ndarray:
    return cfg.delta_omega * (np.arange(cfg.N) + 0.5)


def dst2(N: int) -> GridOperator:
    """Orthogonal type-II discrete sine transform, rows indexed by momentum."""
    if N < 1:
        raise ValidityError("N must be positive")
    n = np.arange(N) + 0.5
    k = np.arange(1, N + 1)
    mat = math.sqrt(2.0 / N) * np.sin(np.pi * np.outer(k, n) / N)
    mat[-1] = math.sqrt(1.0 / N) * np.sin(np.pi * n)
    return GridOperator(mat, "dst")


def momenta(cfg: DigitizationConfig) -> np.ndarray:
    """Momentum ``pi (m+1) / omega_max`` on DST row ``m``."""
    return np.pi * np.arange(1, cfg.N + 1) / cfg.omega_max


def laplacian(cfg: DigitizationConfig) -> GridOperator:
    d = dst2(cfg.N).matrix
    mat = d.T @ (-(momenta(cfg) ** 2)[:, None] * d)
    return GridOperator(0.5 * (mat + mat.T), "laplacian")


def first_derivative(cfg: DigitizationConfig) -> GridOperator:
    """Central difference ``(f[n+1] - f[n-1]) / 2h`` as a matrix.

    Edge rows omit the missing neighbour, consistent with Dirichlet
    boundaries.  ``h`` is ``cfg.derivative_step``.
    """
    N = cfg.N
    if N == 1:
        warnings.warn("first derivative on a single grid point is the zero matrix", stacklevel=2)
        return GridOperator(np.zeros((1, 1)), "first-derivative")
    h = cfg.derivative_step
    mat = (np.eye(N, k=1) - np.eye(N, k=-1)) / (2.0 * h)
    return GridOperator(mat, "first-derivative")


def sample(f: Callable[[np.ndarray], np.ndarray], cfg: DigitizationConfig) -> np.ndarray:
    """Evaluate ``f`` on the grid, rejecting non-finite samples."""
    w = grid_points(cfg)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(f(w), dtype=float) * np.ones_like(w)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise SingularityError(f"function is not finite at omega={w[bad[0]]!r} (index {bad[0]})")
    return vals


def diagonal_function(
    f: Callable[[np.ndarray], np.ndarray], cfg: DigitizationConfig
) -> tuple[GridOperator, PauliDecomposition | None]:
    """``diag(f(omega_n))`` and its Z-string decomposition.

    The decomposition is ``None`` when ``N`` is not a power of two.
    """
    vals = sample(f, cfg)
    op = GridOperator(np.diag(vals), "diagonal-function")
    if cfg.N < 2 or not cfg.is_qubit_grid:
        return op, None
    return op, decompose(op.matrix)
