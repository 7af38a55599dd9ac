"""Two-plaquette Hamiltonian in the mixed basis and in the character irrep basis.

Mixed basis
-----------
States are ``|nu, n1, n2>`` with ``nu`` the Legendre index of the relative
angle and ``n1, n2`` grid indices of the two plaquette angles.  The row index
is ``(nu * N + n1) * N + n2``, i.e. a Kronecker product in the order
``(nu, omega_1, omega_2)``.  The wavefunction is the rescaled one,
``Psi = u / (4 sin(omega_1/2) sin(omega_2/2))``, so the radial operator
``d^2 + cot d`` becomes ``d^2 + 1/4`` and only the ``nu``-changing couplings
keep first derivatives.

The operator is split by the highest derivative each piece contains::

    H = H_dd2 + H_d + H_omega

* ``H_dd2``: ``-2 g^2 (Lap_1 + Lap_2)`` on every ``nu`` block.
* ``H_d``: the ``|nu - nu'| = 1`` couplings, built from the Legendre
  integrals of ``cos(Theta)`` and ``sin(Theta) d/dTheta``.
* ``H_omega``: everything diagonal on the grid, including ``H_B``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, NamedTuple

import numpy as np
import scipy.sparse as sp

from .digitize import DigitizationConfig, first_derivative, laplacian, sample
from .errors import UnsupportedConfigurationError, ValidityError
from .operator import OperatorMatrix
from .pauli import PauliDecomposition, decompose


class LegendreElements(NamedTuple):
    """Matrices ``<nu'| X |nu>`` in the orthonormal Legendre basis."""

    one: np.ndarray
    casimir: np.ndarray  # the Legendre operator, eigenvalues nu(nu+1)
    cos: np.ndarray
    sin_d: np.ndarray  # sin(Theta) d/dTheta


def legendre_matrix_elements(nu_max: int) -> LegendreElements:
    if nu_max < 0:
        raise ValidityError("nu_max must be non-negative")
    n = nu_max + 1
    nus = np.arange(n, dtype=float)
    cos = np.zeros((n, n))
    sin_d = np.zeros((n, n))
    for nu in range(nu_max):
        r = math.sqrt((2 * nu + 1) * (2 * nu + 3))
        cos[nu + 1, nu] = (nu + 1) / r
        cos[nu, nu + 1] = (nu + 1) / r
        sin_d[nu + 1, nu] = nu * (nu + 1) / r
        sin_d[nu, nu + 1] = -(nu + 1) * (nu + 2) / r
    return LegendreElements(np.eye(n), np.diag(nus * (nus + 1)), cos, sin_d)


def h_partial_coefficients(nu: int) -> tuple[float, float, float, float]:
    """Coefficients ``(A, B, C, D)`` of the raising and lowering couplings.

    ``A`` and ``B`` multiply ``d1 d2`` and ``(cot1 d2 + cot2 d1)`` in the
    ``nu -> nu + 1`` operator; ``D`` and ``C`` play the same role for
    ``nu -> nu - 1``.
    """
    if nu < 0:
        raise ValidityError("nu must be non-negative")
    up = math.sqrt((2 * nu + 1) * (2 * nu + 3))
    A = (nu + 1) / up
    B = -((nu + 1) ** 2) / (2 * up)
    if nu == 0:
        return A, B, 0.0, 0.0
    down = math.sqrt((2 * nu - 1) * (2 * nu + 1))
    return A, B, nu**2 / (2 * down), nu / down


def _kron(*ops) -> sp.csr_matrix:
    out = sp.csr_matrix(np.ones((1, 1)))
    for op in ops:
        out = sp.kron(out, sp.csr_matrix(op), format="csr")
    return out


def mixed_labels(cfg: DigitizationConfig) -> tuple[tuple[int, int, int], ...]:
    N = cfg.N
    return tuple((nu, a, b) for nu in range(cfg.nu_max + 1) for a in range(N) for b in range(N))


@dataclass(frozen=True)
class MixedBasisHamiltonian:
    """Digitized mixed-basis Hamiltonian with its named parts.

    All parts are sparse; ``total`` is ``h_dd2 + h_d + h_omega`` and
    ``h_electric`` is ``total - h_b``.
    """

    cfg: DigitizationConfig
    h_dd2: sp.csr_matrix
    h_d: sp.csr_matrix
    h_omega: sp.csr_matrix
    h_b: sp.csr_matrix
    drop_first_derivatives: bool = False

    @property
    def labels(self):
        return mixed_labels(self.cfg)

    @property
    def dim(self) -> int:
        return self.h_dd2.shape[0]

    def index(self, nu: int, n1: int, n2: int) -> int:
        N = self.cfg.N
        return (nu * N + n1) * N + n2

    @property
    def total(self) -> OperatorMatrix:
        return OperatorMatrix((self.h_dd2 + self.h_d + self.h_omega).tocsr(), self.labels)

    @property
    def electric(self) -> OperatorMatrix:
        return OperatorMatrix((self.h_dd2 + self.h_d + self.h_omega - self.h_b).tocsr(), self.labels)

    @property
    def magnetic(self) -> OperatorMatrix:
        return OperatorMatrix(self.h_b, self.labels)

    def part(self, name: Literal["dd2", "d", "omega", "b"]) -> OperatorMatrix:
        mats = {"dd2": self.h_dd2, "d": self.h_d, "omega": self.h_omega, "b": self.h_b}
        return OperatorMatrix(mats[name], self.labels)


def _grid_pieces(cfg: DigitizationConfig):
    N = cfg.N
    lap = laplacian(cfg).matrix
    d = first_derivative(cfg).matrix if N > 1 else np.zeros((1, 1))
    cot = np.diag(sample(lambda w: 1.0 / np.tan(w / 2), cfg))
    csc2 = np.diag(sample(lambda w: 1.0 / np.sin(w / 2) ** 2, cfg))
    cos = np.diag(sample(lambda w: np.cos(w / 2), cfg))
    return np.eye(N), lap, d, cot, csc2, cos


def build_mixed(cfg: DigitizationConfig, drop_first_derivatives: bool = False) -> MixedBasisHamiltonian:
    """Assemble the mixed-basis Hamiltonian for ``cfg``.

    Parameters
    ----------
    cfg : DigitizationConfig
    drop_first_derivatives : bool
        Remove every term containing a first derivative in omega.  The
        ``cot1 cot2`` coupling between neighbouring ``nu`` survives.
    """
    g2 = cfg.g**2
    I, lap, d, cot, csc2, cos = _grid_pieces(cfg)
    leg = legendre_matrix_elements(cfg.nu_max)
    n_grid = cfg.N**2

    kinetic = _kron(lap, I) + _kron(I, lap)
    h_dd2 = _kron(leg.one, -2.0 * g2 * kinetic)

    # nu-changing couplings; S + C is antisymmetric, C N + S + C is not
    s_plus_c = leg.sin_d + leg.cos
    h_d = _kron(0.25 * g2 * (leg.cos @ leg.casimir + s_plus_c), cot, cot)
    if not drop_first_derivatives:
        h_d = h_d + _kron(g2 * leg.cos, d, d)
        h_d = h_d - _kron(0.5 * g2 * s_plus_c, _kron(cot, d) + _kron(d, cot))

    mag = (2.0 / g2) * (2.0 * sp.identity(n_grid) - _kron(cos, I) - _kron(I, cos))
    h_b = _kron(leg.one, mag)
    centrifugal = _kron(csc2, I) + _kron(I, csc2) - 0.5 * sp.identity(n_grid)
    h_omega = 0.5 * g2 * (_kron(leg.casimir, centrifugal) - 2.0 * _kron(leg.one, sp.identity(n_grid))) + h_b

    return MixedBasisHamiltonian(
        cfg,
        h_dd2.tocsr(),
        sp.csr_matrix(h_d),
        h_omega.tocsr(),
        h_b.tocsr(),
        drop_first_derivatives,
    )


def pad_nu(mat, cfg: DigitizationConfig):
    """Embed a mixed-basis operator into the ``2**n_nu`` nu register.

    Unused nu levels get zero rows and columns, so the padded operator acts
    on ``n_nu + 2 n_q`` qubits.
    """
    n_nu_states = 1 << cfg.n_nu
    extra = (n_nu_states - (cfg.nu_max + 1)) * cfg.N**2
    m = sp.csr_matrix(mat)
    if extra == 0:
        return m
    return sp.block_diag([m, sp.csr_matrix((extra, extra))], format="csr")


def pauli_decomposition(op, cfg: DigitizationConfig) -> PauliDecomposition:
    """Pauli decomposition of a mixed-basis operator in qubit layout."""
    if not cfg.is_qubit_grid:
        raise UnsupportedConfigurationError("Pauli decomposition needs N = 2**n_q")
    m = op.matrix if isinstance(op, OperatorMatrix) else op
    return decompose(pad_nu(m, cfg).toarray())


def magnetic_observable(
    cfg: DigitizationConfig, normalization: Literal["plain", "hamiltonian"] = "plain"
) -> tuple[OperatorMatrix, PauliDecomposition | None]:
    """Magnetic energy operator, diagonal on the grid.

    ``"plain"`` gives ``2 - cos(omega_1/2) - cos(omega_2/2)``; ``"hamiltonian"``
    includes the ``2/g^2`` prefactor of the magnetic Hamiltonian.
    """
    _, _, _, _, _, cos = _grid_pieces(cfg)
    I = np.eye(cfg.N)
    diag = 2.0 * np.eye(cfg.N**2) - np.kron(cos, I) - np.kron(I, cos)
    if normalization == "hamiltonian":
        diag = diag * (2.0 / cfg.g**2)
    elif normalization != "plain":
        raise ValidityError("normalization must be 'plain' or 'hamiltonian'")
    op = OperatorMatrix(_kron(np.eye(cfg.nu_max + 1), diag), mixed_labels(cfg))
    dec = pauli_decomposition(op, cfg) if cfg.is_qubit_grid else None
    return op, dec


# ---------------------------------------------------------------------------
# character irrep basis


def _as_half_integer(j) -> Fraction:
    f = Fraction(j).limit_denominator(2)
    if f < 0 or abs(float(f) - float(j)) > 1e-12 or f.denominator not in (1, 2):
        raise ValidityError(f"J_max must be a non-negative half-integer, got {j}")
    return f


def irrep_labels(J_max) -> tuple[tuple[Fraction, Fraction, int], ...]:
    jm = _as_half_integer(J_max)
    js = [Fraction(k, 2) for k in range(int(2 * jm) + 1)]
    return tuple((a, b, nu) for a in js for b in js for nu in range(int(2 * min(a, b)) + 1))


def _c_plus(J: float, nu: int) -> float:
    return math.sqrt(max((2 * J + nu + 2) * (2 * J - nu), 0.0))


def _c_minus(J: float, nu: int) -> float:
    return math.sqrt(max((2 * J + nu + 1) * (2 * J - nu + 1), 0.0))


@dataclass(frozen=True)
class IrrepBasisHamiltonian:
    """Truncated character-irrep Hamiltonian, electric and magnetic parts kept apart."""

    g: float
    J_max: Fraction
    labels: tuple
    electric_matrix: np.ndarray
    trace_x: np.ndarray  # Tr X_1 + Tr X_2

    @property
    def electric(self) -> OperatorMatrix:
        return OperatorMatrix(self.electric_matrix, self.labels)

    @property
    def magnetic(self) -> OperatorMatrix:
        n = len(self.labels)
        return OperatorMatrix((4.0 * np.eye(n) - self.trace_x) / self.g**2, self.labels)

    @property
    def total(self) -> OperatorMatrix:
        return OperatorMatrix(self.electric_matrix + self.magnetic.matrix, self.labels)


def build_irrep(g: float, J_max) -> IrrepBasisHamiltonian:
    """Irrep-basis Hamiltonian over ``|J1 J2 nu>`` with ``J1, J2 <= J_max``.

    Electric part::

        g^2/2 [4 E1^2 + 6 E2^2 - 2 E_R2.E_L2 + 2 E_R1.E_R2 - 4 E_R1.E_L2]

    Magnetic part ``(4 - Tr X_1 - Tr X_2) / g^2``.
    """
    if g <= 0:
        raise ValidityError("g must be positive")
    labels = irrep_labels(J_max)
    index = {s: i for i, s in enumerate(labels)}
    n = len(labels)
    elec = np.zeros((n, n))
    trx = np.zeros((n, n))
    half = Fraction(1, 2)
    for (J1, J2, nu), i in index.items():
        j1, j2 = float(J1), float(J2)
        cas = nu * (nu + 1)
        e_r2_l2 = j2 * (j2 + 1) - cas / 2
        r1r2_diag, r1l2_diag = -0.25 * cas, 0.25 * cas
        elec[i, i] = 4 * j1 * (j1 + 1) + 6 * j2 * (j2 + 1) - 2 * e_r2_l2 + 2 * r1r2_diag - 4 * r1l2_diag
        # both bilinears carry -x/4 off the diagonal, so 2(-x/4) - 4(-x/4) = x/2
        up = (J1, J2, nu + 1)
        if up in index:
            x = _c_plus(j1, nu) * _c_plus(j2, nu) * (nu + 1) / math.sqrt((2 * nu + 1) * (2 * nu + 3))
            elec[index[up], i] += 0.5 * x
        down = (J1, J2, nu - 1)
        if nu >= 1 and down in index:
            x = _c_minus(j1, nu) * _c_minus(j2, nu) * nu / math.sqrt((2 * nu + 1) * (2 * nu - 1))
            elec[index[down], i] += 0.5 * x
        for which, J in ((0, J1), (1, J2)):
            j = float(J)
            raise_amp = math.sqrt(max((2 * j - nu + 1) * (2 * j + nu + 2), 0.0) / ((j + 1) * (2 * j + 1)))
            lower_amp = math.sqrt(max((2 * j - nu) * (2 * j + nu + 1), 0.0) / (j * (2 * j + 1))) if j > 0 else 0.0
            for dj, amp in ((half, raise_amp), (-half, lower_amp)):
                js = [J1, J2]
                js[which] = J + dj
                target = (js[0], js[1], nu)
                if amp and target in index:
                    trx[index[target], i] += amp / math.sqrt(2.0)
    return IrrepBasisHamiltonian(g, _as_half_integer(J_max), labels, 0.5 * g * g * elec, trx)
