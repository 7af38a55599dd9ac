"""Pauli-string algebra on bitmasks.

Qubit 0 is the leftmost tensor factor.  For the two-plaquette layout this is
the nu register, followed by the omega_1 qubits (MSB first) and the omega_2
qubits (MSB first).  With that ordering the computational-basis index of a
state is the usual big-endian integer, so qubit ``q`` of an ``n``-qubit string
lives at bit ``n - 1 - q`` of the X and Z masks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy.linalg import hadamard

from .errors import DimensionError, ValidityError

_SYMBOLS = "IXZY"  # index = x_bit + 2 * z_bit
_HERMITIAN_TOL = 1e-10
_CLAMP = 1e-13

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """A Hermitian Pauli string stored as X and Z bitmasks.

    ``Y`` on a qubit corresponds to both bits set; the Hermitian phase
    ``i**popcount(x & z)`` is implicit.
    """

    x: int
    z: int
    n_qubits: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidityError("n_qubits must be positive")
        lim = 1 << self.n_qubits
        if not (0 <= self.x < lim and 0 <= self.z < lim):
            raise ValidityError("bitmask exceeds the qubit count")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        label = label.strip().upper()
        if not label or any(ch not in "IXYZ" for ch in label):
            raise ValidityError(f"bad Pauli label {label!r}")
        n = len(label)
        x = z = 0
        for q, ch in enumerate(label):
            bit = 1 << (n - 1 - q)
            if ch in "XY":
                x |= bit
            if ch in "ZY":
                z |= bit
        return cls(x, z, n)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(0, 0, n_qubits)

    def axis(self, q: int) -> str:
        bit = self.n_qubits - 1 - q
        return _SYMBOLS[((self.x >> bit) & 1) + 2 * ((self.z >> bit) & 1)]

    @property
    def axes(self) -> tuple[str, ...]:
        return tuple(self.axis(q) for q in range(self.n_qubits))

    @property
    def label(self) -> str:
        return "".join(self.axes)

    def __str__(self) -> str:
        return self.label

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def support(self) -> tuple[int, ...]:
        """Qubit indices carrying a non-identity factor."""
        return tuple(q for q in range(self.n_qubits) if self.axis(q) != "I")

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def commutes(self, other: "PauliString") -> bool:
        if other.n_qubits != self.n_qubits:
            raise DimensionError("qubit counts differ")
        return ((self.x & other.z) ^ (self.z & other.x)).bit_count() % 2 == 0

    def restrict(self, qubits: Iterable[int]) -> "PauliString":
        """Sub-string on the given qubits, in the given order."""
        return PauliString.from_label("".join(self.axis(q) for q in qubits))

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for ch in self.axes:
            out = np.kron(out, _PAULI_1Q[ch])
        return out


def weight(p: PauliString) -> int:
    """Number of non-identity factors of ``p``."""
    return p.weight


@dataclass(frozen=True)
class PauliDecomposition:
    """Real-coefficient expansion ``sum_P c_P P`` of a Hermitian operator.

    Terms are kept in a canonical order (by label) and strings are unique.
    """

    n_qubits: int
    terms: tuple[tuple[PauliString, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        seen = set()
        for p, c in self.terms:
            if p.n_qubits != self.n_qubits:
                raise DimensionError("term qubit count differs from decomposition")
            if p.label in seen:
                raise ValidityError(f"duplicate string {p.label}")
            if not np.isfinite(c):
                raise ValidityError(f"non-finite coefficient for {p.label}")
            seen.add(p.label)

    @classmethod
    def from_mapping(cls, n_qubits: int, coeffs: Mapping[str, float]) -> "PauliDecomposition":
        items = sorted((k.upper(), float(v)) for k, v in coeffs.items())
        return cls(n_qubits, tuple((PauliString.from_label(k), v) for k, v in items))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[PauliString, float]]:
        return iter(self.terms)

    def as_dict(self) -> dict[str, float]:
        return {p.label: c for p, c in self.terms}

    def coefficient(self, label: str) -> float:
        return self.as_dict().get(label.upper(), 0.0)

    @property
    def identity_coefficient(self) -> float:
        return self.coefficient("I" * self.n_qubits)

    def non_identity(self) -> list[tuple[PauliString, float]]:
        return [(p, c) for p, c in self.terms if not p.is_identity()]

    def to_matrix(self) -> np.ndarray:
        d = 1 << self.n_qubits
        out = np.zeros((d, d), dtype=complex)
        idx = np.arange(d)
        parity = _popcount_table(d)
        for p, c in self.terms:
            # (X^x Z^z)_{j^x, j} = (-1)^{z.j}; Y phases via i^{|x&z|}
            phase = (1j) ** (p.x & p.z).bit_count()
            out[idx ^ p.x, idx] += c * phase * (1 - 2 * (parity[idx & p.z] & 1))
        return out

    def to_text(self) -> str:
        lines = []
        for p, c in self.terms:
            lines.append(f"{p.label} {np.format_float_positional(c, unique=True, min_digits=6)}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "PauliDecomposition":
        coeffs: dict[str, float] = {}
        n = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            label, value = line.split()
            if n is None:
                n = len(label)
            elif len(label) != n:
                raise DimensionError("inconsistent string lengths in text")
            coeffs[label] = float(value)
        if n is None:
            raise ValidityError("empty decomposition text")
        return cls.from_mapping(n, coeffs)


def _popcount_table(d: int) -> np.ndarray:
    return np.bitwise_count(np.arange(d, dtype=np.uint64)).astype(np.int64)


def _as_array(matrix) -> np.ndarray:
    m = getattr(matrix, "matrix", matrix)
    if hasattr(m, "toarray"):
        m = m.toarray()
    return np.asarray(m)


def decompose(matrix) -> PauliDecomposition:
    """Pauli decomposition ``c_P = 2^-N Tr(P M)`` of a Hermitian matrix.

    For each X-mask the diagonal band ``M[j, j^x]`` is gathered and a
    Walsh-Hadamard transform over the Z-mask gives every trace at once, so
    no ``2^N x 2^N`` string matrices are formed.

    Parameters
    ----------
    matrix : array_like or OperatorMatrix
        Square Hermitian matrix of dimension ``2**N``.

    Returns
    -------
    PauliDecomposition
        Nonzero terms; magnitudes below 1e-13 are dropped.
    """
    m = _as_array(matrix).astype(complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    d = m.shape[0]
    n = d.bit_length() - 1
    if d < 2 or (1 << n) != d:
        raise DimensionError(f"dimension {d} is not a power of two >= 2")
    if np.max(np.abs(m - m.conj().T)) > _HERMITIAN_TOL:
        raise ValidityError("matrix is not Hermitian within 1e-10")

    idx = np.arange(d)
    band = m[idx[None, :], idx[None, :] ^ idx[:, None]]  # band[x, j] = M[j, j^x]
    traces = band @ hadamard(d)  # traces[x, z] = Tr(X^x Z^z M)
    xs, zs = np.meshgrid(idx, idx, indexing="ij")
    phase = (1j) ** (_popcount_table(d)[xs & zs] % 4)
    coeffs = (phase * traces).real / d

    terms = []
    for x, z in zip(*np.nonzero(np.abs(coeffs) >= _CLAMP)):
        terms.append((PauliString(int(x), int(z), n), float(coeffs[x, z])))
    terms.sort(key=lambda t: t[0].label)
    return PauliDecomposition(n, tuple(terms))


def truncate(dec: PauliDecomposition, theta_min: float) -> tuple[PauliDecomposition, float]:
    """Drop non-identity terms with ``|c_P| <= theta_min``.

    Returns the truncated decomposition and ``delta``, the fraction of
    non-identity terms removed.  The identity term is always kept.
    """
    if theta_min < 0:
        raise ValidityError("theta_min must be non-negative")
    nonid = dec.non_identity()
    if theta_min == 0 or not nonid:
        return dec, 0.0
    kept = tuple((p, c) for p, c in dec.terms if p.is_identity() or abs(c) > theta_min)
    dropped = len(dec.terms) - len(kept)
    return PauliDecomposition(dec.n_qubits, kept), dropped / len(nonid)


def rank_terms(dec: PauliDecomposition) -> list[tuple[PauliString, float]]:
    """Non-identity terms in ascending truncation order.

    Terms are ordered by ``|c_P|`` (rounded to 1e-9 so that symmetry-related
    partners tie exactly); ties are ranked by label, the lexicographically
    larger label being the one kept longer.
    """
    return sorted(dec.non_identity(), key=lambda t: (round(abs(t[1]), 9), t[0].label))


def truncation_percentages(dec: PauliDecomposition) -> dict[str, float]:
    """Fraction of terms that must be dropped before each term is the smallest."""
    ranked = rank_terms(dec)
    n = len(ranked)
    return {p.label: i / n for i, (p, _) in enumerate(ranked)}


def truncate_fraction(dec: PauliDecomposition, delta: float) -> tuple[PauliDecomposition, float]:
    """Drop the ``ceil(delta * n)`` lowest-ranked non-identity terms.

    Unlike :func:`truncate`, this splits ties between equal-magnitude terms
    using the deterministic order of :func:`rank_terms`.  Returns the
    truncated decomposition and the largest dropped magnitude (0 if none).
    """
    if not 0.0 <= delta < 1.0:
        raise ValidityError(f"delta must lie in [0, 1), got {delta}")
    ranked = rank_terms(dec)
    n_drop = math.ceil(delta * len(ranked) - 1e-12)
    drop = {p.label for p, _ in ranked[:n_drop]}
    kept = tuple((p, c) for p, c in dec.terms if p.label not in drop)
    theta = max((abs(c) for _, c in ranked[:n_drop]), default=0.0)
    return PauliDecomposition(dec.n_qubits, kept), theta
