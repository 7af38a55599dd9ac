"""Gate-level intermediate representation.

Qubits are global integers; registers give them names.  Qubit 0 is the
most significant bit of a statevector index, matching the Pauli-string
ordering.  ``RZ(l) = exp(-i l Z / 2)`` and ``P(phi) = diag(1, e^{i phi})``.
A ``crz`` gate stores its target first, then its controls; it applies
``RZ(theta)`` to the target when every control is ``|1>``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from ..digitize import dst2
from ..errors import DimensionError, ValidityError

SINGLE = {"h", "s", "sdg", "x", "y", "z"}
PARAM1 = {"rz", "p"}
SELF_INVERSE = {"h", "x", "y", "z", "cx"}
INVERSE_NAME = {"s": "sdg", "sdg": "s"}

_SQ2 = 1.0 / math.sqrt(2.0)
_FIXED = {
    "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "s": np.diag([1, 1j]).astype(complex),
    "sdg": np.diag([1, -1j]).astype(complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.diag([1, -1]).astype(complex),
}


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def macro_unitary(name: str, n: int) -> np.ndarray:
    """Dense unitary of a named macro acting on ``n`` qubits."""
    if name == "dst2":
        return dst2(1 << n).matrix.astype(complex)
    if name == "dst2_inv":
        return dst2(1 << n).matrix.T.astype(complex)
    raise ValidityError(f"unknown macro {name!r}")


def macro_nominal_cx(name: str, n: int) -> int:
    """Nominal two-qubit count used in estimates (quadratic in register size)."""
    return n * n


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    name: str = ""  # macro name

    def __post_init__(self):
        k = self.kind
        if k in SINGLE:
            ok = len(self.qubits) == 1 and not self.params
        elif k in PARAM1:
            ok = len(self.qubits) == 1 and len(self.params) == 1
        elif k == "cx":
            ok = len(self.qubits) == 2 and self.qubits[0] != self.qubits[1] and not self.params
        elif k == "crz":
            ok = len(self.qubits) >= 1 and len(set(self.qubits)) == len(self.qubits) and len(self.params) == 1
        elif k == "macro":
            ok = bool(self.name) and len(set(self.qubits)) == len(self.qubits) >= 1
        else:
            raise ValidityError(f"unknown gate kind {k!r}")
        if not ok:
            raise ValidityError(f"malformed gate {self}")
        if any(not math.isfinite(p) for p in self.params):
            raise ValidityError("gate parameters must be finite")

    @property
    def target(self) -> int:
        return self.qubits[-1] if self.kind == "cx" else self.qubits[0]

    @property
    def controls(self) -> tuple[int, ...]:
        if self.kind == "cx":
            return self.qubits[:1]
        if self.kind == "crz":
            return self.qubits[1:]
        return ()

    def matrix(self) -> np.ndarray:
        """Dense matrix on ``self.qubits`` in the listed order."""
        k = self.kind
        if k in _FIXED:
            return _FIXED[k]
        if k == "rz":
            return rz_matrix(self.params[0])
        if k == "p":
            return np.diag([1.0, np.exp(1j * self.params[0])])
        if k == "cx":
            return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
        if k == "crz":
            # qubit order (target, controls...); controls all 1 <=> low bits all set
            n = len(self.qubits)
            d = np.ones(1 << n, dtype=complex)
            mask = (1 << (n - 1)) - 1
            lo, hi = rz_matrix(self.params[0]).diagonal()
            d[mask] = lo
            d[(1 << (n - 1)) | mask] = hi
            return np.diag(d)
        return macro_unitary(self.name, len(self.qubits))

    def inverse(self) -> "Gate":
        k = self.kind
        if k in SELF_INVERSE:
            return self
        if k in INVERSE_NAME:
            return Gate(INVERSE_NAME[k], self.qubits)
        if k in ("rz", "p", "crz"):
            return Gate(k, self.qubits, (-self.params[0],))
        if self.name.endswith("_inv"):
            return Gate("macro", self.qubits, (), self.name[:-4])
        return Gate("macro", self.qubits, (), self.name + "_inv")

    def is_diagonal(self) -> bool:
        return self.kind in ("rz", "p", "crz", "z", "s", "sdg")


@dataclass
class Circuit:
    """Ordered gate list over named registers.

    ``global_phase`` collects phases from identity-string rotations so that
    the dense unitary is exact, not merely exact up to phase.
    """

    registers: dict[str, tuple[int, ...]]
    gates: list[Gate] = field(default_factory=list)
    global_phase: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        seen: set[int] = set()
        for name, qs in self.registers.items():
            if seen & set(qs):
                raise ValidityError(f"register {name} overlaps another register")
            seen |= set(qs)
        if seen != set(range(len(seen))):
            raise ValidityError("register qubits must be exactly 0..n-1")
        for gt in self.gates:
            self._check(gt)

    @classmethod
    def from_sizes(cls, sizes: Mapping[str, int], **kw) -> "Circuit":
        regs, start = {}, 0
        for name, size in sizes.items():
            regs[name] = tuple(range(start, start + size))
            start += size
        return cls(regs, **kw)

    @property
    def n_qubits(self) -> int:
        return sum(len(q) for q in self.registers.values())

    def _check(self, gate: Gate) -> None:
        if any(not 0 <= q < self.n_qubits for q in gate.qubits):
            raise DimensionError(f"gate {gate} addresses a qubit outside the circuit")

    def append(self, gate: Gate) -> "Circuit":
        self._check(gate)
        self.gates.append(gate)
        return self

    def add(self, kind: str, *qubits: int, params: Iterable[float] = (), name: str = "") -> "Circuit":
        return self.append(Gate(kind, tuple(int(q) for q in qubits), tuple(float(p) for p in params), name))

    def extend(self, other: "Circuit") -> "Circuit":
        if other.n_qubits > self.n_qubits:
            raise DimensionError("appended circuit is wider than the target")
        for gt in other.gates:
            self.append(gt)
        self.global_phase += other.global_phase
        return self

    def copy(self, gates: Iterable[Gate] | None = None) -> "Circuit":
        return Circuit(
            dict(self.registers),
            list(self.gates if gates is None else gates),
            self.global_phase,
            json.loads(json.dumps(self.metadata, default=_json_default)),
        )

    def inverse(self) -> "Circuit":
        return Circuit(dict(self.registers), [g.inverse() for g in reversed(self.gates)], -self.global_phase, dict(self.metadata))

    def __add__(self, other: "Circuit") -> "Circuit":
        return self.copy().extend(other)

    def count(self, kind: str | None = None) -> int:
        if kind is None:
            return len(self.gates)
        return sum(1 for g in self.gates if g.kind == kind)

    def cx_count(self) -> int:
        return self.count("cx")

    def depth(self) -> int:
        level = [0] * self.n_qubits
        for g in self.gates:
            d = 1 + max(level[q] for q in g.qubits)
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)

    def qubit(self, register: str, index: int) -> int:
        return self.registers[register][index]

    def address(self, q: int) -> str:
        for name, qs in self.registers.items():
            if q in qs:
                return f"q[{name},{qs.index(q)}]"
        raise DimensionError(f"qubit {q} not in any register")

    def unitary(self) -> np.ndarray:
        from ..sim import circuit_unitary

        return circuit_unitary(self)

    # -- text format -----------------------------------------------------
    def to_text(self) -> str:
        lines = [
            "# registers " + json.dumps({k: len(v) for k, v in self.registers.items()}),
            "# global_phase " + repr(float(self.global_phase)),
            "# metadata " + json.dumps(self.metadata, sort_keys=True, default=_json_default),
        ]
        for g in self.gates:
            a = [self.address(q) for q in g.qubits]
            if g.kind in SINGLE:
                lines.append(f"{g.kind} {a[0]}")
            elif g.kind in PARAM1:
                lines.append(f"{g.kind} {g.params[0]!r} {a[0]}")
            elif g.kind == "cx":
                lines.append(f"cx {a[0]} {a[1]}")
            elif g.kind == "crz":
                lines.append(f"crz {g.params[0]!r} {a[0]} ctrl {' '.join(a[1:])}".rstrip())
            else:
                reg = self._register_of(g.qubits)
                target = reg if reg else " ".join(a)
                lines.append(f"macro {g.name} {target}")
        return "\n".join(lines) + "\n"

    def _register_of(self, qubits: tuple[int, ...]) -> str | None:
        for name, qs in self.registers.items():
            if tuple(qs) == tuple(qubits):
                return name
        return None

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        sizes: dict[str, int] = {}
        phase = 0.0
        meta: dict = {}
        body = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("# registers "):
                sizes = json.loads(line[len("# registers ") :])
            elif line.startswith("# global_phase "):
                phase = float(line[len("# global_phase ") :])
            elif line.startswith("# metadata "):
                meta = json.loads(line[len("# metadata ") :])
            elif not line.startswith("#"):
                body.append(line)
        circ = cls.from_sizes(sizes, global_phase=phase, metadata=meta)

        def q(tok: str) -> int:
            m = re.fullmatch(r"q\[(\w+),(\d+)\]", tok)
            if not m:
                raise ValidityError(f"bad qubit address {tok!r}")
            return circ.registers[m.group(1)][int(m.group(2))]

        for line in body:
            tok = line.split()
            kind = tok[0]
            if kind in SINGLE:
                circ.add(kind, q(tok[1]))
            elif kind in PARAM1:
                circ.add(kind, q(tok[2]), params=[float(tok[1])])
            elif kind == "cx":
                circ.add("cx", q(tok[1]), q(tok[2]))
            elif kind == "crz":
                ctrl = [q(t) for t in tok[4:]] if len(tok) > 3 else []
                circ.add("crz", q(tok[2]), *ctrl, params=[float(tok[1])])
            elif kind == "macro":
                qs = circ.registers[tok[2]] if tok[2] in circ.registers else tuple(q(t) for t in tok[2:])
                circ.add("macro", *qs, name=tok[1])
            else:
                raise ValidityError(f"unknown instruction {line!r}")
        return circ


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_json"):
        return json.loads(o.to_json())
    raise TypeError(f"not serializable: {type(o)}")


def mixed_layout(n_nu: int, n_q: int, ancillas: bool = False) -> dict[str, int]:
    """Register sizes for the ``(nu, omega_1, omega_2)`` layout."""
    sizes = {"nu": n_nu, "omega1": n_q, "omega2": n_q}
    if ancillas:
        sizes.update({"anc1": 1, "anc2": 1})
    return sizes
