"""Statevector execution, exact propagation and observable time series."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .circuit.ir import Circuit, Gate
from .digitize import DigitizationConfig
from .errors import DimensionError, ValidityError
from .operator import OperatorMatrix, as_matrix
from .parallel import worker_count
from .pauli import PauliDecomposition
from .spectrum import _fix_phases

NORM_TOL = 1e-10


# ---------------------------------------------------------------------------
# kernels shared with the density-matrix simulator


def apply_matrix(tensor: np.ndarray, mat: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract a ``2^k x 2^k`` matrix into the given qubit axes of ``tensor``."""
    k = len(axes)
    m = mat.reshape((2,) * (2 * k))
    out = np.tensordot(m, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _diag_phases(gate: Gate) -> np.ndarray:
    return np.diag(gate.matrix()).reshape((2,) * len(gate.qubits))


def apply_gate(tensor: np.ndarray, gate: Gate, offset: int = 0, conj: bool = False) -> np.ndarray:
    """Apply ``gate`` to qubit axes ``offset + q`` (conjugated if ``conj``)."""
    axes = [offset + q for q in gate.qubits]
    if gate.kind == "crz" or gate.kind == "rz":
        ph = _diag_phases(gate)
        if conj:
            ph = ph.conj()
        # broadcast phases over the remaining axes
        order = np.argsort(axes)
        ph = np.transpose(ph, order)
        shape = [1] * tensor.ndim
        for a in sorted(axes):
            shape[a] = 2
        return tensor * ph.reshape(shape)
    mat = gate.matrix()
    return apply_matrix(tensor, mat.conj() if conj else mat, axes)


# ---------------------------------------------------------------------------


@dataclass
class StateVector:
    amplitudes: np.ndarray
    registers: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 1 or a.size == 0:
            raise DimensionError("amplitudes must form a non-empty vector")
        nrm = np.linalg.norm(a)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValidityError(f"state is not normalized (norm {nrm})")
        self.amplitudes = a

    @property
    def n_qubits(self) -> int:
        n = self.amplitudes.size.bit_length() - 1
        if self.amplitudes.size != 1 << n:
            raise DimensionError("state does not live on qubits (dimension is not a power of two)")
        return n

    @classmethod
    def basis(cls, index: int, n_qubits: int, registers: dict | None = None) -> "StateVector":
        a = np.zeros(1 << n_qubits, dtype=complex)
        a[index] = 1.0
        return cls(a, dict(registers or {}))

    def expectation(self, op) -> float:
        m = op.to_matrix() if isinstance(op, PauliDecomposition) else as_matrix(op)
        return float(np.real(np.vdot(self.amplitudes, m @ self.amplitudes)))

    def restrict(self, n_keep: int) -> np.ndarray:
        """Amplitudes of the first ``n_keep`` qubits, assuming the rest are ``|0>``."""
        n = self.n_qubits
        a = self.amplitudes.reshape(1 << n_keep, 1 << (n - n_keep))
        if np.linalg.norm(a[:, 1:]) > 1e-9:
            raise ValidityError("trailing qubits are not in |0>")
        return a[:, 0].copy()


def _as_amplitudes(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)


def apply(circ: Circuit, psi, check_norm: bool = True) -> StateVector:
    """Run a circuit on a state; macros act as dense unitaries."""
    a = _as_amplitudes(psi)
    n = circ.n_qubits
    if a.size != 1 << n:
        raise DimensionError(f"state has {a.size} amplitudes, circuit needs {1 << n}")
    t = a.reshape((2,) * n) if n else a
    for g in circ.gates:
        t = apply_gate(t, g)
    out = t.reshape(-1) * np.exp(1j * circ.global_phase)
    if check_norm and abs(np.linalg.norm(out) - 1.0) > NORM_TOL:
        raise ValidityError("norm not preserved")
    return StateVector(out, dict(circ.registers))


def circuit_unitary(circ: Circuit) -> np.ndarray:
    """Dense unitary, built by applying the circuit to every basis column."""
    n = circ.n_qubits
    d = 1 << n
    t = np.eye(d, dtype=complex).reshape((2,) * n + (d,))
    for g in circ.gates:
        t = apply_gate(t, g)
    return t.reshape(d, d) * np.exp(1j * circ.global_phase)


def exact_evolve(H, psi0, t: float) -> StateVector:
    """``exp(-i H t) psi0`` through the eigendecomposition of ``H``."""
    op = H if isinstance(H, OperatorMatrix) else OperatorMatrix(as_matrix(H))
    op.check_hermitian()
    vals, vecs = _eig_cached(op)
    a = _as_amplitudes(psi0)
    if a.size != op.dim:
        raise DimensionError("state and operator dimensions differ")
    out = vecs @ (np.exp(-1j * vals * t) * (vecs.conj().T @ a))
    return StateVector(out)


_EIG_CACHE: dict[int, tuple] = {}


def _eig_cached(op: OperatorMatrix):
    key = id(op.matrix)
    hit = _EIG_CACHE.get(key)
    if hit is not None and hit[0] is op.matrix:
        return hit[1]
    m = op.dense()
    res = np.linalg.eigh(0.5 * (m + m.conj().T))
    _EIG_CACHE.clear()
    _EIG_CACHE[key] = (op.matrix, res)
    return res


def _canonical_block(V: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the span of ``V``'s columns.

    Pivot rows are chosen greedily in index order; the basis is then the
    Gram-Schmidt orthonormalization of ``V inv(V[pivots])``, whose columns
    have unit-pattern entries on the pivots.  This depends only on the
    subspace, not on the basis the eigensolver happened to return.
    """
    k = V.shape[1]
    rows: list[int] = []
    for r in range(V.shape[0]):
        trial = V[rows + [r]]
        if np.linalg.matrix_rank(trial, tol=1e-8) == len(rows) + 1:
            rows.append(r)
            if len(rows) == k:
                break
    W = V @ np.linalg.inv(V[rows])
    Q = np.zeros_like(W)
    for j in range(k):
        v = W[:, j] - Q[:, :j] @ (Q[:, :j].conj().T @ W[:, j])
        Q[:, j] = v / np.linalg.norm(v)
    return Q


def low_energy_basis(H, k: int, degeneracy_tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` lowest eigenpairs with canonical handling of degeneracies."""
    m = OperatorMatrix(as_matrix(H)).dense()
    if not 1 <= k <= m.shape[0]:
        raise ValidityError("k must lie in [1, dim]")
    vals, vecs = np.linalg.eigh(m)
    # extend to the end of a degenerate block straddling k
    end = k
    while end < len(vals) and vals[end] - vals[k - 1] <= degeneracy_tol:
        end += 1
    out = vecs[:, :end].astype(complex)
    i = 0
    while i < end:
        j = i + 1
        while j < end and vals[j] - vals[i] <= degeneracy_tol:
            j += 1
        if j - i > 1:
            out[:, i:j] = _canonical_block(out[:, i:j])
        i = j
    return vals[:k], _fix_phases(out[:, :k])


def prepare_low_energy(H, k: int = 5) -> StateVector:
    """``(1/sqrt k) sum_n |E_n>`` over the ``k`` lowest eigenvectors."""
    _, vecs = low_energy_basis(H, k)
    psi = vecs.sum(axis=1) / math.sqrt(k)
    return StateVector(psi / np.linalg.norm(psi))


# ---------------------------------------------------------------------------
# time series


def parse_times(grid: str | Sequence[float]) -> np.ndarray:
    """``"start:stop:step"`` with an inclusive stop (1e-12 slack), or a list."""
    if not isinstance(grid, str):
        return np.asarray(grid, dtype=float)
    parts = grid.split(":")
    if len(parts) == 1:
        return np.array([float(parts[0])])
    if len(parts) != 3:
        raise ValidityError("time grid must be start:stop:step")
    a, b, s = map(float, parts)
    if s <= 0 or b < a:
        raise ValidityError("time grid needs step > 0 and stop >= start")
    n = int(math.floor((b - a) / s + 1e-12)) + 1
    return np.round(a + s * np.arange(n), 12)


def table_schedule(t: float) -> int:
    """One step up to ``t = 0.1``, two half-steps beyond."""
    return 1 if t < 0.15 else 2


@dataclass
class RunRecord:
    times: np.ndarray
    values: np.ndarray
    mode: Literal["exact-expm", "trotter-ideal", "noisy-mitigated"]
    stderr: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise DimensionError("times and values differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValidityError("times must be strictly increasing")
        if self.mode == "noisy-mitigated" and self.stderr is None:
            raise ValidityError("noisy records need bootstrap errors")
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value", "stderr", "mode"])
        for i, (t, v) in enumerate(zip(self.times, self.values)):
            e = "" if self.stderr is None else f"{self.stderr[i]:.17g}"
            w.writerow([f"{t:.17g}", f"{v:.17g}", e, self.mode])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, provenance: dict | None = None) -> "RunRecord":
        rows = list(csv.DictReader(io.StringIO(text)))
        err = [r["stderr"] for r in rows]
        stderr = None if all(e == "" for e in err) else np.array([float(e) for e in err])
        return cls(
            np.array([float(r["t"]) for r in rows]),
            np.array([float(r["value"]) for r in rows]),
            rows[0]["mode"] if rows else "exact-expm",
            stderr,
            dict(provenance or {}),
        )

    def sidecar(self) -> str:
        return json.dumps({"mode": self.mode, "n": len(self.times), **self.provenance}, sort_keys=True, indent=2, default=str)


def _initial_state(dim: int, psi0) -> np.ndarray:
    if psi0 is None:
        a = np.zeros(dim, dtype=complex)
        a[0] = 1.0
        return a
    return _as_amplitudes(psi0)


def observable_series(
    mode: Literal["exact-expm", "trotter-ideal"],
    cfg: DigitizationConfig,
    obs,
    times,
    *,
    H=None,
    psi0=None,
    delta: float = 0.0,
    order: int = 2,
    steps: int | Callable[[float], int] | str = "table",
    pipeline: Literal["pauli", "diffop"] = "pauli",
    workers: int | None = None,
) -> RunRecord:
    """Expectation of ``obs`` along a time grid.

    ``exact-expm`` propagates with ``H`` (default: the full mixed-basis
    Hamiltonian).  ``trotter-ideal`` runs the circuit pipeline without
    noise; ``delta`` and ``order`` apply to the Pauli pipeline and
    ``steps="table"`` selects one step at ``t <= 0.1`` and two beyond.
    """
    from .circuit import trotter_diffop, trotter_pauli
    from .hamiltonian import build_mixed, pauli_decomposition

    times = parse_times(times)
    obs_m = obs.to_matrix() if isinstance(obs, PauliDecomposition) else as_matrix(obs)
    if mode == "exact-expm":
        Hop = H if H is not None else build_mixed(cfg).total
        if isinstance(Hop, PauliDecomposition):
            Hop = OperatorMatrix(Hop.to_matrix())
        psi = _initial_state(OperatorMatrix(as_matrix(Hop)).dim, psi0)

        def one(t):
            st = exact_evolve(Hop, psi, t)
            return float(np.real(np.vdot(st.amplitudes, obs_m @ st.amplitudes)))

        prov = {"delta": None}
    elif mode == "trotter-ideal":
        step_fn = table_schedule if steps == "table" else (steps if callable(steps) else (lambda t, s=int(steps): s))
        if pipeline == "pauli":
            dec = H if isinstance(H, PauliDecomposition) else pauli_decomposition(build_mixed(cfg).total, cfg)
            psi = _initial_state(1 << dec.n_qubits, psi0)

            def one(t):
                st = apply(trotter_pauli(dec, t, order, step_fn(t), delta, cfg), psi)
                return float(np.real(np.vdot(st.amplitudes, obs_m @ st.amplitudes)))

        else:
            base = _initial_state(obs_m.shape[0], psi0)
            psi = np.kron(base, np.eye(4)[0])  # ancillas in |00>

            def one(t):
                st = apply(trotter_diffop(cfg, t, step_fn(t)), psi)
                a = st.restrict(st.n_qubits - 2)
                return float(np.real(np.vdot(a, obs_m @ a)))

        prov = {"delta": delta, "order": order, "pipeline": pipeline}
    else:
        raise ValidityError(f"unsupported mode {mode!r}")
    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        vals = list(pool.map(one, times))
    return RunRecord(times, np.array(vals), mode, None, {"cfg": json.loads(cfg.to_json()), **prov})
