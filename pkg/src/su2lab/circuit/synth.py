"""Pauli-string rotations and the product-formula circuits built from them."""
from __future__ import annotations

from typing import Sequence

from ..digitize import DigitizationConfig
from ..errors import ValidityError
from ..pauli import PauliDecomposition, PauliString, truncate_fraction
from .ir import Circuit, Gate, mixed_layout


def rotation_gates(P: PauliString, theta: float, qubits: Sequence[int] | None = None) -> list[Gate]:
    """Gates for ``exp(-i theta P)``; ``qubits[j]`` hosts factor ``j`` of ``P``.

    Basis change (H for X, Sdg then H for Y), a CX staircase along the
    support in ascending order, ``RZ(2 theta)`` on the last support qubit,
    then everything undone.  The identity string yields no gates.
    """
    qubits = tuple(range(P.n_qubits)) if qubits is None else tuple(qubits)
    if len(qubits) != P.n_qubits:
        raise ValidityError("qubit map length does not match the string")
    sup = P.support()
    if not sup:
        return []
    pre: list[Gate] = []
    for j in sup:
        a = P.axis(j)
        if a == "X":
            pre.append(Gate("h", (qubits[j],)))
        elif a == "Y":
            pre.append(Gate("sdg", (qubits[j],)))
            pre.append(Gate("h", (qubits[j],)))
    ladder = [Gate("cx", (qubits[a], qubits[b])) for a, b in zip(sup, sup[1:])]
    core = [Gate("rz", (qubits[sup[-1]],), (2.0 * theta,))]
    post = [g.inverse() for g in reversed(pre + ladder)]
    return pre + ladder + core + post


def pauli_rotation(P: PauliString, theta: float) -> Circuit:
    """Circuit equal to ``exp(-i theta P)``, with ``2 (w - 1)`` CX gates.

    A weight-0 string gives an empty circuit whose global phase is ``-theta``.
    """
    circ = Circuit.from_sizes({"q": P.n_qubits})
    if P.is_identity():
        circ.global_phase = -theta
    for g in rotation_gates(P, theta):
        circ.append(g)
    return circ


def z_string_gates(zs: Sequence[int], theta: float, controls: Sequence[int] = ()) -> list[Gate]:
    """``exp(-i theta Z_zs)`` restricted to the subspace where all controls are 1.

    Parity of ``zs`` is gathered on its last qubit, which then carries a
    (multi-)controlled ``RZ(2 theta)``.
    """
    zs = list(zs)
    if not zs:
        raise ValidityError("empty Z support")
    if set(zs) & set(controls):
        raise ValidityError("controls overlap the Z support")
    ladder = [Gate("cx", (a, b)) for a, b in zip(zs, zs[1:])]
    t = zs[-1]
    core = Gate("crz", (t, *controls), (2.0 * theta,)) if controls else Gate("rz", (t,), (2.0 * theta,))
    return ladder + [core] + list(reversed(ladder))


# ---------------------------------------------------------------------------
# product formulas


def _nu_qubits(n_qubits: int, cfg: DigitizationConfig | None) -> int:
    if cfg is None:
        return 1
    n_nu = cfg.n_nu
    if n_nu + 2 * cfg.n_q != n_qubits:
        raise ValidityError("decomposition width does not match the configuration")
    return n_nu


def group_of(P: PauliString, n_nu: int = 1) -> int:
    """1: no support on nu.  2: nu part is a non-empty Z string.  3: otherwise."""
    nu = P.axes[:n_nu]
    if all(a == "I" for a in nu):
        return 1
    if all(a in "IZ" for a in nu):
        return 2
    return 3


def trotter_groups(dec: PauliDecomposition, n_nu: int = 1) -> dict[int, list[tuple[PauliString, float]]]:
    """Non-identity terms split into groups, each sorted by descending ``|c|``."""
    groups: dict[int, list] = {1: [], 2: [], 3: []}
    for P, c in dec.non_identity():
        groups[group_of(P, n_nu)].append((P, c))
    for terms in groups.values():
        terms.sort(key=lambda pc: (-abs(pc[1]), pc[0].label))
    return groups


def _layer(circ: Circuit, terms, tau: float) -> None:
    for P, c in terms:
        for g in rotation_gates(P, c * tau, range(P.n_qubits)):
            circ.append(g)


def trotter_pauli(
    dec: PauliDecomposition,
    t: float,
    order: int = 2,
    steps: int = 1,
    delta: float = 0.0,
    cfg: DigitizationConfig | None = None,
) -> Circuit:
    """Product-formula circuit for ``exp(-i t H)`` with ``H`` given as Pauli terms.

    The decomposition is first truncated to drop the fraction ``delta`` of
    smallest non-identity terms.  Per step of length ``tau = t / steps``:

    * order 1 applies U1, then U2, then U3;
    * order 2 applies U1(tau/2), U2, U3, then U1(tau/2) in reverse order.

    In matrix form order 1 is ``U3 U2 U1``.
    """
    if order not in (1, 2):
        raise ValidityError("order must be 1 or 2")
    if steps < 1:
        raise ValidityError("steps must be positive")
    kept, _ = truncate_fraction(dec, delta)
    n_nu = _nu_qubits(dec.n_qubits, cfg)
    groups = trotter_groups(kept, n_nu)
    sizes = mixed_layout(n_nu, (dec.n_qubits - n_nu) // 2) if (dec.n_qubits - n_nu) % 2 == 0 else {"q": dec.n_qubits}
    circ = Circuit.from_sizes(sizes)
    tau = t / steps
    for _ in range(steps):
        if order == 1:
            _layer(circ, groups[1], tau)
            _layer(circ, groups[2], tau)
            _layer(circ, groups[3], tau)
        else:
            _layer(circ, groups[1], tau / 2)
            _layer(circ, groups[2], tau)
            _layer(circ, groups[3], tau)
            _layer(circ, groups[1][::-1], tau / 2)
    circ.global_phase = -kept.identity_coefficient * t
    circ.metadata = {
        "pipeline": "pauli",
        "t": t,
        "order": order,
        "steps": steps,
        "delta": delta,
        "retained": len(kept.non_identity()),
        "groups": {str(k): [P.label for P, _ in v] for k, v in groups.items()},
        "intra_group_order": "descending |c|, then label",
    }
    if cfg is not None:
        circ.metadata["cfg"] = cfg.to_json()
    return circ


def mitigation_circuit(
    dec: PauliDecomposition,
    t: float,
    order: int = 2,
    steps: int = 2,
    delta: float = 0.0,
    cfg: DigitizationConfig | None = None,
) -> Circuit:
    """Identity-valued companion of a ``steps``-step physics circuit.

    The first half of the steps runs forward in time and the second half
    undoes it, so every Z-string expectation on the output equals its
    value on the input.  ``steps`` must be even; the gate count matches the
    physics circuit.
    """
    if steps < 2 or steps % 2:
        raise ValidityError("mitigation circuit needs an even number of steps (>= 2)")
    half = trotter_pauli(dec, t * (steps // 2) / steps, order, steps // 2, delta, cfg)
    circ = half + half.inverse()
    circ.metadata = dict(half.metadata, t=t, steps=steps, role="mitigation")
    return circ
