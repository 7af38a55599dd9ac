"""Circuit rewriting passes."""
from __future__ import annotations

from itertools import combinations

from .ir import Circuit, Gate
from .synth import z_string_gates

_CANCEL = {("h", "h"), ("x", "x"), ("y", "y"), ("z", "z"), ("s", "sdg"), ("sdg", "s"), ("cx", "cx")}


def expand_crz(circ: Circuit) -> Circuit:
    """Replace every controlled RZ by CX and RZ gates.

    With ``m`` controls, ``CRZ(l) = prod_S exp(-i (l/2) 2^-m (-1)^|S| Z_t Z_S)``
    over all subsets ``S`` of the controls; each factor is a Z-string
    rotation.  The expansion is exact.
    """
    out: list[Gate] = []
    for g in circ.gates:
        if g.kind != "crz":
            out.append(g)
            continue
        t, ctrl = g.qubits[0], g.qubits[1:]
        m = len(ctrl)
        base = 0.5 * g.params[0] / (1 << m)
        for r in range(m + 1):
            for S in combinations(ctrl, r):
                out.extend(z_string_gates([*sorted(S), t], base * (-1) ** r))
    return circ.copy(out)


def dynamical_decoupling(circ: Circuit) -> Circuit:
    """Placeholder pass: no idle-noise model exists, so the circuit is unchanged."""
    out = circ.copy()
    out.metadata["dynamical_decoupling"] = "no-op"
    return out


def peephole_cancel(circ: Circuit, atol: float = 1e-15) -> Circuit:
    """Cancel adjacent inverse pairs and merge adjacent RZ gates.

    "Adjacent" means no other gate touches the shared qubits in between.
    CX pairs must match in control and target.  Merged rotations with
    angle below ``atol`` are dropped.  Repeats until nothing changes.
    """
    gates = list(circ.gates)
    while True:
        out: list[Gate | None] = []
        last: dict[int, list[int]] = {}
        changed = False
        for g in gates:
            prev_idx = {last[q][-1] if last.get(q) else None for q in g.qubits}
            j = prev_idx.pop() if len(prev_idx) == 1 else None
            prev = out[j] if j is not None else None
            if prev is not None and prev.qubits == g.qubits:
                if (prev.kind, g.kind) in _CANCEL:
                    out[j] = None
                    for q in g.qubits:
                        last[q].pop()
                    changed = True
                    continue
                if prev.kind == g.kind == "rz":
                    theta = prev.params[0] + g.params[0]
                    changed = True
                    if abs(theta) <= atol:
                        out[j] = None
                        last[g.qubits[0]].pop()
                    else:
                        out[j] = Gate("rz", g.qubits, (theta,))
                    continue
            if g.kind == "rz" and abs(g.params[0]) <= atol:
                changed = True
                continue
            out.append(g)
            for q in g.qubits:
                last.setdefault(q, []).append(len(out) - 1)
        gates = [g for g in out if g is not None]
        if not changed:
            break
    res = circ.copy(gates)
    res.metadata["peephole"] = True
    return res
