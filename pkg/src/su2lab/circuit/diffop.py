"""Circuits that act with the differential operators directly.

First derivatives use the sum-of-MPO form of the central difference.  With
``T_k`` the part of the increment ``|n> -> |n+1>`` that flips bit ``k`` (bit
1 is least significant) and clears all lower bits,

    D = (S^dag - S) / 2h = sum_k (i / 2h) W_k (Z_k x |1><1|^{k-1}) W_k^dag,

where ``W_k = C_k B_k``, ``C_k`` is a CX from bit ``k`` onto every lower bit
and ``B_k = S H`` turns ``Z_k`` into ``Y_k``.  Each term exponentiates to a
multi-controlled RZ sandwiched between basis changes.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..digitize import DigitizationConfig, momenta, sample
from ..errors import UnsupportedConfigurationError, ValidityError
from ..hamiltonian import build_mixed
from ..pauli import decompose
from .ir import Circuit, Gate, mixed_layout
from .synth import z_string_gates


def _frame(register: Sequence[int], k: int) -> tuple[list[Gate], list[Gate]]:
    """Gates applying ``W_k^dag`` and ``W_k`` for bit ``k`` of ``register`` (MSB first)."""
    n = len(register)
    tgt = register[n - k]
    lower = list(register[n - k + 1 :])
    cxs = [Gate("cx", (tgt, m)) for m in lower]
    to_z = cxs + [Gate("sdg", (tgt,)), Gate("h", (tgt,))]
    back = [Gate("h", (tgt,)), Gate("s", (tgt,))] + cxs[::-1]
    return to_z, back


def _bits(register: Sequence[int]) -> range:
    return range(1, len(register) + 1)


def mpo_first_derivative(register: Sequence[int], t_coeff: float, cfg: DigitizationConfig, n_qubits: int | None = None) -> Circuit:
    """Circuit approximating ``expm(-t_coeff D)`` on one omega register.

    One multi-controlled ``RZ(t_coeff / h)`` per bit, ``h`` being
    ``cfg.derivative_step``.  For a single-qubit register the result is
    exact; otherwise the terms are applied as a first-order product.
    """
    register = tuple(register)
    if not register:
        raise ValidityError("empty register")
    n_total = n_qubits if n_qubits is not None else max(register) + 1
    circ = Circuit.from_sizes({"q": n_total})
    lam = t_coeff / cfg.derivative_step
    for k in _bits(register):
        to_z, back = _frame(register, k)
        n = len(register)
        tgt, ctrl = register[n - k], register[n - k + 1 :]
        core = Gate("crz", (tgt, *ctrl), (lam,)) if ctrl else Gate("rz", (tgt,), (lam,))
        for g in to_z + [core] + back:
            circ.append(g)
    circ.metadata = {"pipeline": "mpo", "t": t_coeff, "h": cfg.derivative_step}
    return circ


def mpo_cx_count(n_q: int) -> int:
    """Known CX count for one exponentiated first derivative (``n_q >= 3``)."""
    if n_q < 3:
        raise ValidityError("formula holds for n_q >= 3")
    return 9 * n_q * n_q - 33 * n_q + 34


# ---------------------------------------------------------------------------


def _diag_terms(values: np.ndarray) -> list[tuple[tuple[int, ...], float]]:
    """Z-string expansion of a diagonal, as (support, coefficient) pairs."""
    if values.size == 1:
        return [((), float(values[0]))]
    dec = decompose(np.diag(values))
    return [(P.support(), c) for P, c in dec]


def _diag_rotation(values, qubits: Sequence[int], theta: float, extra_z: Sequence[int] = (), controls: Sequence[int] = ()):
    """``exp(-i theta Z_extra f(register) |1..1><1..1|_controls)`` with ``f`` diagonal.

    Returns (gates, global_phase).
    """
    gates: list[Gate] = []
    phase = 0.0
    for sup, c in _diag_terms(np.asarray(values, dtype=float)):
        zs = sorted([*extra_z, *(qubits[j] for j in sup)])
        if not zs:
            if controls:
                raise ValidityError("an uncontrolled phase needs a Z support")
            phase -= theta * c
            continue
        gates.extend(z_string_gates(zs, theta * c, controls))
    return gates, phase


def _dst_phase(cfg: DigitizationConfig, register: Sequence[int], tau: float) -> tuple[list[Gate], float]:
    """``exp(+2 i g^2 tau Lap)`` = DST^T exp(-2 i g^2 tau k^2) DST."""
    k2 = momenta(cfg) ** 2
    gates = [Gate("macro", tuple(register), (), "dst2")]
    body, phase = _diag_rotation(2.0 * cfg.g**2 * k2, register, tau)
    gates += body
    gates.append(Gate("macro", tuple(register), (), "dst2_inv"))
    return gates, phase


def _h_d_gates(cfg: DigitizationConfig, nu: int, r1: Sequence[int], r2: Sequence[int], tau: float) -> tuple[list[Gate], float]:
    """First-order product for ``exp(-i tau H_d)`` when ``nu_max = 1``.

    After ``F = Sdg H`` on nu,
    ``F H_d F^dag = (g^2/sqrt3) [Z (d d + cot cot / 4) - (i/2) X (cot d + d cot)]``.
    """
    s = tau * cfg.g**2 / math.sqrt(3.0)
    h = cfg.derivative_step
    cot = sample(lambda w: 1.0 / np.tan(w / 2), cfg)
    gates: list[Gate] = [Gate("h", (nu,)), Gate("sdg", (nu,))]
    phase = 0.0
    n = len(r1)

    # a) exp(-i s Z d1 d2), d = sum_k (i/2h) M_k  =>  Z d1 d2 = -(1/4h^2) sum Z M_k M'_k'
    for k in _bits(r1):
        a_in, a_out = _frame(r1, k)
        for kp in _bits(r2):
            b_in, b_out = _frame(r2, kp)
            ctrl = (*r1[n - k + 1 :], *r2[n - kp + 1 :])
            core = z_string_gates(sorted([nu, r1[n - k], r2[n - kp]]), -s / (4 * h * h), ctrl)
            gates += a_in + b_in + core + b_out + a_out

    # b) exp(-i (s/4) Z cot1 cot2)
    body, ph = _diag_rotation(np.kron(cot, cot), (*r1, *r2), s / 4, extra_z=(nu,))
    gates += body
    phase += ph

    # c), d) exp(-(s/2) X cot_a d_b) = prod_k exp(-i (s/4h) X cot_a M_k)
    gates.append(Gate("h", (nu,)))
    for ra, rb in ((r1, r2), (r2, r1)):
        for k in _bits(rb):
            b_in, b_out = _frame(rb, k)
            body, _ = _diag_rotation(cot, ra, s / (4 * h), extra_z=(nu, rb[n - k]), controls=rb[n - k + 1 :])
            gates += b_in + body + b_out
    gates.append(Gate("h", (nu,)))

    gates += [Gate("s", (nu,)), Gate("h", (nu,))]
    return gates, phase


def trotter_diffop(cfg: DigitizationConfig, t: float, steps: int = 1, order: int = 1) -> Circuit:
    """Product-formula circuit for ``exp(-i t H)`` on the hardware layout.

    Registers ``nu``, ``omega1``, ``omega2`` and one ancilla per omega
    register (``anc1``, ``anc2``), which the dense DST macros leave idle.
    Each step applies, in order, the second-derivative part through DST
    macros, the first-derivative couplings through MPO circuits, and the
    diagonal part as Z-string rotations.

    ``order=2`` symmetrizes each step: a first-order half step followed by
    the same factors in reverse order, i.e. ``S(tau/2)`` then the inverse of
    ``S(-tau/2)``.
    """
    if cfg.nu_max != 1:
        raise UnsupportedConfigurationError("the differential-operator pipeline needs nu_max = 1")
    if not cfg.is_qubit_grid or cfg.n_q < 1:
        raise UnsupportedConfigurationError("the differential-operator pipeline needs N = 2**n_q >= 2")
    if steps < 1:
        raise ValidityError("steps must be positive")
    if order not in (1, 2):
        raise ValidityError("order must be 1 or 2")
    if order == 2:
        fwd = trotter_diffop(cfg, t / (2 * steps), 1, 1)
        back = trotter_diffop(cfg, -t / (2 * steps), 1, 1).inverse()
        circ = Circuit(dict(fwd.registers))
        for _ in range(steps):
            circ.extend(fwd)
            circ.extend(back)
        circ.metadata = dict(fwd.metadata, t=t, order=2, steps=steps)
        return circ
    circ = Circuit.from_sizes(mixed_layout(1, cfg.n_q, ancillas=True))
    nu = circ.registers["nu"][0]
    r1, r2 = circ.registers["omega1"], circ.registers["omega2"]
    tau = t / steps

    # omega-diagonal part, including the constant, as nu-dependent Z strings
    h_omega = build_mixed(cfg).h_omega.diagonal().real
    om_gates, om_phase = _diag_rotation(h_omega, (nu, *r1, *r2), tau)

    phase = 0.0
    for _ in range(steps):
        for reg in (r1, r2):
            gs, ph = _dst_phase(cfg, reg, tau)
            circ.gates.extend(gs)
            phase += ph
        gs, ph = _h_d_gates(cfg, nu, r1, r2, tau)
        circ.gates.extend(gs)
        phase += ph
        circ.gates.extend(om_gates)
        phase += om_phase
    circ.global_phase = phase
    circ.metadata = {"pipeline": "diffop", "t": t, "order": 1, "steps": steps, "cfg": cfg.to_json()}
    return circ


def dst_pair(register: Sequence[int], n_qubits: int) -> Circuit:
    """DST followed by its inverse; the identity on the register."""
    circ = Circuit.from_sizes({"q": n_qubits})
    circ.add("macro", *register, name="dst2")
    circ.add("macro", *register, name="dst2_inv")
    return circ


__all__ = ["mpo_first_derivative", "mpo_cx_count", "trotter_diffop", "dst_pair"]
