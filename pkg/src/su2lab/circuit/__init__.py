"""Gate-level circuits: IR, synthesis pipelines, passes and resource counts."""
from .diffop import dst_pair, mpo_cx_count, mpo_first_derivative, trotter_diffop
from .ir import Circuit, Gate, mixed_layout
from .passes import dynamical_decoupling, expand_crz, peephole_cancel
from .resources import ResourceReport, resource_estimate
from .synth import (
    group_of,
    mitigation_circuit,
    pauli_rotation,
    rotation_gates,
    trotter_groups,
    trotter_pauli,
    z_string_gates,
)

__all__ = [
    "Circuit",
    "Gate",
    "ResourceReport",
    "dst_pair",
    "dynamical_decoupling",
    "expand_crz",
    "group_of",
    "mitigation_circuit",
    "mixed_layout",
    "mpo_cx_count",
    "mpo_first_derivative",
    "pauli_rotation",
    "peephole_cancel",
    "resource_estimate",
    "rotation_gates",
    "trotter_diffop",
    "trotter_groups",
    "trotter_pauli",
    "z_string_gates",
]
