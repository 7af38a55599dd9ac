import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from su2lab.circuit import Circuit, pauli_rotation, trotter_pauli
from su2lab.digitize import DigitizationConfig
from su2lab.errors import DimensionError, ValidityError
from su2lab.hamiltonian import build_mixed, magnetic_observable
from su2lab.pauli import PauliString
from su2lab.sim import (
    RunRecord,
    StateVector,
    apply,
    circuit_unitary,
    exact_evolve,
    low_energy_basis,
    observable_series,
    parse_times,
    prepare_low_energy,
    table_schedule,
)
from su2lab.spectrum import eigensolve, leakage

TABLE_TIMES = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
TABLE_EXACT = [0.0683, 0.2015, 0.3846, 0.5510, 0.6137, 0.5471]


def random_state(rng, n):
    a = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return a / np.linalg.norm(a)


def test_state_validation():
    with pytest.raises(ValidityError):
        StateVector(np.array([1.0, 1.0]))
    with pytest.raises(DimensionError):
        StateVector(np.array([]))
    with pytest.raises(DimensionError):
        StateVector(np.ones(3) / math.sqrt(3)).n_qubits
    assert StateVector.basis(2, 2).amplitudes[2] == 1


def test_empty_circuit(rng):
    psi = random_state(rng, 3)
    out = apply(Circuit.from_sizes({"q": 3}), psi)
    assert np.array_equal(out.amplitudes, psi)
    with pytest.raises(DimensionError):
        apply(Circuit.from_sizes({"q": 2}), psi)


def test_z_rotation_phase():
    out = apply(pauli_rotation(PauliString.from_label("Z"), math.pi / 2), StateVector.basis(0, 1))
    assert out.amplitudes[0] == pytest.approx(np.exp(-0.5j * math.pi))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_norm_and_unitary_agree(seed):
    rng = np.random.default_rng(seed)
    circ = Circuit.from_sizes({"q": 4})
    for _ in range(25):
        kind = rng.choice(["h", "s", "sdg", "x", "y", "z", "rz", "p", "cx", "crz"])
        qs = [int(q) for q in rng.permutation(4)]
        if kind in ("rz", "p"):
            circ.add(kind, qs[0], params=(float(rng.normal()),))
        elif kind == "cx":
            circ.add("cx", qs[0], qs[1])
        elif kind == "crz":
            circ.add("crz", *qs[: int(rng.integers(1, 5))], params=(float(rng.normal()),))
        else:
            circ.add(kind, qs[0])
    psi = random_state(rng, 4)
    out = apply(circ, psi).amplitudes
    assert abs(np.linalg.norm(out) - 1) < 1e-10
    assert np.allclose(out, circuit_unitary(circ) @ psi, atol=1e-12)


def test_crz_broadcast_against_dense():
    circ = Circuit.from_sizes({"q": 3})
    circ.add("crz", 2, 0, params=(0.9,))
    proj = np.kron(np.diag([0, 1]), np.eye(4))
    z2 = np.kron(np.eye(4), np.diag([1, -1]))
    expect = expm(-0.45j * proj @ z2)
    assert np.allclose(circuit_unitary(circ), expect, atol=1e-12)


def test_exact_evolve_basics(rng):
    h = np.diag([0.0, 1.0, 2.5])
    psi = np.ones(3) / math.sqrt(3)
    assert np.allclose(exact_evolve(h, psi, 0.0).amplitudes, psi)
    assert np.allclose(exact_evolve(h, psi, 0.7).amplitudes, np.exp(-0.7j * np.diag(h)) * psi)
    with pytest.raises(ValidityError):
        exact_evolve(np.array([[0, 1.0], [0, 0]]), np.array([1.0, 0]), 1.0)


def test_energy_conservation(ham05, rng):
    psi = random_state(rng, 5)
    e0 = StateVector(psi).expectation(ham05.total)
    for t in (0.3, 1.7, 4.0):
        assert exact_evolve(ham05.total, psi, t).expectation(ham05.total) == pytest.approx(e0, abs=1e-10)


def test_exact_reference_curve(cfg05, ham05):
    hb, _ = magnetic_observable(cfg05)
    rec = observable_series("exact-expm", cfg05, hb, np.linspace(0, 1, 41), H=ham05.total)
    assert rec.values[0] == pytest.approx(2 - 2 * math.cos(0.279459 / 2), abs=1e-6)
    peak = int(np.argmax(rec.values))
    assert 0.45 <= rec.times[peak] <= 0.6
    # the tabulated column (peak 0.6137) is the Trotterized value; the
    # untruncated propagator peaks higher
    assert 0.68 <= rec.values[peak] <= 0.70


def test_table_trotter_values(cfg05, hb05):
    rec = observable_series("trotter-ideal", cfg05, hb05, TABLE_TIMES, delta=0.66, order=2, steps="table")
    assert [table_schedule(t) for t in TABLE_TIMES] == [1, 2, 2, 2, 2, 2]
    assert np.max(np.abs(rec.values - TABLE_EXACT)) < 2e-3


def test_single_time_zero(cfg05, hb05):
    rec = observable_series("trotter-ideal", cfg05, hb05, "0")
    assert rec.values[0] == pytest.approx(sum(c for _, c in hb05))


def test_step_doubling_converges(cfg05, dec05, hb05):
    psi0 = np.zeros(32)
    psi0[0] = 1
    t = 0.6
    exact = exact_evolve(dec05.to_matrix(), psi0, t).expectation(hb05)
    errs = [abs(apply(trotter_pauli(dec05, t, 2, s), psi0).expectation(hb05) - exact) for s in (1, 2, 4, 8)]
    assert all(b <= a + 1e-6 for a, b in zip(errs, errs[1:]))


def test_diffop_series_runs(cfg05, ham05):
    hb, _ = magnetic_observable(cfg05)
    rec = observable_series("trotter-ideal", cfg05, hb, [0.1, 0.2], pipeline="diffop", steps=1)
    exact = observable_series("exact-expm", cfg05, hb, [0.1, 0.2])
    assert np.max(np.abs(rec.values - exact.values)) < 0.05


def test_parallel_runs_are_identical(cfg05, hb05):
    times = parse_times("0.1:0.8:0.1")
    a = observable_series("trotter-ideal", cfg05, hb05, times, delta=0.66, workers=1)
    b = observable_series("trotter-ideal", cfg05, hb05, times, delta=0.66, workers=4)
    assert np.array_equal(a.values, b.values)
    assert a.to_csv() == b.to_csv()


def test_parse_times():
    assert np.allclose(parse_times("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1.0])
    assert np.allclose(parse_times("0.1:0.6:0.1"), TABLE_TIMES)
    assert np.allclose(parse_times([0.5, 1.0]), [0.5, 1.0])
    for bad in ("0:1", "1:0:0.1", "0:1:0"):
        with pytest.raises(ValidityError):
            parse_times(bad)


def test_run_record_csv_round_trip():
    rec = RunRecord([0.1, 0.2], [1 / 3, 2 / 3], "noisy-mitigated", [0.01, 0.02], {"seed": 7})
    back = RunRecord.from_csv(rec.to_csv())
    assert np.array_equal(back.values, rec.values)
    assert np.array_equal(back.stderr, rec.stderr)
    assert back.mode == "noisy-mitigated"
    assert '"seed": 7' in rec.sidecar()
    with pytest.raises(ValidityError):
        RunRecord([0.2, 0.1], [0, 0], "exact-expm")
    with pytest.raises(ValidityError):
        RunRecord([0.1], [0], "noisy-mitigated")


def test_low_energy_state(ham05):
    res = eigensolve(ham05.total, k=5)
    psi = prepare_low_energy(ham05.total, 5)
    assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0)
    assert psi.expectation(ham05.total) == pytest.approx(res.eigenvalues.mean(), abs=1e-10)
    ground = prepare_low_energy(ham05.total, 1).amplitudes
    assert abs(np.vdot(ground, res.eigenvectors[:, 0])) == pytest.approx(1.0, abs=1e-10)


def test_degenerate_block_is_basis_independent(rng):
    """The same spectrum in a rotated eigenbasis gives the same prepared state."""
    d = 6
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    vals = np.array([0.0, 1.0, 1.0, 2.0, 3.0, 4.0])
    h = q @ np.diag(vals) @ q.T
    rot = np.eye(d)
    c, s = math.cos(0.7), math.sin(0.7)
    rot[1:3, 1:3] = [[c, -s], [s, c]]
    h2 = (q @ rot) @ np.diag(vals) @ (q @ rot).T
    a = low_energy_basis(h, 3)[1]
    b = low_energy_basis(h2, 3)[1]
    assert np.allclose(a, b, atol=1e-8)


def test_low_energy_leakage_small():
    cfg = DigitizationConfig(0.5, None, 3, n_omega=6)
    psi = prepare_low_energy(build_mixed(cfg).total, 5)
    assert 0 <= leakage(psi, cfg) < 0.1
