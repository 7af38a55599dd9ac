import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su2lab.circuit import Circuit, trotter_pauli
from su2lab.errors import QubitBudgetError, ValidityError
from su2lab.mitigate import (
    NoiseModel,
    bootstrap,
    choose_mitigation,
    cliffordize,
    density_matrix,
    exact_strings,
    global_depolarizing,
    measure_strings,
    noisy_expectation,
    odr,
    pauli_twirl,
    run_mitigated,
)
from su2lab.pauli import PauliDecomposition, PauliString
from su2lab.sim import apply, circuit_unitary


@pytest.fixture(scope="module")
def step03(dec05):
    return trotter_pauli(dec05, 0.3, 2, 2, 0.66)


def ideal_value(circ, obs):
    psi = np.zeros(1 << circ.n_qubits)
    psi[0] = 1
    return apply(circ, psi).expectation(obs)


def equal_up_to_phase(a, b, tol):
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    phase = a[k] / b[k]
    return abs(abs(phase) - 1) < tol and np.max(np.abs(a - phase * b)) < tol


# -- noise model -----------------------------------------------------------


def test_noise_model_validation():
    with pytest.raises(ValidityError):
        NoiseModel(p2=0.5)
    with pytest.raises(ValidityError):
        NoiseModel(p_ro=-0.1)
    m = NoiseModel(p_ro=0.02, p_ro_10=0.05)
    assert np.allclose(m.confusion(), [[0.98, 0.05], [0.02, 0.95]])
    assert np.allclose(m.confusion().sum(axis=0), 1)


def test_noiseless_limit(step03, hb05):
    mean, per = noisy_expectation(step03, hb05, NoiseModel(), twirls=3, shots=None, seed=1)
    assert mean == pytest.approx(ideal_value(step03, hb05), abs=1e-10)
    assert np.allclose(per, mean, atol=1e-10)


def test_depolarizing_channel_is_trace_preserving(step03):
    rho = density_matrix(step03, NoiseModel(p2=0.05))
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rho, rho.conj().T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(rho)) > -1e-12


def test_qubit_budget():
    circ = Circuit.from_sizes({"q": 11})
    with pytest.raises(QubitBudgetError):
        density_matrix(circ, NoiseModel())


# -- ODR -------------------------------------------------------------------


def test_odr_examples():
    assert odr(0.42, 0.9, 0.9) == 0.42
    p, v, m = 0.63, 0.37, -0.81
    assert odr(p * v, p * m, m) == pytest.approx(v, abs=1e-15)
    with pytest.raises(ValidityError):
        odr(0.3, 5e-4, 1.0)


def test_odr_exact_under_global_depolarizing(step03, hb05, dec05):
    """Per Z string, a global channel scales both circuits by p; ODR undoes it."""
    strings = [P for P, _ in hb05.non_identity()]
    mit, _ = choose_mitigation(step03, dec05, 0.3, 2, 2, 0.66, None)
    true_phys = exact_strings(step03, strings)
    true_mit = exact_strings(mit, strings)
    p = 0.71
    out = []
    for circ in (step03, mit):
        psi = np.zeros(32, dtype=complex)
        psi[0] = 1
        a = apply(circ, psi).amplitudes
        rho = global_depolarizing(np.outer(a, a.conj()), p)
        out.append(np.array([np.real(np.trace(rho @ P.matrix())) for P in strings]))
    assert np.allclose(out[0], p * true_phys, atol=1e-12)
    ren = [odr(a, b, c) for a, b, c in zip(out[0], out[1], true_mit)]
    assert np.allclose(ren, true_phys, atol=1e-12)
    assert np.allclose(true_mit, 1.0)
    with pytest.raises(ValidityError):
        global_depolarizing(np.eye(2) / 2, 1.5)


# -- twirling and Cliffordization ------------------------------------------


def test_twirl_is_deterministic(step03):
    assert pauli_twirl(step03, 5).gates == pauli_twirl(step03, 5).gates
    assert pauli_twirl(step03, 5).gates != pauli_twirl(step03, 6).gates


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_twirl_preserves_unitary(seed):
    circ = Circuit.from_sizes({"q": 4})
    rng = np.random.default_rng(seed)
    for _ in range(12):
        a, b = (int(v) for v in rng.choice(4, size=2, replace=False))
        circ.add("cx", a, b)
        circ.add("rz", b, params=(float(rng.normal()),))
        circ.add("h", a)
    tw = pauli_twirl(circ, seed)
    assert tw.cx_count() == circ.cx_count()
    assert equal_up_to_phase(circuit_unitary(tw), circuit_unitary(circ), 1e-12)


def test_twirl_rejects_controlled_rotations():
    circ = Circuit.from_sizes({"q": 2})
    circ.add("crz", 0, 1, params=(0.3,))
    with pytest.raises(ValidityError):
        pauli_twirl(circ, 0)


def test_twirl_statistics(step03, hb05):
    noise = NoiseModel(p2=0.01)
    mean, per = noisy_expectation(step03, hb05, noise, twirls=20, shots=100, seed=11)
    assert np.var(per) > 0
    rho = density_matrix(step03, noise)
    reference = np.real(np.trace(rho @ hb05.to_matrix()))
    sigma = np.std(per, ddof=1) / math.sqrt(len(per))
    assert abs(mean - reference) <= 2 * sigma


def test_cliffordize_examples(step03):
    c = Circuit.from_sizes({"q": 1})
    for theta in (0.1, math.pi / 3, -math.pi / 3, math.pi / 4, -math.pi / 4, 2.0):
        c.add("rz", 0, params=(theta,))
    angles = [g.params[0] for g in cliffordize(c).gates]
    q = math.pi / 2
    assert angles == [0.0, q, -q, q, -q, q]
    cl = cliffordize(step03)
    assert [g.kind for g in cl.gates] == [g.kind for g in step03.gates]
    assert [g.qubits for g in cl.gates] == [g.qubits for g in step03.gates]


def test_cliffordized_z_strings_are_signs(dec05, hb05):
    circ = cliffordize(trotter_pauli(dec05, 0.1, 2, 1, 0.66))
    vals = exact_strings(circ, [P for P, _ in hb05.non_identity()])
    assert np.all(np.isclose(vals, 0, atol=1e-12) | np.isclose(np.abs(vals), 1, atol=1e-12))


# -- readout ---------------------------------------------------------------


def test_readout_twirl_attenuates_only():
    noise = NoiseModel(p_ro_01=0.02, p_ro_10=0.08)
    z = [PauliString.from_label("Z")]
    scale = 1 - 0.02 - 0.08
    for probs, truth in ((np.array([1.0, 0.0]), 1.0), (np.array([0.0, 1.0]), -1.0), (np.array([0.3, 0.7]), -0.4)):
        twirled = measure_strings(probs, z, noise, np.random.default_rng(0), trex=4000, shots=None)[0]
        assert twirled == pytest.approx(scale * truth, abs=0.01)
    # without twirling the asymmetric flips add an offset
    plain = measure_strings(np.array([1.0, 0.0]), z, noise, np.random.default_rng(0), trex=0, shots=None)[0]
    assert plain == pytest.approx(1 - 2 * 0.02)


def test_measure_rejects_non_z_observable(step03):
    obs = PauliDecomposition.from_text("XIIII 1.0\n")
    with pytest.raises(ValidityError):
        noisy_expectation(step03, obs, NoiseModel(), twirls=2, shots=None)


# -- bootstrap -------------------------------------------------------------


def test_bootstrap():
    assert bootstrap([2.0, 2.0, 2.0], 200, seed=0) == (2.0, 0.0)
    mean, err = bootstrap([0.0, 1.0], 20000, seed=3)
    assert mean == pytest.approx(0.5, abs=0.01)
    assert err == pytest.approx(math.sqrt(0.25 / 2), rel=0.05)
    assert bootstrap([1.0, 3.0, 4.0], 500, seed=9) == bootstrap([1.0, 3.0, 4.0], 500, seed=9)
    with pytest.raises(ValidityError):
        bootstrap([1.0])
    with pytest.raises(ValidityError):
        bootstrap([1.0, 2.0], 10)


# -- end to end ------------------------------------------------------------


def test_mitigation_choice(dec05):
    one = trotter_pauli(dec05, 0.1, 2, 1, 0.66)
    assert choose_mitigation(one, dec05, 0.1, 2, 1, 0.66, None)[1] == "cliffordized"
    with pytest.raises(ValidityError):
        choose_mitigation(one, dec05, 0.1, 2, 3, 0.66, None)


def test_end_to_end_recovers_ideal(dec05, hb05):
    est = run_mitigated(dec05, hb05, 0.3, NoiseModel(p2=0.005, p_ro=0.01), twirls=20, shots=800, seed=2024)
    assert est.mitigation == "inverse-half"
    # noise shrinks the traceless part toward the identity coefficient
    c0 = hb05.identity_coefficient
    assert abs(est.raw_phys - c0) < abs(est.ideal - c0)
    assert est.stderr > 0
    assert abs(est.renormalized - est.ideal) <= 2 * est.stderr
    d = json.loads(est.to_json())
    assert d["p2"] == 0.005 and d["twirls"] == 20 and d["seed"] == 2024


def test_chain_is_deterministic(dec05, hb05):
    kw = dict(twirls=3, shots=50, seed=77, n_resamples=200)
    a = run_mitigated(dec05, hb05, 0.1, NoiseModel(p2=0.01), **kw)
    b = run_mitigated(dec05, hb05, 0.1, NoiseModel(p2=0.01), workers=1, **kw)
    assert a.to_json() == b.to_json()
