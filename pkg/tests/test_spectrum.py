import math
import warnings

import numpy as np
import scipy.sparse as sp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su2lab.digitize import DigitizationConfig, omega_max_analytic
from su2lab.errors import ValidityError
from su2lab.hamiltonian import build_irrep
from su2lab.operator import OperatorMatrix
from su2lab.spectrum import (
    eigensolve,
    ground_energy,
    leakage,
    mathieu_b2,
    mathieu_bound,
    oracle_ground_energy,
    precision_eps0,
    scan_omega_max,
)


def test_diagonal_input():
    res = eigensolve(np.diag([3.0, 1.0, 2.0]), k=3)
    assert np.allclose(res.eigenvalues, [1, 2, 3])
    assert np.allclose(np.abs(res.eigenvectors), np.eye(3)[:, [1, 2, 0]])


def test_eigensolve_validation():
    with pytest.raises(ValidityError):
        eigensolve(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValidityError):
        eigensolve(np.eye(2), k=3)


def test_irrep_low_levels():
    res = eigensolve(build_irrep(1.0, 1).electric, k=4)
    assert np.allclose(res.eigenvalues, [0, 1.5, 1.5, 2.25], atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(12, 12))
    h = a + a.T
    perm = rng.permutation(12)
    e1 = eigensolve(h, k=12).eigenvalues
    e2 = eigensolve(h[np.ix_(perm, perm)], k=12).eigenvalues
    assert np.allclose(e1, e2, atol=1e-9)


def test_residuals(ham05):
    res = eigensolve(ham05.total, k=5)
    h = ham05.total.dense()
    norm = np.linalg.norm(h, 2)
    for lam, v in zip(res.eigenvalues, res.eigenvectors.T):
        assert np.linalg.norm(h @ v - lam * v) <= 1e-9 * norm
    assert np.all(np.diff(res.eigenvalues) >= 0)


def test_sparse_path_known_spectrum(rng):
    """Above the dense limit Lanczos is used; a rotated diagonal has known eigenvalues."""
    n = 5000
    vals = np.linspace(-3.0, 50.0, n)
    angles = rng.uniform(0, np.pi, n // 2)
    c, s = np.cos(angles), np.sin(angles)
    blocks = [np.array([[ci, -si], [si, ci]]) for ci, si in zip(c, s)]
    q = sp.block_diag(blocks, format="csr")
    h = (q @ sp.diags(vals) @ q.T).tocsr()
    res = eigensolve(h, k=3)
    assert np.allclose(res.eigenvalues, vals[:3], atol=1e-9)
    again = eigensolve(h, k=3)
    assert np.array_equal(res.eigenvalues, again.eigenvalues)


def test_precision_eps0():
    assert precision_eps0(2.0, 2.0) == 0.0
    assert precision_eps0(1.001 * 3.7, 3.7) == pytest.approx(1e-3)
    with pytest.raises(ZeroDivisionError):
        precision_eps0(1.0, 0.0)


def test_eps0_improves_with_qubits():
    w = omega_max_analytic(0.5, 16)
    ref = oracle_ground_energy(0.5)
    eps = {nq: precision_eps0(ground_energy(DigitizationConfig(0.5, nq, 1, omega_max=w)), ref) for nq in (2, 4)}
    assert eps[4] <= eps[2] + 1e-6


def test_scan_first_derivative_free():
    res = scan_omega_max(0.5, 8, steps=41, drop_first_derivatives=True)
    target = omega_max_analytic(0.5, 8)
    assert abs(res.argmin / target - 1) < 0.1
    assert res.omega_max[0] < res.argmin < res.omega_max[-1]
    assert res.abs_derivative.size == res.omega_max.size - 2
    # past the stationary point the slope grows again
    tail = res.abs_derivative[res.argmin_index - 1 :]
    assert tail[-1] > tail[0]
    lines = res.to_csv().splitlines()
    assert lines[0] == "omega_max,E0,absdEdomega" and len(lines) == 42


def test_scan_rejects():
    with pytest.raises(ValidityError):
        scan_omega_max(0.5, 8, steps=1)
    with pytest.raises(ValidityError):
        scan_omega_max(0.5, 8, omega_range=(2.0, 2.0))
    with pytest.raises(ValidityError):
        scan_omega_max(0.5, 8, omega_range=(1.0, 7.0))


def test_mathieu_b2_limits():
    assert mathieu_b2(0.0) == pytest.approx(4.0, abs=1e-12)
    # small-q expansion b2 = 4 - q^2/12
    assert mathieu_b2(0.1) == pytest.approx(4 - 0.01 / 12, abs=1e-6)


def test_mathieu_bound_limits():
    g = 5.0
    assert mathieu_bound(g) == pytest.approx(4 / g**2, rel=1e-3)
    assert mathieu_bound(0.1) == pytest.approx(3 * math.sqrt(2), rel=1e-2)
    # the approach to 3 sqrt2 is slow: still 1.2% away at g = 0.2
    assert mathieu_bound(0.2) == pytest.approx(3 * math.sqrt(2), rel=2e-2)
    with pytest.raises(ValidityError):
        mathieu_bound(0.0)


def test_mathieu_bound_is_variational():
    assert mathieu_bound(1.0) >= oracle_ground_energy(1.0)


@settings(max_examples=5, deadline=None)
@given(st.floats(0.1, 10))
def test_mathieu_bound_above_fine_build(g):
    # nu is frozen at 0 in the ansatz, so a nu_max >= 1 build at fine resolution lies below
    e0 = ground_energy(DigitizationConfig(g, 5, 1))
    assert mathieu_bound(g) >= e0 - 1e-9


def test_leakage_kernel_and_image():
    cfg = DigitizationConfig(0.5, 1, 3)
    block = cfg.N**2
    psi = np.zeros(4 * block)
    psi[:block] = 1.0
    assert leakage(psi, cfg) == 0.0
    psi = np.zeros(4 * block)
    psi[2 * block : 3 * block] = 1.0
    assert leakage(psi, cfg) == pytest.approx(1.0)


def test_leakage_small_nu_max_warns():
    cfg = DigitizationConfig(0.5, 1, 1)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        assert leakage(np.ones(8), cfg) == 0.0
    assert rec
    with pytest.raises(ValidityError):
        leakage(np.ones(5), cfg)


def test_operator_matrix_is_accepted():
    op = OperatorMatrix(np.diag([2.0, -1.0]))
    assert eigensolve(op).ground_energy == -1.0
