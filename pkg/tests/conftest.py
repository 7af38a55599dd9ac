import numpy as np
import pytest

from su2lab import DigitizationConfig, build_mixed, magnetic_observable, pauli_decomposition


@pytest.fixture(scope="session")
def cfg05():
    """g = 0.5, two qubits per angle, nu in {0, 1}, automatic cutoff."""
    return DigitizationConfig(0.5, 2, 1)


@pytest.fixture(scope="session")
def ham05(cfg05):
    return build_mixed(cfg05)


@pytest.fixture(scope="session")
def dec05(cfg05, ham05):
    return pauli_decomposition(ham05.total, cfg05)


@pytest.fixture(scope="session")
def hb05(cfg05):
    return magnetic_observable(cfg05)[1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def report(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[n] = line
        assert ok, line

    return report


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
