import numpy as np
import pytest

from condstates.regions import RegionSpec

_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_log():
    """Record one PASS/FAIL line per acceptance criterion (printed in the summary)."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20251016)


@pytest.fixture
def A():
    return RegionSpec("A", 2)


@pytest.fixture
def B():
    return RegionSpec("B", 2)


@pytest.fixture
def Y():
    return RegionSpec("Y", 2, "classical", ("decayed", "not-decayed"))


# basis conventions of the cat: A = (D, A), B = (up, down)
KET_D, KET_ALIVE = np.array([1, 0]), np.array([0, 1])
KET_UP, KET_DOWN = np.array([1, 0]), np.array([0, 1])


def proj(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


@pytest.fixture
def psi_plus():
    return (np.kron(KET_D, KET_DOWN) + np.kron(KET_ALIVE, KET_UP)) / np.sqrt(2)
