import numpy as np
import pytest

from colored_lmmse import IsiChannel, stabilize_ar


def random_stable_ar(rng, p, radius=0.95, n0=None):
    """Stable complex AR(p) with roots drawn uniformly in a disc."""
    roots = radius * np.sqrt(rng.uniform(size=p)) * np.exp(2j * np.pi * rng.uniform(size=p))
    a = -np.poly(roots)[1:] if p else np.zeros(0)
    return stabilize_ar(a, rng.uniform(0.1, 2.0) if n0 is None else n0)


def random_channel(rng, L):
    return IsiChannel(rng.standard_normal(L + 1) + 1j * rng.standard_normal(L + 1))


def random_instance(rng, n_max=200, l_max=5, p_max=3):
    n = int(rng.integers(1, n_max + 1))
    ch = random_channel(rng, int(rng.integers(0, l_max + 1)))
    ar = random_stable_ar(rng, int(rng.integers(0, p_max + 1)))
    return n, ch, ar


def rel_dev(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / (1.0 + np.abs(b))))


@pytest.fixture
def rng():
    return np.random.default_rng(20141016)


#: one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
