import numpy as np
import pytest

from hawkesdepeg.model import EventSequence

_CRITERIA: list[tuple[str, bool, str]] = []


def random_events(rng, m, n_total, horizon, ties=False, at_horizon=False):
    """Uniform arrivals split randomly across ``m`` dimensions."""
    split = rng.multinomial(n_total, np.ones(m) / m)
    arrs = []
    for n in split:
        t = rng.uniform(0.0, horizon, size=n)
        if ties:
            t = np.round(t * 60.0) / 60.0
            t = np.clip(t, 0.0, horizon)
        if at_horizon and n:
            t[0] = horizon
        arrs.append(np.sort(t))
    return EventSequence(tuple(arrs), horizon)


@pytest.fixture
def rng():
    return np.random.default_rng(20180119)


@pytest.fixture
def criterion():
    """Record one acceptance criterion outcome for the end-of-run summary."""
    def record(name, passed, detail=""):
        _CRITERIA.append((name, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {name} {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
