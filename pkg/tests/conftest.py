import numpy as np
import pytest

from perimdef.core import InputInstance

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def random_instance(rng: np.random.Generator, n_max: int = 30, horizon: float = 10.0, rho: float = 0.2) -> InputInstance:
    """Mixed arrival patterns: uniform, bursts of simultaneous arrivals, and window-aligned times."""
    n = int(rng.integers(1, n_max + 1))
    kind = int(rng.integers(0, 4))
    if kind == 0:
        ts = rng.uniform(0, horizon, n)
    elif kind == 1:
        size = int(rng.integers(2, 7))
        ts = np.repeat(rng.uniform(0, horizon, -(-n // size)), size)[:n]
    elif kind == 2:
        ts = np.round(rng.uniform(0, horizon, n) / (2 * rho)) * (2 * rho)
    else:
        ts = np.sort(rng.exponential(0.3, n).cumsum())
    sides = rng.choice([-1, 1], n) if rng.random() < 0.7 else np.full(n, rng.choice([-1, 1]))
    return InputInstance.from_arrivals(zip(ts.tolist(), sides.tolist()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
