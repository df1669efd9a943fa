import numpy as np
import pytest

from policylimits.limits import LimitInputs

ACCEPTANCE_LINES: list[str] = []


def random_inputs(rng, n1_max=20, n0_max=20, gamma=None, ties=False) -> LimitInputs:
    """Random small instance built from target/nominal probabilities as in practice."""
    n1 = int(rng.integers(1, n1_max + 1))
    n0 = int(rng.integers(1, n0_max + 1))
    gamma = float(rng.uniform(1, 4)) if gamma is None else gamma
    losses = rng.integers(0, 5, n1).astype(float) if ties else rng.normal(size=n1)

    def bounds(m):
        p_target = rng.choice([0.0, 1.0, rng.uniform()], size=m)
        p_nom = rng.uniform(0.05, 0.95, size=m)
        e = 1 / p_nom - 1
        return p_target * (1 + e / gamma), p_target * (1 + e * gamma)

    lo1, up1 = bounds(n1)
    _, up0 = bounds(n0)
    return LimitInputs.from_arrays(losses, lo1, up1, up0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
