import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from squeezed_compton.field import synthesize_field  # noqa: E402
from squeezed_compton.rates import build_rate_table  # noqa: E402
from squeezed_compton.units import PulseParams, SqueezeParams  # noqa: E402

ZETA_30DB = 3.45
GAMMA_EV = 1.9e-3

# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def pulse():
    return PulseParams.from_lab(1.55, 40.0, 5.0)


@pytest.fixture(scope="session")
def table():
    return build_rate_table()


@pytest.fixture(scope="session")
def plain_grid(pulse):
    return synthesize_field(pulse, SqueezeParams())


@pytest.fixture(scope="session")
def squeezed_grids(pulse):
    """Lazily synthesized squeezed grids keyed by theta0."""
    cache = {}

    def get(theta0):
        if theta0 not in cache:
            cache[theta0] = synthesize_field(pulse, SqueezeParams(ZETA_30DB, GAMMA_EV, theta0))
        return cache[theta0]

    return get


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


__all__ = ["ACCEPTANCE", "GAMMA_EV", "ZETA_30DB", "math"]
