import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from finslerlab import norms

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


BUILTINS = {
    "euclidean": lambda: norms.euclidean(),
    "randers": lambda: norms.randers((0.5, 0.0)),
    "randers_var": lambda: norms.randers(("0.03*x1", "0.2 + 0.02*x2"), metric=[["1 + 0.1*x2**2", "0.1"], ["0.1", "1"]]),
    "quartic": lambda: norms.quartic(0.1),
    "sphere": lambda: norms.sphere_patch(),
    "gaussian": lambda: norms.euclidean(density="-(x1**2 + x2**2)/2"),
}


@pytest.fixture(params=sorted(BUILTINS))
def structure(request):
    return BUILTINS[request.param]()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[k])
