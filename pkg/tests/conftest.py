import sys

import numpy as np
import pytest

from singular_sl import build_factor, make_profile


@pytest.fixture(scope="session")
def sine():
    return make_profile("sine")


@pytest.fixture(scope="session")
def sine_fac1(sine):
    return build_factor(sine, 1.0)


@pytest.fixture(scope="session")
def profiles():
    return {
        "sine": make_profile("sine"),
        "perturbed-sine": make_profile("perturbed-sine", {"gamma": 0.5}),
        "piecewise-linear-odd": make_profile("piecewise-linear-odd"),
    }


def cot_power(x, eps):
    return np.abs(1.0 / np.tan(np.asarray(x) / 2)) ** (1.0 / eps)


@pytest.fixture(scope="session")
def sine_eigs(sine_fac1):
    from singular_sl.spectrum import eigen_system

    return eigen_system(sine_fac1, 10)


@pytest.fixture(scope="session")
def sine_alpha(sine_fac1):
    from singular_sl.spectrum import alpha_sequence

    return alpha_sequence(sine_fac1, 50)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
