import os

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=8, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=300, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

np.seterr(over="raise", invalid="raise", divide="raise")


@pytest.fixture(scope="session")
def fam5():
    from spinbound.lattice import CouplingFamily
    return CouplingFamily.normalized_family(5.0, 16)


@pytest.fixture(scope="session")
def xy_approx():
    from spinbound.interaction import approximate, builtin
    return approximate(builtin("xy"), 0.05)


# -- acceptance verdicts ------------------------------------------------------------

VERDICTS = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    def record(label, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip()
        VERDICTS.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
