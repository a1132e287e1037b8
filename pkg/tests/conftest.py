import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nssapprox import ProblemModel, power  # noqa: E402
from nssapprox.sequences import GeometricSequence  # noqa: E402


@pytest.fixture
def j2j2():
    """gamma_j = j^-2, lambda_j = j^-2."""
    return ProblemModel(power(2), power(2))


@pytest.fixture
def geo4():
    """gamma_j = 4^-j, lambda_j = j^-2."""
    return ProblemModel(GeometricSequence(ratio=0.25), power(2))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
