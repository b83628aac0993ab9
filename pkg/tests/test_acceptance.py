"""End-to-end acceptance checks; each prints one PASS/FAIL line (also echoed in the run summary)."""
import pytest

from nrsurface.acceptance import CHECKS

LINES: dict = {}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CHECKS))
def test_acceptance(number):
    c = CHECKS[number]()
    LINES[number] = c.line()
    print(c.line())
    assert c.passed, c.line()
