"""End-to-end acceptance criteria, one test per suite at full size.

Each test prints a single ``[PASS]``/``[FAIL]`` line (visible with ``-s``).
"""

import pytest

from predseq.suites import SUITES, run_suite


@pytest.mark.parametrize("name", list(SUITES))
def test_acceptance(name):
    res = run_suite(name)
    print(res.line())
    assert res.passed, res.line()
