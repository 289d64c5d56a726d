"""Acceptance criteria at their stated sizes and tolerances.

One pass/fail line per criterion is printed and also collected into the
terminal summary.
"""

import pytest

from shadowtomo.acceptance import CRITERIA

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f.__name__ for f in CRITERIA])
def test_criterion(criterion):
    res = criterion(0)
    line = res.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert res.passed, line
