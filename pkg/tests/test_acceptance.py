"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import pytest

from cstrid.acceptance import CHECKS, run_check


@pytest.mark.slow
@pytest.mark.parametrize("number", [c[0] for c in CHECKS], ids=[f"c{c[0]:02d}_{c[1].replace(' ', '_')}" for c in CHECKS])
def test_criterion(number, acceptance_ctx, acceptance_log):
    res = run_check(number, acceptance_ctx)
    acceptance_log.append((number, res.line()))
    print(res.line())
    assert res.passed, res.detail
