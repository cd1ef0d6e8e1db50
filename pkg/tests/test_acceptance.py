"""Release gate: every verification criterion at its stated tolerance.

Run with `pytest -s tests/test_acceptance.py` to see one PASS/FAIL line
per criterion; `rateless-dmt verify` prints the same table.
"""

import pytest

from rateless_dmt import verify

CRITERIA = [name for name, _, _ in verify.ALL_CHECKS]


@pytest.mark.parametrize("name", CRITERIA)
def test_criterion(name):
    result = verify.run_check(name)
    print(result.line())
    assert result.passed, result.detail


@pytest.mark.parametrize("seed", [1, 2026])
def test_statistical_verdicts_stable_across_seeds(seed):
    # the most seed-sensitive checks keep their verdicts under reseeding
    for name in ("outage-oracle", "effective-gain", "analytic-slope", "rate-collapse"):
        result = verify.run_check(name, seed=seed)
        assert result.passed, f"{name} seed={seed}: {result.detail}"


def test_cli_verify_reports_all_criteria(capsys):
    from rateless_dmt.cli import main

    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    for name in CRITERIA:
        assert any(line.startswith(f"PASS  {name}") for line in out.splitlines()), name
    assert f"{len(CRITERIA)}/{len(CRITERIA)} checks passed" in out
