"""The ten acceptance criteria at their stated tolerances and runtime budgets.

Each test prints one ``criterion N: PASS|FAIL`` line.  Criterion 4 is run
literally and is expected to fail; see the decisions ledger.
"""
import time

import pytest

from critheat import checks

BETA = 0.75

# criterion -> (callable, runtime budget in seconds)
CRITERIA = {
    1: (lambda: checks.criterion_1(), 1.0),
    2: (lambda: checks.criterion_2(), 10.0),
    3: (lambda: checks.criterion_3(), 120.0),
    4: (lambda: checks.criterion_4(BETA), 60.0),
    5: (lambda: checks.criterion_5(BETA), 120.0),
    6: (lambda: checks.criterion_6(), 300.0),
    7: (lambda: checks.criterion_7(BETA), 10.0),
    8: (lambda: checks.criterion_8(1.2), 30.0),
    9: (lambda: checks.criterion_9(BETA), 600.0),
    10: (lambda: checks.criterion_10(BETA), 900.0),
}


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    fn, budget = CRITERIA[n]
    t0 = time.perf_counter()
    recs = fn()
    elapsed = time.perf_counter() - t0
    failed = [r for r in recs if not r.passed]
    ok = not failed and elapsed < budget
    with capsys.disabled():
        print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'} "
              f"({len(recs) - len(failed)}/{len(recs)} checks, {elapsed:.1f} s of {budget:g} s)")
        for r in failed:
            print(f"    failed: {r.check}: lhs={r.lhs:.6g} rhs={r.rhs:.6g} [{r.anchor}]")
    assert recs
    assert not failed, "; ".join(f"{r.check} (lhs={r.lhs:.6g}, rhs={r.rhs:.6g})" for r in failed)
    assert elapsed < budget
