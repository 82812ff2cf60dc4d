"""Full-size acceptance runs: one test per criterion, default experiment settings.

Each test prints one PASS/FAIL line (also collected in the terminal summary).
A criterion passes when every assertion of its experiment passes and the run
finishes inside its time budget.
"""

import pytest

from carleson_lab.experiments import ExperimentConfig, run_experiment

pytestmark = pytest.mark.acceptance

SEED = 20261014

# (number, experiment, runtime budget in seconds, extra params)
CRITERIA = [
    (1, "gauss-vanishing", 30, {}),
    (2, "gauss-modulus", 5, {}),
    (3, "kernel-identity", 120, {}),
    (4, "factorization", 60, {}),
    (5, "multiplier-approx", 300, {}),
    (6, "error-term-decay", 600, {}),
    (7, "weyl-decay", 60, {}),
    (8, "rademacher-menshov", 30, {}),
    (9, "carleson-exactness", 120, {}),
    (10, "parabola-fourier", 60, {}),
    (11, "ttstar", 120, {}),
    (12, "exceptional-set", 300, {}),
    (13, "carleson-norm", 600, {}),
]


@pytest.mark.parametrize("number, name, budget, params", CRITERIA, ids=[c[1] for c in CRITERIA])
def test_acceptance(number, name, budget, params, acceptance_log, tmp_path):
    report = run_experiment(ExperimentConfig(name, params, seed=SEED, out=tmp_path))
    failed = [a for a in report.assertions if not a.passed]
    in_time = report.wall_clock < budget
    ok = report.passed and in_time and bool(report.assertions)
    detail = "; ".join(a.line() for a in failed) or "; ".join(a.detail for a in report.assertions)
    line = (f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {name} "
            f"({report.wall_clock:.1f}s of {budget}s): {detail}")
    print(line)
    acceptance_log.append(line)
    assert report.assertions, "no assertions evaluated"
    assert not failed, "\n".join(a.line() for a in failed)
    assert in_time, f"took {report.wall_clock:.1f}s, budget {budget}s"
