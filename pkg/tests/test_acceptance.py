"""Acceptance gate: the eleven release criteria, one test each.

Every test prints a single pass/fail line (run pytest with -s to see
them inline) and then asserts, so the suite both documents and enforces
the gate.  Thresholds are pinned; do not loosen them to make a failing
build green.
"""

import math
import sys
import time

import numpy as np

from tepdyn.dynamics import IntegratorOptions, integrate
from tepdyn.model import State, build_rayleigh_oscillator
from tepdyn.verify import (
    run_ad_vs_fd,
    run_conservative_limit,
    run_disk_equivalence,
    run_el_pde_equivalence,
    run_energy_balance,
    run_euler_homogeneity,
    run_mass_audit,
    run_norton_hoff_closed_form,
    run_power_identity,
)


def report(num, label, ok, detail):
    line = f"criterion {num:2d} [{label}]: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line, file=sys.stderr)
    assert ok, line


def suite_detail(suite):
    worst = max((c.measured / c.threshold if c.threshold else c.measured) for c in suite.checks)
    return f"{len(suite.checks)} checks, worst-to-threshold ratio {worst:.2e}"


def test_criterion_01_disk_equivalence():
    suite = run_disk_equivalence()
    ok = suite.passed and suite.elapsed_s < 1.0
    report(
        1, "disk equation equivalence", ok,
        f"max rel deviation {suite.checks[0].measured:.3e} <= 1e-10, "
        f"{suite.elapsed_s:.2f}s < 1s",
    )


def test_criterion_02_power_identity():
    suite = run_power_identity()
    report(2, "power identity q.v = Q", suite.passed, suite_detail(suite))


def test_criterion_03_euler_homogeneity():
    suite = run_euler_homogeneity()
    report(3, "Euler homogeneity shortcut", suite.passed, suite_detail(suite))


def test_criterion_04_norton_hoff_closed_form():
    suite = run_norton_hoff_closed_form()
    report(4, "power-law force closed form", suite.passed, suite_detail(suite))


def test_criterion_05_ad_vs_fd():
    suite = run_ad_vs_fd()
    report(5, "derivatives vs finite differences", suite.passed, suite_detail(suite))


def test_criterion_06_energy_balance():
    suite = run_energy_balance()
    ok = suite.passed and suite.elapsed_s < 5.0
    balance = suite.checks[1]
    report(
        6, "energy balance dE = -int Q dt", ok,
        f"relative defect {balance.measured:.3e} <= 1e-6 on the guarded span; "
        f"{suite.elapsed_s:.2f}s < 5s",
    )


def test_criterion_07_conservative_limit():
    suite = run_conservative_limit()
    report(7, "conservative limit keeps E", suite.passed, suite_detail(suite))


def test_criterion_08_classical_regression():
    # Damped oscillator m xdd + eta xd + k x = 0 vs its closed form
    # over ten damped periods.
    m, k, eta = 1.0, 4.0, 0.5
    model = build_rayleigh_oscillator(m=m, k=k, eta=eta)
    gam = eta / (2.0 * m)
    wd = math.sqrt(k / m - gam * gam)
    t_end = 10.0 * 2.0 * math.pi / wd
    traj = integrate(
        model, State(np.array([1.0]), np.array([0.0])), t_end,
        IntegratorOptions(method="rk4", dt=1e-3, sample_stride=10),
    )
    exact = np.exp(-gam * traj.times) * (
        np.cos(wd * traj.times) + gam / wd * np.sin(wd * traj.times)
    )
    err = float(np.max(np.abs(traj.xs[:, 0] - exact)))
    ok = (not traj.truncated) and err <= 1e-7
    report(8, "classical damped-oscillator regression", ok, f"max error {err:.3e} <= 1e-7")


def test_criterion_09_el_pde_equivalence():
    t0 = time.perf_counter()
    suite = run_el_pde_equivalence()
    elapsed = time.perf_counter() - t0
    ok = suite.passed and elapsed < 30.0
    rate = suite.checks[0].measured
    extra = suite.checks[1].measured
    report(
        9, "variational/strong-form bar equivalence", ok,
        f"convergence order {rate:.3f} >= 1.9, beta=0 extra terms {extra:.1e} == 0, "
        f"{elapsed:.1f}s < 30s",
    )


def test_criterion_10_mass_audit():
    suite = run_mass_audit()
    rate = suite.checks[0].measured
    spread = suite.checks[1].measured
    report(
        10, "mass audit", suite.passed,
        f"defect convergence order {rate:.3f} >= 1.9, "
        f"beta=0 mass spread {spread:.2e} at machine precision",
    )


def test_criterion_11_harness_self_test():
    suite = run_disk_equivalence(sign_flip=True)
    deviation = suite.checks[0].measured
    # A flipped dissipative-force sign must blow the equivalence check
    # wide open; a tiny deviation would mean the harness tests nothing.
    ok = (not suite.passed) and deviation > 0.1
    report(
        11, "sign-flip harness self-test", ok,
        f"flipped-q deviation {deviation:.3e} is O(1) and fails the gate",
    )
