"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v` (add -rA to see the printed
lines for passing criteria too).
"""

import math
import time
from fractions import Fraction

import pytest

from instanton_gas.moments import (
    moment_closed,
    moment_quadrature,
    moment_recursive,
    multi_instanton,
    sweep_grid,
)
from instanton_gas.potential import WellParameters
from instanton_gas.schrodinger import (
    GridSpec,
    ScalingError,
    discretize,
    lowest_eigenvalues,
    scaling_study,
)
from instanton_gas.spectrum import energies, gas_sum_closed, gas_sum_partial, truncated_hamiltonian
from instanton_gas.triangle import build_triangle, closed_form_coefficients, series_a0_a1, verify_column_relations


def report(num, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def rel(a, b):
    scale = max(abs(a), abs(b), 1e-300)
    return abs(a - b) / scale


def test_criterion_01_three_way_agreement():
    """Closed form, recursion and quadrature agree to 1e-8 for n,m <= 8."""
    start = time.time()
    worst = 0.0
    grid = sweep_grid()
    assert len(grid) == 108
    for params in grid:
        table = moment_recursive(8, 8, params)
        for n in range(9):
            for m in range(9):
                q = moment_quadrature((n, m), params).stripped
                c = moment_closed((n, m), params).stripped
                r = table.value(n, m).stripped
                worst = max(worst, rel(q, c), rel(q, r), rel(c, r))
    elapsed = time.time() - start
    report(
        1,
        worst <= 1e-8 and elapsed < 30.0,
        f"max pairwise rel dev {worst:.2e} over 108x81 values, {elapsed:.1f}s",
    )


def test_criterion_02_closed_form_exact_at_depth_10():
    """Triangle entries equal the closed-form coefficient sets exactly."""
    start = time.time()
    mismatches = 0
    checked = 0
    for ratio in (Fraction(1, 3), Fraction(2, 5), Fraction(7, 2)):
        tri = build_triangle(10, ratio)
        for n in range(11):
            for m in range(11 - n):
                built = {(c.sign, c.j, c.weight) for c in tri.entry(n, m)}
                closed = {
                    (c.sign, c.j, c.weight)
                    for c in closed_form_coefficients((n, m), ratio)
                    if c.weight != 0
                }
                checked += 1
                if built != closed:
                    mismatches += 1
    elapsed = time.time() - start
    report(
        2,
        mismatches == 0 and elapsed < 10.0,
        f"{checked} entries x 3 ratios, {mismatches} mismatches, {elapsed:.1f}s",
    )


def test_criterion_03_column_identities_exact():
    """Column-sum relations and the central recurrence hold exactly at depth 12."""
    failures = 0
    checked = 0
    for ratio in (Fraction(2, 5), Fraction(-3, 7)):
        rep = verify_column_relations(build_triangle(12, ratio))
        failures += rep.total_failures
        checked += rep.total_checked
    report(3, failures == 0, f"{checked} exact identities, {failures} failures")


def test_criterion_04_series_match_closed_forms():
    """200-term partial sums reach the closed forms at 1e-10."""
    worst = 0.0
    for x in (0.1, 0.25, 0.4):
        a0, a1, converged = series_a0_a1(x, 200)
        a0_ref = 1.0 / (2.0 * math.sqrt(1.0 + (1.0 / (2.0 * x)) ** 2))
        a1_ref = 0.5 - 1.0 / (2.0 * math.sqrt(1.0 + (2.0 * x) ** 2))
        worst = max(worst, abs(a0 - a0_ref), abs(a1 - a1_ref))
        assert converged
    report(4, worst <= 1e-10, f"max |series - closed| = {worst:.2e}")


def test_criterion_05_gas_summation():
    """40-term partial sums equal the closed amplitude to 1e-10."""
    worst = 0.0
    points = 0
    for params in sweep_grid():
        if params.B * params.T > 2.0 or abs(params.delta) * params.T > 2.0:
            continue
        points += 1
        partial, _ = gas_sum_partial(params, 40)
        closed = gas_sum_closed(params)
        worst = max(worst, rel(partial, closed))
    report(5, worst <= 1e-10, f"max rel dev {worst:.2e} over {points} grid points")


def test_criterion_06_truncated_hamiltonian_correspondence():
    """2x2 eigenvalues equal the summed energies; trace/det identities hold."""
    worst_eig = 0.0
    worst_trace = 0.0
    worst_det = 0.0
    for params in sweep_grid():
        a = energies(params)
        b = truncated_hamiltonian(params.omega0, params.omega1, params.B)
        worst_eig = max(worst_eig, rel(a.e_plus, b.e_plus), rel(a.e_minus, b.e_minus))
        trace = (params.omega0 + params.omega1) / 2.0
        det = params.omega0 * params.omega1 / 4.0 - params.B**2
        worst_trace = max(worst_trace, rel(a.e_plus + a.e_minus, trace))
        worst_det = max(worst_det, rel(a.e_plus * a.e_minus, det))
    ok = worst_eig <= 1e-14 and worst_trace <= 1e-14 and worst_det <= 1e-13
    report(
        6,
        ok,
        f"eig dev {worst_eig:.1e}, trace dev {worst_trace:.1e}, det dev {worst_det:.1e}",
    )


def test_criterion_07_symmetric_limit():
    """Tiny-asymmetry diagonal values reduce to the Beta form; exact 2B gap."""
    params = WellParameters(omega0=1.0 + 5e-7, omega1=1.0 - 5e-7, T=2.0, B=0.3)
    assert abs(params.delta) * params.T == pytest.approx(1e-6, rel=1e-9)
    worst = 0.0
    for i in range(6):
        reference = (
            params.B ** (2 * i + 1)
            * params.T ** (2 * i + 1)
            / math.factorial(2 * i + 1)
        )
        worst = max(worst, rel(multi_instanton(i, params).stripped, reference))
        worst = max(worst, rel(moment_closed((i, i), params).stripped, reference))
    k, s = 0.7, 1.3
    sym = WellParameters(omega0=1.0, omega1=1.0, T=2.0, K=k, s_inst=s)
    exact_gap = energies(sym).gap == 2.0 * (k * math.exp(-s))
    report(
        7,
        worst <= 1e-5 and exact_gap,
        f"max rel dev {worst:.2e} at |delta|T=1e-6; gap == 2 K e^-S: {exact_gap}",
    )


def test_criterion_08_decoupled_limit():
    """B = 0 returns the bare harmonic levels exactly."""
    ok = True
    for w0, w1 in ((1.0, 2.0), (math.sqrt(2.0), math.sqrt(3.0)), (2.7, 0.4)):
        res = energies(WellParameters(omega0=w0, omega1=w1, T=1.0, B=0.0))
        ok = ok and res.e_plus == min(w0, w1) / 2.0 and res.e_minus == max(w0, w1) / 2.0
    report(8, ok, "E+ == min(w)/2 and E- == max(w)/2 exactly at B=0")


def test_criterion_09_solver_validation():
    """Harmonic levels to 1e-4 and measured second-order convergence."""
    start = time.time()
    grid = GridSpec(-10.0, 10.0, 2001)
    op = discretize(lambda x: 0.5 * x * x, grid)
    e0, e1 = lowest_eigenvalues(op, 2)
    op_fine = discretize(lambda x: 0.5 * x * x, grid.refined())
    f0, f1 = lowest_eigenvalues(op_fine, 2)
    ratio0 = abs(e0 - 0.5) / abs(f0 - 0.5)
    ratio1 = abs(e1 - 1.5) / abs(f1 - 1.5)
    elapsed = time.time() - start
    ok = (
        abs(e0 - 0.5) <= 1e-4
        and abs(e1 - 1.5) <= 1e-4
        and 3.5 <= ratio0 <= 4.5
        and 3.5 <= ratio1 <= 4.5
        and elapsed < 20.0
    )
    report(
        9,
        ok,
        f"levels ({e0:.6f}, {e1:.6f}), Richardson ratios ({ratio0:.2f}, {ratio1:.2f}), "
        f"{elapsed:.1f}s",
    )


@pytest.mark.parametrize(
    "b,band",
    [(0.0, (-1.15, -0.85)), (0.5, (-1.2, -0.8))],
    ids=["symmetric", "asymmetric"],
)
def test_criterion_10_scaling_law(b, band):
    """Fitted slope of ln B' vs S_inst for lam in {2..6} within the band."""
    start = time.time()
    lambdas = [2.0, 3.0, 4.0, 5.0, 6.0]
    try:
        study = scaling_study(b, lambdas)
    except ScalingError as exc:
        elapsed = time.time() - start
        report(10, False, f"b={b}: no fit possible ({exc}); {elapsed:.1f}s")
        return
    elapsed = time.time() - start
    ok = band[0] <= study.slope <= band[1] and elapsed < 120.0
    report(
        10,
        ok,
        f"b={b}: slope {study.slope:.4f}, band [{band[0]}, {band[1]}], "
        f"excluded {list(study.excluded)}, {elapsed:.1f}s",
    )
