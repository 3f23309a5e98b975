#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for the verification planner and its bounds
"""
import math
import os
import sys

import pytest

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import harness
import planner
from planner import BoundDomainError, PlanError


def test_worked_values():
    """L and R for the documented parameter choices"""
    print("\n=== Testing Worked Values ===")

    assert planner.compute_L(1, 1, 0.1, 10) == 9738643
    assert planner.compute_L(1, 1, 0.1, 1) == 97388
    assert planner.compute_R(10 ** 6, 100) == 188
    assert planner.compute_R(0, 10) == 0
    with pytest.raises(PlanError):
        planner.compute_R(1001, 10)
    with pytest.raises(PlanError):
        planner.choose_d0(1, 1, 0.6)

    print("✓ Worked value test passed")


def test_plan_feasibility_grid():
    """Plans satisfy both preconditions and keep soundness under 3 eps"""
    print("\n=== Testing Plan Feasibility ===")

    for k in (1, 2):
        for m in (1, 2):
            for eps in (0.05, 0.1, 0.2):
                plan = planner.make_plan(k, m, eps)
                assert plan.in_regime
                assert planner.eq3_holds(k, m, eps, plan.d0)
                assert planner.eq4_holds(k, eps, plan.d0, plan.N)
                assert planner.r_condition_holds(k, eps, plan.N, plan.R)
                assert plan.N % 2 == 0
                assert plan.K == k * plan.N // 2
                assert plan.Q == 15 * plan.R
                assert plan.L == planner.compute_L(k, m, eps, plan.d0)
                assert plan.total_registers == k * plan.N // 2 + plan.N
                assert planner.soundness_bound(plan).total <= 3 * eps
                print(f"k={k} m={m} eps={eps}: d0={plan.d0} N={plan.N} L={plan.L}")

    print("✓ Plan feasibility test passed")


def test_choose_n_is_minimal():
    """N - 2 fails one of the conditions"""
    print("\n=== Testing Minimal N ===")

    d0 = planner.choose_d0(1, 1, 0.1)
    N = planner.choose_N(1, 0.1, d0)
    assert planner.n_conditions_hold(1, 0.1, d0, N)
    assert not planner.n_conditions_hold(1, 0.1, d0, N - 2)
    assert planner.sample_complexity(1, 1, 0.1) == N // 2 + N

    print("✓ Minimal N test passed")


def test_epsilon_exponent():
    """Register count grows like (1/eps)^6 for small eps"""
    print("\n=== Testing Sample Complexity Exponent ===")

    eps = [1e-8, 1e-9, 1e-10, 1e-11, 1e-12]
    totals = [planner.make_plan(1, 1, e).total_registers for e in eps]
    slope = harness.fit_exponent([1.0 / e for e in eps], totals)
    print(f"fitted slope {slope:.3f}")
    assert abs(slope - 6.0) <= 0.5

    print("✓ Exponent test passed")


def test_exponent_check_on_theorem_grid():
    """Polylog-corrected exponent is 6 on the in-regime grid"""
    print("\n=== Testing Exponent Check ===")

    check = planner.exponent_check(1, 1)
    print(f"raw {check['raw_exponent']:.3f}, corrected {check['corrected_exponent']:.3f}")
    assert check["epsilons"] == [0.05, 0.1, 0.2]
    assert check["within_tolerance"]
    assert abs(check["corrected_exponent"] - 6.0) <= 0.5
    # d0 grows with log(1/eps), so the raw slope sits above the asymptotic one
    assert check["raw_exponent"] > check["corrected_exponent"]
    assert check["total_registers"][1] == planner.make_plan(1, 1, 0.1).total_registers
    with pytest.raises(ValueError):
        planner.exponent_check(1, 1, [0.1])

    print("✓ Exponent check test passed")


def test_desk_plan_flags():
    """Desk plans are labelled and keep the theorem's R"""
    print("\n=== Testing Desk Plan ===")

    plan = planner.desk_plan(1, 1, 0.2, 50, 2000, 600)
    assert plan.R == 27
    assert plan.flags[0] == "outside_theorem_regime"
    assert not plan.in_regime
    assert "L_not_theorem_value" in plan.flags
    assert plan.fidelity_samples == 599
    report = planner.soundness_bound(plan)
    assert len(report.terms) == 4

    tight = planner.desk_plan(1, 1, 0.2, 10, 100, 50)
    assert "soundness_bound_undefined" in tight.flags
    with pytest.raises(BoundDomainError):
        planner.soundness_bound(tight)
    assert planner.plan_to_dict(tight)["soundness_terms"] is None

    with pytest.raises(PlanError):
        planner.desk_plan(1, 5, 0.2, 50, 2000, 5)
    with pytest.raises(PlanError):
        planner.desk_plan(1, 1, 0.2, 50, 2001, 600)

    print("✓ Desk plan test passed")


def test_completeness_bound():
    """Vacuum tail and relative-entropy term"""
    print("\n=== Testing Completeness Bound ===")

    assert abs(planner.vacuum_tail(4.0) - math.erfc(math.sqrt(2.0))) < 1e-15
    assert abs(math.exp(planner.log_vacuum_tail(4.0)) - planner.vacuum_tail(4.0)) < 1e-12
    assert planner.vacuum_tail(9.0) <= planner.vacuum_tail_bound(9.0)
    for d0 in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 300.0]:
        tail = planner.vacuum_tail(d0)
        assert 0.0 <= tail <= planner.vacuum_tail_bound(d0)
        if tail > 0.0:
            assert abs(planner.log_vacuum_tail(d0) - math.log(tail)) < 1e-9
    assert planner.binary_relative_entropy(0.3, 0.3) == 0.0
    assert planner.binary_relative_entropy(0.5, 0.1) > 0.0
    expected = 0.2 * math.log(2.0) + 0.8 * math.log(0.8 / 0.9)
    assert abs(expected - 0.04440) < 1e-5
    assert abs(planner.binary_relative_entropy(0.2, 0.1) - expected) < 1e-12
    for p in (0.1, 0.5, 0.9):
        assert abs(planner.binary_relative_entropy(1.0, p) + math.log(p)) < 1e-12
        assert abs(planner.binary_relative_entropy(0.0, p) + math.log1p(-p)) < 1e-12
    tiny = planner.binary_relative_entropy(0.5, 0.0, log_p=-800.0)
    assert abs(tiny - (0.5 * (math.log(0.5) + 800.0) + 0.5 * math.log(0.5))) < 1e-9
    with pytest.raises(ValueError):
        planner.binary_relative_entropy(1.5, 0.1)

    plan = planner.desk_plan(1, 1, 0.2, 50, 2000, 600)
    report = planner.completeness_bound(plan)
    assert report.kind == "completeness"
    assert report.terms[0] < 1e-6
    assert abs(report.terms[1] - 4.0 * math.exp(-599 * 0.04 / 66.0)) < 1e-12

    print("✓ Completeness bound test passed")


def test_concentration_bounds():
    """Named inequalities, domains and clamping"""
    print("\n=== Testing Concentration Bounds ===")

    upper = planner.concentration_bounds("serfling_upper", delta=0.1, n=100, k=100)
    assert abs(upper.value - math.exp(-2 * 0.01 * 100 * 100 ** 2 / (200 * 101))) < 1e-12
    assert planner.concentration_bounds("serfling_lower", delta=0.0, n=100, k=100).value == 1.0

    lemma = planner.concentration_bounds("lemma1", K=200, N=400, R=2, Q=360)
    assert 0.0 < lemma.value < 1.0
    with pytest.raises(BoundDomainError):
        planner.concentration_bounds("lemma1", K=100, N=400, R=50, Q=10)

    definetti = planner.concentration_bounds("definetti", k=1, Q=10, L=1000, N=100, d0=5)
    assert definetti.clamped and definetti.value == 2.0
    with pytest.raises(BoundDomainError):
        planner.concentration_bounds("definetti", k=2, Q=60, L=10, N=100, d0=5)

    gamma = planner.concentration_bounds("gamma", delta=0.0, d0=100)
    assert 0.0 < gamma.value < 1e-2
    with pytest.raises(ValueError):
        planner.concentration_bounds("chernoff")

    print("✓ Concentration bound test passed")
