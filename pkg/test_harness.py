#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for the Monte Carlo experiment harness
"""
import math
import os
import sys

import pytest

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import fock
import harness
import phasespace
import planner
import provers
import witness
from fock import PolynomialObservable
from harness import EventEmitter, ExperimentConfig, ExperimentRunner
from provers import Target


def _config(prover="honest", trials=4, threads=1, seed=42):
    plan = planner.desk_plan(1, 1, 0.2, 50, 2000, 600)
    kind = witness.gaussian_state_kind(phasespace.make_vacuum(1))
    target = Target(kind)
    if prover == "honest":
        script = provers.honest_iid(target)
    else:
        script = provers.iid_wrong(target, phasespace.coherent_state(2.0), {"state": "coherent"})
    return ExperimentConfig(plan, kind, script, trials, seed, threads=threads)


def test_event_emitter():
    """Only experiment events are accepted; failing listeners do not stop the others"""
    print("\n=== Testing EventEmitter ===")

    emitter = EventEmitter()
    seen = []

    def broken(result):
        raise RuntimeError("listener failure")

    emitter.on(harness.TRIAL_COMPLETED, broken)
    emitter.on(harness.TRIAL_COMPLETED, seen.append)
    emitter.emit(harness.TRIAL_COMPLETED, 3)
    emitter.emit(harness.EXPERIMENT_FINISHED, 4)
    assert seen == [3]
    with pytest.raises(ValueError):
        emitter.on("tick", seen.append)

    runner = ExperimentRunner(_config(trials=3))
    trials = []
    runner.on("trial_completed", lambda result: trials.append(result.trial))
    runner.run()
    assert sorted(trials) == [0, 1, 2]

    print("✓ EventEmitter test passed")


def test_statistics_helpers():
    """Wilson intervals, seeded trial streams and exponent fits"""
    print("\n=== Testing Statistics Helpers ===")

    assert harness.wilson_interval(0, 1) == (0.0, 1.0)
    low, high = harness.wilson_interval(50, 100)
    assert low < 0.5 < high
    assert abs((0.5 - low) - (high - 0.5)) < 1e-12
    low, high = harness.wilson_interval(0, 1000)
    assert low < 1e-12 and 0.0 < high < 0.01

    assert harness.trial_rng(7, 3).random() == harness.trial_rng(7, 3).random()
    assert harness.trial_rng(7, 3).random() != harness.trial_rng(7, 4).random()

    assert abs(harness.fit_exponent([1.0, 10.0, 100.0], [1.0, 100.0, 10000.0]) - 2.0) < 1e-9
    with pytest.raises(ValueError):
        harness.fit_exponent([1.0], [1.0])
    with pytest.raises(ValueError):
        _config(trials=0)

    print("✓ Statistics helper test passed")


def test_completeness_run():
    """Honest vacuum prover is accepted and reported with bounds"""
    print("\n=== Testing Completeness Run ===")

    config = _config(trials=5)
    runner = ExperimentRunner(config)
    finished = []
    runner.on("experiment_finished", finished.append)
    report = runner.run("completeness")

    assert report["schema"] == harness.SCHEMA_VERSION
    assert report["experiment"] == "completeness"
    assert report["trials"] == 5
    assert report["accept_rate"] == 1.0
    assert report["accept_interval"][1] > 1.0 - 1e-9
    assert report["soundness_value"] < 1e-9
    assert report["stage_failures"] == {"dimension_test": 0, "fidelity_test": 0}
    assert report["bounds"]["soundness"] is not None
    assert report["flags"][0] == "outside_theorem_regime"
    assert "completeness_bound_violation" not in report["flags"]
    assert report["samples"] == 5 * (1000 + 599)
    assert finished and finished[0] is report
    assert runner.get_status()["trials_completed"] == 5

    print("✓ Completeness run test passed")


def test_soundness_run():
    """Displaced prover is rejected at the fidelity stage"""
    print("\n=== Testing Soundness Run ===")

    report = harness.estimate_soundness(_config(prover="coherent", trials=3))
    assert report["experiment"] == "soundness"
    assert report["accept_rate"] == 0.0
    assert report["soundness_value"] == 0.0
    assert report["stage_failures"]["fidelity_test"] == 3
    assert report["witness_mean"] < 0.0
    assert report["prover"] == {"kind": "iid_wrong", "state": "coherent"}

    print("✓ Soundness run test passed")


def test_purifier_completeness_rate():
    """Honest purifier channels are accepted in every trial in both gain regimes"""
    print("\n=== Testing Purifier Completeness ===")

    plan = planner.desk_plan(1, 1, 0.2, 50, 2000, 600)
    for params in [(1.0, 3.0, 1.0), (1.0, 1.0, 1.0)]:
        kind = witness.purifier_kind(*params)
        config = ExperimentConfig(plan, kind, provers.channel_prover("ideal", kind), 3, 8)
        report = harness.estimate_completeness(config)
        assert report["accept_rate"] == 1.0, kind.tag
        assert abs(report["witness_mean"] - kind.fbar_norm) < 0.08 * kind.fbar_norm
        assert report["witness"]["fbar_norm"] == kind.fbar_norm

    print("✓ Purifier completeness test passed")


def test_parallel_matches_serial():
    """Thread count does not change the report"""
    print("\n=== Testing Parallel Determinism ===")

    serial = ExperimentRunner(_config(trials=4, threads=1, seed=5)).run()
    parallel = ExperimentRunner(_config(trials=4, threads=3, seed=5)).run()
    assert serial == parallel

    single = harness.build_report(_config(trials=1), [harness.TrialResult(0, True, None, 1.0, 0.0, 1, 0.0)], "x")
    assert "degenerate_interval" in single["flags"]
    assert single["accept_interval"] == [0.0, 1.0]

    print("✓ Parallel determinism test passed")


def test_validate_concentration():
    """Serfling and dimension-test bounds hold on synthetic populations"""
    print("\n=== Testing Concentration Validation ===")

    serfling = harness.validate_concentration(
        "serfling", {"seed": 1, "populations": 2000, "grid": [{"n": 20, "k": 20, "delta": 0.2}]}
    )
    assert len(serfling["cells"]) == 2
    assert serfling["violations"] == 0
    for cell in serfling["cells"]:
        assert cell["exact"] <= cell["bound"] + 1e-12

    lemma = harness.validate_concentration(
        "lemma1",
        {
            "seed": 2,
            "populations": 50,
            "grid": [
                {"d0": 4, "K": 200, "N": 400, "R": 2, "Q": 360, "cutoff": 8},
                {"d0": 4, "K": 100, "N": 400, "R": 50, "Q": 10, "cutoff": 8},
            ],
        },
    )
    assert lemma["violations"] == 0
    assert lemma["cells"][0]["bound"] is not None
    assert "skipped" in lemma["cells"][1]

    tails = harness.fock_tail_probabilities(4.0, 8)
    assert abs(tails[0] - planner.vacuum_tail(4.0)) < 2e-3
    assert tails[7] > tails[0]

    with pytest.raises(ValueError):
        harness.validate_concentration("bernstein")

    print("✓ Concentration validation test passed")


def test_sweep():
    """Empty grids, desk cells and exponent fits"""
    print("\n=== Testing Sweep ===")

    empty = harness.sweep({"k": [], "m": [1], "epsilon": [0.1]})
    assert empty["rows"] == [] and empty["fits"] == []

    desk = harness.sweep({"k": [1], "m": [1], "epsilon": [0.2], "d0": [50], "N": [2000], "L": [600]})
    row = desk["rows"][0]
    assert set(row) == set(harness.SWEEP_COLUMNS)
    assert row["R"] == 27 and not row["in_regime"]
    assert desk["fits"] == []

    theorem = harness.sweep({"k": [1], "m": [1], "epsilon": [0.1, 0.05]}, experiment=lambda plan: {"accept_rate": 1.0})
    assert all(r["in_regime"] for r in theorem["rows"])
    assert theorem["rows"][0]["accept_rate"] == 1.0
    assert len(theorem["fits"]) == 1 and theorem["fits"][0]["inverse_epsilon_exponent"] > 0.0

    smoke = harness.sweep({"k": [1], "m": [1], "epsilon": [0.05, 0.1, 0.2]})
    fit = smoke["fits"][0]
    print(f"raw exponent {fit['inverse_epsilon_exponent']:.3f}, corrected {fit['corrected_exponent']:.3f}")
    assert abs(fit["corrected_exponent"] - 6.0) <= 0.5
    assert fit["inverse_epsilon_exponent"] > fit["corrected_exponent"]
    check = planner.exponent_check(1, 1)
    assert abs(check["corrected_exponent"] - fit["corrected_exponent"]) < 1e-9

    print("✓ Sweep test passed")


def test_fock_convergence():
    """Cutoff drift stays inside the leakage budget"""
    print("\n=== Testing Fock Convergence ===")

    q2 = PolynomialObservable(((1.0, ((0, "q", 2),)),))
    vac = harness.fock_convergence(harness.ConvergenceConfig(lambda c: fock.vacuum(c), q2, 10))
    assert vac["cutoffs"] == [10, 20]
    assert vac["within_budget"] and vac["drift"] < 1e-12
    assert abs(vac["values"][0] - 0.5) < 1e-12

    squeezed = harness.fock_convergence(
        harness.ConvergenceConfig(lambda c: fock.squeezed_vacuum(0.5, c), q2, 20, strict=True)
    )
    assert squeezed["cutoffs"] == [20, 40]
    assert squeezed["within_budget"]
    assert abs(squeezed["values"][1] - 0.5 * math.exp(-1.0)) < 1e-6

    # experiment configs check their own target at D and 2D
    config = _config()
    report = harness.fock_convergence(config)
    assert report["cutoffs"] == [config.cutoff, 2 * config.cutoff]
    assert report["within_budget"]
    assert abs(report["values"][0] - 1.0) < 1e-9 and abs(report["values"][1] - 1.0) < 1e-9

    channel = ExperimentConfig(
        config.plan, witness.purifier_kind(1.0, 3.0, 1.0),
        provers.channel_prover("ideal", witness.purifier_kind(1.0, 3.0, 1.0)), 1, 1,
    )
    with pytest.raises(ValueError):
        harness.fock_convergence(channel)
    with pytest.raises(ValueError):
        harness.ConvergenceConfig(lambda c: fock.vacuum(c), q2, 1)

    print("✓ Fock convergence test passed")
