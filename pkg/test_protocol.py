#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for the verifier protocol and transcripts
"""
import math
import os
import sys

import numpy as np
import pytest

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import fock
import phasespace
import planner
import protocol
import provers
import witness
from planner import PlanError
from provers import ProverExhausted, Target


def _desk_plan():
    return planner.desk_plan(1, 1, 0.2, 50, 2000, 600)


def _vacuum_kind():
    return witness.gaussian_state_kind(phasespace.make_vacuum(1))


def test_role_partition():
    """Every register gets exactly one role and group sizes follow the plan"""
    print("\n=== Testing Role Partition ===")

    plan = planner.desk_plan(2, 2, 0.2, 50, 2000, 600)
    kind = witness.gaussian_state_kind(phasespace.make_vacuum(2))
    session = protocol.VerifierSession(plan, kind, np.random.default_rng(0))
    assert len(session.roles) == plan.total_registers
    assert sorted(session.roles) == list(range(plan.total_registers))
    assert [len(g) for g in session.groups] == [plan.N // 2] * plan.k
    assert len(session.discarded) == plan.N - plan.L
    assert len(session.fidelity_registers) == plan.L - plan.m
    assert len(session.kept) == plan.m
    assert sum(1 for r in session.roles.values() if r == "dimension_test") == plan.K

    other = protocol.VerifierSession(plan, kind, np.random.default_rng(1))
    assert other.kept != session.kept or other.groups != session.groups

    print("✓ Role partition test passed")


def test_session_validation():
    """Mismatched plans and settings are refused"""
    print("\n=== Testing Session Validation ===")

    with pytest.raises(PlanError):
        protocol.VerifierSession(
            _desk_plan(), witness.gaussian_state_kind(phasespace.make_vacuum(2)), np.random.default_rng(0)
        )
    with pytest.raises(ValueError):
        protocol.build_observable_for(_vacuum_kind(), 0, math.pi / 2, "q")
    with pytest.raises(ValueError):
        protocol.run_channel_verification(
            _desk_plan(), None, _vacuum_kind(), np.random.default_rng(0)
        )

    short = provers.honest_iid(Target(_vacuum_kind())).instantiate(0, 10)
    with pytest.raises(ProverExhausted):
        protocol.run_state_verification(_desk_plan(), short, _vacuum_kind(), np.random.default_rng(0))

    print("✓ Session validation test passed")


def test_honest_prover_accepted():
    """Honest vacuum registers pass both stages"""
    print("\n=== Testing Honest Verification ===")

    plan = _desk_plan()
    kind = _vacuum_kind()
    run = provers.honest_iid(Target(kind)).instantiate(11, plan.total_registers)
    verdict = protocol.run_state_verification(plan, run, kind, np.random.default_rng(11))
    assert verdict.accepted
    assert verdict.failed_stage is None
    assert verdict.group_counts[0] <= plan.R
    assert abs(verdict.log_fidelity()) < 1e-9
    assert verdict.to_dict()["witness"]["samples_used"] == plan.L - plan.m

    kept = verdict.kept_register_ids[0]
    assert run.sampled(kept) == 0
    assert sum(run.samples.values()) == plan.K + plan.L - plan.m

    print("✓ Honest verification test passed")


def test_cheating_provers_rejected():
    """Displaced registers fail the fidelity test, hot registers the dimension test"""
    print("\n=== Testing Cheating Provers ===")

    plan = _desk_plan()
    kind = _vacuum_kind()
    target = Target(kind)

    coherent = provers.iid_wrong(target, phasespace.coherent_state(2.0)).instantiate(3, plan.total_registers)
    verdict = protocol.run_state_verification(plan, coherent, kind, np.random.default_rng(3))
    assert not verdict.accepted
    assert verdict.failed_stage == "fidelity_test"
    assert verdict.witness.value < 0.0
    assert abs(verdict.log_fidelity() + 4.0) < 1e-9

    hot = provers.iid_wrong(target, phasespace.thermal_state(30.0)).instantiate(4, plan.total_registers)
    verdict = protocol.run_state_verification(plan, hot, kind, np.random.default_rng(4))
    assert verdict.failed_stage == "dimension_test"
    assert verdict.witness is None
    assert verdict.group_counts[0] == plan.R + 1

    print("✓ Cheating prover test passed")


def test_replay_matches_live_verdict(tmp_path):
    """A transcript written to disk reproduces the live verdict"""
    print("\n=== Testing Transcript Replay ===")

    plan = _desk_plan()
    kind = _vacuum_kind()
    run = provers.iid_wrong(Target(kind), phasespace.squeezed_vacuum(0.2)).instantiate(8, plan.total_registers)
    session = protocol.VerifierSession(plan, kind, np.random.default_rng(8))
    live = session.run(run)

    path = tmp_path / "transcript.jsonl"
    protocol.write_transcript(session.transcript, str(path))
    records = protocol.read_transcript(str(path))
    assert len(records) == len(session.transcript)
    assert records[0] == session.transcript[0]

    replayed = protocol.verdict_from_transcript(plan, kind, records, session.kept)
    assert replayed.accepted == live.accepted
    assert replayed.group_counts == live.group_counts
    assert replayed.witness.value == live.witness.value

    stages = {r.stage for r in records}
    assert stages == {"dimension", "fidelity"}
    assert all(r.flag in (0, 1) for r in records if r.stage == "dimension")
    assert all(0.0 <= r.theta < math.pi / 2 for r in records)

    print("✓ Transcript replay test passed")


def test_channel_verification():
    """Storage benchmark accepts the identity and rejects a vacuum replacer"""
    print("\n=== Testing Channel Verification ===")

    plan = _desk_plan()
    storage = witness.attenuator_kind(1.0)

    ideal = provers.channel_prover("ideal", storage).instantiate(0, plan.total_registers)
    verdict = protocol.run_channel_verification(plan, ideal, storage, np.random.default_rng(21))
    assert verdict.accepted
    assert abs(verdict.witness.value - 1.0) < 0.1

    cheat = provers.channel_prover("replace_with_vacuum", storage).instantiate(0, plan.total_registers)
    verdict = protocol.run_channel_verification(plan, cheat, storage, np.random.default_rng(22))
    assert not verdict.accepted
    assert verdict.failed_stage == "fidelity_test"
    assert abs(verdict.log_fidelity() - math.log(0.5)) < 1e-9

    print("✓ Channel verification test passed")


def test_purifier_channel_verification():
    """Best Gaussian purifier is accepted in both gain regimes, a vacuum replacer is not"""
    print("\n=== Testing Purifier Verification ===")

    plan = _desk_plan()
    for seed, params in enumerate([(1.0, 3.0, 1.0), (1.0, 4.0, 1.0), (1.0, 1.0, 1.0)]):
        kind = witness.purifier_kind(*params)
        honest = provers.channel_prover("ideal", kind).instantiate(seed, plan.total_registers)
        verdict = protocol.run_channel_verification(plan, honest, kind, np.random.default_rng(30 + seed))
        assert verdict.accepted, kind.tag
        assert abs(verdict.witness.value - kind.fbar_norm) < 0.08 * kind.fbar_norm
        assert verdict.witness.threshold < kind.fbar_norm

        cheat = provers.channel_prover("replace_with_vacuum", kind).instantiate(seed, plan.total_registers)
        verdict = protocol.run_channel_verification(plan, cheat, kind, np.random.default_rng(40 + seed))
        assert not verdict.accepted

    print("✓ Purifier verification test passed")


def test_multimode_fock_outcomes_are_continuous():
    """Single-mode observables on a two-mode Fock prover give homodyne-distributed outcomes"""
    print("\n=== Testing Multimode Fock Sampling ===")

    plan = planner.desk_plan(2, 1, 0.2, 50, 2000, 600)
    kind = witness.gaussian_state_kind(phasespace.make_vacuum(2))
    session = protocol.VerifierSession(plan, kind, np.random.default_rng(3), cutoff=12)
    state = fock.vacuum(12, modes=2)
    rng = np.random.default_rng(4)
    outcomes = []
    for i in range(400):
        theta = float(rng.uniform(0.0, math.pi / 2))
        outcomes.append(session.measurement(i % 2, theta, "q" if i % 4 < 2 else "p")(state, rng))
    assert len(set(outcomes)) == len(outcomes)
    assert abs(float(np.var(outcomes)) - 0.5) < 0.12
    assert abs(float(np.mean(outcomes))) < 0.15

    print("✓ Multimode Fock sampling test passed")
