#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Verifier protocol
Features:
- Role assignment by one uniformly random permutation of register ids
- Dimension test with strict threshold and early abort
- Fidelity test with random mode, angle and branch per register
- State and channel verification sharing one transcript-driven verdict
- JSON-lines transcripts for offline replay
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Union

import numpy as np

import fock
import phasespace
from fock import FockArray, PolynomialObservable
from phasespace import GaussianChannel, GaussianState, LinearObservable
from planner import PlanError, VerificationPlan
from provers import ChannelRun, ProverExhausted, ProverRun
from witness import (
    ProbeSpec,
    UnrepresentableProverError,
    WitnessEstimate,
    WitnessKind,
    estimate,
    hypergraph_frame,
    probe_spec,
    state_observable,
)

ROLES = ("dimension_test", "discarded", "fidelity_test", "kept")
HALF_PI = 0.5 * math.pi


@dataclass
class TranscriptRecord:
    register: int
    stage: str
    group: int
    theta: float
    branch: str
    outcome: float
    flag: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TranscriptRecord":
        return cls(
            int(data["register"]),
            str(data["stage"]),
            int(data["group"]),
            float(data["theta"]),
            str(data["branch"]),
            float(data["outcome"]),
            None if data.get("flag") is None else int(data["flag"]),
        )


@dataclass
class Verdict:
    dimension_pass: bool
    fidelity_pass: Optional[bool]
    witness: Optional[WitnessEstimate]
    kept_register_ids: List[int]
    group_counts: List[int]
    kept_fidelities: List[float] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.dimension_pass and bool(self.fidelity_pass)

    @property
    def failed_stage(self) -> Optional[str]:
        if not self.dimension_pass:
            return "dimension_test"
        if not self.fidelity_pass:
            return "fidelity_test"
        return None

    def log_fidelity(self) -> float:
        """Sum of log kept fidelities (-inf when any is zero)"""
        total = 0.0
        for f in self.kept_fidelities:
            if f <= 0.0:
                return -math.inf
            total += math.log(f)
        return total

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accepted": self.accepted,
            "dimension_pass": self.dimension_pass,
            "fidelity_pass": self.fidelity_pass,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "kept_register_ids": self.kept_register_ids,
            "group_counts": self.group_counts,
        }


def build_observable_for(
    kind: WitnessKind, j: int, theta: float, branch: str, probe: Optional[ProbeSpec] = None
) -> Union[LinearObservable, PolynomialObservable]:
    if not 0.0 <= theta < HALF_PI:
        raise ValueError(f"theta must lie in [0, pi/2), got {theta}")
    if kind.is_channel:
        probe = probe or probe_spec(kind)
        if not 0 <= j < kind.k:
            raise ValueError(f"mode index {j} out of range for k={kind.k}")
        return probe.observable(j, theta, branch)
    return state_observable(kind, j, theta, branch)


class VerifierSession:
    """Single-threaded verifier run owning its random stream"""

    def __init__(
        self,
        plan: VerificationPlan,
        kind: WitnessKind,
        rng: np.random.Generator,
        cutoff: int = 30,
    ):
        if not plan.m < plan.L:
            raise PlanError(f"need m < L, got m={plan.m}, L={plan.L}")
        if plan.k != kind.k:
            raise PlanError(f"plan is for k={plan.k}, witness for k={kind.k}")
        self.plan = plan
        self.kind = kind
        self.rng = rng
        self.cutoff = cutoff
        self.probe = probe_spec(kind) if kind.is_channel else None
        self.transcript: List[TranscriptRecord] = []
        self.roles: Dict[int, str] = {}
        self._fock_views: Dict[int, FockArray] = {}
        self._outputs: Dict[int, GaussianState] = {}
        self._assign_roles()

    def _assign_roles(self):
        plan = self.plan
        order = [int(r) for r in self.rng.permutation(plan.total_registers)]
        K, half = plan.K, plan.N // 2
        self.groups: List[List[int]] = [order[g * half:(g + 1) * half] for g in range(plan.k)]
        rest = order[K:]
        self.discarded = rest[: plan.N - plan.L]
        self.fidelity_registers = rest[plan.N - plan.L: plan.N - plan.m]
        self.kept = rest[plan.N - plan.m:]
        for group in self.groups:
            for r in group:
                self.roles[r] = "dimension_test"
        for name, registers in (
            ("discarded", self.discarded),
            ("fidelity_test", self.fidelity_registers),
            ("kept", self.kept),
        ):
            for r in registers:
                self.roles[r] = name

    def _draw_setting(self):
        theta = float(self.rng.uniform(0.0, HALF_PI))
        branch = "q" if self.rng.random() < 0.5 else "p"
        return theta, branch

    # Measurement dispatch

    def measurement(self, j: int, theta: float, branch: str) -> Callable:
        if self.kind.is_channel:
            return self._channel_measurement(j, theta, branch)
        obs = build_observable_for(self.kind, j, theta, branch)

        def measure(state, rng: np.random.Generator) -> float:
            return self._measure_state(state, obs, j, theta, branch, rng)

        return measure

    def _channel_measurement(self, j: int, theta: float, branch: str) -> Callable:
        probe = self.probe
        obs = probe.observable(j, theta, branch)

        def measure(ch: GaussianChannel, rng: np.random.Generator) -> float:
            key = id(ch)
            if key not in self._outputs:
                self._outputs[key] = probe.output_state(ch)
            return float(phasespace.sample_homodyne(self._outputs[key], obs, rng))

        return measure

    def _fock_view(self, state) -> FockArray:
        key = id(state)
        if key not in self._fock_views:
            view = state
            if isinstance(state, GaussianState):
                view = fock.gaussian_to_fock(state, self.cutoff)
            self._fock_views[key] = fock.apply_hyperedges(view, self.kind.edges, inverse=True)
        return self._fock_views[key]

    def _measure_state(self, state, obs, j: int, theta: float, branch: str,
                       rng: np.random.Generator) -> float:
        if isinstance(state, GaussianState) and isinstance(obs, LinearObservable):
            return float(phasespace.sample_homodyne(state, obs, rng))
        if self.kind.tag == "hypergraph_state":
            scale, angle = hypergraph_frame(self.kind, theta, branch)
            return scale * float(fock.quadrature_sample(self._fock_view(state), j, angle, rng))
        if not isinstance(state, FockArray):
            raise UnrepresentableProverError(
                f"cannot measure {type(obs).__name__} on {type(state).__name__}"
            )
        return self._sample_linear_on_fock(state, obs, rng)

    def _sample_linear_on_fock(self, state: FockArray, obs: LinearObservable, rng: np.random.Generator) -> float:
        """Homodyne outcome of a linear observable on a truncated Fock prover.

        Observables touching a single mode are continuous homodyne samples of
        that mode's reduced state. Observables mixing several modes are drawn
        from the spectrum of the truncated operator, so their outcomes take at
        most cutoff^modes distinct values.
        """
        support = sorted({i // 2 for i in np.flatnonzero(np.abs(obs.coeffs) > 1e-14)})
        if len(support) <= 1:
            mode = support[0] if support else 0
            a_q, a_p = obs.coeffs[2 * mode], obs.coeffs[2 * mode + 1]
            scale, angle = math.hypot(a_q, a_p), math.atan2(a_p, a_q)
            return scale * float(fock.quadrature_sample(state, mode, angle, rng)) + obs.offset
        spec = PolynomialObservable.linear(obs.coeffs)
        matrix = fock.build_observable(spec, state.modes, state.cutoff)
        key = ("linear", state.cutoff, obs.coeffs.tobytes())
        return float(fock.born_sample(state, matrix, rng, key=key)) + obs.offset

    # Stages

    def run_dimension_test(self, prover: Union[ProverRun, ChannelRun]) -> bool:
        limit = self.plan.d0 / 2.0
        for j, group in enumerate(self.groups):
            count = 0
            for register in group:
                theta, branch = self._draw_setting()
                outcome = prover.measure(register, self.measurement(j, theta, branch), self.rng)
                z = int(outcome ** 2 > limit)
                count += z
                self.transcript.append(
                    TranscriptRecord(register, "dimension", j, theta, branch, float(outcome), z)
                )
                if count > self.plan.R:
                    logging.debug(f"❌ Dimension test group {j} exceeded R={self.plan.R}; aborting")
                    return False
        return True

    def run_fidelity_test(self, prover: Union[ProverRun, ChannelRun]) -> WitnessEstimate:
        chis = []
        for register in self.fidelity_registers:
            j = int(self.rng.integers(self.kind.k))
            theta, branch = self._draw_setting()
            outcome = prover.measure(register, self.measurement(j, theta, branch), self.rng)
            chis.append(float(outcome))
            self.transcript.append(
                TranscriptRecord(register, "fidelity", j, theta, branch, float(outcome))
            )
        return estimate(self.kind, chis, self.plan.m, self.plan.epsilon)

    def run(self, prover: Union[ProverRun, ChannelRun]) -> Verdict:
        if len(prover) < self.plan.total_registers:
            raise ProverExhausted(
                f"prover serves {len(prover)} registers, plan needs {self.plan.total_registers}"
            )
        if self.run_dimension_test(prover):
            self.run_fidelity_test(prover)
        verdict = verdict_from_transcript(self.plan, self.kind, self.transcript, self.kept)
        verdict.kept_fidelities = [prover.fidelity(r) for r in self.kept]
        return verdict


def verdict_from_transcript(
    plan: VerificationPlan,
    kind: WitnessKind,
    records: Iterable[TranscriptRecord],
    kept_ids: List[int],
) -> Verdict:
    """Verdict computed only from recorded outcomes (live runs and replays)"""
    records = list(records)
    limit = plan.d0 / 2.0
    counts = [0] * plan.k
    for record in records:
        if record.stage == "dimension":
            counts[record.group] += int(record.outcome ** 2 > limit)
    dimension_pass = all(c <= plan.R for c in counts)
    if not dimension_pass:
        return Verdict(False, None, None, list(kept_ids), counts)
    chis = [r.outcome for r in records if r.stage == "fidelity"]
    if not chis:
        raise ValueError("transcript passed the dimension test but holds no fidelity outcomes")
    witness = estimate(kind, chis, plan.m, plan.epsilon)
    return Verdict(True, witness.passed, witness, list(kept_ids), counts)


def run_state_verification(
    plan: VerificationPlan,
    prover: ProverRun,
    kind: WitnessKind,
    rng: np.random.Generator,
    cutoff: int = 30,
) -> Verdict:
    session = VerifierSession(plan, kind, rng, cutoff)
    verdict = session.run(prover)
    _log_verdict("State", verdict)
    return verdict


def run_channel_verification(
    plan: VerificationPlan,
    prover: ChannelRun,
    kind: WitnessKind,
    rng: np.random.Generator,
) -> Verdict:
    if not kind.is_channel:
        raise ValueError(f"{kind.tag} is not a channel benchmark")
    session = VerifierSession(plan, kind, rng)
    verdict = session.run(prover)
    _log_verdict("Channel", verdict)
    return verdict


def _log_verdict(label: str, verdict: Verdict):
    if verdict.accepted:
        logging.debug(f"✅ {label} verification accepted (W*={verdict.witness.value:.4f})")
    else:
        logging.debug(f"❌ {label} verification rejected at {verdict.failed_stage}")


# Transcript files

def write_transcript(records: Iterable[TranscriptRecord], path: str):
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_dict()) + "\n")


def read_transcript(path: str) -> List[TranscriptRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(TranscriptRecord.from_dict(json.loads(line)))
    return records
