#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Monte Carlo experiment harness
Features:
- Seeded, scheduling-independent parallel trials (one SeedSequence child per trial)
- Empirical completeness and soundness with Wilson intervals
- Stage failure attribution and comparison with planner bounds
- Serfling and dimension-test (lemma1) empirical validation on synthetic populations
- Parameter sweeps with log-log exponent fits and Fock cutoff convergence checks
"""
from __future__ import annotations

import itertools
import logging
import math
import threading
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, DefaultDict, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

import fock
import planner
import protocol
from fock import FockArray, LeakageError, PolynomialObservable
from planner import BoundDomainError, VerificationPlan, fit_exponent, polylog_factor
from provers import ChannelProverScript, ProverScript
from witness import WitnessKind

SCHEMA_VERSION = 1
LEAKAGE_FACTOR = 10.0
SWEEP_COLUMNS = [
    "k",
    "m",
    "epsilon",
    "d0",
    "N",
    "L",
    "R",
    "Q",
    "total_registers",
    "in_regime",
    "soundness_total",
    "completeness_deficit",
    "accept_rate",
    "soundness_value",
]


TRIAL_COMPLETED = "trial_completed"
EXPERIMENT_FINISHED = "experiment_finished"
EXPERIMENT_EVENTS = (TRIAL_COMPLETED, EXPERIMENT_FINISHED)


class EventEmitter:
    """Experiment progress hooks: one TrialResult per trial, one report per run"""

    def __init__(self):
        self._listeners: DefaultDict[str, List[Callable[[Any], None]]] = defaultdict(list)

    def on(self, event: str, callback: Callable[[Any], None]):
        if event not in EXPERIMENT_EVENTS:
            raise ValueError(f"unknown experiment event '{event}', expected one of {EXPERIMENT_EVENTS}")
        self._listeners[event].append(callback)

    def emit(self, event: str, payload: Any):
        for callback in tuple(self._listeners.get(event, ())):
            try:
                callback(payload)
            except Exception as e:
                logging.error(f"⚠️ Listener {getattr(callback, '__name__', callback)!r} failed on {event}: {e}")


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial,)))


def wilson_interval(successes: float, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    if trials < 2:
        return 0.0, 1.0
    z = float(stats.norm.ppf(1.0 - (1.0 - confidence) / 2.0))
    p = successes / trials
    denom = 1.0 + z ** 2 / trials
    center = (p + z ** 2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z ** 2 / (4.0 * trials ** 2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# Experiments

@dataclass
class ExperimentConfig:
    plan: VerificationPlan
    kind: WitnessKind
    prover: Union[ProverScript, ChannelProverScript]
    trials: int
    master_seed: int
    threads: int = 1
    cutoff: int = 30
    include_timing: bool = False
    status_interval: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")

    @property
    def channel(self) -> bool:
        return isinstance(self.prover, ChannelProverScript)


@dataclass
class TrialResult:
    trial: int
    accepted: bool
    failed_stage: Optional[str]
    witness_value: Optional[float]
    log_fidelity: float
    samples: int
    leakage: float

    @property
    def soundness_term(self) -> float:
        """accept * (1 - product of kept fidelities)"""
        if not self.accepted:
            return 0.0
        return 1.0 - math.exp(self.log_fidelity) if self.log_fidelity > -math.inf else 1.0


class ExperimentRunner(EventEmitter):
    """Runs verification trials and aggregates their sufficient statistics"""

    def __init__(self, config: ExperimentConfig):
        super().__init__()
        self.config = config
        self._lock = threading.Lock()
        self.leakage_limit = LEAKAGE_FACTOR / math.sqrt(config.plan.fidelity_samples)
        self.stats = {
            "trials_completed": 0,
            "accepted": 0,
            "dimension_failures": 0,
            "fidelity_failures": 0,
            "registers_measured": 0,
            "start_time": time.time(),
        }

    def run_trial(self, trial: int) -> TrialResult:
        config = self.config
        rng = trial_rng(config.master_seed, trial)
        prover_seed = int(rng.integers(2 ** 63))
        run = config.prover.instantiate(prover_seed, config.plan.total_registers)
        if run.max_leakage > self.leakage_limit:
            raise LeakageError(
                f"prover leakage {run.max_leakage:.3e} exceeds {self.leakage_limit:.3e}"
            )
        if config.channel:
            verdict = protocol.run_channel_verification(config.plan, run, config.kind, rng)
        else:
            verdict = protocol.run_state_verification(
                config.plan, run, config.kind, rng, cutoff=config.cutoff
            )
        result = TrialResult(
            trial,
            verdict.accepted,
            verdict.failed_stage,
            None if verdict.witness is None else verdict.witness.value,
            verdict.log_fidelity(),
            sum(run.samples.values()),
            run.max_leakage,
        )
        self._record(result)
        return result

    def _record(self, result: TrialResult):
        with self._lock:
            self.stats["trials_completed"] += 1
            self.stats["accepted"] += int(result.accepted)
            self.stats["registers_measured"] += result.samples
            if result.failed_stage == "dimension_test":
                self.stats["dimension_failures"] += 1
            elif result.failed_stage == "fidelity_test":
                self.stats["fidelity_failures"] += 1
            done = self.stats["trials_completed"]
        self.emit(TRIAL_COMPLETED, result)
        interval = self.config.status_interval
        if interval and done % interval == 0:
            self._report_status()

    def _report_status(self):
        """Log a status block from the running statistics"""
        elapsed = time.time() - self.stats["start_time"]
        elapsed_str = f"{elapsed / 60:.1f}m" if elapsed > 60 else f"{elapsed:.1f}s"
        done = self.stats["trials_completed"]
        rate = self.stats["accepted"] / done * 100 if done else 0.0
        logging.info("📊 === Experiment Status Report ===")
        logging.info(f"📊 Trials: {done}/{self.config.trials} | Elapsed: {elapsed_str}")
        logging.info(f"📊 Accepted: {self.stats['accepted']} ({rate:.1f}%)")
        logging.info(
            f"📊 Failures - Dimension: {self.stats['dimension_failures']} | "
            f"Fidelity: {self.stats['fidelity_failures']}"
        )
        logging.info(f"📊 Registers measured: {self.stats['registers_measured']}")
        logging.info("📊 ==============================")

    def get_status(self) -> Dict[str, Any]:
        with self._lock:
            return dict(self.stats)

    def run(self, experiment: str = "verification") -> Dict[str, Any]:
        config = self.config
        logging.info(
            f"🔬 Starting {experiment} run: {config.trials} trials, "
            f"{config.plan.total_registers} registers each, {config.threads} thread(s)"
        )
        started = time.time()
        if config.threads == 1:
            results = [self.run_trial(t) for t in range(config.trials)]
        else:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                results = list(pool.map(self.run_trial, range(config.trials)))
        report = build_report(config, results, experiment)
        if config.include_timing:
            report["timing"] = {"wall_seconds": time.time() - started}
        self.emit(EXPERIMENT_FINISHED, report)
        if config.status_interval:
            self._report_status()
        marker = "✅" if report["accept_rate"] >= 0.5 else "❌"
        logging.info(
            f"{marker} {experiment} finished: accept rate {report['accept_rate']:.4f}, "
            f"soundness value {report['soundness_value']:.4g}"
        )
        return report


def build_report(config: ExperimentConfig, results: List[TrialResult], experiment: str) -> Dict[str, Any]:
    """Aggregate per-trial results in trial order"""
    results = sorted(results, key=lambda r: r.trial)
    n = len(results)
    accepted = sum(r.accepted for r in results)
    soundness_total = math.fsum(r.soundness_term for r in results)
    accept_rate = accepted / n
    soundness_value = soundness_total / n
    witness_values = [r.witness_value for r in results if r.witness_value is not None]
    plan = config.plan
    flags = list(plan.flags)
    if n < 2:
        flags.append("degenerate_interval")
    try:
        soundness_bound = planner.soundness_bound(plan).to_dict()
    except BoundDomainError:
        soundness_bound = None
    completeness = planner.completeness_bound(plan).to_dict()
    if plan.in_regime:
        if soundness_bound is not None and soundness_value > soundness_bound["total"]:
            flags.append("soundness_bound_violation")
        if experiment == "completeness" and 1.0 - accept_rate > completeness["total"]:
            flags.append("completeness_bound_violation")
    report: Dict[str, Any] = {
        "schema": SCHEMA_VERSION,
        "experiment": experiment,
        "seed": config.master_seed,
        "trials": n,
        "plan": planner.plan_to_dict(plan),
        "witness": config.kind.describe(),
        "threshold": config.kind.threshold(plan.m, plan.epsilon),
        "prover": config.prover.describe(),
        "accept_rate": accept_rate,
        "accept_interval": list(wilson_interval(accepted, n)),
        "soundness_value": soundness_value,
        "soundness_interval": list(wilson_interval(soundness_total, n)),
        "stage_failures": {
            "dimension_test": sum(r.failed_stage == "dimension_test" for r in results),
            "fidelity_test": sum(r.failed_stage == "fidelity_test" for r in results),
        },
        "witness_mean": float(np.mean(witness_values)) if witness_values else None,
        "witness_sd": float(np.std(witness_values, ddof=1)) if len(witness_values) > 1 else None,
        "bounds": {"soundness": soundness_bound, "completeness": completeness},
        "samples": sum(r.samples for r in results),
        "max_leakage": max((r.leakage for r in results), default=0.0),
        "flags": flags,
    }
    return report


def estimate_completeness(config: ExperimentConfig) -> Dict[str, Any]:
    return ExperimentRunner(config).run("completeness")


def estimate_soundness(config: ExperimentConfig) -> Dict[str, Any]:
    return ExperimentRunner(config).run("soundness")


# Concentration checks

SERFLING_GRID = [
    {"n": 100, "k": 100, "delta": 0.1},
    {"n": 150, "k": 50, "delta": 0.1},
    {"n": 50, "k": 150, "delta": 0.15},
    {"n": 100, "k": 100, "delta": 0.0},
]
LEMMA1_GRID = [
    {"d0": 4, "K": 200, "N": 400, "R": 2, "Q": 360, "cutoff": 8},
    {"d0": 5, "K": 150, "N": 300, "R": 1, "Q": 270, "cutoff": 8},
]


def _serfling_exact(n: int, k: int, delta: float, upper: bool) -> float:
    """Exact event probability with the number of ones uniform on 0..n+k"""
    total = n + k
    x = np.arange(k + 1)
    prob = 0.0
    for ones in range(total + 1):
        pmf = stats.hypergeom.pmf(x, total, ones, k)
        outside = (ones - x) * k
        inside = x * n
        if upper:
            event = outside >= inside + delta * n * k
        else:
            event = outside <= inside - delta * n * k
        prob += float(np.sum(pmf[event]))
    return prob / (total + 1)


def _serfling_cell(cell: Dict[str, Any], populations: int, rng: np.random.Generator) -> List[Dict[str, Any]]:
    n, k, delta = int(cell["n"]), int(cell["k"]), float(cell["delta"])
    total = n + k
    ones = rng.integers(0, total + 1, size=populations)
    sampled = rng.hypergeometric(ones, total - ones, k)
    outside = (ones - sampled) * k
    inside = sampled * n
    rows = []
    for name, upper in (("serfling_upper", True), ("serfling_lower", False)):
        if upper:
            event = outside >= inside + delta * n * k
        else:
            event = outside <= inside - delta * n * k
        empirical = float(np.mean(event))
        bound = planner.concentration_bounds(name, delta=delta, n=n, k=k)
        sigma = math.sqrt(bound.value * (1.0 - bound.value) / populations)
        rows.append({
            "bound_name": name,
            **cell,
            "populations": populations,
            "empirical": empirical,
            "exact": _serfling_exact(n, k, delta, upper),
            "bound": bound.value,
            "sigma": sigma,
            "violation": empirical > bound.value + 3.0 * sigma,
        })
    return rows


def fock_tail_probabilities(d0: float, cutoff: int, points: int = 8001) -> np.ndarray:
    """Pr(x^2 > d0/2) for homodyne outcomes on |0>..|cutoff-1> (any angle)"""
    half_width = math.sqrt(2.0 * cutoff + 1.0) + 8.0
    x = np.linspace(-half_width, half_width, points)
    density = fock.hermite_functions(cutoff, x) ** 2
    mask = x ** 2 > d0 / 2.0
    inside = trapezoid(density * mask, x, axis=1)
    return np.clip(inside / trapezoid(density, x, axis=1), 0.0, 1.0)


def _lemma1_cell(cell: Dict[str, Any], populations: int, rng: np.random.Generator) -> Dict[str, Any]:
    d0, K, N = float(cell["d0"]), int(cell["K"]), int(cell["N"])
    R, Q, cutoff = int(cell["R"]), int(cell["Q"]), int(cell["cutoff"])
    tails = fock_tail_probabilities(d0, cutoff)
    levels = np.arange(cutoff)
    high = levels >= d0
    hits = 0
    for _ in range(populations):
        weights = rng.dirichlet(np.full(cutoff, 0.5))
        photons = rng.choice(cutoff, size=K + N, p=weights)
        z = rng.random(K) < tails[photons[:K]]
        y = high[photons[K:]]
        if z.sum() <= R and y.sum() > Q:
            hits += 1
    empirical = hits / populations
    try:
        bound = planner.concentration_bounds("lemma1", K=K, N=N, R=R, Q=Q)
    except BoundDomainError as e:
        return {"bound_name": "lemma1", **cell, "populations": populations, "empirical": empirical,
                "bound": None, "sigma": None, "violation": False, "skipped": str(e)}
    sigma = math.sqrt(bound.value * (1.0 - bound.value) / populations)
    return {
        "bound_name": "lemma1",
        **cell,
        "populations": populations,
        "empirical": empirical,
        "bound": bound.value,
        "clamped": bound.clamped,
        "sigma": sigma,
        "violation": empirical > bound.value + 3.0 * sigma,
    }


def validate_concentration(lemma: str, config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Empirical tail frequencies against the concentration bounds"""
    config = config or {}
    seed = int(config.get("seed", 0))
    rng = np.random.default_rng(seed)
    if lemma == "serfling":
        populations = int(config.get("populations", 10000))
        cells = []
        for cell in config.get("grid", SERFLING_GRID):
            cells.extend(_serfling_cell(cell, populations, rng))
    elif lemma == "lemma1":
        populations = int(config.get("populations", 1000))
        cells = [_lemma1_cell(cell, populations, rng) for cell in config.get("grid", LEMMA1_GRID)]
    else:
        raise ValueError(f"unknown lemma {lemma!r}")
    violations = sum(bool(c["violation"]) for c in cells)
    if violations:
        logging.warning(f"❌ {violations} {lemma} cell(s) exceed bound + 3 sigma")
    else:
        logging.info(f"✅ {lemma}: all {len(cells)} cells within bound + 3 sigma")
    return {"schema": SCHEMA_VERSION, "lemma": lemma, "seed": seed, "cells": cells, "violations": violations}


# Sweeps and convergence

def sweep(
    grid: Dict[str, Sequence[Any]],
    experiment: Optional[Callable[[VerificationPlan], Dict[str, Any]]] = None,
) -> Dict[str, Any]:
    """Plans and bounds over the product of k, m, epsilon (and d0, N, L for desk plans)"""
    keys = ["k", "m", "epsilon"]
    desk = all(key in grid for key in ("d0", "N", "L"))
    if desk:
        keys += ["d0", "N", "L"]
    rows: List[Dict[str, Any]] = []
    plans: List[VerificationPlan] = []
    for values in itertools.product(*(grid.get(key, []) for key in keys)):
        cell = dict(zip(keys, values))
        if desk:
            plan = planner.desk_plan(cell["k"], cell["m"], cell["epsilon"], cell["d0"], cell["N"], cell["L"])
        else:
            plan = planner.make_plan(cell["k"], cell["m"], cell["epsilon"])
        try:
            soundness_total: Optional[float] = planner.soundness_bound(plan).total
        except BoundDomainError:
            soundness_total = None
        row = {
            "k": plan.k,
            "m": plan.m,
            "epsilon": plan.epsilon,
            "d0": plan.d0,
            "N": plan.N,
            "L": plan.L,
            "R": plan.R,
            "Q": plan.Q,
            "total_registers": plan.total_registers,
            "in_regime": plan.in_regime,
            "soundness_total": soundness_total,
            "completeness_deficit": planner.completeness_bound(plan).total,
            "accept_rate": None,
            "soundness_value": None,
        }
        if experiment is not None:
            outcome = experiment(plan)
            row["accept_rate"] = outcome.get("accept_rate")
            row["soundness_value"] = outcome.get("soundness_value")
        rows.append(row)
        plans.append(plan)
    fits = []
    in_regime = [(row, plan) for row, plan in zip(rows, plans) if row["in_regime"]]
    for (k, m), group in itertools.groupby(
        sorted(in_regime, key=lambda cell: (cell[1].k, cell[1].m, cell[1].epsilon)),
        key=lambda cell: (cell[1].k, cell[1].m),
    ):
        group = list(group)
        if len({plan.epsilon for _, plan in group}) < 2:
            continue
        # N ~ (1/eps)^p: regress against 1/eps
        inverse = [1.0 / plan.epsilon for _, plan in group]
        totals = [plan.total_registers for _, plan in group]
        fits.append(
            {
                "k": k,
                "m": m,
                "inverse_epsilon_exponent": fit_exponent(inverse, totals),
                "corrected_exponent": fit_exponent(
                    inverse, [t / polylog_factor(plan) for t, (_, plan) in zip(totals, group)]
                ),
            }
        )
    return {"schema": SCHEMA_VERSION, "rows": rows, "fits": fits}


def energy_observable(modes: int) -> PolynomialObservable:
    """Sum of q^2 + p^2 over all modes (2n + modes)"""
    terms = []
    for mode in range(modes):
        terms.append((1.0, ((mode, "q", 2),)))
        terms.append((1.0, ((mode, "p", 2),)))
    return PolynomialObservable(tuple(terms))


@dataclass
class ConvergenceConfig:
    """Fock statistic checked at cutoffs D and 2D"""

    prepare: Callable[[int], FockArray]
    observable: PolynomialObservable
    cutoff: int
    strict: bool = False

    def __post_init__(self):
        if self.cutoff < 2:
            raise ValueError(f"cutoff must be at least 2, got {self.cutoff}")

    @classmethod
    def from_experiment(
        cls,
        config: ExperimentConfig,
        observable: Optional[PolynomialObservable] = None,
        strict: bool = False,
    ) -> "ConvergenceConfig":
        if config.channel:
            raise ValueError("cutoff convergence needs a state target, got a channel benchmark")
        target = config.prover.target
        return cls(target.fock, observable or energy_observable(target.k), config.cutoff, strict)


def fock_convergence(config: Union[ConvergenceConfig, ExperimentConfig]) -> Dict[str, Any]:
    """Compare <O> at cutoffs D and 2D against the truncation budget"""
    if isinstance(config, ExperimentConfig):
        config = ConvergenceConfig.from_experiment(config)
    prepare, observable, strict = config.prepare, config.observable, config.strict
    low, high = config.cutoff, 2 * config.cutoff
    coarse, fine = prepare(low), prepare(high)
    values = [fock.expectation(coarse, observable), fock.expectation(fine, observable)]
    norms = [math.sqrt(max(fock.second_moment(s, observable), 0.0)) for s in (coarse, fine)]
    leakage = max(coarse.leakage, coarse.edge_weight())
    drift = abs(values[1] - values[0])
    budget = math.sqrt(leakage) * (norms[0] + norms[1])
    within = drift <= budget + 1e-12
    if strict and not within:
        raise LeakageError(f"cutoff drift {drift:.3e} exceeds leakage budget {budget:.3e}")
    logging.info(f"🔬 Cutoff {low}->{high}: drift {drift:.3e}, budget {budget:.3e}")
    return {
        "cutoffs": [low, high],
        "values": values,
        "drift": drift,
        "leakage": leakage,
        "budget": budget,
        "within_budget": within,
    }
