#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Honest and adversarial provers
Features:
- State provers: honest_iid, iid_wrong, classical_mixture, markov_drift,
  energy_spiker, phase_randomized
- Channel provers: ideal, lossy, noisy, replace_with_vacuum, drifting
- Commitment before selection: every register is fixed by (seed, register id)
- Ground-truth fidelities for soundness accounting and sampling counters
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

import fock
import phasespace
from fock import FockArray
from phasespace import GaussianChannel, GaussianState, PhysicalityError
from witness import WitnessKind, normalized_channel_fidelity

STATE_PROVERS = (
    "honest_iid",
    "iid_wrong",
    "classical_mixture",
    "markov_drift",
    "energy_spiker",
    "phase_randomized",
)
CHANNEL_PROVERS = ("ideal", "lossy", "noisy", "replace_with_vacuum", "drifting")
DEFAULT_CUTOFF = 30

State = Union[GaussianState, FockArray]


class ProverExhausted(RuntimeError):
    """Raised when a prover cannot serve the requested number of registers"""


# Targets

@dataclass(frozen=True, eq=False)
class Target:
    """Target state of a state-verification run with its Fock expansions"""

    kind: WitnessKind
    cutoff: int = DEFAULT_CUTOFF
    _fock_cache: Dict[int, FockArray] = field(default_factory=dict, repr=False)

    @property
    def k(self) -> int:
        return self.kind.k

    @property
    def is_gaussian(self) -> bool:
        return self.kind.tag == "gaussian_state"

    def gaussian(self) -> GaussianState:
        if not self.is_gaussian:
            raise ValueError("hypergraph targets have no Gaussian form")
        return phasespace.apply_symplectic(phasespace.make_vacuum(self.k), self.kind.target)

    def fock(self, cutoff: Optional[int] = None) -> FockArray:
        cutoff = cutoff or self.cutoff
        if cutoff not in self._fock_cache:
            if self.is_gaussian:
                self._fock_cache[cutoff] = fock.gaussian_to_fock(self.gaussian(), cutoff)
            else:
                self._fock_cache[cutoff] = fock.hypergraph_state(
                    self.kind.edges, self.kind.xi, self.k, cutoff
                )
        return self._fock_cache[cutoff]

    def state(self) -> State:
        return self.gaussian() if self.is_gaussian else self.fock()


def target_fidelity(target: Target, state: State) -> float:
    """Fidelity of one register with the target, from the matching oracle"""
    if isinstance(state, GaussianState):
        if target.is_gaussian:
            return phasespace.pure_state_fidelity(target.gaussian(), state)
        cutoff = target.cutoff
        return fock.fidelity(fock.gaussian_to_fock(state, cutoff), target.fock(cutoff))
    if isinstance(state, FockArray):
        return fock.fidelity(state, target.fock(state.cutoff))
    raise TypeError(f"unsupported register state {type(state).__name__}")


def state_from_spec(spec: Dict[str, Any], target: Target) -> State:
    """Build a k-mode register state from a JSON recipe"""
    k = target.k
    family = spec.get("family")
    cutoff = int(spec.get("cutoff", target.cutoff))
    if family == "target":
        return target.state()
    if family == "vacuum":
        return phasespace.make_vacuum(k)
    if family == "coherent":
        alpha = spec.get("alpha", 0.0)
        if isinstance(alpha, (list, tuple)):
            alpha = complex(alpha[0], alpha[1])
        return phasespace.direct_sum(*[phasespace.coherent_state(alpha)] * k)
    if family == "thermal":
        return phasespace.direct_sum(*[phasespace.thermal_state(float(spec["nbar"]))] * k)
    if family == "squeezed":
        return phasespace.direct_sum(*[phasespace.squeezed_vacuum(float(spec["xi"]))] * k)
    if family == "tmsv":
        if k != 2:
            raise ValueError("tmsv recipes need a two-mode target")
        return phasespace.two_mode_squeezed(float(spec["kappa"]))
    if family == "gaussian":
        return GaussianState(np.asarray(spec["mean"], float), np.asarray(spec["cov"], float))
    if family == "fock":
        n = int(spec["n"])
        cutoff = int(spec.get("cutoff", max(target.cutoff, n + 1)))
        factors = [fock.fock_state(n, cutoff)] + [fock.fock_state(0, cutoff)] * (k - 1)
        return factors[0] if k == 1 else fock.product(factors)
    if family == "superposition":
        if k != 1:
            raise ValueError("superposition recipes are single-mode")
        weights = {int(n): complex(*w) if isinstance(w, (list, tuple)) else complex(w)
                   for n, w in spec["weights"].items()}
        return fock.superposition(weights, cutoff)
    if family == "fock_thermal":
        if k != 1:
            raise ValueError("fock_thermal recipes are single-mode")
        return fock.thermal(float(spec["nbar"]), cutoff)
    if family == "hypergraph":
        return fock.hypergraph_state(spec["edges"], float(spec["xi"]), k, cutoff)
    raise ValueError(f"unknown state family {family!r}")


# State provers

class ProverRun:
    """One committed instantiation of a state prover"""

    def __init__(self, target: Target, states: List[State], flags: Optional[List[str]] = None):
        self.target = target
        self.states = states
        self.flags = flags or []
        self.samples: Dict[int, int] = {}
        self._fidelity_cache: Dict[int, float] = {}

    def __len__(self) -> int:
        return len(self.states)

    def state(self, register: int) -> State:
        return self.states[register]

    def measure(self, register: int, measurement: Callable[[State, np.random.Generator], float],
                rng: np.random.Generator) -> float:
        if not 0 <= register < len(self.states):
            raise ProverExhausted(f"register {register} was never prepared")
        self.samples[register] = self.samples.get(register, 0) + 1
        return measurement(self.states[register], rng)

    def fidelity(self, register: int) -> float:
        state = self.states[register]
        key = id(state)
        if key not in self._fidelity_cache:
            self._fidelity_cache[key] = target_fidelity(self.target, state)
        return self._fidelity_cache[key]

    @property
    def max_leakage(self) -> float:
        return max((s.leakage for s in self.states if isinstance(s, FockArray)), default=0.0)

    def sampled(self, register: int) -> int:
        return self.samples.get(register, 0)


@dataclass(frozen=True, eq=False)
class ProverScript:
    kind: str
    target: Target
    params: Dict[str, Any] = field(default_factory=dict)
    capacity: Optional[int] = None
    builder: Optional[Callable[[np.random.Generator, int], Tuple[List[State], List[str]]]] = field(
        default=None, repr=False
    )

    def instantiate(self, seed: int, n_registers: int) -> ProverRun:
        if self.capacity is not None and n_registers > self.capacity:
            raise ProverExhausted(
                f"{self.kind} prover holds {self.capacity} registers, {n_registers} requested"
            )
        rng = np.random.default_rng(seed)
        states, flags = self.builder(rng, n_registers)
        for state in {id(s): s for s in states}.values():
            if state.modes != self.target.k:
                raise ValueError(
                    f"prover emits {state.modes}-mode states, target has {self.target.k}"
                )
        return ProverRun(self.target, states, flags)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, **self.params}


def honest_iid(target: Target, capacity: Optional[int] = None) -> ProverScript:
    state = target.state()
    return ProverScript("honest_iid", target, {}, capacity, lambda rng, n: ([state] * n, []))


def iid_wrong(target: Target, sigma: State, params: Optional[Dict[str, Any]] = None,
              capacity: Optional[int] = None) -> ProverScript:
    if sigma.modes != target.k:
        raise ValueError(f"sigma has {sigma.modes} modes, target has {target.k}")
    return ProverScript("iid_wrong", target, params or {}, capacity, lambda rng, n: ([sigma] * n, []))


def classical_mixture(
    target: Target,
    components: Sequence[Tuple[float, Sequence[State]]],
    params: Optional[Dict[str, Any]] = None,
    capacity: Optional[int] = None,
) -> ProverScript:
    """Draw one component per run, then shuffle its register list"""
    weights = np.array([w for w, _ in components], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixture weights must be non-negative and sum to 1, got {weights.sum()!r}")
    recipes = [list(r) for _, r in components]

    def build(rng: np.random.Generator, n: int):
        choice = int(rng.choice(len(recipes), p=weights))
        recipe = recipes[choice]
        if len(recipe) == 1:
            states = recipe * n
        elif len(recipe) == n:
            states = [recipe[i] for i in rng.permutation(n)]
        else:
            raise ValueError(f"component {choice} lists {len(recipe)} registers, {n} requested")
        return states, [f"component_{choice}"]

    return ProverScript("classical_mixture", target, params or {}, capacity, build)


def markov_drift(
    target: Target,
    family: str,
    step: float,
    start: float = 0.0,
    clip: float = 5.0,
    capacity: Optional[int] = None,
) -> ProverScript:
    """Gaussian target with a hidden random-walk noise parameter per register.

    family 'thermal' adds n_t photons of thermal noise to every mode;
    family 'displacement' displaces every mode by a complex alpha_t.
    Excursions outside [0, clip] (or |alpha| > clip) are clipped and flagged.
    """
    if not target.is_gaussian:
        raise ValueError("markov_drift needs a Gaussian target")
    if family not in ("thermal", "displacement"):
        raise ValueError(f"unknown drift family {family!r}")
    base = target.gaussian()
    n_quad = 2 * target.k

    def build(rng: np.random.Generator, n: int):
        states: List[State] = []
        clipped = False
        if family == "thermal":
            value = float(start)
            for _ in range(n):
                value += step * (1.0 if rng.random() < 0.5 else -1.0)
                if value < 0.0 or value > clip:
                    value = min(max(value, 0.0), clip)
                    clipped = True
                states.append(GaussianState(base.mean, base.cov + value * np.eye(n_quad)))
        else:
            alpha = complex(start)
            for _ in range(n):
                alpha += step * complex(rng.normal(), rng.normal()) / math.sqrt(2.0)
                if abs(alpha) > clip:
                    alpha = alpha / abs(alpha) * clip
                    clipped = True
                shift = math.sqrt(2.0) * np.tile([alpha.real, alpha.imag], target.k)
                states.append(GaussianState(base.mean + shift, base.cov))
        return states, ["drift_clipped"] if clipped else []

    params = {"family": family, "step": step, "start": start, "clip": clip}
    return ProverScript("markov_drift", target, params, capacity, build)


def energy_spiker(target: Target, spike_prob: float, spike_state: State,
                  params: Optional[Dict[str, Any]] = None,
                  capacity: Optional[int] = None) -> ProverScript:
    if not 0.0 <= spike_prob <= 1.0:
        raise ValueError(f"spike probability must lie in [0, 1], got {spike_prob}")
    honest = target.state()

    def build(rng: np.random.Generator, n: int):
        spikes = rng.random(n) < spike_prob
        return [spike_state if s else honest for s in spikes], []

    merged = {"spike_prob": spike_prob, **(params or {})}
    return ProverScript("energy_spiker", target, merged, capacity, build)


def _rotate_state(state: State, phis: np.ndarray) -> State:
    if isinstance(state, FockArray):
        return fock.rotate_phase(state, phis)
    S = phasespace.direct_sum_matrices(*(phasespace.rotation(phi).S for phi in phis))
    return phasespace.apply_symplectic(state, phasespace.SymplecticOp(S))


def phase_randomized(inner: ProverScript) -> ProverScript:
    """Wrap a prover with an independent uniform phase rotation on every mode"""

    def build(rng: np.random.Generator, n: int):
        inner_seed = int(rng.integers(2 ** 63))
        run = inner.instantiate(inner_seed, n)
        phis = rng.uniform(0.0, 2.0 * math.pi, size=(n, inner.target.k))
        return [_rotate_state(s, p) for s, p in zip(run.states, phis)], run.flags

    params = {"inner": inner.describe()}
    return ProverScript("phase_randomized", inner.target, params, inner.capacity, build)


def script_from_spec(spec: Dict[str, Any], target: Target) -> ProverScript:
    """Prover script from a normalized JSON spec"""
    kind = spec["kind"]
    capacity = spec.get("capacity")
    if kind == "honest_iid":
        return honest_iid(target, capacity)
    if kind == "iid_wrong":
        return iid_wrong(target, state_from_spec(spec["state"], target), {"state": spec["state"]}, capacity)
    if kind == "classical_mixture":
        components = []
        for comp in spec["components"]:
            recipe = comp["states"] if isinstance(comp["states"], list) else [comp["states"]]
            components.append((float(comp["weight"]), [state_from_spec(r, target) for r in recipe]))
        return classical_mixture(target, components, {"components": spec["components"]}, capacity)
    if kind == "markov_drift":
        return markov_drift(
            target, spec["family"], float(spec["step"]), float(spec.get("start", 0.0)),
            float(spec.get("clip", 5.0)), capacity,
        )
    if kind == "energy_spiker":
        return energy_spiker(
            target, float(spec["spike_prob"]), state_from_spec(spec["spike_state"], target),
            {"spike_state": spec["spike_state"]}, capacity,
        )
    if kind == "phase_randomized":
        return phase_randomized(script_from_spec(spec["inner"], target))
    raise ValueError(f"unknown prover kind {kind!r}")


# Channel provers

def ideal_channel(kind: WitnessKind) -> GaussianChannel:
    """Best known channel for the benchmark"""
    if kind.tag == "amplifier":
        return phasespace.optimal_amplifier(kind.lam, kind.g)
    if kind.tag == "attenuator_or_storage":
        if kind.g > 1.0:
            raise PhysicalityError(f"no ideal attenuator exists for g={kind.g} > 1")
        return phasespace.pure_loss(kind.g ** 2)
    if kind.tag.startswith("purifier"):
        return phasespace.optimal_gaussian_purifier(kind.lam, kind.g, kind.mu)
    if kind.tag == "memory_multimode":
        return phasespace.identity_channel(kind.k)
    if kind.tag == "cz_gate":
        return phasespace.symplectic_channel(kind.target)
    raise ValueError(f"{kind.tag} is not a channel benchmark")


class ChannelRun:
    """One committed instantiation of a channel prover"""

    def __init__(self, kind: WitnessKind, channels: List[GaussianChannel], flags: Optional[List[str]] = None):
        self.kind = kind
        self.channels = channels
        self.flags = flags or []
        self.samples: Dict[int, int] = {}
        self._fidelity_cache: Dict[int, float] = {}

    def __len__(self) -> int:
        return len(self.channels)

    def channel(self, use: int) -> GaussianChannel:
        return self.channels[use]

    def measure(self, use: int, measurement: Callable[[GaussianChannel, np.random.Generator], float],
                rng: np.random.Generator) -> float:
        if not 0 <= use < len(self.channels):
            raise ProverExhausted(f"channel use {use} was never prepared")
        self.samples[use] = self.samples.get(use, 0) + 1
        return measurement(self.channels[use], rng)

    def fidelity(self, use: int) -> float:
        ch = self.channels[use]
        key = id(ch)
        if key not in self._fidelity_cache:
            self._fidelity_cache[key] = normalized_channel_fidelity(self.kind, ch)
        return self._fidelity_cache[key]

    @property
    def max_leakage(self) -> float:
        return 0.0

    def sampled(self, use: int) -> int:
        return self.samples.get(use, 0)


@dataclass(frozen=True, eq=False)
class ChannelProverScript:
    kind: str
    witness: WitnessKind
    params: Dict[str, Any] = field(default_factory=dict)
    capacity: Optional[int] = None
    builder: Optional[Callable[[np.random.Generator, int], Tuple[List[GaussianChannel], List[str]]]] = field(
        default=None, repr=False
    )

    def instantiate(self, seed: int, n_uses: int) -> ChannelRun:
        if self.capacity is not None and n_uses > self.capacity:
            raise ProverExhausted(f"channel prover allows {self.capacity} uses, {n_uses} requested")
        channels, flags = self.builder(np.random.default_rng(seed), n_uses)
        return ChannelRun(self.witness, channels, flags)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, **self.params}


def channel_prover(kind: str, witness: WitnessKind, capacity: Optional[int] = None, **params) -> ChannelProverScript:
    """Channel prover of the given kind for the benchmark described by witness.

    lossy: eta (loss after the ideal channel); noisy: nu (added variance);
    drifting: step, eta_min (transmissivity random walk after the ideal channel).
    """
    k = witness.k
    if kind == "ideal":
        ch = ideal_channel(witness)
        return ChannelProverScript(kind, witness, params, capacity, lambda rng, n: ([ch] * n, []))
    if kind == "lossy":
        ch = phasespace.pure_loss(float(params["eta"]), k).compose(ideal_channel(witness))
        return ChannelProverScript(kind, witness, params, capacity, lambda rng, n: ([ch] * n, []))
    if kind == "noisy":
        ch = phasespace.additive_noise(float(params["nu"]), k).compose(ideal_channel(witness))
        return ChannelProverScript(kind, witness, params, capacity, lambda rng, n: ([ch] * n, []))
    if kind == "replace_with_vacuum":
        ch = phasespace.replace_with_vacuum(k)
        return ChannelProverScript(kind, witness, params, capacity, lambda rng, n: ([ch] * n, []))
    if kind == "drifting":
        ideal = ideal_channel(witness)
        step = float(params.get("step", 0.01))
        eta_min = float(params.get("eta_min", 0.5))

        def build(rng: np.random.Generator, n: int):
            eta, clipped, channels = 1.0, False, []
            for _ in range(n):
                eta += step * rng.normal()
                if eta > 1.0 or eta < eta_min:
                    eta = min(max(eta, eta_min), 1.0)
                    clipped = True
                channels.append(phasespace.pure_loss(eta, k).compose(ideal))
            return channels, ["drift_clipped"] if clipped else []

        return ChannelProverScript(kind, witness, params, capacity, build)
    raise ValueError(f"unknown channel prover kind {kind!r}")


def channel_script_from_spec(spec: Dict[str, Any], witness: WitnessKind) -> ChannelProverScript:
    params = {key: value for key, value in spec.items() if key not in ("kind", "capacity")}
    logging.debug(f"Channel prover {spec['kind']} with {params}")
    return channel_prover(spec["kind"], witness, spec.get("capacity"), **params)
