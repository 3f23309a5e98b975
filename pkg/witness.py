#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Fidelity witnesses, channel probes and acceptance thresholds
Features:
- Witness kinds for Gaussian and hypergraph targets and for channel benchmarks
  (amplification, attenuation/storage, purification, multimode memory, CZ gate)
- Estimators W* from recorded outcomes chi and threshold comparison
- Entangled probe inputs with rotated joint output/reference observables
- Exact witness expectations for Gaussian and Fock provers
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

import fock
from fock import FockArray, PolynomialObservable
from phasespace import (
    GaussianChannel,
    GaussianState,
    LinearObservable,
    SymplecticOp,
    apply_channel,
    apply_symplectic,
    average_fidelity,
    embed_channel,
    embed_symplectic,
    graph_op,
    make_vacuum,
    two_mode_squeeze_op,
)

STATE_TAGS = ("gaussian_state", "hypergraph_state")
CHANNEL_TAGS = (
    "amplifier",
    "attenuator_or_storage",
    "purifier_high_gain",
    "purifier_low_gain",
    "memory_multimode",
    "cz_gate",
)
BRANCHES = ("q", "p")


class RegimeError(ValueError):
    """Raised when witness parameters fall outside the kind's regime"""


class UnrepresentableProverError(ValueError):
    """Raised when no oracle can evaluate the witness on a prover"""


@dataclass
class WitnessEstimate:
    value: float
    threshold: float
    samples_used: int
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "threshold": self.threshold,
            "samples_used": self.samples_used,
            "pass": self.passed,
        }


@dataclass(frozen=True, eq=False)
class WitnessKind:
    """Which target the verifier tests and the parameters of its witness"""

    tag: str
    k: int = 1
    lam: Optional[float] = None
    g: Optional[float] = None
    mu: Optional[float] = None
    target: Optional[SymplecticOp] = None
    ensemble: Optional[SymplecticOp] = None
    edges: Tuple[Tuple[int, ...], ...] = ()
    xi: float = 0.0

    def __post_init__(self):
        if self.tag not in STATE_TAGS + CHANNEL_TAGS:
            raise ValueError(f"unknown witness kind {self.tag!r}")
        if self.k < 1:
            raise ValueError(f"number of modes must be positive, got {self.k}")
        if self.tag == "gaussian_state":
            if self.target is None or self.target.modes != self.k:
                raise ValueError("gaussian_state needs a target transform on k modes")
        elif self.tag == "hypergraph_state":
            if self.xi < 0:
                raise ValueError(f"squeezing must be non-negative, got {self.xi}")
            edges = tuple(tuple(sorted(int(v) for v in e)) for e in self.edges)
            for edge in edges:
                if not edge or len(set(edge)) != len(edge) or min(edge) < 0 or max(edge) >= self.k:
                    raise ValueError(f"hyperedge {edge} is not a set of modes in 0..{self.k - 1}")
            object.__setattr__(self, "edges", edges)
        else:
            self._check_channel_regime()

    def _check_channel_regime(self):
        if self.lam is None or self.lam <= 0:
            raise RegimeError(f"{self.tag} needs lambda > 0, got {self.lam}")
        if self.tag in ("memory_multimode", "cz_gate"):
            if self.tag == "cz_gate" and self.k != 2:
                raise RegimeError("cz_gate is defined on two modes")
            return
        if self.k != 1:
            raise RegimeError(f"{self.tag} is a single-mode benchmark")
        if self.g is None or self.g <= 0:
            raise RegimeError(f"{self.tag} needs gain g > 0, got {self.g}")
        edge = math.sqrt(self.lam + 1.0)
        if self.tag == "amplifier" and not self.g > edge:
            raise RegimeError(f"amplifier needs g > sqrt(lambda+1) = {edge:.6f}, got {self.g}")
        if self.tag == "attenuator_or_storage" and not self.g < edge:
            raise RegimeError(
                f"attenuator needs g < sqrt(lambda+1) = {edge:.6f}, got {self.g}"
            )
        if self.tag.startswith("purifier"):
            if self.mu is None or self.mu <= 0:
                raise RegimeError(f"purifier needs mu > 0, got {self.mu}")
            high = self.g > self.purifier_gain_edge
            if high != (self.tag == "purifier_high_gain"):
                raise RegimeError(
                    f"g={self.g} belongs to the "
                    f"{'high' if high else 'low'}-gain purifier regime"
                )

    @property
    def is_channel(self) -> bool:
        return self.tag in CHANNEL_TAGS

    @property
    def purifier_p(self) -> float:
        lam, mu = self.lam, self.mu
        return (lam + mu) * (lam + mu + lam * mu)

    @property
    def purifier_gain_edge(self) -> float:
        return math.sqrt(self.purifier_p) / self.mu

    @property
    def purifier_ratio(self) -> float:
        """(g mu)^2 / P; above 1 in the high-gain regime"""
        return (self.g * self.mu) ** 2 / self.purifier_p

    @property
    def purifier_noise(self) -> float:
        """Thermal photons smearing the purifier target once the input noise is averaged out"""
        return self.g ** 2 / (self.lam + self.mu)

    @property
    def fbar_norm(self) -> float:
        """Largest achievable average fidelity the channel threshold is scaled by"""
        if self.tag == "amplifier":
            return (self.lam + 1.0) / self.g ** 2
        if self.tag == "purifier_high_gain":
            return 1.0 / (self.purifier_ratio + self.purifier_noise)
        if self.tag == "purifier_low_gain":
            return 1.0 / (1.0 + self.purifier_noise)
        return 1.0

    def threshold(self, m: int, epsilon: float) -> float:
        base = 1.0 - epsilon / (2.0 * m)
        return self.fbar_norm * base if self.is_channel else base

    def value_from_mean(self, mean_chi2: float) -> float:
        """Witness value given the mean of chi^2"""
        excess = mean_chi2 - 0.5
        lam, g, mu = self.lam, self.g, self.mu
        if self.tag in STATE_TAGS:
            return 1.0 + self.k / 2.0 - self.k * mean_chi2
        if self.tag == "amplifier":
            return (lam + 1.0) / g ** 2 * (1.0 - (g ** 2 - lam - 1.0) / g ** 2 * excess)
        if self.tag == "attenuator_or_storage":
            return 1.0 - (lam + 1.0 - g ** 2) / (lam + 1.0) * excess
        if self.tag == "purifier_high_gain":
            slope = (self.purifier_ratio - 1.0) * self.fbar_norm
            return self.fbar_norm * (1.0 - slope * excess)
        if self.tag == "purifier_low_gain":
            slope = (1.0 - self.purifier_ratio) * self.fbar_norm
            return self.fbar_norm * (1.0 - slope * excess)
        return 1.0 - lam / (lam + 1.0) * self.k * excess

    @property
    def formula(self) -> str:
        return {
            "gaussian_state": "1 + k/2 - k*mean(chi^2)",
            "hypergraph_state": "1 + k/2 - k*mean(chi^2)",
            "amplifier": "((lam+1)/g^2)*(1 - ((g^2-lam-1)/g^2)*mean(chi^2-1/2))",
            "attenuator_or_storage": "1 - ((lam+1-g^2)/(lam+1))*mean(chi^2-1/2)",
            "purifier_high_gain": "F*(1 - (r-1)*F*mean(chi^2-1/2)), F=1/(r+n), "
            "r=(g mu)^2/P, n=g^2/(lam+mu), P=(lam+mu)(lam+mu+lam mu)",
            "purifier_low_gain": "F*(1 - (1-r)*F*mean(chi^2-1/2)), F=1/(1+n), "
            "r=(g mu)^2/P, n=g^2/(lam+mu), P=(lam+mu)(lam+mu+lam mu)",
            "memory_multimode": "1 - (lam/(lam+1))*k*mean(chi^2-1/2)",
            "cz_gate": "1 - (lam/(lam+1))*k*mean(chi^2-1/2)",
        }[self.tag]

    def describe(self) -> Dict[str, Any]:
        info: Dict[str, Any] = {"tag": self.tag, "k": self.k, "formula": self.formula}
        for name in ("lam", "g", "mu"):
            if getattr(self, name) is not None:
                info[name] = getattr(self, name)
        if self.tag == "hypergraph_state":
            info["edges"] = [list(e) for e in self.edges]
            info["xi"] = self.xi
        if self.target is not None:
            info["target"] = self.target.to_dict()
        if self.ensemble is not None:
            info["ensemble"] = self.ensemble.to_dict()
        if self.is_channel:
            info["fbar_norm"] = self.fbar_norm
        return info


# Factories

def gaussian_state_kind(target: Union[SymplecticOp, GaussianState]) -> WitnessKind:
    if isinstance(target, GaussianState):
        target = symplectic_for(target)
    return WitnessKind("gaussian_state", k=target.modes, target=target)


def hypergraph_kind(edges: Iterable[Sequence[int]], xi: float, k: int) -> WitnessKind:
    return WitnessKind("hypergraph_state", k=k, edges=tuple(tuple(e) for e in edges), xi=xi)


def amplifier_kind(lam: float, g: float) -> WitnessKind:
    return WitnessKind("amplifier", lam=lam, g=g)


def attenuator_kind(lam: float, g: float = 1.0) -> WitnessKind:
    return WitnessKind("attenuator_or_storage", lam=lam, g=g)


def purifier_kind(lam: float, g: float, mu: float) -> WitnessKind:
    edge = math.sqrt((lam + mu) * (lam + mu + lam * mu)) / mu
    tag = "purifier_high_gain" if g > edge else "purifier_low_gain"
    return WitnessKind(tag, lam=lam, g=g, mu=mu)


def memory_kind(lam: float, k: int, ensemble: Optional[SymplecticOp] = None) -> WitnessKind:
    return WitnessKind("memory_multimode", k=k, lam=lam, ensemble=ensemble)


def cz_gate_kind(lam: float, weight: float = 1.0, ensemble: Optional[SymplecticOp] = None) -> WitnessKind:
    return WitnessKind("cz_gate", k=2, lam=lam, target=graph_op([(0, 1)], 2, weight), ensemble=ensemble)


def symplectic_for(state: GaussianState) -> SymplecticOp:
    """U_{S,d} with U|0> equal to the given pure state (S = (2 cov)^(1/2))"""
    if not state.is_pure():
        raise ValueError("only pure Gaussian states have a preparing unitary")
    root = np.real(linalg.sqrtm(2.0 * state.cov))
    return SymplecticOp(0.5 * (root + root.T), state.mean)


# Estimators

def state_witness(chi: Sequence[float], k: int, m: int, epsilon: float) -> WitnessEstimate:
    chi = np.asarray(chi, dtype=float)
    if chi.size == 0:
        raise ValueError("state witness needs at least one fidelity-test outcome")
    value = 1.0 + k / 2.0 - k * float(np.mean(chi ** 2))
    threshold = 1.0 - epsilon / (2.0 * m)
    return WitnessEstimate(value, threshold, int(chi.size), value >= threshold)


def channel_witness(kind: WitnessKind, chi: Sequence[float], m: int, epsilon: float) -> WitnessEstimate:
    if not kind.is_channel:
        raise RegimeError(f"{kind.tag} is not a channel witness")
    chi = np.asarray(chi, dtype=float)
    if chi.size == 0:
        raise ValueError("channel witness needs at least one fidelity-test outcome")
    value = kind.value_from_mean(float(np.mean(chi ** 2)))
    threshold = kind.threshold(m, epsilon)
    return WitnessEstimate(value, threshold, int(chi.size), value >= threshold)


def estimate(kind: WitnessKind, chi: Sequence[float], m: int, epsilon: float) -> WitnessEstimate:
    if kind.is_channel:
        return channel_witness(kind, chi, m, epsilon)
    return state_witness(chi, kind.k, m, epsilon)


# Observables

def rotate(a_q, a_p, theta: float, branch: str):
    """cos q + sin p on the q-branch, -sin q + cos p on the p-branch"""
    c, s = math.cos(theta), math.sin(theta)
    if branch == "q":
        return c * a_q + s * a_p
    if branch == "p":
        return -s * a_q + c * a_p
    raise ValueError(f"branch must be 'q' or 'p', got {branch!r}")


def _branch_weights(theta: float, branch: str) -> Tuple[float, float]:
    return tuple(rotate(np.array([1.0, 0.0]), np.array([0.0, 1.0]), theta, branch))


def gaussian_rows(kind: WitnessKind, j: int) -> Tuple[NDArray, NDArray, float, float]:
    """Coefficient rows and offsets of the undone-target quadratures of mode j"""
    inverse = np.linalg.inv(kind.target.S)
    a_q, a_p = inverse[2 * j], inverse[2 * j + 1]
    return a_q, a_p, -float(a_q @ kind.target.d), -float(a_p @ kind.target.d)


def is_graph(kind: WitnessKind) -> bool:
    return all(len(e) == 2 for e in kind.edges)


def _hypergraph_linear_rows(kind: WitnessKind, j: int) -> Tuple[NDArray, NDArray]:
    n = 2 * kind.k
    a_q = np.zeros(n)
    a_p = np.zeros(n)
    a_q[2 * j] = math.exp(-kind.xi)
    a_p[2 * j + 1] = math.exp(kind.xi)
    for edge in kind.edges:
        if j in edge:
            (other,) = [v for v in edge if v != j]
            a_p[2 * other] += math.exp(kind.xi)
    return a_q, a_p


def hypergraph_polynomial(kind: WitnessKind, j: int, w_q: float, w_p: float) -> PolynomialObservable:
    """w_q e^-xi q_j + w_p e^xi (p_j + sum over edges at j of the other q's product)"""
    up, down = math.exp(kind.xi), math.exp(-kind.xi)
    terms: List[Tuple[float, Tuple]] = []
    if w_q != 0.0:
        terms.append((w_q * down, ((j, "q", 1),)))
    if w_p != 0.0:
        terms.append((w_p * up, ((j, "p", 1),)))
        for edge in kind.edges:
            if j in edge:
                terms.append((w_p * up, tuple((v, "q", 1) for v in edge if v != j)))
    return PolynomialObservable(tuple(terms))


def state_observable(kind: WitnessKind, j: int, theta: float, branch: str):
    """Rotated undone-target quadrature of mode j for a state target"""
    if not 0 <= j < kind.k:
        raise ValueError(f"mode index {j} out of range for k={kind.k}")
    if kind.tag == "gaussian_state":
        a_q, a_p, o_q, o_p = gaussian_rows(kind, j)
        return LinearObservable(rotate(a_q, a_p, theta, branch), rotate(o_q, o_p, theta, branch))
    if kind.tag == "hypergraph_state":
        if is_graph(kind):
            a_q, a_p = _hypergraph_linear_rows(kind, j)
            return LinearObservable(rotate(a_q, a_p, theta, branch))
        w_q, w_p = _branch_weights(theta, branch)
        return hypergraph_polynomial(kind, j, w_q, w_p)
    raise RegimeError(f"{kind.tag} has no register observable")


def hypergraph_frame(kind: WitnessKind, theta: float, branch: str) -> Tuple[float, float]:
    """(scale, angle) so that the rotated observable equals scale times the
    angle-rotated quadrature of mode j once the hyperedges are undone"""
    w_q, w_p = _branch_weights(theta, branch)
    a, b = w_q * math.exp(-kind.xi), w_p * math.exp(kind.xi)
    return math.hypot(a, b), math.atan2(b, a)


# Channel probes

@dataclass(frozen=True, eq=False)
class ProbeSpec:
    """Entangled probe for one channel use.

    Modes are ordered A1..Ak (sent through the channel) then R1..Rk (kept).
    Row j of q_rows/p_rows gives the joint quadratures whose statistics are
    vacuum-like on the ideal output; outcomes are taken relative to center.
    """

    kind: WitnessKind
    input_state: GaussianState
    squeezing: float
    q_rows: NDArray[np.float64]
    p_rows: NDArray[np.float64]
    center: NDArray[np.float64]
    notes: Dict[str, float] = field(default_factory=dict)

    def observable(self, j: int, theta: float, branch: str) -> LinearObservable:
        coeffs = rotate(self.q_rows[j], self.p_rows[j], theta, branch)
        return LinearObservable(coeffs, -float(coeffs @ self.center))

    def output_state(self, ch: GaussianChannel) -> GaussianState:
        k = self.kind.k
        return apply_channel(self.input_state, embed_channel(ch, list(range(k)), 2 * k))

    def describe(self) -> Dict[str, Any]:
        return {"squeezing": self.squeezing, **self.notes}


def _single_mode_rows(amplifier_like: bool, kappa: float) -> Tuple[NDArray, NDArray]:
    c, s = math.cosh(kappa), math.sinh(kappa)
    if amplifier_like:
        return np.array([[-s, 0.0, c, 0.0]]), np.array([[0.0, s, 0.0, c]])
    return np.array([[c, 0.0, -s, 0.0]]), np.array([[0.0, c, 0.0, s]])


def _tmsv_pairs(kappa: float, k: int) -> SymplecticOp:
    op = SymplecticOp(np.eye(4 * k))
    for j in range(k):
        op = embed_symplectic(two_mode_squeeze_op(kappa), [j, k + j], 2 * k).compose(op)
    return op


def probe_spec(kind: WitnessKind) -> ProbeSpec:
    if not kind.is_channel:
        raise RegimeError(f"{kind.tag} is a state target and has no channel probe")
    lam, g, mu, k = kind.lam, kind.g, kind.mu, kind.k
    if kind.tag in ("memory_multimode", "cz_gate"):
        kappa = math.atanh(1.0 / math.sqrt(lam + 1.0))
        ens = kind.ensemble or SymplecticOp(np.eye(2 * k))
        tgt = kind.target or SymplecticOp(np.eye(2 * k))
        both = SymplecticOp(linalg.block_diag(ens.S, ens.S), np.concatenate([ens.d, ens.d]))
        prepared = both.compose(_tmsv_pairs(kappa, k))
        ideal_out = SymplecticOp(
            linalg.block_diag(tgt.S, np.eye(2 * k)),
            np.concatenate([tgt.d, np.zeros(2 * k)]),
        ).compose(prepared)
        inverse = np.linalg.inv(ideal_out.S)
        rows = np.arange(k)
        return ProbeSpec(
            kind,
            apply_symplectic(make_vacuum(2 * k), prepared),
            kappa,
            inverse[2 * rows],
            inverse[2 * rows + 1],
            ideal_out.d,
            notes={"kappa": kappa},
        )
    if kind.tag.startswith("purifier"):
        # the target's thermal smearing lives in the witness coefficients, not in the outcomes
        zeta = math.atanh(math.sqrt((lam + mu) / (lam + mu + lam * mu)))
        high = kind.tag == "purifier_high_gain"
        ratio = kind.purifier_ratio
        kappa_out = math.atanh(math.sqrt(1.0 / ratio) if high else math.sqrt(ratio))
        q_rows, p_rows = _single_mode_rows(high, kappa_out)
        return ProbeSpec(
            kind,
            two_mode_squeezed_state(zeta),
            zeta,
            q_rows,
            p_rows,
            np.zeros(4),
            notes={"zeta": zeta, "kappa_out": kappa_out, "target_noise": kind.purifier_noise},
        )
    kappa = math.atanh(1.0 / math.sqrt(lam + 1.0))
    if kind.tag == "amplifier":
        kappa_out = math.atanh(math.sqrt(lam + 1.0) / g)
        q_rows, p_rows = _single_mode_rows(True, kappa_out)
    else:
        kappa_out = math.atanh(g / math.sqrt(lam + 1.0))
        q_rows, p_rows = _single_mode_rows(False, kappa_out)
    return ProbeSpec(
        kind,
        two_mode_squeezed_state(kappa),
        kappa,
        q_rows,
        p_rows,
        np.zeros(4),
        notes={"kappa": kappa, "kappa_out": kappa_out},
    )


def two_mode_squeezed_state(kappa: float) -> GaussianState:
    return apply_symplectic(make_vacuum(2), two_mode_squeeze_op(kappa))


# Oracles

def _gaussian_pair_moment(state: GaussianState, a_q, a_p, o_q: float = 0.0, o_p: float = 0.0) -> float:
    """Branch- and angle-averaged E[chi^2] for one mode: (E[x_q^2] + E[x_p^2]) / 2"""
    second = state.cov + np.outer(state.mean, state.mean)
    total = 0.0
    for a, o in ((a_q, o_q), (a_p, o_p)):
        total += float(a @ second @ a) + 2.0 * o * float(a @ state.mean) + o ** 2
    return 0.5 * total


def mean_chi2(kind: WitnessKind, prover, cutoff: Optional[int] = None) -> float:
    """Exact E[chi^2] averaged over the mode, the angle and the branch"""
    if kind.is_channel:
        if not isinstance(prover, GaussianChannel):
            raise UnrepresentableProverError("channel witnesses need a Gaussian channel prover")
        if prover.modes != kind.k:
            raise ValueError(f"channel acts on {prover.modes} modes, witness on {kind.k}")
        probe = probe_spec(kind)
        out = probe.output_state(prover)
        total = 0.0
        for j in range(kind.k):
            a_q, a_p = probe.q_rows[j], probe.p_rows[j]
            total += _gaussian_pair_moment(out, a_q, a_p, -float(a_q @ probe.center), -float(a_p @ probe.center))
        return total / kind.k
    if isinstance(prover, GaussianState):
        if prover.modes != kind.k:
            raise ValueError(f"prover has {prover.modes} modes, target {kind.k}")
        total = 0.0
        for j in range(kind.k):
            if kind.tag == "gaussian_state":
                total += _gaussian_pair_moment(prover, *gaussian_rows(kind, j))
            elif is_graph(kind):
                total += _gaussian_pair_moment(prover, *_hypergraph_linear_rows(kind, j))
            else:
                raise UnrepresentableProverError(
                    "hypergraph witnesses with hyperedges need a Fock prover"
                )
        return total / kind.k
    if isinstance(prover, FockArray):
        if prover.modes != kind.k:
            raise ValueError(f"prover has {prover.modes} modes, target {kind.k}")
        total = 0.0
        for j in range(kind.k):
            if kind.tag == "gaussian_state":
                a_q, a_p, o_q, o_p = gaussian_rows(kind, j)
                specs = [PolynomialObservable.linear(a_q, o_q), PolynomialObservable.linear(a_p, o_p)]
            else:
                specs = [hypergraph_polynomial(kind, j, 1.0, 0.0), hypergraph_polynomial(kind, j, 0.0, 1.0)]
            total += 0.5 * sum(fock.second_moment(prover, spec) for spec in specs)
        return total / kind.k
    raise UnrepresentableProverError(f"cannot evaluate the witness on {type(prover).__name__}")


def witness_expectation_oracle(kind: WitnessKind, prover) -> float:
    """Exact expectation of the witness on one register (or one channel use)"""
    return kind.value_from_mean(mean_chi2(kind, prover))


def channel_average_fidelity(kind: WitnessKind, ch: GaussianChannel) -> float:
    """Average fidelity of the channel over the kind's input ensemble"""
    if kind.tag in ("memory_multimode", "cz_gate"):
        return average_fidelity(ch, kind.lam, gain=1.0, ensemble=kind.ensemble, target=kind.target)
    if kind.tag.startswith("purifier"):
        return average_fidelity(ch, kind.lam, gain=kind.g, mu=kind.mu)
    if kind.tag in ("amplifier", "attenuator_or_storage"):
        return average_fidelity(ch, kind.lam, gain=kind.g)
    raise RegimeError(f"{kind.tag} is not a channel benchmark")


def normalized_channel_fidelity(kind: WitnessKind, ch: GaussianChannel) -> float:
    """F / Fmax clipped to [0, 1]"""
    return float(min(1.0, max(0.0, channel_average_fidelity(kind, ch) / kind.fbar_norm)))
