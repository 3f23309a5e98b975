#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Gaussian phase-space engine
Features:
- Gaussian states as (mean, covariance) with uncertainty-relation checks
- Symplectic transforms, Gaussian channels and mode embedding
- Exact homodyne marginals and sampling
- Closed-form pure-state and ensemble-average fidelities

Conventions: quadratures ordered q1,p1,...,qk,pk; q = (a + a^dag)/sqrt(2),
so the vacuum covariance is I/2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

SYMMETRY_RTOL = 1e-10
UNCERTAINTY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-9
PURITY_TOL = 1e-6
MIN_VARIANCE = 1e-12


class PhysicalityError(ValueError):
    """Raised when a state, transform or channel violates its physical constraints"""


def symplectic_form(k: int) -> NDArray[np.float64]:
    """Standard symplectic form for the interleaved (q, p) ordering"""
    if k < 1:
        raise ValueError(f"number of modes must be positive, got {k}")
    return np.kron(np.eye(k), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _as_vector(values, length: int, name: str) -> NDArray[np.float64]:
    vec = np.asarray(values, dtype=float).reshape(-1)
    if vec.shape != (length,):
        raise ValueError(f"{name} must have length {length}, got {vec.shape[0]}")
    return vec


def _as_square(values, size: int, name: str) -> NDArray[np.float64]:
    mat = np.asarray(values, dtype=float)
    if mat.shape != (size, size):
        raise ValueError(f"{name} must be {size}x{size}, got {mat.shape}")
    return mat


@dataclass(frozen=True, eq=False)
class GaussianState:
    """k-mode Gaussian state: mean vector and covariance matrix"""

    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance must be 2k x 2k, got {cov.shape}")
        mean = _as_vector(self.mean, cov.shape[0], "mean")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_RTOL * scale:
            raise PhysicalityError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        omega = symplectic_form(cov.shape[0] // 2)
        lowest = np.linalg.eigvalsh(cov + 0.5j * omega).min()
        if lowest < -UNCERTAINTY_TOL:
            raise PhysicalityError(
                f"uncertainty relation violated (min eigenvalue {lowest:.3e})"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def modes(self) -> int:
        return self.cov.shape[0] // 2

    def purity_determinant(self) -> float:
        return float(np.linalg.det(2.0 * self.cov))

    def is_pure(self) -> bool:
        return abs(self.purity_determinant() - 1.0) <= PURITY_TOL

    def to_dict(self) -> dict:
        return {"modes": self.modes, "mean": self.mean.tolist(), "cov": self.cov.tolist()}


@dataclass(frozen=True, eq=False)
class SymplecticOp:
    """Gaussian unitary U_{S,d}: x -> S x + d"""

    S: NDArray[np.float64]
    d: Optional[NDArray[np.float64]] = None

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise ValueError(f"S must be 2k x 2k, got {S.shape}")
        d = np.zeros(S.shape[0]) if self.d is None else _as_vector(self.d, S.shape[0], "d")
        omega = symplectic_form(S.shape[0] // 2)
        if np.max(np.abs(S @ omega @ S.T - omega)) > SYMPLECTIC_TOL:
            raise PhysicalityError("matrix is not symplectic")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "d", d)

    @property
    def modes(self) -> int:
        return self.S.shape[0] // 2

    def compose(self, other: "SymplecticOp") -> "SymplecticOp":
        """Return self after other"""
        if other.modes != self.modes:
            raise ValueError("cannot compose operations on different mode counts")
        return SymplecticOp(self.S @ other.S, self.S @ other.d + self.d)

    def inverse(self) -> "SymplecticOp":
        S_inv = np.linalg.inv(self.S)
        return SymplecticOp(S_inv, -S_inv @ self.d)

    def to_dict(self) -> dict:
        return {"S": self.S.tolist(), "d": self.d.tolist()}


@dataclass(frozen=True, eq=False)
class GaussianChannel:
    """Gaussian channel: cov -> X cov X^T + Y, mean -> X mean + shift"""

    X: NDArray[np.float64]
    Y: NDArray[np.float64]
    shift: Optional[NDArray[np.float64]] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] % 2:
            raise ValueError(f"X must be 2k x 2k, got {X.shape}")
        n = X.shape[0]
        Y = _as_square(self.Y, n, "Y")
        if np.max(np.abs(Y - Y.T)) > SYMMETRY_RTOL * max(1.0, float(np.max(np.abs(Y)))):
            raise PhysicalityError("channel noise matrix Y is not symmetric")
        Y = 0.5 * (Y + Y.T)
        shift = np.zeros(n) if self.shift is None else _as_vector(self.shift, n, "shift")
        omega = symplectic_form(n // 2)
        lowest = np.linalg.eigvalsh(Y + 0.5j * (omega - X @ omega @ X.T)).min()
        if lowest < -UNCERTAINTY_TOL:
            raise PhysicalityError(
                f"channel is not completely positive (min eigenvalue {lowest:.3e})"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "shift", shift)

    @property
    def modes(self) -> int:
        return self.X.shape[0] // 2

    def compose(self, first: "GaussianChannel") -> "GaussianChannel":
        """Return self applied after first"""
        if first.modes != self.modes:
            raise ValueError("cannot compose channels on different mode counts")
        return GaussianChannel(
            self.X @ first.X,
            self.X @ first.Y @ self.X.T + self.Y,
            self.X @ first.shift + self.shift,
        )

    def to_dict(self) -> dict:
        return {"X": self.X.tolist(), "Y": self.Y.tolist(), "shift": self.shift.tolist()}


@dataclass(frozen=True, eq=False)
class LinearObservable:
    """Homodyne observable coeffs . x + offset"""

    coeffs: NDArray[np.float64]
    offset: float = 0.0

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if coeffs.size == 0 or coeffs.size % 2:
            raise ValueError("coefficient vector must have even, positive length")
        if not np.any(coeffs):
            raise ValueError("observable coefficients are all zero")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def modes(self) -> int:
        return self.coeffs.size // 2

    def to_dict(self) -> dict:
        return {"coeffs": self.coeffs.tolist(), "offset": self.offset}


# State and transform families

def make_vacuum(k: int) -> GaussianState:
    if k < 1:
        raise ValueError(f"number of modes must be positive, got {k}")
    return GaussianState(np.zeros(2 * k), 0.5 * np.eye(2 * k))


def coherent_state(alpha: complex) -> GaussianState:
    alpha = complex(alpha)
    return GaussianState(
        math.sqrt(2.0) * np.array([alpha.real, alpha.imag]), 0.5 * np.eye(2)
    )


def thermal_state(nbar: float) -> GaussianState:
    if nbar < 0:
        raise PhysicalityError(f"mean photon number must be non-negative, got {nbar}")
    return GaussianState(np.zeros(2), (nbar + 0.5) * np.eye(2))


def squeezer(xi: float) -> SymplecticOp:
    """Single-mode squeezer diag(e^-xi, e^xi); xi > 0 squeezes q"""
    return SymplecticOp(np.diag([math.exp(-xi), math.exp(xi)]))


def rotation(phi: float) -> SymplecticOp:
    c, s = math.cos(phi), math.sin(phi)
    return SymplecticOp(np.array([[c, s], [-s, c]]))


def displacement(d: Sequence[float]) -> SymplecticOp:
    d = np.asarray(d, dtype=float).reshape(-1)
    return SymplecticOp(np.eye(d.size), d)


def squeezed_vacuum(xi: float) -> GaussianState:
    return apply_symplectic(make_vacuum(1), squeezer(xi))


def two_mode_squeeze_op(kappa: float) -> SymplecticOp:
    c, s = math.cosh(kappa), math.sinh(kappa)
    z = np.diag([1.0, -1.0])
    return SymplecticOp(np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]]))


def two_mode_squeezed(kappa: float) -> GaussianState:
    if not math.isfinite(kappa):
        raise ValueError("squeezing parameter must be finite")
    return apply_symplectic(make_vacuum(2), two_mode_squeeze_op(kappa))


def graph_op(edges: Iterable[Sequence[int]], k: int, weight: float = 1.0) -> SymplecticOp:
    """Two-body CZ gates exp(-i w q_a q_b) on k modes"""
    S = np.eye(2 * k)
    for edge in edges:
        vertices = sorted(int(v) for v in edge)
        if len(vertices) != 2 or vertices[0] == vertices[1]:
            raise ValueError(f"graph edges must join two distinct modes, got {edge}")
        a, b = vertices
        S[2 * a + 1, 2 * b] -= weight
        S[2 * b + 1, 2 * a] -= weight
    return SymplecticOp(S)


def direct_sum_matrices(*blocks: NDArray[np.float64]) -> NDArray[np.float64]:
    return linalg.block_diag(*blocks)


def direct_sum(*states: GaussianState) -> GaussianState:
    return GaussianState(
        np.concatenate([s.mean for s in states]),
        direct_sum_matrices(*(s.cov for s in states)),
    )


def _mode_indices(modes: Sequence[int]) -> NDArray[np.int64]:
    return np.array([[2 * m, 2 * m + 1] for m in modes], dtype=int).reshape(-1)


def embed_symplectic(op: SymplecticOp, modes: Sequence[int], total: int) -> SymplecticOp:
    """Act with op on the listed modes of a total-mode system"""
    if len(modes) != op.modes:
        raise ValueError(f"operation acts on {op.modes} modes, {len(modes)} given")
    idx = _mode_indices(modes)
    S = np.eye(2 * total)
    S[np.ix_(idx, idx)] = op.S
    d = np.zeros(2 * total)
    d[idx] = op.d
    return SymplecticOp(S, d)


def embed_channel(ch: GaussianChannel, modes: Sequence[int], total: int) -> GaussianChannel:
    if len(modes) != ch.modes:
        raise ValueError(f"channel acts on {ch.modes} modes, {len(modes)} given")
    idx = _mode_indices(modes)
    X = np.eye(2 * total)
    Y = np.zeros((2 * total, 2 * total))
    shift = np.zeros(2 * total)
    X[np.ix_(idx, idx)] = ch.X
    Y[np.ix_(idx, idx)] = ch.Y
    shift[idx] = ch.shift
    return GaussianChannel(X, Y, shift)


def identity_channel(k: int = 1) -> GaussianChannel:
    return GaussianChannel(np.eye(2 * k), np.zeros((2 * k, 2 * k)))


def pure_loss(eta: float, k: int = 1) -> GaussianChannel:
    if not 0.0 <= eta <= 1.0:
        raise PhysicalityError(f"transmissivity must lie in [0, 1], got {eta}")
    n = 2 * k
    return GaussianChannel(math.sqrt(eta) * np.eye(n), 0.5 * (1.0 - eta) * np.eye(n))


def phase_insensitive_amplifier(gain: float, k: int = 1) -> GaussianChannel:
    """Quantum-limited amplifier with amplitude gain G >= 1"""
    if gain < 1.0:
        raise PhysicalityError(f"amplifier gain must be >= 1, got {gain}")
    n = 2 * k
    return GaussianChannel(gain * np.eye(n), 0.5 * (gain ** 2 - 1.0) * np.eye(n))


def additive_noise(nu: float, k: int = 1) -> GaussianChannel:
    if nu < 0:
        raise PhysicalityError(f"noise variance must be non-negative, got {nu}")
    n = 2 * k
    return GaussianChannel(np.eye(n), nu * np.eye(n))


def replace_with_vacuum(k: int = 1) -> GaussianChannel:
    n = 2 * k
    return GaussianChannel(np.zeros((n, n)), 0.5 * np.eye(n))


def symplectic_channel(op: SymplecticOp) -> GaussianChannel:
    n = op.S.shape[0]
    return GaussianChannel(op.S, np.zeros((n, n)), op.d)


# Core operations

def apply_symplectic(state: GaussianState, op: SymplecticOp) -> GaussianState:
    if state.modes != op.modes:
        raise ValueError(f"state has {state.modes} modes, operation {op.modes}")
    return GaussianState(op.S @ state.mean + op.d, op.S @ state.cov @ op.S.T)


def apply_channel(state: GaussianState, ch: GaussianChannel) -> GaussianState:
    if state.modes != ch.modes:
        raise ValueError(f"state has {state.modes} modes, channel {ch.modes}")
    return GaussianState(ch.X @ state.mean + ch.shift, ch.X @ state.cov @ ch.X.T + ch.Y)


def marginal(state: GaussianState, obs: LinearObservable) -> Tuple[float, float]:
    """Mean and variance of the homodyne outcome"""
    if obs.coeffs.size != state.mean.size:
        raise ValueError(
            f"observable acts on {obs.modes} modes, state has {state.modes}"
        )
    mean = float(obs.coeffs @ state.mean + obs.offset)
    variance = float(obs.coeffs @ state.cov @ obs.coeffs)
    if variance <= MIN_VARIANCE:
        raise PhysicalityError(f"degenerate homodyne variance {variance:.3e}")
    return mean, variance


def second_moment(state: GaussianState, obs: LinearObservable) -> float:
    """E[(coeffs . x + offset)^2] without the degenerate-variance check"""
    mean = float(obs.coeffs @ state.mean + obs.offset)
    return float(obs.coeffs @ state.cov @ obs.coeffs) + mean ** 2


def sample_homodyne(
    state: GaussianState,
    obs: LinearObservable,
    rng: np.random.Generator,
    size: Optional[int] = None,
):
    mean, variance = marginal(state, obs)
    return rng.normal(mean, math.sqrt(variance), size=size)


def pure_state_fidelity(target: GaussianState, actual: GaussianState) -> float:
    """<psi|rho|psi> for a pure Gaussian target psi"""
    if target.modes != actual.modes:
        raise ValueError("fidelity needs states on the same number of modes")
    if not target.is_pure():
        raise PhysicalityError(
            f"target is not pure (det(2 cov) = {target.purity_determinant():.8f})"
        )
    total = target.cov + actual.cov
    delta = actual.mean - target.mean
    sign, logdet = np.linalg.slogdet(total)
    if sign <= 0:
        raise PhysicalityError("summed covariance is not positive definite")
    exponent = -0.5 * delta @ np.linalg.solve(total, delta) - 0.5 * logdet
    return float(min(1.0, max(0.0, math.exp(exponent))))


def average_fidelity(
    ch: GaussianChannel,
    lam: float,
    gain: float = 1.0,
    mu: Optional[float] = None,
    ensemble: Optional[SymplecticOp] = None,
    target: Optional[SymplecticOp] = None,
) -> float:
    """Average of <ideal|E(input)|ideal> over a Gaussian-modulated coherent ensemble.

    Inputs are U_ens|alpha> (smeared by a thermal displacement of width 1/mu
    when mu is given), alpha distributed as lam^k exp(-lam |alpha|^2);
    the ideal output is U_target U_ens |gain * alpha>.
    """
    if lam <= 0:
        raise ValueError(f"ensemble width lambda must be positive, got {lam}")
    k = ch.modes
    n = 2 * k
    ens = ensemble if ensemble is not None else SymplecticOp(np.eye(n))
    tgt = target if target is not None else SymplecticOp(np.eye(n))
    if ens.modes != k or tgt.modes != k:
        raise ValueError("ensemble and target transforms must match the channel")
    cov_in = 0.5 * ens.S @ ens.S.T
    if mu is not None:
        if mu <= 0:
            raise ValueError(f"input noise parameter mu must be positive, got {mu}")
        cov_in = cov_in + np.eye(n) / mu
    A = ch.X @ ens.S - gain * tgt.S @ ens.S
    b = ch.X @ ens.d + ch.shift - tgt.S @ ens.d - tgt.d
    M = ch.X @ cov_in @ ch.X.T + ch.Y + 0.5 * tgt.S @ ens.S @ ens.S.T @ tgt.S.T
    total = M + A @ A.T / lam
    sign, logdet = np.linalg.slogdet(total)
    if sign <= 0 or not np.all(np.linalg.eigvalsh(total) > 0):
        raise PhysicalityError("average-fidelity integral diverges for this channel")
    exponent = -0.5 * b @ np.linalg.solve(total, b) - 0.5 * logdet
    return float(min(1.0, max(0.0, math.exp(exponent))))


def coherent_average_fidelity(ch: GaussianChannel, lam: float, g: float) -> float:
    if ch.modes != 1:
        raise ValueError("coherent average fidelity is defined for single-mode channels")
    if g <= 0:
        raise ValueError(f"gain must be positive, got {g}")
    return average_fidelity(ch, lam, gain=g)


def optimal_amplifier(lam: float, g: float) -> GaussianChannel:
    """Phase-insensitive amplifier reaching (lam+1)/g^2; needs g >= lam+1"""
    gain = g / (lam + 1.0)
    if gain < 1.0:
        raise PhysicalityError(
            f"no quantum-limited amplifier is optimal for g={g} < lambda+1={lam + 1.0}"
        )
    return phase_insensitive_amplifier(gain)


def _phase_insensitive(gain: float) -> GaussianChannel:
    if gain >= 1.0:
        return phase_insensitive_amplifier(gain)
    return pure_loss(gain ** 2)


def purifier_effective_task(lam: float, g: float, mu: float) -> Tuple[float, float, float]:
    """(prior width, gain, target noise) of the equivalent pure-input task.

    Averaging over the input noise turns the purifier into a coherent-state
    task with prior width lam*mu/(lam+mu) and gain g*mu/(lam+mu), whose
    target is smeared by a thermal displacement of g^2/(lam+mu) photons.
    """
    if lam <= 0 or mu <= 0 or g <= 0:
        raise ValueError(f"purifier needs positive lambda, g and mu, got {lam}, {g}, {mu}")
    return lam * mu / (lam + mu), g * mu / (lam + mu), g ** 2 / (lam + mu)


def optimal_gaussian_purifier(lam: float, g: float, mu: float) -> GaussianChannel:
    """Best quantum-limited phase-insensitive channel for noisy coherent inputs"""
    prior, gain, _ = purifier_effective_task(lam, g, mu)
    if gain >= prior + 1.0:
        best = gain / (prior + 1.0)
    else:
        best = min(gain, 1.0)
    logging.debug(f"Gaussian purifier optimum gain {best:.6f}")
    return _phase_insensitive(best)
