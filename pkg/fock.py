#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Truncated Fock-space engine
Features:
- Pure and mixed few-mode states with truncation (leakage) accounting
- Polynomial quadrature observables built with exact matrix elements
- Born-rule sampling with a shared eigendecomposition cache
- Continuous homodyne sampling from Hermite-function densities
- Hypergraph states via sparse matrix exponentials of product-of-q generators
"""
from __future__ import annotations

import hashlib
import logging
import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy import sparse
from scipy.linalg import sqrtm
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from phasespace import GaussianState

MAX_BASIS = 20000
MAX_DENSE = 4096
NORM_TOL = 1e-6
HERMITIAN_TOL = 1e-9
OBSERVABLE_TOL = 1e-8
HYPERGRAPH_LEAKAGE_LIMIT = 1e-4
GRID_POINTS = 4001


class CutoffError(ValueError):
    """Raised for invalid cutoffs or basis sizes beyond the desk-scale cap"""


class LeakageError(RuntimeError):
    """Raised when truncation weight exceeds the allowed budget"""


class NonCommutingTermError(ValueError):
    """Raised when a polynomial term mixes q and p on the same mode"""


class UnsupportedFamilyError(ValueError):
    """Raised when a Gaussian state has no analytic Fock expansion here"""


def _check_basis(modes: int, cutoff: int) -> int:
    if cutoff < 2:
        raise CutoffError(f"cutoff must be at least 2, got {cutoff}")
    if modes < 1:
        raise ValueError(f"number of modes must be positive, got {modes}")
    dim = cutoff ** modes
    if dim > MAX_BASIS:
        raise CutoffError(
            f"{modes} modes at cutoff {cutoff} need {dim} basis states (cap {MAX_BASIS})"
        )
    return dim


@dataclass(eq=False)
class FockArray:
    """Few-mode state in the truncated Fock basis (pure amplitudes or density)"""

    modes: int
    cutoff: int
    amplitudes: Optional[NDArray[np.complex128]] = None
    density: Optional[NDArray[np.complex128]] = None
    leakage: float = 0.0

    def __post_init__(self):
        dim = _check_basis(self.modes, self.cutoff)
        if (self.amplitudes is None) == (self.density is None):
            raise ValueError("provide exactly one of amplitudes or density")
        if self.amplitudes is not None:
            amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
            if amps.size != dim:
                raise ValueError(f"expected {dim} amplitudes, got {amps.size}")
            norm = float(np.vdot(amps, amps).real)
            if not 1.0 - NORM_TOL <= norm <= 1.0 + 1e-12:
                raise ValueError(f"state norm {norm:.9f} outside [1-1e-6, 1]")
            self.amplitudes = amps
        else:
            if self.modes > 2:
                raise ValueError("density matrices are limited to two modes")
            rho = np.asarray(self.density, dtype=complex)
            if rho.shape != (dim, dim):
                raise ValueError(f"density must be {dim}x{dim}, got {rho.shape}")
            if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
                raise ValueError("density matrix is not Hermitian")
            trace = float(np.trace(rho).real)
            if not 1.0 - NORM_TOL <= trace <= 1.0 + 1e-12:
                raise ValueError(f"density trace {trace:.9f} outside [1-1e-6, 1]")
            if np.linalg.eigvalsh(rho).min() < -HERMITIAN_TOL:
                raise ValueError("density matrix has negative eigenvalues")
            self.density = rho
        self.leakage = float(max(self.leakage, 0.0))

    @property
    def dim(self) -> int:
        return self.cutoff ** self.modes

    @property
    def is_pure(self) -> bool:
        return self.amplitudes is not None

    @property
    def norm(self) -> float:
        if self.is_pure:
            return float(np.vdot(self.amplitudes, self.amplitudes).real)
        return float(np.trace(self.density).real)

    def density_matrix(self) -> NDArray[np.complex128]:
        if self.is_pure:
            return np.outer(self.amplitudes, self.amplitudes.conj())
        return self.density

    def edge_weight(self) -> float:
        """Weight on states with some mode at the highest kept level"""
        inner = (slice(0, self.cutoff - 1),) * self.modes
        if self.is_pure:
            tensor = self.amplitudes.reshape((self.cutoff,) * self.modes)
            kept = float(np.sum(np.abs(tensor[inner]) ** 2))
        else:
            diag = np.real(np.diag(self.density)).reshape((self.cutoff,) * self.modes)
            kept = float(np.sum(diag[inner]))
        return max(0.0, self.norm - kept)


# Operators

def ladder(cutoff: int) -> NDArray[np.complex128]:
    if cutoff < 2:
        raise CutoffError(f"cutoff must be at least 2, got {cutoff}")
    return np.diag(np.sqrt(np.arange(1, cutoff)), k=1).astype(complex)


def quadratures(cutoff: int) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    a = ladder(cutoff)
    q = (a + a.conj().T) / math.sqrt(2.0)
    p = (a - a.conj().T) / (math.sqrt(2.0) * 1j)
    return q, p


def number_operator(cutoff: int) -> NDArray[np.complex128]:
    return np.diag(np.arange(cutoff)).astype(complex)


Factor = Tuple[int, str, int]


@dataclass(frozen=True)
class PolynomialObservable:
    """Real-weighted sum of products of quadrature powers.

    Each term is (coefficient, factors) with factors (mode, 'q'|'p', power).
    Factors on the same mode must share a quadrature kind so that every term
    is Hermitian as written. A term with no factors is a constant.
    """

    terms: Tuple[Tuple[float, Tuple[Factor, ...]], ...]

    def __post_init__(self):
        normalized = []
        for coeff, factors in self.terms:
            kinds: Dict[int, str] = {}
            merged: Dict[int, int] = {}
            for mode, kind, power in factors:
                mode, power = int(mode), int(power)
                if kind not in ("q", "p"):
                    raise ValueError(f"unknown quadrature kind {kind!r}")
                if mode < 0 or power < 1:
                    raise ValueError(f"invalid factor ({mode}, {kind}, {power})")
                if kinds.setdefault(mode, kind) != kind:
                    raise NonCommutingTermError(
                        f"term mixes q and p on mode {mode}; it is not Hermitian as written"
                    )
                merged[mode] = merged.get(mode, 0) + power
            factors_out = tuple((m, kinds[m], merged[m]) for m in sorted(merged))
            normalized.append((float(coeff), factors_out))
        object.__setattr__(self, "terms", tuple(normalized))

    @classmethod
    def linear(cls, coeffs: Sequence[float], offset: float = 0.0) -> "PolynomialObservable":
        terms = []
        for index, c in enumerate(coeffs):
            if c != 0.0:
                terms.append((float(c), ((index // 2, "qp"[index % 2], 1),)))
        if offset != 0.0:
            terms.append((float(offset), ()))
        return cls(tuple(terms))

    def max_mode(self) -> int:
        modes = [m for _, factors in self.terms for m, _, _ in factors]
        return max(modes) if modes else -1

    def max_power(self) -> int:
        powers = [p for _, factors in self.terms for _, _, p in factors]
        return max(powers) if powers else 0


@lru_cache(maxsize=256)
def _single_mode_power(kind: str, power: int, rows: int, cols: int) -> NDArray[np.complex128]:
    big = max(rows, cols) + power
    q, p = quadratures(big)
    base = q if kind == "q" else p
    return np.linalg.matrix_power(base, power)[:rows, :cols]


def _operator(spec: PolynomialObservable, modes: int, cutoff: int, pad: int):
    """Sparse map from the D^k basis into the (D+pad)^k basis with exact elements"""
    if spec.max_mode() >= modes:
        raise ValueError(f"observable acts on mode {spec.max_mode()}, system has {modes}")
    rows = cutoff + pad
    total = sparse.csr_matrix((rows ** modes, cutoff ** modes), dtype=complex)
    for coeff, factors in spec.terms:
        by_mode = {m: (kind, power) for m, kind, power in factors}
        term = None
        for mode in range(modes):
            if mode in by_mode:
                kind, power = by_mode[mode]
                block = sparse.csr_matrix(_single_mode_power(kind, power, rows, cutoff))
            else:
                block = sparse.eye(rows, cutoff, dtype=complex, format="csr")
            term = block if term is None else sparse.kron(term, block, format="csr")
        total = total + coeff * term
    return total.tocsr()


def build_observable(
    spec: PolynomialObservable, modes: int, cutoff: int, as_sparse: bool = False
):
    """Hermitian matrix of the observable projected onto the truncated basis"""
    _check_basis(modes, cutoff)
    if not as_sparse and cutoff ** modes > MAX_DENSE:
        raise CutoffError(
            f"dense observable of size {cutoff ** modes} exceeds cap {MAX_DENSE}"
        )
    op = _operator(spec, modes, cutoff, pad=0)
    scale = max(1.0, float(abs(op).max()) if op.nnz else 1.0)
    if op.nnz and float(abs(op - op.conj().T).max()) > OBSERVABLE_TOL * scale:
        raise NonCommutingTermError("observable matrix is not Hermitian")
    return op if as_sparse else op.toarray()


def expectation(state: FockArray, observable) -> float:
    """tr(rho O) for a matrix or PolynomialObservable"""
    if isinstance(observable, PolynomialObservable):
        observable = _operator(observable, state.modes, state.cutoff, pad=0)
    if state.is_pure:
        return float(np.vdot(state.amplitudes, observable @ state.amplitudes).real)
    return float(np.real(np.sum((observable @ state.density).diagonal())))


def second_moment(state: FockArray, spec: PolynomialObservable) -> float:
    """Exact E[O^2] of the truncated state, padding the basis by the max power"""
    op = _operator(spec, state.modes, state.cutoff, pad=spec.max_power())
    if state.is_pure:
        vec = op @ state.amplitudes
        return float(np.vdot(vec, vec).real)
    left = np.asarray(op @ state.density)
    return float(np.real(np.sum(left * op.conj().toarray())))


def covariance(state: FockArray) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Mean vector and symmetrized covariance of the quadratures"""
    n = 2 * state.modes
    rect = []
    square = []
    for index in range(n):
        spec = PolynomialObservable.linear(np.eye(n)[index])
        rect.append(_operator(spec, state.modes, state.cutoff, pad=1))
        square.append(_operator(spec, state.modes, state.cutoff, pad=0))
    if state.is_pure:
        weights = np.array([1.0])
        vectors = state.amplitudes.reshape(-1, 1)
    else:
        weights, vectors = np.linalg.eigh(state.density)
        keep = weights > 1e-14
        weights, vectors = weights[keep], vectors[:, keep]
    mean = np.zeros(n)
    second = np.zeros((n, n))
    for w, psi in zip(weights, vectors.T):
        images = [op @ psi for op in rect]
        for i in range(n):
            mean[i] += w * float(np.vdot(psi, square[i] @ psi).real)
            for j in range(i, n):
                second[i, j] += w * float(np.vdot(images[i], images[j]).real)
    second = np.triu(second) + np.triu(second, 1).T
    return mean, second - np.outer(mean, mean)


# Sampling

class SpectrumCache:
    """Eigendecompositions keyed by observable; built once, then shared read-only"""

    def __init__(self):
        self._lock = threading.Lock()
        self._spectra: Dict[object, Tuple[NDArray[np.float64], NDArray[np.complex128]]] = {}

    @staticmethod
    def key_for(matrix: NDArray) -> str:
        digest = hashlib.sha1(np.ascontiguousarray(matrix).tobytes()).hexdigest()
        return f"{matrix.shape}:{digest}"

    def get(self, matrix: NDArray, key: Optional[object] = None):
        key = key if key is not None else self.key_for(matrix)
        with self._lock:
            cached = self._spectra.get(key)
            if cached is None:
                cached = np.linalg.eigh(matrix)
                self._spectra[key] = cached
                logging.debug(f"🧮 Cached spectrum for observable {str(key)[:24]}")
            return cached

    def __len__(self) -> int:
        return len(self._spectra)


SPECTRA = SpectrumCache()


def born_sample(
    state: FockArray,
    observable: NDArray,
    rng: np.random.Generator,
    size: Optional[int] = None,
    key: Optional[object] = None,
    cache: Optional[SpectrumCache] = None,
):
    """Sample eigenvalues of the observable with Born-rule weights"""
    if observable.shape != (state.dim, state.dim):
        raise ValueError(f"observable shape {observable.shape} does not match state")
    evals, evecs = (cache or SPECTRA).get(observable, key)
    if state.is_pure:
        weights = np.abs(evecs.conj().T @ state.amplitudes) ** 2
    else:
        weights = np.real(np.einsum("ij,ik,kj->j", evecs.conj(), state.density, evecs))
    weights = np.clip(weights, 0.0, None)
    weights = weights / weights.sum()
    picks = rng.choice(len(evals), size=size, p=weights)
    return evals[picks]


def hermite_functions(cutoff: int, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Position wavefunctions of |0>..|cutoff-1> on the grid x"""
    x = np.asarray(x, dtype=float)
    psi = np.zeros((cutoff, x.size))
    psi[0] = math.pi ** -0.25 * np.exp(-0.5 * x ** 2)
    if cutoff > 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(1, cutoff - 1):
        psi[n + 1] = math.sqrt(2.0 / (n + 1)) * x * psi[n] - math.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


@lru_cache(maxsize=32)
def _quadrature_grid(cutoff: int, points: int = GRID_POINTS):
    half_width = math.sqrt(2.0 * cutoff + 1.0) + 6.0
    x = np.linspace(-half_width, half_width, points)
    return x, hermite_functions(cutoff, x)


def reduced_density(state: FockArray, mode: int) -> NDArray[np.complex128]:
    if not 0 <= mode < state.modes:
        raise ValueError(f"mode {mode} out of range for {state.modes} modes")
    D = state.cutoff
    if state.is_pure:
        tensor = np.moveaxis(state.amplitudes.reshape((D,) * state.modes), mode, 0)
        flat = tensor.reshape(D, -1)
        return flat @ flat.conj().T
    k = state.modes
    letters = "abcdefgh"
    rows = list(letters[:k])
    cols = list(letters[k:2 * k])
    for other in range(k):
        if other != mode:
            cols[other] = rows[other]
    expr = "".join(rows) + "".join(cols) + "->" + rows[mode] + cols[mode]
    return np.einsum(expr, state.density.reshape((D,) * (2 * k)))


def quadrature_density(state: FockArray, mode: int, theta: float):
    """Grid and probability density of cos(theta) q + sin(theta) p on one mode"""
    rho = reduced_density(state, mode)
    levels = np.arange(state.cutoff)
    rotated = rho * np.exp(-1j * theta * (levels[:, None] - levels[None, :]))
    x, psi = _quadrature_grid(state.cutoff)
    density = np.real(np.sum(psi * (rotated @ psi), axis=0))
    return x, np.clip(density, 0.0, None)


def quadrature_sample(
    state: FockArray,
    mode: int,
    theta: float,
    rng: np.random.Generator,
    size: Optional[int] = None,
):
    """Continuous homodyne outcomes of cos(theta) q + sin(theta) p"""
    x, density = quadrature_density(state, mode, theta)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(x))])
    cdf /= cdf[-1]
    u = rng.random(size=size)
    return np.interp(u, cdf, x)


# State families

def _normalized(modes: int, cutoff: int, amplitudes: NDArray, extra_leakage: float = 0.0) -> FockArray:
    weight = float(np.vdot(amplitudes, amplitudes).real)
    if weight <= 0.0:
        raise LeakageError("state has no weight inside the truncated basis")
    return FockArray(
        modes, cutoff, amplitudes=amplitudes / math.sqrt(weight),
        leakage=max(0.0, 1.0 - weight) + extra_leakage,
    )


def fock_state(n: int, cutoff: int) -> FockArray:
    if not 0 <= n < cutoff:
        raise CutoffError(f"level {n} is outside cutoff {cutoff}")
    amps = np.zeros(cutoff, dtype=complex)
    amps[n] = 1.0
    return FockArray(1, cutoff, amplitudes=amps)


def vacuum(cutoff: int, modes: int = 1) -> FockArray:
    return product([fock_state(0, cutoff)] * modes)


def superposition(weights: Dict[int, complex], cutoff: int) -> FockArray:
    amps = np.zeros(cutoff, dtype=complex)
    for n, c in weights.items():
        if not 0 <= n < cutoff:
            raise CutoffError(f"level {n} is outside cutoff {cutoff}")
        amps[n] = c
    return _normalized(1, cutoff, amps)


def coherent(alpha: complex, cutoff: int) -> FockArray:
    alpha = complex(alpha)
    n = np.arange(cutoff)
    if alpha == 0:
        return fock_state(0, cutoff)
    log_mag = n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1) - 0.5 * abs(alpha) ** 2
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return _normalized(1, cutoff, amps)


def squeezed_vacuum(xi: float, cutoff: int) -> FockArray:
    """S(xi)|0>; xi > 0 squeezes q, xi < 0 squeezes p"""
    if xi == 0:
        return fock_state(0, cutoff)
    pairs = np.arange((cutoff + 1) // 2)
    t = math.tanh(abs(xi))
    log_mag = (
        pairs * math.log(t) + 0.5 * gammaln(2 * pairs + 1) - pairs * math.log(2.0)
        - gammaln(pairs + 1) - 0.5 * math.log(math.cosh(xi))
    )
    sign = (-1.0 if xi > 0 else 1.0) ** pairs
    amps = np.zeros(cutoff, dtype=complex)
    amps[2 * pairs] = sign * np.exp(log_mag)
    return _normalized(1, cutoff, amps)


def tmsv(kappa: float, cutoff: int) -> FockArray:
    n = np.arange(cutoff)
    amps = np.zeros(cutoff * cutoff, dtype=complex)
    amps[n * cutoff + n] = math.tanh(kappa) ** n / math.cosh(kappa)
    return _normalized(2, cutoff, amps)


def thermal(nbar: float, cutoff: int) -> FockArray:
    if nbar < 0:
        raise ValueError(f"mean photon number must be non-negative, got {nbar}")
    n = np.arange(cutoff)
    probs = (nbar / (nbar + 1.0)) ** n / (nbar + 1.0) if nbar > 0 else (n == 0).astype(float)
    kept = float(probs.sum())
    return FockArray(1, cutoff, density=np.diag(probs / kept).astype(complex), leakage=1.0 - kept)


def product(states: Sequence[FockArray]) -> FockArray:
    if not states:
        raise ValueError("product of no states")
    cutoff = states[0].cutoff
    if any(s.cutoff != cutoff for s in states):
        raise ValueError("all factors must share the cutoff")
    modes = sum(s.modes for s in states)
    survival = float(np.prod([1.0 - s.leakage for s in states]))
    if all(s.is_pure for s in states):
        amps = states[0].amplitudes
        for s in states[1:]:
            amps = np.kron(amps, s.amplitudes)
        return FockArray(modes, cutoff, amplitudes=amps, leakage=1.0 - survival)
    rho = states[0].density_matrix()
    for s in states[1:]:
        rho = np.kron(rho, s.density_matrix())
    return FockArray(modes, cutoff, density=rho, leakage=1.0 - survival)


def _product_of_q(vertices: Sequence[int], modes: int, cutoff: int):
    spec = PolynomialObservable(((1.0, tuple((v, "q", 1) for v in vertices)),))
    return _operator(spec, modes, cutoff, pad=0)


def _validate_edges(edges: Iterable[Sequence[int]], modes: int) -> List[Tuple[int, ...]]:
    checked = [tuple(sorted(int(v) for v in e)) for e in edges]
    for edge in checked:
        if not edge or len(set(edge)) != len(edge) or min(edge) < 0 or max(edge) >= modes:
            raise ValueError(f"hyperedge {edge} is not a set of modes in 0..{modes - 1}")
    return checked


def apply_hyperedges(
    state: FockArray, edges: Iterable[Sequence[int]], inverse: bool = False
) -> FockArray:
    """Apply prod_e exp(-i prod_{l in e} q_l), or its inverse"""
    sign = 1j if inverse else -1j
    edges = _validate_edges(edges, state.modes)
    if state.is_pure:
        psi = state.amplitudes
        for edge in edges:
            psi = expm_multiply(sign * _product_of_q(edge, state.modes, state.cutoff), psi)
            norm = float(np.vdot(psi, psi).real)
            if abs(norm - state.norm) > NORM_TOL:
                raise LeakageError(f"norm drifted to {norm:.9f} after hyperedge {edge}")
            logging.debug(f"🔗 Applied hyperedge {edge} (norm {norm:.12f})")
        psi = psi / math.sqrt(np.vdot(psi, psi).real)
        result = FockArray(state.modes, state.cutoff, amplitudes=psi)
    else:
        rho = state.density
        for edge in edges:
            generator = sign * _product_of_q(edge, state.modes, state.cutoff)
            rho = expm_multiply(generator, rho)
            rho = expm_multiply(generator, rho.conj().T).conj().T
        rho = 0.5 * (rho + rho.conj().T)
        result = FockArray(state.modes, state.cutoff, density=rho / np.trace(rho).real)
    result.leakage = max(state.leakage, result.edge_weight())
    return result


def hypergraph_state(
    edges: Iterable[Sequence[int]], xi: float, modes: int, cutoff: int
) -> FockArray:
    """prod_e exp(-i prod_{l in e} q_l) applied to momentum-squeezed vacua"""
    _check_basis(modes, cutoff)
    if xi < 0:
        raise ValueError(f"squeezing must be non-negative, got {xi}")
    edges = _validate_edges(edges, modes)
    state = product([squeezed_vacuum(-xi, cutoff)] * modes)
    if state.leakage > HYPERGRAPH_LEAKAGE_LIMIT:
        raise LeakageError(
            f"squeezed-vacuum leakage {state.leakage:.2e} exceeds {HYPERGRAPH_LEAKAGE_LIMIT}"
        )
    return apply_hyperedges(state, edges)


def fidelity(a: FockArray, b: FockArray) -> float:
    if a.modes != b.modes or a.cutoff != b.cutoff:
        raise ValueError("fidelity needs states with identical modes and cutoff")
    if a.is_pure and b.is_pure:
        value = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    elif b.is_pure:
        value = np.vdot(b.amplitudes, a.density @ b.amplitudes).real
    elif a.is_pure:
        value = np.vdot(a.amplitudes, b.density @ a.amplitudes).real
    else:
        root = sqrtm(a.density)
        value = np.real(np.trace(sqrtm(root @ b.density @ root))) ** 2
    return float(min(1.0, max(0.0, value)))


def rotate_phase(state: FockArray, phis: Union[float, Sequence[float]]) -> FockArray:
    """Apply exp(-i phi_j n_j) on every mode"""
    phis = np.broadcast_to(np.asarray(phis, dtype=float), (state.modes,))
    levels = np.arange(state.cutoff)
    phase = np.ones(1, dtype=complex)
    for phi in phis:
        phase = np.kron(phase, np.exp(-1j * phi * levels))
    if state.is_pure:
        return FockArray(state.modes, state.cutoff, amplitudes=phase * state.amplitudes,
                         leakage=state.leakage)
    rho = phase[:, None] * state.density * phase.conj()[None, :]
    return FockArray(state.modes, state.cutoff, density=rho, leakage=state.leakage)


def gaussian_to_fock(state: GaussianState, cutoff: int) -> FockArray:
    """Fock expansion of vacuum/coherent products, squeezed vacuum or TMSV"""
    if not state.is_pure():
        raise UnsupportedFamilyError("only pure Gaussian states are supported")
    k = state.modes
    mean, cov = state.mean, state.cov
    if np.allclose(cov, 0.5 * np.eye(2 * k), atol=1e-9):
        factors = [
            coherent((mean[2 * j] + 1j * mean[2 * j + 1]) / math.sqrt(2.0), cutoff)
            for j in range(k)
        ]
        return factors[0] if k == 1 else product(factors)
    if np.any(np.abs(mean) > 1e-9):
        raise UnsupportedFamilyError("displaced squeezed states are not supported")
    if k == 1 and abs(cov[0, 1]) < 1e-9:
        return squeezed_vacuum(-0.5 * math.log(2.0 * cov[0, 0]), cutoff)
    if k == 2:
        a = cov[0, 0]
        c = cov[0, 2]
        expected = np.block([
            [a * np.eye(2), c * np.diag([1.0, -1.0])],
            [c * np.diag([1.0, -1.0]), a * np.eye(2)],
        ])
        if np.allclose(cov, expected, atol=1e-9):
            return tmsv(0.5 * math.asinh(2.0 * c), cutoff)
    raise UnsupportedFamilyError(
        "supported families: coherent products, squeezed vacuum, two-mode squeezed vacuum"
    )
