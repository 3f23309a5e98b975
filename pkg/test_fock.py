#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for the truncated Fock engine
"""
import math
import os
import sys

import numpy as np
import pytest
from scipy import stats

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import fock
import phasespace
from fock import CutoffError, NonCommutingTermError, PolynomialObservable, UnsupportedFamilyError

Q = PolynomialObservable.linear([1.0, 0.0])


def test_quadrature_commutator():
    """[q, p] = i away from the truncation edge"""
    print("\n=== Testing Quadratures ===")

    q, p = fock.quadratures(12)
    comm = q @ p - p @ q
    assert np.allclose(comm[:-1, :-1], 1j * np.eye(11))
    assert np.allclose(fock.number_operator(5), np.diag(np.arange(5)))

    print("✓ Quadrature test passed")


def test_padded_second_moments_are_exact():
    """<n|q^2|n> = n + 1/2 even for the top kept level"""
    print("\n=== Testing Padded Moments ===")

    assert abs(fock.second_moment(fock.vacuum(10), Q) - 0.5) < 1e-12
    assert abs(fock.second_moment(fock.fock_state(3, 4), Q) - 3.5) < 1e-12
    quartic = PolynomialObservable(((1.0, ((0, "q", 4),)),))
    assert abs(fock.expectation(fock.vacuum(20), quartic) - 0.75) < 1e-12

    thermal = fock.thermal(0.5, 40)
    assert abs(fock.second_moment(thermal, Q) - 1.0) < 1e-9

    print("✓ Padded moment test passed")


def test_observable_validation():
    """Mixed q/p factors on one mode and oversized bases are refused"""
    print("\n=== Testing Observable Validation ===")

    with pytest.raises(NonCommutingTermError):
        PolynomialObservable(((1.0, ((0, "q", 1), (0, "p", 1))),))
    with pytest.raises(CutoffError):
        fock.vacuum(1)
    with pytest.raises(CutoffError):
        fock.vacuum(200, modes=2)
    merged = PolynomialObservable(((2.0, ((1, "q", 1), (1, "q", 2))),))
    assert merged.terms == ((2.0, ((1, "q", 3),)),)

    print("✓ Observable validation test passed")


def test_covariance_matches_phase_space():
    """Coherent, squeezed and TMSV expansions reproduce their covariances"""
    print("\n=== Testing Fock Covariances ===")

    mean, cov = fock.covariance(fock.coherent(1.0 + 0.5j, 30))
    assert np.allclose(mean, math.sqrt(2.0) * np.array([1.0, 0.5]), atol=1e-8)
    assert np.allclose(cov, 0.5 * np.eye(2), atol=1e-8)

    _, cov = fock.covariance(fock.squeezed_vacuum(0.5, 40))
    assert np.allclose(cov, phasespace.squeezed_vacuum(0.5).cov, atol=1e-8)

    _, cov = fock.covariance(fock.tmsv(0.5, 30))
    assert np.allclose(cov, phasespace.two_mode_squeezed(0.5).cov, atol=1e-8)

    print("✓ Fock covariance test passed")


def test_gaussian_to_fock():
    """Supported families convert, mixed states are refused"""
    print("\n=== Testing Gaussian To Fock ===")

    state = fock.gaussian_to_fock(phasespace.squeezed_vacuum(0.5), 40)
    assert fock.fidelity(state, fock.squeezed_vacuum(0.5, 40)) > 1 - 1e-12
    pair = fock.gaussian_to_fock(phasespace.two_mode_squeezed(0.4), 25)
    assert fock.fidelity(pair, fock.tmsv(0.4, 25)) > 1 - 1e-12
    with pytest.raises(UnsupportedFamilyError):
        fock.gaussian_to_fock(phasespace.thermal_state(1.0), 20)

    print("✓ Gaussian to Fock test passed")


def test_fidelities():
    """Coherent overlap, thermal vacuum weight and phase rotation"""
    print("\n=== Testing Fock Fidelity ===")

    a, b = fock.coherent(1.0, 40), fock.coherent(0.5, 40)
    assert abs(fock.fidelity(a, b) - math.exp(-0.25)) < 1e-9
    assert abs(fock.fidelity(fock.thermal(0.5, 40), fock.vacuum(40)) - 1.0 / 1.5) < 1e-9

    rotated = fock.rotate_phase(fock.coherent(1.0, 40), 0.3)
    assert fock.fidelity(rotated, fock.coherent(np.exp(-0.3j), 40)) > 1 - 1e-9

    print("✓ Fock fidelity test passed")


def test_quadrature_sampler_matches_phase_space():
    """Two-sample KS between Fock and Gaussian homodyne outcomes"""
    print("\n=== Testing Quadrature Sampler ===")

    rng = np.random.default_rng(2024)
    theta = 0.3
    cases = [
        (fock.vacuum(40), phasespace.make_vacuum(1)),
        (fock.squeezed_vacuum(0.5, 40), phasespace.squeezed_vacuum(0.5)),
        (fock.coherent(1.0, 40), phasespace.coherent_state(1.0)),
    ]
    obs = phasespace.LinearObservable([math.cos(theta), math.sin(theta)])
    for fock_state, gaussian in cases:
        a = fock.quadrature_sample(fock_state, 0, theta, rng, size=10000)
        b = phasespace.sample_homodyne(gaussian, obs, rng, size=10000)
        assert stats.ks_2samp(a, b).statistic <= 0.03

    pair = fock.tmsv(0.5, 30)
    a = fock.quadrature_sample(pair, 1, theta, rng, size=10000)
    b = phasespace.sample_homodyne(
        phasespace.two_mode_squeezed(0.5),
        phasespace.LinearObservable([0.0, 0.0, math.cos(theta), math.sin(theta)]),
        rng,
        size=10000,
    )
    assert stats.ks_2samp(a, b).statistic <= 0.03

    print("✓ Quadrature sampler test passed")


def test_born_sampling_and_spectrum_cache():
    """Number outcomes follow the superposition weights; spectra are cached once"""
    print("\n=== Testing Born Sampling ===")

    rng = np.random.default_rng(7)
    state = fock.superposition({0: 1.0, 2: 1.0}, 5)
    cache = fock.SpectrumCache()
    observable = fock.number_operator(5)
    outcomes = fock.born_sample(state, observable, rng, size=4000, key="n5", cache=cache)
    fock.born_sample(state, observable, rng, size=10, key="n5", cache=cache)
    assert set(np.round(outcomes).astype(int)) <= {0, 2}
    frac = float(np.mean(np.round(outcomes) == 2))
    assert abs(frac - 0.5) < 5.0 * math.sqrt(0.25 / 4000)
    assert len(cache) == 1

    print("✓ Born sampling test passed")


def test_hypergraph_state_round_trip():
    """Undoing the hyperedges restores the squeezed product state"""
    print("\n=== Testing Hypergraph State ===")

    edges = [(0, 1, 2)]
    state = fock.hypergraph_state(edges, 0.3, 3, 12)
    assert abs(state.norm - 1.0) < 1e-9
    undone = fock.apply_hyperedges(state, edges, inverse=True)
    base = fock.product([fock.squeezed_vacuum(-0.3, 12)] * 3)
    assert fock.fidelity(undone, base) > 1 - 1e-8
    with pytest.raises(ValueError):
        fock.hypergraph_state([(0, 3)], 0.3, 3, 12)

    print("✓ Hypergraph state test passed")
