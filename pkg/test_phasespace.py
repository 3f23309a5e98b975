#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for the Gaussian phase-space engine
"""
import math
import os
import sys

import numpy as np
import pytest

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import phasespace
from phasespace import GaussianChannel, GaussianState, LinearObservable, PhysicalityError, SymplecticOp


def test_vacuum_and_families():
    """Vacuum, coherent, thermal and squeezed states"""
    print("\n=== Testing State Families ===")

    vac = phasespace.make_vacuum(2)
    assert np.allclose(vac.cov, 0.5 * np.eye(4))
    assert np.allclose(vac.mean, 0.0)
    assert vac.is_pure()

    coh = phasespace.coherent_state(1.0 + 0.5j)
    assert np.allclose(coh.mean, math.sqrt(2.0) * np.array([1.0, 0.5]))

    th = phasespace.thermal_state(2.0)
    assert np.allclose(th.cov, 2.5 * np.eye(2))
    assert not th.is_pure()

    sq = phasespace.squeezed_vacuum(0.5)
    assert np.allclose(np.diag(sq.cov), [0.5 * math.exp(-1.0), 0.5 * math.exp(1.0)])
    assert sq.is_pure()

    print("✓ State family test passed")


def test_physicality_checks():
    """Uncertainty, symplectic and complete-positivity violations"""
    print("\n=== Testing Physicality Checks ===")

    with pytest.raises(PhysicalityError):
        GaussianState(np.zeros(2), 0.1 * np.eye(2))
    with pytest.raises(PhysicalityError):
        SymplecticOp(np.diag([2.0, 1.0]))
    with pytest.raises(PhysicalityError):
        GaussianChannel(2.0 * np.eye(2), np.zeros((2, 2)))
    with pytest.raises(PhysicalityError):
        phasespace.pure_loss(1.5)
    with pytest.raises(PhysicalityError):
        phasespace.phase_insensitive_amplifier(0.5)
    with pytest.raises(ValueError):
        phasespace.graph_op([(0, 0)], 2)

    print("✓ Physicality test passed")


def test_symplectic_compose_and_inverse():
    """op composed with its inverse is the identity"""
    print("\n=== Testing Symplectic Algebra ===")

    op = phasespace.squeezer(0.3).compose(phasespace.displacement([1.0, 2.0]))
    ident = op.compose(op.inverse())
    assert np.allclose(ident.S, np.eye(2))
    assert np.allclose(ident.d, 0.0)

    rot = phasespace.rotation(0.4).compose(phasespace.rotation(0.3))
    assert np.allclose(rot.S, phasespace.rotation(0.7).S)

    cz = phasespace.graph_op([(0, 1)], 2)
    assert cz.S[1, 2] == -1.0 and cz.S[3, 0] == -1.0

    print("✓ Symplectic algebra test passed")


def test_channels():
    """Loss, composition and embedding"""
    print("\n=== Testing Channels ===")

    out = phasespace.apply_channel(phasespace.coherent_state(1.0), phasespace.pure_loss(0.25))
    assert np.allclose(out.mean, [math.sqrt(2.0) * 0.5, 0.0])
    assert np.allclose(out.cov, 0.5 * np.eye(2))

    twice = phasespace.pure_loss(0.5).compose(phasespace.pure_loss(0.5))
    once = phasespace.pure_loss(0.25)
    assert np.allclose(twice.X, once.X)
    assert np.allclose(twice.Y, once.Y)

    embedded = phasespace.embed_channel(phasespace.pure_loss(0.36), [1], 2)
    assert np.allclose(np.diag(embedded.X), [1.0, 1.0, 0.6, 0.6])
    assert np.allclose(np.diag(embedded.Y), [0.0, 0.0, 0.32, 0.32])

    vac = phasespace.apply_channel(phasespace.thermal_state(3.0), phasespace.replace_with_vacuum())
    assert np.allclose(vac.cov, 0.5 * np.eye(2))

    print("✓ Channel test passed")


def test_tmsv_marginal():
    """Var(q1 - q2) on a two-mode squeezed vacuum is e^(-2 kappa)"""
    print("\n=== Testing TMSV Marginal ===")

    kappa = 0.7
    state = phasespace.two_mode_squeezed(kappa)
    mean, var = phasespace.marginal(state, LinearObservable([1.0, 0.0, -1.0, 0.0]))
    assert abs(mean) < 1e-12
    assert abs(var - math.exp(-2.0 * kappa)) < 1e-12

    print("✓ TMSV marginal test passed")


def test_homodyne_sampling_moments():
    """Empirical mean and variance within 5 standard errors"""
    print("\n=== Testing Homodyne Sampling ===")

    rng = np.random.default_rng(1234)
    n = 100000
    for trial in range(20):
        state = phasespace.apply_symplectic(
            phasespace.make_vacuum(1),
            phasespace.displacement(rng.normal(size=2)).compose(
                phasespace.rotation(rng.uniform(0, math.pi)).compose(
                    phasespace.squeezer(rng.uniform(-0.8, 0.8))
                )
            ),
        )
        obs = LinearObservable(rng.normal(size=2), rng.normal())
        mean, var = phasespace.marginal(state, obs)
        samples = phasespace.sample_homodyne(state, obs, rng, size=n)
        assert abs(samples.mean() - mean) < 5.0 * math.sqrt(var / n)
        assert abs(samples.var(ddof=1) - var) < 5.0 * var * math.sqrt(2.0 / (n - 1))

    print("✓ Homodyne sampling test passed")


def test_pure_state_fidelity():
    """Closed forms for coherent, squeezed and thermal overlaps"""
    print("\n=== Testing Pure-State Fidelity ===")

    vac = phasespace.make_vacuum(1)
    assert abs(phasespace.pure_state_fidelity(vac, vac) - 1.0) < 1e-12
    assert abs(
        phasespace.pure_state_fidelity(vac, phasespace.coherent_state(1.0)) - math.exp(-1.0)
    ) < 1e-12
    assert abs(
        phasespace.pure_state_fidelity(vac, phasespace.squeezed_vacuum(0.6)) - 1.0 / math.cosh(0.6)
    ) < 1e-12
    assert abs(phasespace.pure_state_fidelity(vac, phasespace.thermal_state(1.5)) - 0.4) < 1e-12
    with pytest.raises(PhysicalityError):
        phasespace.pure_state_fidelity(phasespace.thermal_state(1.0), vac)

    print("✓ Pure-state fidelity test passed")


def test_average_fidelity_benchmarks():
    """Identity and optimal amplifier ensemble fidelities"""
    print("\n=== Testing Average Fidelity ===")

    assert abs(phasespace.average_fidelity(phasespace.identity_channel(), 1.0) - 1.0) < 1e-12

    amp = phasespace.optimal_amplifier(1.0, 2.0)
    assert abs(phasespace.coherent_average_fidelity(amp, 1.0, 2.0) - 0.5) < 1e-12

    amp = phasespace.optimal_amplifier(1.0, 3.0)
    best = phasespace.coherent_average_fidelity(amp, 1.0, 3.0)
    assert abs(best - 2.0 / 9.0) < 1e-12
    ident = phasespace.coherent_average_fidelity(phasespace.identity_channel(), 1.0, 3.0)
    assert abs(ident - 0.2) < 1e-12 and ident < best

    for eta in (0.3, 0.6, 0.9):
        fbar = phasespace.average_fidelity(phasespace.pure_loss(eta), 1.0)
        assert abs(fbar - 1.0 / (1.0 + (1.0 - math.sqrt(eta)) ** 2)) < 1e-12

    fbar = phasespace.average_fidelity(phasespace.replace_with_vacuum(), 1.0)
    assert abs(fbar - 0.5) < 1e-12

    with pytest.raises(ValueError):
        phasespace.coherent_average_fidelity(phasespace.identity_channel(2), 1.0, 1.0)
    with pytest.raises(PhysicalityError):
        phasespace.optimal_amplifier(1.0, 1.5)

    print("✓ Average fidelity test passed")


def test_gaussian_purifier_is_optimal_on_grid():
    """The optimised purifier beats every phase-insensitive gain on a grid"""
    print("\n=== Testing Gaussian Purifier ===")

    lam, g, mu = 1.0, 1.5, 2.0
    best = phasespace.average_fidelity(
        phasespace.optimal_gaussian_purifier(lam, g, mu), lam, gain=g, mu=mu
    )
    for gain in np.linspace(0.2, 3.0, 29):
        ch = phasespace.phase_insensitive_amplifier(gain) if gain >= 1 else phasespace.pure_loss(gain ** 2)
        assert phasespace.average_fidelity(ch, lam, gain=g, mu=mu) <= best + 1e-6

    assert phasespace.purifier_effective_task(1.0, 3.0, 1.0) == (0.5, 1.5, 4.5)
    # g = 3 with lambda = mu = 1 sits exactly on the amplification edge: identity is optimal
    ideal = phasespace.optimal_gaussian_purifier(1.0, 3.0, 1.0)
    assert np.allclose(ideal.X, np.eye(2)) and np.allclose(ideal.Y, 0.0)
    assert abs(phasespace.average_fidelity(ideal, 1.0, gain=3.0, mu=1.0) - 1.0 / 6.0) < 1e-12
    with pytest.raises(ValueError):
        phasespace.purifier_effective_task(1.0, 3.0, 0.0)

    print("✓ Gaussian purifier test passed")
