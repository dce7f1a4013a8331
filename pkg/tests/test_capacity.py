"""Product-state capacity, transmission rate and coherent information."""

import math

import numpy as np
import pytest

from relchannel.core.capacity import (
    binary_entropy,
    classical_capacity,
    closed_form_prior,
    coherent_information_single_use,
    holevo_objective,
)
from relchannel.core.channel_params import ChannelParams
from relchannel.errors import PhysicsError


def entropy_bits(p):
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)


def z_capacity(p):
    """Capacity in bits of the Z-channel with crossover probability p."""
    s_p = entropy_bits(p) / (1 - p)
    denom = 1 + 2 ** s_p
    return entropy_bits(1 / denom) - s_p / denom, 1 / denom


def populations(pe, excited, ground):
    return ChannelParams(pe, excited - pe, ground - pe, 0j, 0j)


def test_binary_entropy():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(math.log(2))
    values = binary_entropy(np.array([0.1, 0.9]))
    assert values[0] == pytest.approx(values[1])
    with pytest.raises(PhysicsError):
        binary_entropy(1.5)
    with pytest.raises(PhysicsError):
        binary_entropy(np.nan)


def test_binary_symmetric_channel():
    result = classical_capacity(populations(0.0, 0.9, 0.1))
    assert result.bits == pytest.approx(1.0 - entropy_bits(0.1), abs=1e-6)
    assert result.nats == pytest.approx(result.bits * math.log(2))
    assert result.prior == pytest.approx(0.5, abs=1e-6)
    assert result.closed_form_agrees
    assert not result.degenerate


def test_z_channel():
    capacity, output_excited = z_capacity(0.2)
    result = classical_capacity(populations(0.0, 0.8, 0.0))
    assert result.bits == pytest.approx(capacity, abs=1e-9)
    assert result.prior == pytest.approx(output_excited / 0.8, abs=1e-6)
    assert result.bits == pytest.approx(0.6182, abs=1e-3)


def test_degenerate_channel_has_zero_capacity():
    result = classical_capacity(ChannelParams(0.01, 0.0, 0.0, 0j, 0j), window=2.0)
    assert result.bits == 0.0
    assert result.prior == 0.5
    assert result.degenerate
    assert result.rate == 0.0


def test_rate_uses_window():
    result = classical_capacity(populations(0.0, 0.9, 0.1), window=4.0)
    assert result.rate == pytest.approx(result.bits / 4.0)
    assert classical_capacity(populations(0.0, 0.9, 0.1)).rate is None


def test_closed_form_prior_matches_optimizer():
    p = populations(0.01, 0.3, 0.05)
    assert closed_form_prior(p) == pytest.approx(classical_capacity(p).prior, abs=1e-6)
    with pytest.raises(PhysicsError):
        closed_form_prior(ChannelParams(0.0, 0.1, 0.1, 0j, 0j))


def test_invalid_populations():
    with pytest.raises(PhysicsError):
        classical_capacity(ChannelParams(0.1, 1.0, 0.0, 0j, 0j))


def test_optimizer_matches_grid():
    rng = np.random.default_rng(1)
    grid = np.linspace(0.0, 1.0, 1_000_001)
    for _ in range(50):
        pe = rng.uniform(0.0, 0.1)
        p = populations(pe, rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0))
        best = float(np.max(holevo_objective(p, grid)))
        assert abs(classical_capacity(p, cross_check=False).nats - best) < 1e-8


def test_holevo_objective_endpoints():
    p = populations(0.0, 0.7, 0.2)
    assert holevo_objective(p, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert holevo_objective(p, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert holevo_objective(p, 0.5) > 0


def test_coherent_information_of_zero_channel():
    info = coherent_information_single_use(ChannelParams.zero(), restarts=8)
    assert info.nats <= 1e-8
    assert info.clamped == pytest.approx(0.0, abs=1e-8)


def test_coherent_information_of_weak_damping():
    gamma = 0.02
    # coherence kept just inside the Kraus radicand boundary
    damping = ChannelParams(0.0, 1.0 - gamma, 0.0, math.sqrt(1.0 - gamma) * (1 - 1e-12), 0j)
    info = coherent_information_single_use(damping, restarts=8)
    assert info.nats > 0.5
    assert info.clamped == info.nats
    assert info.bits == pytest.approx(info.nats / math.log(2))
    assert np.linalg.norm(info.bloch) <= 1.0


def test_coherent_information_deterministic_for_seed():
    p = ChannelParams(0.02, 0.05, 0.01, 0.1 + 0.05j, 0.02 - 0.01j)
    first = coherent_information_single_use(p, restarts=4, seed=3)
    second = coherent_information_single_use(p, restarts=4, seed=3)
    assert first.nats == second.nats
