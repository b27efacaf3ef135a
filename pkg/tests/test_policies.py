import numpy as np
import pytest

from sarasim.aloha import AlohaParams, optimal_phi
from sarasim.channel import ChannelParams
from sarasim.geometry import Region, Topology, cross_distances, generate_topology
from sarasim.policies import (
    CsmaAdaptivePolicy,
    CsmaPolicy,
    Feedback,
    PolicySpec,
    SaraPolicy,
    adaptive_sensing_range,
    make_policy,
    neighbor_count_phi,
    sara_phi_update,
)

BETA = 10.0 ** 0.3


def test_feedback_invariants():
    Feedback(transmitted=True, success=True, measured_sir=3.0)
    Feedback(transmitted=False, success=False)
    with pytest.raises(ValueError):
        Feedback(transmitted=False, success=True)
    with pytest.raises(ValueError):
        Feedback(transmitted=True, success=False)  # missing measured SIR
    with pytest.raises(ValueError):
        Feedback(transmitted=False, success=False, measured_sir=1.0)


def test_policy_spec_validation():
    with pytest.raises(ValueError):
        PolicySpec("carrier_pigeon")
    with pytest.raises(ValueError):
        PolicySpec("fixed_aloha")  # no probability
    with pytest.raises(ValueError):
        PolicySpec("fixed_aloha", phi=1.5)
    with pytest.raises(ValueError):
        PolicySpec("sara", phi_min=0.5, phi_max=0.2)
    with pytest.raises(ValueError):
        PolicySpec("sara", window=0)


def test_fixed_aloha_always_transmits_at_one():
    topo = generate_topology(0.02, Region(100.0, 100.0), 5.0, seed=1, n_pairs=4)
    policy = make_policy(PolicySpec("fixed_aloha", phi=1.0), topo, ChannelParams(), BETA, 0.02)
    out = policy.decide_block(50, np.random.default_rng(0))
    assert out.all()


def test_fixed_aloha_empirical_rate():
    topo = generate_topology(0.02, Region(100.0, 100.0), 5.0, seed=1, n_pairs=1)
    policy = make_policy(PolicySpec("fixed_aloha", phi=0.5), topo, ChannelParams(), BETA, 0.02)
    out = policy.decide_block(100_000, np.random.default_rng(3))
    assert 0.495 <= out.mean() <= 0.505


def test_sara_update_clamp_cases():
    assert sara_phi_update(2 * BETA, BETA, 0.01, 1.0) == 1.0
    assert sara_phi_update(0.5 * BETA, BETA, 0.01, 1.0) == 0.5
    assert sara_phi_update(0.001 * BETA, BETA, 0.01, 1.0) == 0.01
    with pytest.raises(ValueError):
        sara_phi_update(-1.0, BETA, 0.01, 1.0)


def test_sara_initialises_at_phi_max_and_keeps_phi_without_estimate():
    topo = generate_topology(0.02, Region(100.0, 100.0), 5.0, seed=2, n_pairs=3)
    policy = make_policy(PolicySpec("sara"), topo, ChannelParams(), BETA, 0.02)
    assert np.all(policy.phi == 1.0)
    # a window with no transmissions leaves probabilities untouched
    n = 3
    silent = np.zeros((10, n), dtype=bool)
    policy.observe_block(silent, silent, np.full((10, n), np.nan))
    policy.end_window()
    assert np.all(policy.phi == 1.0)


def test_sara_tracks_window_mean():
    policy = SaraPolicy(n_pairs=1, beta=BETA, window=4)
    tx = np.ones((3, 1), dtype=bool)
    sinr = np.array([[0.5], [1.5], [1.0]])
    policy.observe_block(tx, tx, sinr)
    policy.end_window()
    assert policy.phi[0] == pytest.approx(1.0 / BETA)


def test_neighbor_count_phi():
    tx = np.array([[10.0, 10.0], [12.0, 10.0], [14.0, 10.0], [60.0, 60.0]])
    rx = tx + [0.0, 5.0]
    topo = Topology(tx=tx, rx=rx, r_t=5.0, region=Region(100.0, 100.0))
    assert neighbor_count_phi(topo, 3, 10.0) == 1.0  # isolated: only itself
    assert neighbor_count_phi(topo, 0, 10.0) == pytest.approx(1.0 / 3.0)
    # count grows with the radius
    assert neighbor_count_phi(topo, 0, 2.5) == pytest.approx(1.0 / 2.0)
    assert neighbor_count_phi(topo, 0, 100.0 * np.sqrt(2)) == pytest.approx(1.0 / 4.0)


def test_neighbor_count_ten_in_range():
    tx = np.column_stack([np.linspace(10.0, 19.0, 10), np.full(10, 50.0)])
    rx = tx + [0.0, 5.0]
    topo = Topology(tx=tx, rx=rx, r_t=5.0, region=Region(100.0, 100.0))
    assert neighbor_count_phi(topo, 0, 10.0) == pytest.approx(0.1)


def test_adaptive_sensing_range_values():
    assert adaptive_sensing_range(1, 10.0, 4.0) == pytest.approx(10.0)
    assert adaptive_sensing_range(16, 10.0, 4.0) == pytest.approx(20.0)
    assert adaptive_sensing_range(0, 10.0, 4.0) == 0.0
    with pytest.raises(ValueError):
        adaptive_sensing_range(-1, 10.0, 4.0)


def test_optimal_aloha_initialisation():
    topo = generate_topology(0.02, Region(100.0, 100.0), 5.0, seed=6, n_pairs=5)
    policy = make_policy(PolicySpec("optimal_aloha"), topo, ChannelParams(), BETA, 0.02)
    expected = optimal_phi(AlohaParams(0.02, 5.0, BETA, 4.0))
    assert np.allclose(policy.phi, expected)
    assert policy.phi[0] == pytest.approx(0.28693, abs=1e-4)


def test_csma_fixed_default_range_doubles_link_distance():
    spec = PolicySpec("csma_fixed")
    assert spec.r_cs == 10.0
    topo = generate_topology(0.02, Region(100.0, 100.0), 5.0, seed=6, n_pairs=4)
    policy = make_policy(spec, topo, ChannelParams(), BETA, 0.02)
    assert np.all(policy.ranges == 10.0)


def test_csma_transmits_when_alone_in_range():
    tx = np.array([[10.0, 10.0], [40.0, 40.0]])
    rx = tx + [5.0, 0.0]
    topo = Topology(tx=tx, rx=rx, r_t=5.0, region=Region(100.0, 100.0))
    policy = CsmaPolicy(topo, ranges=10.0, phi_access=1.0)
    out = policy.decide_block(20, np.random.default_rng(0))
    assert out.all()


def test_csma_mutual_exclusion():
    topo = generate_topology(0.05, Region(60.0, 60.0), 5.0, seed=9)
    policy = CsmaPolicy(topo, ranges=10.0, phi_access=1.0)
    d = cross_distances(topo.region, topo.tx, topo.tx)
    out = policy.decide_block(30, np.random.default_rng(5))
    for s in range(out.shape[0]):
        active = np.flatnonzero(out[s])
        block = d[np.ix_(active, active)]
        np.fill_diagonal(block, np.inf)
        assert block.min() > 10.0


def test_csma_adaptive_range_updates_per_window():
    topo = generate_topology(0.05, Region(60.0, 60.0), 5.0, seed=9)
    policy = CsmaAdaptivePolicy(topo, r_b=10.0, alpha=4.0, window=10)
    assert np.all(policy.ranges == 10.0)
    policy.end_window()
    d = cross_distances(topo.region, topo.rx, topo.tx)
    np.fill_diagonal(d, np.inf)
    counts = (d <= 10.0).sum(axis=1)
    assert np.allclose(policy.ranges, adaptive_sensing_range(counts, 10.0, 4.0))
    # zero-neighbour receivers collapse their range to zero
    assert np.all(policy.ranges[counts == 0] == 0.0)


def test_sara_phi_stays_in_bounds_under_random_feedback():
    rng = np.random.default_rng(12)
    policy = SaraPolicy(n_pairs=6, beta=BETA, phi_min=0.05, phi_max=0.9, window=20)
    assert np.all(policy.phi == 0.9)
    for _ in range(30):
        tx = rng.random((20, 6)) < policy.phi
        sinr = np.where(tx, rng.exponential(2.0, (20, 6)), np.nan)
        policy.observe_block(tx, tx & (sinr > BETA), sinr)
        policy.end_window()
        assert np.all(policy.phi >= 0.05) and np.all(policy.phi <= 0.9)
