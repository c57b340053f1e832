#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

import math
from itertools import combinations

import numpy as np
import pytest

from core import network as network_module
from core.models import Topology
from core.network import (
    ProbabilityDomainError,
    bernoulli_counts,
    derive_trial_seed,
    instance_fingerprint,
    link_success_prob,
    sample_instance,
    sample_requests,
    sample_slot,
    sample_topology,
    trial_streams,
)
from core.structured_config import ScenarioParams


@pytest.mark.parametrize(
    "d,l0,expected", [(0.0, 0.54, 1.0), (0.54, 0.54, 0.367879), (1.0, 0.54, 0.156946)]
)
def test_link_success_prob(d, l0, expected):
    assert link_success_prob(d, l0) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("d,l0", [(-0.1, 0.54), (0.5, 0.0), (0.5, -1.0)])
def test_link_success_prob_domain(d, l0):
    with pytest.raises(ProbabilityDomainError):
        link_success_prob(d, l0)


def test_link_success_prob_over_arrays():
    probs = link_success_prob(np.array([[0.0, 0.54], [1.0, 0.27]]), 0.54)

    assert probs.shape == (2, 2)
    assert probs == pytest.approx(np.array([[1.0, 0.367879], [0.156946, 0.606531]]), abs=1e-6)
    with pytest.raises(ProbabilityDomainError):
        link_success_prob(np.array([0.2, -0.1]), 0.54)


def test_sample_slot_draws_through_link_success_prob(mocker, default_scenario):
    topology = sample_topology(default_scenario, np.random.default_rng(1))
    spy = mocker.spy(network_module, "link_success_prob")

    sample_slot(topology, np.random.default_rng(2))

    assert [call.args[0].shape for call in spy.call_args_list] == [(5, 3), (3, 5)]
    assert all(call.args[1] == 0.54 for call in spy.call_args_list)


def test_sample_topology_deterministic_and_in_range(default_scenario):
    first = sample_topology(default_scenario, np.random.default_rng(5))
    second = sample_topology(default_scenario, np.random.default_rng(5))

    assert (first.d_tx == second.d_tx).all() and (first.d_rx == second.d_rx).all()
    assert (first.k, first.q, first.m) == (5, 3, 5)
    for matrix in (first.d_tx, first.d_rx):
        assert ((matrix >= 0.1) & (matrix <= 1.0)).all()


def test_sample_topology_mean_distance():
    params = ScenarioParams(K=50, M=50, Q=100)
    topology = sample_topology(params, np.random.default_rng(0))
    distances = np.concatenate([topology.d_tx.ravel(), topology.d_rx.ravel()])
    assert distances.mean() == pytest.approx(0.55, abs=0.02)


def test_topology_rejects_invalid_geometry():
    with pytest.raises(ValueError):
        Topology(d_tx=np.ones((2, 3)), d_rx=np.ones((2, 2)), n=10, l0_km=0.54)
    with pytest.raises(ValueError):
        Topology(d_tx=np.zeros((2, 3)), d_rx=np.ones((3, 2)), n=10, l0_km=0.54)


def test_sample_slot_ranges(default_scenario):
    rng = np.random.default_rng(3)
    topology = sample_topology(default_scenario, rng)
    slot = sample_slot(topology, rng)

    for counts in (slot.n_tx, slot.n_rx):
        assert ((counts >= 0) & (counts <= topology.n)).all()
    for fidelities in (slot.f_tx, slot.f_rx):
        assert ((fidelities >= 0.83) & (fidelities <= 0.99)).all()


def test_sample_slot_short_links_always_succeed():
    topology = Topology(d_tx=np.full((2, 2), 1e-12), d_rx=np.full((2, 3), 1e-12), n=10, l0_km=0.54)
    slot = sample_slot(topology, np.random.default_rng(0))
    assert (slot.n_tx == 10).all() and (slot.n_rx == 10).all()


def test_bernoulli_counts_mean():
    counts = bernoulli_counts(np.full(10_000, math.exp(-1)), 10, np.random.default_rng(4))
    assert counts.mean() == pytest.approx(10 * math.exp(-1), abs=0.1)
    assert counts.min() >= 0 and counts.max() <= 10


def test_sample_requests_empty(default_scenario):
    topology = sample_topology(default_scenario, np.random.default_rng(0))
    assert sample_requests(0, topology, np.random.default_rng(0)) == []


def test_sample_requests_shared_fmin(default_scenario):
    rng = np.random.default_rng(6)
    topology = sample_topology(default_scenario, rng)
    requests = sample_requests(60, topology, rng, default_scenario)

    assert [r.id for r in requests] == list(range(60))
    assert all(0.5 <= r.f_min <= 0.8 for r in requests)
    assert all(0 <= r.tx < 5 and 0 <= r.rx < 5 for r in requests)
    # 60 requests over 25 endpoint pairs must repeat some pair
    repeated = [(a, b) for a, b in combinations(requests, 2) if (a.tx, a.rx) == (b.tx, b.rx)]
    assert repeated
    for a, b in repeated:
        assert a.f_min == b.f_min


def test_sample_requests_independent_fmin():
    params = ScenarioParams(shared_fmin=False)
    rng = np.random.default_rng(6)
    topology = sample_topology(params, rng)
    requests = sample_requests(60, topology, rng, params)
    repeated = [(a, b) for a, b in combinations(requests, 2) if (a.tx, a.rx) == (b.tx, b.rx)]
    assert any(a.f_min != b.f_min for a, b in repeated)


def test_sample_requests_endpoint_weights():
    params = ScenarioParams(tx_weights=[1, 0, 0, 0, 0], rx_weights=[0, 0, 0, 0, 1])
    rng = np.random.default_rng(7)
    topology = sample_topology(params, rng)
    requests = sample_requests(20, topology, rng, params)
    assert {(r.tx, r.rx) for r in requests} == {(0, 4)}


def test_sample_requests_negative_count(default_scenario):
    topology = sample_topology(default_scenario, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_requests(-1, topology, np.random.default_rng(0))


def test_trial_seeds_are_order_independent():
    seeds = [derive_trial_seed(0, i) for i in range(50)]
    assert seeds == [derive_trial_seed(0, i) for i in range(50)]
    assert len(set(seeds)) == 50
    assert derive_trial_seed(1, 0) != derive_trial_seed(0, 0)
    assert derive_trial_seed(0, 7) == seeds[7]


def test_trial_streams_are_independent():
    streams = trial_streams(11)
    again = trial_streams(11)
    assert streams.instance.random() == again.instance.random()
    assert streams.algorithm.random() == again.algorithm.random()
    assert trial_streams(11).instance.random() != trial_streams(11).algorithm.random()


def test_sample_instance_deterministic(default_scenario):
    first = sample_instance(default_scenario, 15, 123)
    second = sample_instance(default_scenario, 15, 123)
    other = sample_instance(default_scenario, 15, 124)

    assert instance_fingerprint(*first) == instance_fingerprint(*second)
    assert instance_fingerprint(*first) != instance_fingerprint(*other)
    assert first[2] == second[2]
    assert (first[1].n_tx == second[1].n_tx).all()
