#!/usr/bin/env python3
# Copyright 2024 Canonical Ltd.
# See LICENSE file for licensing details.

"""Stochastic network model: topology, link-level EPR realization and requests."""

import hashlib
import logging
from typing import NamedTuple

import numpy as np

from core.models import Request, SlotState, Topology
from core.structured_config import ScenarioParams

logger = logging.getLogger(__name__)


class ProbabilityDomainError(ValueError):
    """Raised on a negative link length or a non-positive attenuation length."""


class TrialStreams(NamedTuple):
    """Independent generators derived from one trial seed."""

    instance: np.random.Generator
    algorithm: np.random.Generator


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Seed of trial `trial_index`, independent of the order trials are run in."""
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index,))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def trial_streams(seed: int) -> TrialStreams:
    """Splits a trial seed into an instance-sampling and an algorithm stream."""
    instance, algorithm = np.random.SeedSequence(seed).spawn(2)
    return TrialStreams(np.random.default_rng(instance), np.random.default_rng(algorithm))


def link_success_prob(d: float | np.ndarray, l0: float) -> float | np.ndarray:
    """Per-attempt success probability exp(-d / L0) of a heralded link.

    Accepts one length or an array of lengths; an array gives an array of the same shape.
    """
    lengths = np.asarray(d, dtype=float)
    if (lengths < 0).any():
        raise ProbabilityDomainError(f"link length {lengths.min()} is negative")
    if l0 <= 0:
        raise ProbabilityDomainError(f"attenuation length {l0} is not positive")
    probs = np.exp(-lengths / l0)
    return float(probs) if probs.ndim == 0 else probs


def sample_topology(params: ScenarioParams, rng: np.random.Generator) -> Topology:
    """Draws every link length i.i.d. from U(dist_min_km, dist_max_km)."""
    low, high = params.dist_min_km, params.dist_max_km
    return Topology(
        d_tx=rng.uniform(low, high, size=(params.k, params.q)),
        d_rx=rng.uniform(low, high, size=(params.q, params.m)),
        n=params.n,
        l0_km=params.l0_km,
    )


def bernoulli_counts(p: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Successes out of `n` Bernoulli trials per entry of `p`."""
    attempts = rng.random(size=p.shape + (n,))
    return (attempts < p[..., np.newaxis]).sum(axis=-1)


def sample_slot(
    topology: Topology,
    rng: np.random.Generator,
    fid_low: float = 0.83,
    fid_high: float = 0.99,
) -> SlotState:
    """Realizes one slot: binomial pair counts as n Bernoulli trials, uniform link fidelities.

    Every pair on one link in one slot shares the link's fidelity.
    """
    p_tx = link_success_prob(topology.d_tx, topology.l0_km)
    p_rx = link_success_prob(topology.d_rx, topology.l0_km)

    n_tx = bernoulli_counts(p_tx, topology.n, rng)
    n_rx = bernoulli_counts(p_rx, topology.n, rng)
    f_tx = rng.uniform(fid_low, fid_high, size=p_tx.shape)
    f_rx = rng.uniform(fid_low, fid_high, size=p_rx.shape)

    return SlotState(n_tx=n_tx, f_tx=f_tx, n_rx=n_rx, f_rx=f_rx)


def _endpoint_probs(weights: list[float] | None) -> np.ndarray | None:
    if weights is None:
        return None
    probs = np.asarray(weights, dtype=float)
    return probs / probs.sum()


def sample_requests(
    count: int,
    topology: Topology,
    rng: np.random.Generator,
    params: ScenarioParams | None = None,
) -> list[Request]:
    """Draws `count` requests with endpoints and minimum fidelities.

    By default endpoints are uniform and every (tx, rx) pair gets one f_min per slot
    shared by all its repeated requests; `params` can switch both.
    """
    if count < 0:
        raise ValueError(f"request count {count} is negative")

    params = params or ScenarioParams(K=topology.k, M=topology.m, Q=topology.q)
    tx = rng.choice(topology.k, size=count, p=_endpoint_probs(params.tx_weights))
    rx = rng.choice(topology.m, size=count, p=_endpoint_probs(params.rx_weights))

    if params.shared_fmin:
        fmin_matrix = rng.uniform(params.fmin_low, params.fmin_high, size=(topology.k, topology.m))
        f_min = fmin_matrix[tx, rx]
    else:
        f_min = rng.uniform(params.fmin_low, params.fmin_high, size=count)

    return [
        Request(id=i, tx=int(tx[i]), rx=int(rx[i]), f_min=float(f_min[i])) for i in range(count)
    ]


def sample_instance(
    params: ScenarioParams, count: int, seed: int
) -> tuple[Topology, SlotState, list[Request]]:
    """Samples the full single-slot instance of one trial from its seed."""
    rng = trial_streams(seed).instance
    topology = sample_topology(params, rng)
    slot = sample_slot(topology, rng, params.link_fid_low, params.link_fid_high)
    requests = sample_requests(count, topology, rng, params)
    return topology, slot, requests


def instance_fingerprint(topology: Topology, slot: SlotState, requests: list[Request]) -> str:
    """Short stable digest identifying a sampled instance."""
    digest = hashlib.sha256()
    for matrix in [topology.d_tx, topology.d_rx, slot.n_tx, slot.f_tx, slot.n_rx, slot.f_rx]:
        digest.update(np.ascontiguousarray(matrix).tobytes())
    for request in requests:
        digest.update(f"{request.id}:{request.tx}:{request.rx}:{request.f_min!r};".encode())
    return digest.hexdigest()[:16]
