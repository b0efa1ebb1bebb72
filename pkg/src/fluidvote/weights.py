"""Vote propagation under the unified (alpha, beta) delegation mechanism.

A single propagation routine covers the three named mechanisms:

* liquid:            alpha = 1 (beta irrelevant) — the full vote travels.
* viscous:           beta = 0 — each hop multiplies the passed vote by
                     alpha and delegators cast nothing.
* viscous-retained:  beta = 1 — each hop passes alpha and the delegator
                     keeps (1 - alpha) to cast themselves.

The flow into voter i is the path-discounted vote mass arriving there,
including the voter's own unit vote (the empty path):

    flow_i = 1 + alpha * sum(flow_j for j delegating to i)

Gurus cast their full flow; everyone else casts beta * (1 - alpha) * flow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .delegation import NO_DELEGATE, CompetenceProfile, DelegationGraph
from .errors import ConfigurationError


@dataclass(frozen=True)
class Mechanism:
    """Delegated fraction ``alpha`` and retained-fraction multiplier ``beta``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigurationError("alpha must lie in [0, 1]")
        if not (0.0 <= self.beta <= 1.0):
            raise ConfigurationError("beta must lie in [0, 1]")

    @classmethod
    def liquid(cls) -> "Mechanism":
        return cls(alpha=1.0, beta=0.0)

    @classmethod
    def viscous(cls, alpha: float) -> "Mechanism":
        return cls(alpha=alpha, beta=0.0)

    @classmethod
    def viscous_retained(cls, alpha: float) -> "Mechanism":
        return cls(alpha=alpha, beta=1.0)


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Per-voter flow and cast weight after propagation."""

    flow: np.ndarray
    cast_weight: np.ndarray
    is_guru: np.ndarray

    @property
    def n(self) -> int:
        return int(self.cast_weight.size)


@dataclass(frozen=True)
class ElectorSet:
    """Voters whose cast weight strictly exceeds the threshold tau."""

    tau: float
    members: frozenset[int]

    def indices(self) -> np.ndarray:
        return np.array(sorted(self.members), dtype=np.int64)

    def mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        if self.members:
            mask[self.indices()] = True
        return mask

    def __len__(self) -> int:
        return len(self.members)


def compute_weights(d: DelegationGraph, m: Mechanism) -> WeightVector:
    """Propagate votes in one pass over a topological order.

    The flow recursion sums each voter's delegators in ascending voter-id
    order, so repeated runs produce bit-identical results. Cyclic structures
    cannot reach this function: `DelegationGraph` rejects them at
    construction with a structural error.
    """
    n = d.n
    flow = np.ones(n)
    children = d.children
    for i in d.topological_order():
        kids = children[i]
        if kids:
            acc = 0.0
            for c in kids:
                acc += flow[c]
            flow[i] = 1.0 + m.alpha * acc
    guru = d.guru_mask
    cast = np.where(guru, flow, m.beta * (1.0 - m.alpha) * flow)
    return WeightVector(flow=flow, cast_weight=cast, is_guru=guru)


def weights_by_path_enumeration(d: DelegationGraph, m: Mechanism) -> WeightVector:
    """Independent oracle for :func:`compute_weights`.

    Walks every delegation path explicitly: for each voter the chain toward
    their guru is followed hop by hop, contributing alpha**hops to each
    voter passed (hop 0 is the voter's own vote). Intended for tests.
    """
    n = d.n
    flow = np.zeros(n)
    for start in range(n):
        node = start
        hops = 0
        while node != NO_DELEGATE:
            flow[node] += m.alpha**hops
            node = int(d.delegate_of[node])
            hops += 1
    guru = d.guru_mask
    cast = np.where(guru, flow, m.beta * (1.0 - m.alpha) * flow)
    return WeightVector(flow=flow, cast_weight=cast, is_guru=guru)


def select_electors(w: WeightVector, tau: float) -> ElectorSet:
    """Voters with cast weight strictly greater than tau."""
    if tau < 0:
        raise ConfigurationError("tau must be non-negative")
    members = frozenset(int(i) for i in np.flatnonzero(w.cast_weight > tau))
    return ElectorSet(tau=float(tau), members=members)


def max_weight(w: WeightVector) -> float:
    """Largest cast weight; the influence-accumulation diagnostic."""
    return float(w.cast_weight.max()) if w.n else 0.0


def dnh_margin(w: WeightVector, q) -> float:
    """Competence-weighted margin over direct voting.

    Returns sum(cast_weight_i * q_i) - sum(q_i). A margin that stays
    positive and grows linearly with n is the sufficient-condition
    diagnostic for the do-no-harm property.
    """
    values = q.values if isinstance(q, CompetenceProfile) else np.asarray(q, dtype=float)
    if values.shape != w.cast_weight.shape:
        raise ConfigurationError("competence profile does not match weight vector")
    return float(np.dot(w.cast_weight, values) - values.sum())
