"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from fluidvote import DelegationGraph, SocialGraph, upward_delegate


def chain_delegation(values) -> DelegationGraph:
    """A path graph delegated upward on the given competencies."""
    values = np.asarray(values, dtype=float)
    n = values.size
    graph = SocialGraph.from_edges(n, [(k, k + 1) for k in range(n - 1)])
    return upward_delegate(graph, values)


def star_delegation(center_value, leaf_values) -> DelegationGraph:
    """A star with voter 0 at the center."""
    leaf_values = np.asarray(leaf_values, dtype=float)
    n = leaf_values.size + 1
    graph = SocialGraph.from_edges(n, [(0, k) for k in range(1, n)])
    return upward_delegate(graph, np.concatenate([[center_value], leaf_values]))


def all_guru_delegation(values) -> DelegationGraph:
    graph = SocialGraph.from_edges(len(values), [])
    return upward_delegate(graph, np.asarray(values, dtype=float))


def distinct_uniform(rng: np.random.Generator, n: int, lo=0.0, hi=1.0) -> np.ndarray:
    values = rng.uniform(lo, hi, n)
    while np.unique(values).size < n:
        values = rng.uniform(lo, hi, n)
    return values


def random_delegation(rng: np.random.Generator, n: int, edge_factor: float = 1.5) -> DelegationGraph:
    """Random social graph + distinct competencies, delegated upward."""
    n_edges = int(rng.integers(0, max(1, int(edge_factor * n)) + 1))
    pairs = set()
    for _ in range(n_edges):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            pairs.add((min(int(a), int(b)), max(int(a), int(b))))
    graph = SocialGraph.from_edges(n, pairs)
    return upward_delegate(graph, distinct_uniform(rng, n))


def exact_accuracy(weights, competences) -> float:
    """Probability the correct side wins, by full ballot enumeration.

    Independent of the Monte Carlo path: iterates every subset of electors
    voting correctly, multiplying Bernoulli probabilities; exact ties count
    half (the fair-coin rule).
    """
    weights = [float(w) for w in weights]
    competences = [float(q) for q in competences]
    k = len(weights)
    total = sum(weights)
    prob = 0.0
    for bits in range(1 << k):
        p = 1.0
        correct = 0.0
        for i in range(k):
            if bits >> i & 1:
                p *= competences[i]
                correct += weights[i]
            else:
                p *= 1.0 - competences[i]
        wrong = total - correct
        if correct > wrong:
            prob += p
        elif correct == wrong:
            prob += 0.5 * p
    return prob


@pytest.fixture(scope="session")
def canonical_four_chains() -> DelegationGraph:
    """Four disjoint 10-chains, competencies increasing toward each guru."""
    from fluidvote import TopologySpec, build_composite

    graph, competence = build_composite(
        TopologySpec(s=0, n_s=0, c_comp=4, n_c=10), np.random.default_rng(11)
    )
    return upward_delegate(graph, competence)
