"""Monte Carlo election accuracy, gain over direct voting, and the
star/chain counterexample network on which viscous delegation harms accuracy.

Accuracy is the probability that the correct alternative wins a weighted
plurality among the electors. Trials are reproducible: ballots for trial
block c (1024 trials per block) are derived from the seed pair
``(master_seed, c)``, so results do not depend on evaluation order or on
how many workers consume the blocks. A mechanism run and its direct-voting
baseline evaluated under the same master seed share identical ballot draws
and tie coins, which makes gain estimates paired (and exactly zero when the
mechanism coincides with direct voting).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .delegation import (
    CompetenceProfile,
    DelegationGraph,
    SocialGraph,
    ensure_distinct,
    upward_delegate,
)
from .errors import ConfigurationError, DegenerateElectionError
from .weights import ElectorSet, Mechanism, WeightVector, compute_weights, select_electors

_TRIAL_BLOCK = 1024
# Spacing used to keep pinned star-center competencies pairwise distinct
# without disturbing the election arithmetic.
_CENTER_SPACING = 1e-9


@dataclass(frozen=True, eq=False)
class BallotDraw:
    """One independent ballot per voter; True prefers the correct alternative."""

    prefers_correct: np.ndarray

    @property
    def n(self) -> int:
        return int(self.prefers_correct.size)


@dataclass(frozen=True)
class AccuracyEstimate:
    """Monte Carlo estimate with a 95% normal-approximation half width."""

    p_hat: float
    trials: int
    half_width: float

    @classmethod
    def from_wins(cls, wins: int, trials: int) -> "AccuracyEstimate":
        p = wins / trials
        return cls(
            p_hat=p, trials=trials, half_width=float(1.96 * np.sqrt(p * (1.0 - p) / trials))
        )


@dataclass(frozen=True)
class CounterexampleSpec:
    """Parameters of the harm scenario: half low-competence stars, half
    high-competence chains.

    ``n`` voters, a multiple of 20: n/20 chains of 10 with competencies in
    (b_chain, c_chain) increasing toward the guru end, and n/20 stars of 10
    with the center pinned at a_star and leaves in (q_low, a_star).
    """

    n: int = 2000
    alpha: float = 0.5
    q_low: float = 0.39
    a_star: float = 0.4
    b_chain: float = 0.65
    c_chain: float = 0.7

    def __post_init__(self):
        if self.n < 20 or self.n % 20 != 0:
            raise ConfigurationError("counterexample size must be a positive multiple of 20")
        if not (0.0 <= self.q_low < self.a_star <= 1.0):
            raise ConfigurationError("star intervals must satisfy 0 <= q_low < a_star <= 1")
        if not (0.0 <= self.b_chain < self.c_chain <= 1.0):
            raise ConfigurationError("chain interval must satisfy 0 <= b_chain < c_chain <= 1")


def draw_ballots(q, rng: np.random.Generator) -> BallotDraw:
    """Draw one ballot per voter, correct with probability q_i."""
    values = _ballot_probabilities(q)
    return BallotDraw(prefers_correct=rng.random(values.size) < values)


def tally(w: WeightVector, electors: ElectorSet, ballots: BallotDraw, rng) -> bool:
    """Weighted plurality among the electors; True if the correct side wins.

    Strictly greater cumulative weight wins; an exact tie is resolved by a
    fair coin from ``rng``.
    """
    if not electors.members:
        raise DegenerateElectionError("no elector exceeds the threshold")
    idx = electors.indices()
    weights = w.cast_weight[idx]
    correct = float(weights[ballots.prefers_correct[idx]].sum())
    wrong = float(weights.sum()) - correct
    if correct > wrong:
        return True
    if correct < wrong:
        return False
    return bool(rng.random() < 0.5)


def _ballot_probabilities(q) -> np.ndarray:
    values = q.values if isinstance(q, CompetenceProfile) else np.asarray(q, dtype=float)
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise ConfigurationError("ballot probabilities must lie in [0, 1]")
    return values


def _win_counts(weight_rows: list[np.ndarray], q: np.ndarray, trials: int, seed: int):
    """Wins per weight row over shared ballots.

    Every row is tallied against the same per-block ballots and tie coins,
    so rows evaluated in one call are exactly paired.
    """
    if trials < 1:
        raise ConfigurationError("trials must be at least 1")
    n = q.size
    totals = [float(row.sum()) for row in weight_rows]
    wins = np.zeros(len(weight_rows), dtype=np.int64)
    done = 0
    block = 0
    while done < trials:
        m = min(_TRIAL_BLOCK, trials - done)
        rng = np.random.default_rng([seed, block])
        ballots = rng.random((m, n)) < q
        coins = rng.random(m) < 0.5
        for k, row in enumerate(weight_rows):
            correct = ballots @ row
            wrong = totals[k] - correct
            won = correct > wrong
            tied = correct == wrong
            wins[k] += int(np.count_nonzero(won | (tied & coins)))
        done += m
        block += 1
    return wins


def _mechanism_row(d: DelegationGraph, m: Mechanism, tau: float) -> np.ndarray:
    w = compute_weights(d, m)
    electors = select_electors(w, tau)
    if not electors.members:
        raise DegenerateElectionError("no elector exceeds the threshold")
    return np.where(electors.mask(d.n), w.cast_weight, 0.0)


def estimate_accuracy(
    d: DelegationGraph, m: Mechanism, tau: float, trials: int, seed: int
) -> AccuracyEstimate:
    """Probability that the correct alternative wins under the mechanism."""
    q = _ballot_probabilities(d.competence)
    row = _mechanism_row(d, m, tau)
    wins = _win_counts([row], q, trials, seed)
    return AccuracyEstimate.from_wins(int(wins[0]), trials)


def direct_accuracy(q, trials: int, seed: int) -> AccuracyEstimate:
    """Accuracy of unweighted majority voting over all voters."""
    values = _ballot_probabilities(q)
    if values.size == 0:
        raise DegenerateElectionError("no voters")
    wins = _win_counts([np.ones(values.size)], values, trials, seed)
    return AccuracyEstimate.from_wins(int(wins[0]), trials)


def gain(d: DelegationGraph, m: Mechanism, tau: float, trials: int, seed: int) -> float:
    """Mechanism accuracy minus direct accuracy on the same graph.

    Both estimates consume identical ballots and tie coins (paired seeds),
    so a mechanism that reduces to direct voting yields exactly 0.
    """
    q = _ballot_probabilities(d.competence)
    rows = [_mechanism_row(d, m, tau), np.ones(d.n)]
    wins = _win_counts(rows, q, trials, seed)
    return float((int(wins[0]) - int(wins[1])) / trials)


def paired_accuracy(
    d: DelegationGraph, m: Mechanism, tau: float, trials: int, seed: int
) -> tuple[AccuracyEstimate, AccuracyEstimate]:
    """(mechanism, direct) accuracies over shared ballots; gain is their difference."""
    q = _ballot_probabilities(d.competence)
    rows = [_mechanism_row(d, m, tau), np.ones(d.n)]
    wins = _win_counts(rows, q, trials, seed)
    return (
        AccuracyEstimate.from_wins(int(wins[0]), trials),
        AccuracyEstimate.from_wins(int(wins[1]), trials),
    )


def weighted_mean_competence(w: WeightVector, electors: ElectorSet, q) -> float:
    """Cast-weight-weighted mean competence of the elector set."""
    if not electors.members:
        raise DegenerateElectionError("no elector exceeds the threshold")
    values = _ballot_probabilities(q)
    idx = electors.indices()
    weights = w.cast_weight[idx]
    return float(np.dot(weights, values[idx]) / weights.sum())


def build_counterexample(spec: CounterexampleSpec, rng: np.random.Generator) -> DelegationGraph:
    """Construct the harm-scenario delegation graph.

    Chains carry the high-competence voters but discount them over many
    hops; stars concentrate 1 + 9*alpha of weight on a low-competence
    center. Star centers are pinned at ``a_star`` with a descending
    nanometer spacing so the profile stays pairwise distinct without
    affecting any election quantity.
    """
    cells = spec.n // 20
    min_center = spec.a_star - (cells - 1) * _CENTER_SPACING
    if min_center <= spec.q_low:
        raise ConfigurationError("too many stars to pin distinct centers at a_star")

    edges: list[tuple[int, int]] = []
    values = np.empty(spec.n)
    idx = 0
    chain_starts = []
    for _ in range(cells):
        edges.extend((idx + k, idx + k + 1) for k in range(9))
        values[idx : idx + 10] = np.sort(rng.uniform(spec.b_chain, spec.c_chain, 10))
        chain_starts.append(idx)
        idx += 10
    for j in range(cells):
        center = idx
        edges.extend((center, center + k) for k in range(1, 10))
        values[center] = spec.a_star - j * _CENTER_SPACING
        # Leaves stay strictly below the lowest pinned center so every
        # center is the guru of its star.
        values[center + 1 : center + 10] = rng.uniform(spec.q_low, min_center, 9)
        idx += 10

    def redraw(i, r):
        for start in chain_starts:
            if start <= i < start + 10:
                return r.uniform(spec.b_chain, spec.c_chain)
        return r.uniform(spec.q_low, min_center)

    ensure_distinct(values, redraw, rng)
    for start in chain_starts:
        values[start : start + 10] = np.sort(values[start : start + 10])

    graph = SocialGraph.from_edges(spec.n, edges)
    return upward_delegate(graph, CompetenceProfile(values))
