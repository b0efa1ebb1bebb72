"""Adversarial topology optimization under transmission budgets.

The attacker arranges agents in a delegation forest of its own. Agents
whose viscous-retained cast weight strictly exceeds the threshold tau are
*cores*: they transmit, occupy one slot of the attacker's voting budget,
and contribute their cast weight to the wrong alternative. Agents at or
below tau are silent helpers that only feed weight upward. The attack
succeeds when the cores' summed weight strictly exceeds the honest
electors' summed weight (worst case: every honest elector votes correctly).

``min_adversaries`` searches for the smallest total number of agents that
succeeds. Because a core's weight depends only on how many of its
descendants sit at each depth, forests are canonicalized by per-depth agent
counts; candidate count profiles are enumerated exhaustively (largest
depth-1 population first, with a branch-and-bound cutoff on the best weight
still reachable), realized as balanced forests, and validated by running
the actual weight propagation over the realized forest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .delegation import NO_DELEGATE, DelegationGraph, SocialGraph
from .errors import BudgetInfeasibleError, ConfigurationError
from .weights import Mechanism, WeightVector, compute_weights, select_electors

STATUS_FOUND = "found"
STATUS_BOUND = "bound_exhausted"
STATUS_INFEASIBLE = "infeasible"

DEFAULT_AGENT_BOUND = 200
_MAX_DEPTH = 16


@dataclass(frozen=True)
class CostModel:
    """Per-transfer cost and the adversary's transmission budget."""

    c: float
    c_adv: float

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigurationError("cost per transfer must be positive")
        if self.c_adv < 0:
            raise ConfigurationError("adversary budget must be non-negative")

    @property
    def n_adv(self) -> int:
        """Number of voting adversarial clients the budget affords."""
        return int(math.floor(self.c_adv / self.c))


@dataclass(frozen=True, eq=False)
class AdversaryTopology:
    """A concrete adversarial delegation forest with its weight profile."""

    delegate_of: np.ndarray
    alpha: float
    tau: float
    cast_weight: np.ndarray
    cores: frozenset[int]

    @property
    def total_agents(self) -> int:
        return int(self.delegate_of.size)

    @property
    def core_weight(self) -> float:
        if not self.cores:
            return 0.0
        idx = np.array(sorted(self.cores), dtype=np.int64)
        return float(self.cast_weight[idx].sum())

    def as_delegation_graph(self) -> DelegationGraph:
        """Rebuild the forest as a delegation graph for re-validation.

        Adversarial agents pick their own competencies, so any ranking that
        strictly increases toward the roots works; depth is used.
        """
        n = self.total_agents
        depth = np.zeros(n, dtype=np.int64)
        for i in range(n):
            node, hops = i, 0
            while self.delegate_of[node] != NO_DELEGATE:
                node = int(self.delegate_of[node])
                hops += 1
            depth[i] = hops
        ranking = -depth.astype(float)
        edges = [
            (i, int(self.delegate_of[i]))
            for i in range(n)
            if self.delegate_of[i] != NO_DELEGATE
        ]
        graph = SocialGraph.from_edges(n, edges)
        return DelegationGraph(base=graph, competence=ranking, delegate_of=self.delegate_of)


@dataclass(frozen=True)
class AdversarySearch:
    """Outcome of a minimum-adversary search."""

    status: str
    topology: AdversaryTopology | None
    agent_bound: int

    @property
    def found(self) -> bool:
        return self.status == STATUS_FOUND

    @property
    def total_agents(self) -> int | None:
        return self.topology.total_agents if self.topology is not None else None


@dataclass(frozen=True)
class SweepRow:
    """One threshold of the cost/robustness trade-off curve."""

    tau: float
    elector_count: int
    c_total: float
    honest_weight: float
    min_adversaries: int | None
    feasible: bool
    status: str


def _build_forest(cores: int, profile: tuple[int, ...]) -> np.ndarray:
    """Balanced forest: roots 0..cores-1, each depth's agents spread
    round-robin over the previous depth."""
    total = cores + sum(profile)
    delegate = np.full(total, NO_DELEGATE, dtype=np.int64)
    previous = list(range(cores))
    next_id = cores
    for count in profile:
        level = list(range(next_id, next_id + count))
        for pos, agent in enumerate(level):
            delegate[agent] = previous[pos % len(previous)]
        previous = level
        next_id += count
    return delegate


def _evaluate(delegate: np.ndarray, alpha: float, tau: float, target_weight: float,
              core_budget: int) -> AdversaryTopology | None:
    """Weight the forest and accept it if the actual cores win within budget."""
    base = SocialGraph.from_edges(
        delegate.size,
        ((i, int(delegate[i])) for i in range(delegate.size) if delegate[i] != NO_DELEGATE),
    )
    depth = np.zeros(delegate.size, dtype=np.int64)
    for i in range(delegate.size):
        node, hops = i, 0
        while delegate[node] != NO_DELEGATE:
            node = int(delegate[node])
            hops += 1
        depth[i] = hops
    graph = DelegationGraph(base=base, competence=-depth.astype(float), delegate_of=delegate)
    w = compute_weights(graph, Mechanism.viscous_retained(alpha))
    cores = frozenset(int(i) for i in np.flatnonzero(w.cast_weight > tau))
    if not cores or len(cores) > core_budget:
        return None
    idx = np.array(sorted(cores), dtype=np.int64)
    if not float(w.cast_weight[idx].sum()) > target_weight:
        return None
    return AdversaryTopology(
        delegate_of=delegate, alpha=alpha, tau=tau, cast_weight=w.cast_weight, cores=cores
    )


def _profiles(helpers: int, alpha: float, base_weight: float, target_weight: float):
    """Yield per-depth helper counts, exhaustively with a reachability cutoff.

    Depth-1-heavy profiles come first: depth d contributes alpha**d per
    agent, so once the optimistic bound (all remaining agents at the next
    depth) cannot beat the target, the branch is dropped.
    """

    def extend(prefix: tuple[int, ...], remaining: int, weight: float, depth: int):
        if remaining == 0:
            yield prefix
            return
        if depth > _MAX_DEPTH:
            return
        gain_per_agent = alpha**depth
        if not weight + gain_per_agent * remaining > target_weight:
            return
        for count in range(remaining, 0, -1):
            yield from extend(
                prefix + (count,), remaining - count, weight + gain_per_agent * count, depth + 1
            )

    if helpers == 0:
        if base_weight > target_weight:
            yield ()
        return
    yield from extend((), helpers, base_weight, 1)


def min_adversaries(
    alpha: float,
    tau: float,
    target_weight: float,
    core_budget: int,
    agent_bound: int = DEFAULT_AGENT_BOUND,
) -> AdversarySearch:
    """Smallest adversarial forest whose cores strictly out-weigh the target.

    Returns a found topology, or ``bound_exhausted`` when nothing within
    ``agent_bound`` agents succeeds, or ``infeasible`` when no topology of
    any size can succeed.
    """
    if core_budget < 1:
        return AdversarySearch(status=STATUS_INFEASIBLE, topology=None, agent_bound=agent_bound)
    if not (0.0 <= alpha <= 1.0):
        raise ConfigurationError("alpha must lie in [0, 1]")
    if tau < 0 or target_weight < 0:
        raise ConfigurationError("tau and target weight must be non-negative")

    retained = 1.0 - alpha
    if retained > tau:
        # No agent can stay at or below tau, so every agent votes and vote
        # conservation caps the attack weight at the number of agents, which
        # in turn is capped by the voting budget.
        needed = int(math.floor(target_weight)) + 1
        if needed > core_budget:
            return AdversarySearch(status=STATUS_INFEASIBLE, topology=None, agent_bound=agent_bound)
        if needed > agent_bound:
            return AdversarySearch(status=STATUS_BOUND, topology=None, agent_bound=agent_bound)
        topo = _evaluate(
            _build_forest(needed, ()), alpha, tau, target_weight, core_budget
        )
        if topo is not None:
            return AdversarySearch(status=STATUS_FOUND, topology=topo, agent_bound=agent_bound)
        return AdversarySearch(status=STATUS_INFEASIBLE, topology=None, agent_bound=agent_bound)

    for total in range(1, agent_bound + 1):
        for cores in range(min(core_budget, total), 0, -1):
            helpers = total - cores
            # A balanced flat forest maximizes both the total core weight and
            # the minimum core weight for this core count; solutions with
            # under-threshold roots are dominated by a smaller core count.
            if not 1.0 + alpha * (helpers // cores) > tau:
                continue
            for profile in _profiles(helpers, alpha, float(cores), target_weight):
                topo = _evaluate(
                    _build_forest(cores, profile), alpha, tau, target_weight, core_budget
                )
                if topo is not None:
                    return AdversarySearch(
                        status=STATUS_FOUND, topology=topo, agent_bound=agent_bound
                    )
    return AdversarySearch(status=STATUS_BOUND, topology=None, agent_bound=agent_bound)


def honest_cast_weight(d: DelegationGraph, m: Mechanism, tau: float) -> float:
    """Summed cast weight of the honest electors above tau."""
    w = compute_weights(d, m)
    electors = select_electors(w, tau)
    if not electors.members:
        return 0.0
    return float(w.cast_weight[electors.indices()].sum())


def default_tau_grid(w: WeightVector) -> list[float]:
    """Distinct cast weights plus midpoints: elector sets only change there."""
    values = sorted(set(float(v) for v in w.cast_weight))
    grid = list(values)
    grid.extend((a + b) / 2.0 for a, b in zip(values, values[1:]))
    return sorted(grid)


def sweep_tau(
    d: DelegationGraph,
    m: Mechanism,
    cost: CostModel,
    tau_grid: list[float],
    agent_bound: int = DEFAULT_AGENT_BOUND,
) -> list[SweepRow]:
    """Evaluate the cost/robustness trade-off at each threshold."""
    if not tau_grid:
        raise ConfigurationError("tau grid must not be empty")
    w = compute_weights(d, m)
    rows = []
    for tau in tau_grid:
        electors = select_electors(w, tau)
        count = len(electors)
        weight = float(w.cast_weight[electors.indices()].sum()) if count else 0.0
        search = min_adversaries(m.alpha, tau, weight, cost.n_adv, agent_bound)
        rows.append(
            SweepRow(
                tau=float(tau),
                elector_count=count,
                c_total=cost.c * count,
                honest_weight=weight,
                min_adversaries=search.total_agents,
                feasible=search.found,
                status=search.status,
            )
        )
    return rows


def _robustness(row: SweepRow) -> float:
    # Rows without a known successful attack are maximally robust.
    return float(row.min_adversaries) if row.feasible else math.inf


def optimal_tau(rows: list[SweepRow], cost_budget: float) -> float:
    """Most robust threshold affordable within the cost budget.

    Among rows with c_total <= cost_budget, picks the one needing the most
    adversaries; ties resolve toward the larger (cheaper) tau.
    """
    affordable = [r for r in rows if r.c_total <= cost_budget]
    if not affordable:
        raise BudgetInfeasibleError(f"no sweep row costs at most {cost_budget}")
    best = max(affordable, key=lambda r: (_robustness(r), r.tau))
    return best.tau
