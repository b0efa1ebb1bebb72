"""Voter populations, social graphs, and the upward delegation process.

A voter population is a dense index range 0..n-1. Voters sit on an undirected
social graph and may delegate their vote to one neighbor. Under upward
delegation a voter delegates to their most competent strictly-more-competent
neighbor, which makes the resulting directed structure a forest: every
delegation chain ends at a voter with no outgoing delegation (a guru).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, StructuralError

# Sentinel in delegate arrays for voters that keep their own vote.
NO_DELEGATE = -1

# Half-open interval [lo, hi); lo == hi is the degenerate constant lo.
Interval = tuple[float, float]

_MAX_REDRAWS = 200


@dataclass(frozen=True, eq=False)
class CompetenceProfile:
    """Per-voter probability of voting for the correct alternative.

    Values live in [0, 1]. Most of the election machinery additionally
    assumes the values are pairwise distinct so that "more competent" is
    unambiguous; :meth:`require_distinct` checks that on demand.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ConfigurationError("competence profile must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("competence values must be finite")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ConfigurationError("competence values must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def is_pairwise_distinct(self) -> bool:
        if self.values.size < 2:
            return True
        ordered = np.sort(self.values)
        return bool(np.all(ordered[1:] > ordered[:-1]))

    def require_distinct(self):
        if not self.is_pairwise_distinct():
            raise ConfigurationError("competence values must be pairwise distinct")


@dataclass(frozen=True, eq=False)
class SocialGraph:
    """Undirected voter network over which delegation may occur."""

    n: int
    edges: tuple[tuple[int, int], ...]

    @classmethod
    def from_edges(cls, n: int, pairs) -> "SocialGraph":
        """Normalize an iterable of voter pairs into a validated graph."""
        if n < 0:
            raise ConfigurationError("voter count must be non-negative")
        normalized = set()
        for a, b in pairs:
            a, b = int(a), int(b)
            if a == b:
                raise ConfigurationError(f"self-loop on voter {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ConfigurationError(f"edge ({a}, {b}) out of range for n={n}")
            normalized.add((a, b) if a < b else (b, a))
        return cls(n=n, edges=tuple(sorted(normalized)))

    def neighbors(self) -> list[list[int]]:
        """Adjacency lists, neighbor ids ascending."""
        adjacency: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in self.edges:
            adjacency[a].append(b)
            adjacency[b].append(a)
        for row in adjacency:
            row.sort()
        return adjacency


@dataclass(frozen=True)
class TopologySpec:
    """Parameters of a star/chain composite network.

    ``s`` star components of ``n_s`` nodes each and ``c_comp`` chain
    components of ``n_c`` nodes each. Competencies are drawn per role from
    the half-open intervals; a degenerate interval (lo == hi) pins the value.
    """

    s: int
    n_s: int
    c_comp: int
    n_c: int
    star_guru: Interval = (0.55, 0.80)
    star_leaf: Interval = (0.30, 0.55)
    chain: Interval = (0.30, 0.80)

    def __post_init__(self):
        if self.s < 0 or self.c_comp < 0:
            raise ConfigurationError("component counts must be non-negative")
        if self.s > 0 and self.n_s < 1:
            raise ConfigurationError("stars need at least one node (n_s >= 1)")
        if self.c_comp > 0 and self.n_c < 1:
            raise ConfigurationError("chains need at least one node (n_c >= 1)")
        if self.n < 1:
            raise ConfigurationError("composite must contain at least one voter")
        for name in ("star_guru", "star_leaf", "chain"):
            lo, hi = getattr(self, name)
            if not (0.0 <= lo <= hi <= 1.0):
                raise ConfigurationError(f"{name} interval must satisfy 0 <= lo <= hi <= 1")

    @property
    def n(self) -> int:
        return self.s * self.n_s + self.c_comp * self.n_c


@dataclass(frozen=True, eq=False)
class DelegationGraph:
    """A validated delegation forest over a social graph.

    ``delegate_of[i]`` is the voter i delegates to, or ``NO_DELEGATE``.
    Construction enforces that every delegation follows an existing social
    edge toward a strictly higher competence value, which rules out cycles.
    ``competence`` is any real-valued ranking; election routines that draw
    ballots additionally require it to be a valid probability per voter.
    """

    base: SocialGraph
    competence: np.ndarray
    delegate_of: np.ndarray

    def __post_init__(self):
        competence = np.asarray(self.competence, dtype=float)
        delegate = np.asarray(self.delegate_of, dtype=np.int64)
        n = self.base.n
        if competence.shape != (n,) or delegate.shape != (n,):
            raise StructuralError("competence/delegate arrays must have one entry per voter")
        if not np.all(np.isfinite(competence)):
            raise StructuralError("competence ranking must be finite")
        edge_set = set(self.base.edges)
        for i in range(n):
            j = int(delegate[i])
            if j == NO_DELEGATE:
                continue
            if not (0 <= j < n) or j == i:
                raise StructuralError(f"voter {i} delegates to invalid target {j}")
            key = (i, j) if i < j else (j, i)
            if key not in edge_set:
                raise StructuralError(f"delegation {i}->{j} is not a social edge")
            if not competence[j] > competence[i]:
                raise StructuralError(
                    f"delegation {i}->{j} does not increase competence; cycles possible"
                )
        object.__setattr__(self, "competence", competence)
        object.__setattr__(self, "delegate_of", delegate)
        children: list[list[int]] = [[] for _ in range(n)]
        for i in range(n):
            j = int(delegate[i])
            if j != NO_DELEGATE:
                children[j].append(i)  # ascending i: per-node child-index order
        object.__setattr__(self, "_children", children)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def children(self) -> list[list[int]]:
        """Delegators of each voter, in ascending voter-id order."""
        return self._children

    @property
    def gurus(self) -> np.ndarray:
        """Ids of voters with no outgoing delegation."""
        return np.flatnonzero(self.delegate_of == NO_DELEGATE)

    @property
    def guru_mask(self) -> np.ndarray:
        return self.delegate_of == NO_DELEGATE

    def topological_order(self) -> np.ndarray:
        """Voter ids ordered so every delegator precedes their target."""
        # Every delegation strictly increases competence, so ascending
        # competence (stable on ties, which carry no edges) is topological.
        return np.argsort(self.competence, kind="stable")


def _draw(interval: Interval, rng: np.random.Generator, size=None):
    lo, hi = interval
    if hi == lo:
        return np.full(size, lo) if size is not None else lo
    return lo + (hi - lo) * rng.random(size)


def _role_intervals(spec: TopologySpec) -> list[tuple[Interval, int | None]]:
    """Per-voter (interval, chain_component) in composite index order."""
    roles: list[tuple[Interval, int | None]] = []
    for _ in range(spec.s):
        roles.append((spec.star_guru, None))
        roles.extend((spec.star_leaf, None) for _ in range(spec.n_s - 1))
    for comp in range(spec.c_comp):
        roles.extend((spec.chain, comp) for _ in range(spec.n_c))
    return roles


def ensure_distinct(values: np.ndarray, redraw, rng: np.random.Generator):
    """Redraw colliding entries via ``redraw(index, rng)`` until all distinct.

    The first occurrence of each value is kept; later duplicates are
    redrawn. Degenerate role intervals can make this impossible, which is
    reported as a configuration error rather than looping forever.
    """
    for _ in range(_MAX_REDRAWS):
        seen: set[float] = set()
        collisions = 0
        for i in range(values.size):
            v = float(values[i])
            if v in seen:
                values[i] = redraw(i, rng)
                collisions += 1
            else:
                seen.add(v)
        if collisions == 0:
            return values
    raise ConfigurationError(
        "could not draw pairwise-distinct competencies; intervals too narrow"
    )


def build_composite(
    spec: TopologySpec, rng: np.random.Generator
) -> tuple[SocialGraph, CompetenceProfile]:
    """Construct a star/chain composite and its competence profile.

    Stars are laid out center-first; chain competencies are sorted so they
    increase toward the last node of each chain, making that node the guru
    under upward delegation. All competencies are pairwise distinct
    (collisions are redrawn from the same role interval).
    """
    n = spec.n
    edges: list[tuple[int, int]] = []
    idx = 0
    for _ in range(spec.s):
        center = idx
        edges.extend((center, center + k) for k in range(1, spec.n_s))
        idx += spec.n_s
    chain_starts = []
    for _ in range(spec.c_comp):
        chain_starts.append(idx)
        edges.extend((idx + k, idx + k + 1) for k in range(spec.n_c - 1))
        idx += spec.n_c

    roles = _role_intervals(spec)
    values = np.empty(n)
    for i, (interval, _) in enumerate(roles):
        values[i] = _draw(interval, rng)
    for start in chain_starts:
        values[start : start + spec.n_c] = np.sort(values[start : start + spec.n_c])

    def redraw(i, r):
        return _draw(roles[i][0], r)

    ensure_distinct(values, redraw, rng)
    for start in chain_starts:
        values[start : start + spec.n_c] = np.sort(values[start : start + spec.n_c])

    return SocialGraph.from_edges(n, edges), CompetenceProfile(values)


def upward_delegate(graph: SocialGraph, competence) -> DelegationGraph:
    """Derive the delegation forest of the upward delegation process.

    Each voter delegates to the most competent neighbor that is strictly
    more competent than themselves, and becomes a guru if no such neighbor
    exists. Equal-competence neighbors can never be targets; among several
    maximal targets with equal competence the lowest id wins (this can only
    happen for rankings with ties, e.g. round similarities).
    """
    if isinstance(competence, CompetenceProfile):
        ranking = competence.values
    else:
        ranking = np.asarray(competence, dtype=float)
    if ranking.shape != (graph.n,):
        raise ConfigurationError("competence ranking must have one entry per voter")
    adjacency = graph.neighbors()
    delegate = np.full(graph.n, NO_DELEGATE, dtype=np.int64)
    for i in range(graph.n):
        best = NO_DELEGATE
        for j in adjacency[i]:
            if ranking[j] <= ranking[i]:
                continue
            if best == NO_DELEGATE or ranking[j] > ranking[best]:
                best = j
        delegate[i] = best
    return DelegationGraph(base=graph, competence=ranking, delegate_of=delegate)


def longest_delegation_path(d: DelegationGraph) -> int:
    """Maximum hop count from any voter to their guru (0 iff all gurus)."""
    depth = np.full(d.n, -1, dtype=np.int64)
    for start in range(d.n):
        trail = []
        node = start
        while depth[node] < 0 and d.delegate_of[node] != NO_DELEGATE:
            trail.append(node)
            node = int(d.delegate_of[node])
        base = depth[node] if depth[node] >= 0 else 0
        if depth[node] < 0:
            depth[node] = 0
        for hops_back, voter in enumerate(reversed(trail), start=1):
            depth[voter] = base + hops_back
    return int(depth.max()) if d.n else 0
