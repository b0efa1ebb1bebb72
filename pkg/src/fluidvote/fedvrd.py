"""Deterministic simulation of threshold-gated federated aggregation.

Each round the server broadcasts the global model; clients take one
full-batch gradient step on their local least-squares objective, measure
the cosine similarity of their updated model to the broadcast model, and
delegate upward through their social neighborhood using those similarities
as the round's competence ranking. The server turns the resulting
delegation forest into votes (viscous-retained cast weights), picks a
threshold, collects model uploads from clients whose votes exceed it, and
replaces the global model with the vote-weighted average of the uploads.

The whole network is a single-threaded event loop; client training inside
a round may fan out over worker threads because clients share no mutable
state, and the run history is identical for any worker count.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adversary import (
    DEFAULT_AGENT_BOUND,
    CostModel,
    default_tau_grid,
    optimal_tau,
    sweep_tau,
)
from .delegation import SocialGraph, TopologySpec, build_composite, upward_delegate
from .errors import ConfigurationError, NumericalError, UndefinedSimilarityError
from .weights import Mechanism, compute_weights

# Ranking assigned to clients whose similarity is undefined in a round;
# sits below the cosine range so they count as least competent.
UNDEFINED_RANK = -2.0

log = logging.getLogger(__name__)


class MessageKind(enum.Enum):
    BROADCAST = "broadcast"
    SIMILARITY = "similarity"
    DELEGATION = "delegation"
    WEIGHT_REQUEST = "weight_request"
    WEIGHT_UPLOAD = "weight_upload"


PROTOCOL_ORDER = (
    MessageKind.BROADCAST,
    MessageKind.SIMILARITY,
    MessageKind.DELEGATION,
    MessageKind.WEIGHT_REQUEST,
    MessageKind.WEIGHT_UPLOAD,
)


@dataclass(frozen=True)
class RoundMessage:
    """One protocol message; ``client`` is None for server broadcasts."""

    kind: MessageKind
    client: int | None = None
    value: float | int | None = None


@dataclass(eq=False)
class ClientState:
    """A simulated client: local data, neighbors, and per-round state."""

    id: int
    features: np.ndarray
    targets: np.ndarray
    neighbors: tuple[int, ...]
    local_model: np.ndarray | None = None
    similarity: float | None = None


@dataclass(eq=False)
class ServerState:
    round: int
    global_model: np.ndarray
    tau: float
    votes: np.ndarray | None
    cost_ledger: float
    learning_rate_schedule: object  # t -> r_t


@dataclass(eq=False)
class RoundRecord:
    round: int
    global_model: np.ndarray
    tau: float
    electors: tuple[int, ...]
    votes: np.ndarray
    loss: float
    cost_cumulative: float
    degenerate: bool
    uploads: dict[int, np.ndarray] = field(default_factory=dict)
    messages: tuple[RoundMessage, ...] = ()


@dataclass(eq=False)
class RunHistory:
    config: dict
    seed: int
    initial_model: np.ndarray
    initial_loss: float
    rounds: list[RoundRecord]

    def final_loss(self) -> float:
        return self.rounds[-1].loss if self.rounds else self.initial_loss

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "initial_model": [float(v) for v in self.initial_model],
            "initial_loss": float(self.initial_loss),
            "rounds": [
                {
                    "round": r.round,
                    "global_model": [float(v) for v in r.global_model],
                    "tau": float(r.tau),
                    "electors": list(r.electors),
                    "votes": [float(v) for v in r.votes],
                    "loss": float(r.loss),
                    "cost_cumulative": float(r.cost_cumulative),
                    "degenerate": bool(r.degenerate),
                }
                for r in self.rounds
            ],
        }


@dataclass(frozen=True)
class FedVrdConfig:
    """Full description of a simulated run; everything derives from ``seed``."""

    n_clients: int
    topology: TopologySpec | None  # None: no social edges, so nobody delegates
    rounds: int
    d_model: int
    seed: int
    alpha: float = 0.5
    beta: float = 1.0
    tau_policy: str = "optimal"  # "fixed" | "optimal"
    tau: float = 0.0
    cost_c: float = 0.05
    cost_budget: float = 1.0
    cost_adv: float | None = None  # assumed attacker budget; defaults to cost_budget
    samples_per_client: int = 20
    noise_scale: float = 0.1
    heterogeneity: float = 0.5
    lr: float = 0.1
    lr_decay: float = 0.0
    workers: int = 1
    agent_bound: int = DEFAULT_AGENT_BOUND

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigurationError("rounds must be at least 1")
        if self.n_clients < 1:
            raise ConfigurationError("need at least one client")
        if self.d_model < 1:
            raise ConfigurationError("model dimension must be at least 1")
        if self.tau_policy not in ("fixed", "optimal"):
            raise ConfigurationError("tau_policy must be 'fixed' or 'optimal'")
        if self.topology is not None and self.topology.n != self.n_clients:
            raise ConfigurationError("topology size does not match n_clients")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")

    def mechanism(self) -> Mechanism:
        return Mechanism(alpha=self.alpha, beta=self.beta)

    def cost_model(self) -> CostModel:
        c_adv = self.cost_budget if self.cost_adv is None else self.cost_adv
        return CostModel(c=self.cost_c, c_adv=c_adv)


def least_squares_loss(features: np.ndarray, targets: np.ndarray, model: np.ndarray) -> float:
    residual = features @ model - targets
    return float(np.mean(residual**2))


def least_squares_grad(features: np.ndarray, targets: np.ndarray, model: np.ndarray) -> np.ndarray:
    residual = features @ model - targets
    return (2.0 / targets.size) * (features.T @ residual)


def local_train(client: ClientState, global_model: np.ndarray, rate: float) -> np.ndarray:
    """One full-batch gradient step on the client's local objective."""
    if rate <= 0:
        raise ConfigurationError("learning rate must be positive")
    with np.errstate(over="ignore", invalid="ignore"):
        grad = least_squares_grad(client.features, client.targets, global_model)
    if not np.all(np.isfinite(grad)):
        raise NumericalError(f"client {client.id} produced a non-finite gradient")
    return global_model - rate * grad


def cosine_similarity(local: np.ndarray, global_model: np.ndarray) -> float:
    """Inner product over the product of norms, clipped into [-1, 1]."""
    norm_local = float(np.linalg.norm(local))
    norm_global = float(np.linalg.norm(global_model))
    if norm_local == 0.0 or norm_global == 0.0:
        raise UndefinedSimilarityError("cosine similarity of a zero-norm vector")
    value = float(np.dot(local, global_model) / (norm_local * norm_global))
    return min(1.0, max(-1.0, value))


def delegation_round(clients: list[ClientState], social_graph: SocialGraph):
    """Upward delegation on the round's similarities.

    Clients with undefined similarity rank below everyone; similarity ties
    resolve toward the lower client id via the shared delegation rule.
    """
    ranking = np.array(
        [c.similarity if c.similarity is not None else UNDEFINED_RANK for c in clients]
    )
    return upward_delegate(social_graph, ranking)


def _social_graph_from_clients(clients: list[ClientState]) -> SocialGraph:
    edges = []
    for c in clients:
        edges.extend((c.id, j) for j in c.neighbors if c.id < j)
    return SocialGraph.from_edges(len(clients), edges)


def server_round(
    server: ServerState,
    clients: list[ClientState],
    mechanism: Mechanism,
    cost: CostModel,
    cost_budget: float,
    tau_policy: str = "optimal",
    fixed_tau: float = 0.0,
    agent_bound: int = DEFAULT_AGENT_BOUND,
) -> tuple[ServerState, RoundRecord]:
    """Votes, threshold selection, collection, and weighted aggregation.

    Clients must already carry this round's local models and similarities.
    A round in which no vote clears the threshold retains the previous
    global model (degenerate round) instead of failing the run.
    """
    t = server.round + 1
    graph = _social_graph_from_clients(clients)
    delegations = delegation_round(clients, graph)
    votes = compute_weights(delegations, mechanism).cast_weight

    messages = [RoundMessage(MessageKind.BROADCAST)]
    messages.extend(
        RoundMessage(MessageKind.SIMILARITY, client=c.id, value=c.similarity) for c in clients
    )
    messages.extend(
        RoundMessage(
            MessageKind.DELEGATION,
            client=c.id,
            value=int(delegations.delegate_of[c.id]),
        )
        for c in clients
    )

    if tau_policy == "fixed":
        tau = fixed_tau
    else:
        w = compute_weights(delegations, mechanism)
        rows = sweep_tau(delegations, mechanism, cost, default_tau_grid(w), agent_bound)
        tau = optimal_tau(rows, cost_budget)

    electors = tuple(int(i) for i in np.flatnonzero(votes > tau))
    messages.extend(RoundMessage(MessageKind.WEIGHT_REQUEST, client=i) for i in electors)
    messages.extend(RoundMessage(MessageKind.WEIGHT_UPLOAD, client=i) for i in electors)

    uploads = {i: clients[i].local_model for i in electors}
    if electors:
        vote_sum = float(votes[list(electors)].sum())
        stacked = np.stack([uploads[i] for i in electors])
        new_model = (votes[list(electors)][:, None] * stacked).sum(axis=0) / vote_sum
        cost_ledger = server.cost_ledger + cost.c * len(electors)
        degenerate = False
    else:
        log.warning("round %d: no vote above tau=%.6g, keeping previous model", t, tau)
        new_model = server.global_model
        cost_ledger = server.cost_ledger
        degenerate = True

    new_server = ServerState(
        round=t,
        global_model=new_model,
        tau=tau,
        votes=votes,
        cost_ledger=cost_ledger,
        learning_rate_schedule=server.learning_rate_schedule,
    )
    record = RoundRecord(
        round=t,
        global_model=new_model,
        tau=tau,
        electors=electors,
        votes=votes,
        loss=float("nan"),  # filled in by the run loop once global data is known
        cost_cumulative=cost_ledger,
        degenerate=degenerate,
        uploads=uploads,
        messages=tuple(messages),
    )
    return new_server, record


def synth_clients(config: FedVrdConfig, rng: np.random.Generator) -> list[ClientState]:
    """Heterogeneous synthetic least-squares clients.

    Every client regresses against its own perturbation of a shared ground
    truth; ``heterogeneity`` scales the perturbation and ``noise_scale``
    the observation noise.
    """
    base = rng.normal(size=config.d_model)
    if config.topology is not None:
        graph, _ = build_composite(config.topology, rng)
    else:
        graph = SocialGraph.from_edges(config.n_clients, [])
    adjacency = graph.neighbors()
    clients = []
    for i in range(config.n_clients):
        truth = base + config.heterogeneity * rng.normal(size=config.d_model)
        features = rng.normal(size=(config.samples_per_client, config.d_model))
        targets = features @ truth + config.noise_scale * rng.normal(
            size=config.samples_per_client
        )
        clients.append(
            ClientState(
                id=i,
                features=features,
                targets=targets,
                neighbors=tuple(adjacency[i]),
            )
        )
    return clients


def _train_all(clients, model, rate, workers):
    def step(client):
        local = local_train(client, model, rate)
        try:
            similarity = cosine_similarity(local, model)
        except UndefinedSimilarityError:
            similarity = None
        return local, similarity

    if workers == 1:
        results = [step(c) for c in clients]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(step, clients))
    for client, (local, similarity) in zip(clients, results):
        client.local_model = local
        client.similarity = similarity


def run(config: FedVrdConfig) -> RunHistory:
    """Execute the full protocol for ``config.rounds`` rounds.

    Fully deterministic given the seed: data, the initial model, and every
    round's decisions reproduce bit-for-bit, independent of worker count.
    A failing round (non-finite numerics) halts the run with the history
    collected so far preserved in the raised error's ``partial`` attribute.
    """
    data_rng = np.random.default_rng([config.seed, 0])
    init_rng = np.random.default_rng([config.seed, 1])
    clients = synth_clients(config, data_rng)
    all_features = np.concatenate([c.features for c in clients])
    all_targets = np.concatenate([c.targets for c in clients])

    model = init_rng.normal(size=config.d_model)
    schedule = lambda t: config.lr / (1.0 + config.lr_decay * t)  # noqa: E731
    server = ServerState(
        round=0,
        global_model=model,
        tau=config.tau,
        votes=None,
        cost_ledger=0.0,
        learning_rate_schedule=schedule,
    )
    history = RunHistory(
        config=_echo_config(config),
        seed=config.seed,
        initial_model=model,
        initial_loss=least_squares_loss(all_features, all_targets, model),
        rounds=[],
    )
    mechanism = config.mechanism()
    cost = config.cost_model()
    for t in range(1, config.rounds + 1):
        rate = schedule(t - 1)
        try:
            _train_all(clients, server.global_model, rate, config.workers)
            server, record = server_round(
                server,
                clients,
                mechanism,
                cost,
                config.cost_budget,
                tau_policy=config.tau_policy,
                fixed_tau=config.tau,
                agent_bound=config.agent_bound,
            )
        except NumericalError as err:
            err.partial = history  # type: ignore[attr-defined]
            raise
        record.loss = least_squares_loss(all_features, all_targets, server.global_model)
        history.rounds.append(record)
    return history


def _echo_config(config: FedVrdConfig) -> dict:
    echo = {
        "n_clients": config.n_clients,
        "rounds": config.rounds,
        "d_model": config.d_model,
        "seed": config.seed,
        "alpha": config.alpha,
        "beta": config.beta,
        "tau_policy": config.tau_policy,
        "tau": config.tau,
        "cost": {"c": config.cost_c, "budget": config.cost_budget, "c_adv": config.cost_adv},
        "client_data": {
            "samples_per_client": config.samples_per_client,
            "noise_scale": config.noise_scale,
            "heterogeneity": config.heterogeneity,
        },
        "lr": config.lr,
        "lr_decay": config.lr_decay,
        "workers": config.workers,
        "agent_bound": config.agent_bound,
    }
    if config.topology is None:
        echo["topology"] = None
    else:
        echo["topology"] = {
            "s": config.topology.s,
            "n_s": config.topology.n_s,
            "c_comp": config.topology.c_comp,
            "n_c": config.topology.n_c,
            "star_guru": list(config.topology.star_guru),
            "star_leaf": list(config.topology.star_leaf),
            "chain": list(config.topology.chain),
        }
    return echo
