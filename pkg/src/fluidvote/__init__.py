"""Fluid-democracy vote propagation, election simulation, adversarial
threshold trade-offs, and federated aggregation over delegation graphs."""

from .adversary import (
    AdversarySearch,
    AdversaryTopology,
    CostModel,
    SweepRow,
    default_tau_grid,
    honest_cast_weight,
    min_adversaries,
    optimal_tau,
    sweep_tau,
)
from .delegation import (
    NO_DELEGATE,
    CompetenceProfile,
    DelegationGraph,
    SocialGraph,
    TopologySpec,
    build_composite,
    longest_delegation_path,
    upward_delegate,
)
from .elections import (
    AccuracyEstimate,
    BallotDraw,
    CounterexampleSpec,
    build_counterexample,
    direct_accuracy,
    draw_ballots,
    estimate_accuracy,
    gain,
    paired_accuracy,
    tally,
    weighted_mean_competence,
)
from .errors import (
    BudgetInfeasibleError,
    ConfigurationError,
    DegenerateElectionError,
    NumericalError,
    StructuralError,
    UndefinedSimilarityError,
)
from .fedvrd import (
    ClientState,
    FedVrdConfig,
    MessageKind,
    RoundMessage,
    RunHistory,
    ServerState,
    cosine_similarity,
    delegation_round,
    local_train,
    run,
    server_round,
    synth_clients,
)
from .suites import DnhSuiteResult, GainRow, random_composite_spec, run_dnh_suite
from .weights import (
    ElectorSet,
    Mechanism,
    WeightVector,
    compute_weights,
    dnh_margin,
    max_weight,
    select_electors,
    weights_by_path_enumeration,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyEstimate",
    "AdversarySearch",
    "AdversaryTopology",
    "BallotDraw",
    "BudgetInfeasibleError",
    "ClientState",
    "CompetenceProfile",
    "ConfigurationError",
    "CostModel",
    "CounterexampleSpec",
    "DegenerateElectionError",
    "DelegationGraph",
    "DnhSuiteResult",
    "ElectorSet",
    "FedVrdConfig",
    "GainRow",
    "Mechanism",
    "MessageKind",
    "NO_DELEGATE",
    "NumericalError",
    "RoundMessage",
    "RunHistory",
    "ServerState",
    "SocialGraph",
    "StructuralError",
    "SweepRow",
    "TopologySpec",
    "UndefinedSimilarityError",
    "WeightVector",
    "build_composite",
    "build_counterexample",
    "compute_weights",
    "cosine_similarity",
    "default_tau_grid",
    "delegation_round",
    "direct_accuracy",
    "dnh_margin",
    "draw_ballots",
    "estimate_accuracy",
    "gain",
    "honest_cast_weight",
    "local_train",
    "longest_delegation_path",
    "max_weight",
    "min_adversaries",
    "optimal_tau",
    "paired_accuracy",
    "random_composite_spec",
    "run",
    "run_dnh_suite",
    "select_electors",
    "server_round",
    "sweep_tau",
    "synth_clients",
    "tally",
    "upward_delegate",
    "weighted_mean_competence",
    "weights_by_path_enumeration",
]
