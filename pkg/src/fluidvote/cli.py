"""Command-line entry point.

Four subcommands drive the library end to end:

* ``election``  — Monte Carlo accuracy and gain rows for a set of mechanisms.
* ``sweep``     — the threshold/cost/robustness trade-off table.
* ``fedvrd``    — a federated aggregation run (JSON history + CSV summary).
* ``dnh-suite`` — do-no-harm gains over random composites plus the harm witness.

Every command reads a JSON config (``--config`` or a named ``--preset``),
honors ``--seed``/``--trials`` overrides, writes CSV/JSON under ``--out``
with the resolved config embedded in each file, and renders a matplotlib
figure next to the delimited output unless ``--no-figures`` is set.
Validation problems exit with status 2, runtime failures with 1.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from .adversary import CostModel, default_tau_grid, sweep_tau
from .delegation import TopologySpec, build_composite, upward_delegate
from .elections import CounterexampleSpec, build_counterexample, paired_accuracy
from .errors import (
    BudgetInfeasibleError,
    ConfigurationError,
    DegenerateElectionError,
    NumericalError,
)
from .fedvrd import FedVrdConfig, run
from .suites import run_dnh_suite
from .weights import Mechanism, compute_weights
from . import reporting

PRESETS = {
    "counterexample": {
        "command": "election",
        "counterexample": {
            "n": 2000,
            "alpha": 0.5,
            "q_low": 0.39,
            "a_star": 0.4,
            "b_chain": 0.65,
            "c_chain": 0.7,
        },
        "mechanisms": [
            {"kind": "direct"},
            {"kind": "viscous", "alpha": 0.5},
            {"kind": "viscous_retained", "alpha": 0.5},
        ],
        "tau": 0.0,
        "trials": 10_000,
        "seed": 7,
    },
    "four-chains": {
        "command": "sweep",
        "topology": {"s": 0, "n_s": 0, "c_comp": 4, "n_c": 10},
        "alpha": 0.5,
        "cost": {"c": 0.045, "c_adv": 0.2},
        "tau_grid": "default",
        "extra_taus": [1.0],
        "seed": 7,
    },
    "fedvrd-demo": {
        "command": "fedvrd",
        "topology": {"s": 0, "n_s": 0, "c_comp": 4, "n_c": 10},
        "n_clients": 40,
        "alpha": 0.5,
        "beta": 1.0,
        "tau_policy": "optimal",
        "tau": 0.0,
        "cost": {"c": 0.045, "budget": 0.5, "c_adv": 0.2},
        "rounds": 50,
        "d_model": 5,
        "client_data": {"samples_per_client": 20, "noise_scale": 0.1, "heterogeneity": 0.5},
        "lr": 0.1,
        "lr_decay": 0.0,
        "seed": 7,
    },
    "dnh-default": {
        "command": "dnh-suite",
        "composites": 50,
        "n_values": [200, 2000],
        "alpha": 0.5,
        "trials": 10_000,
        "witness": True,
        "witness_n": 2000,
        "seed": 7,
    },
}

_MECHANISM_KINDS = ("direct", "liquid", "viscous", "viscous_retained", "custom")


def _require(config: dict, key: str, context: str):
    if key not in config:
        raise ConfigurationError(f"missing '{key}' key in {context} config")
    return config[key]


def _positive_int(config: dict, key: str, context: str) -> int:
    value = _require(config, key, context)
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigurationError(f"'{key}' must be a positive integer in {context} config")
    return value


def _topology_from(config: dict) -> TopologySpec:
    kwargs = {
        "s": int(_require(config, "s", "topology")),
        "n_s": int(_require(config, "n_s", "topology")),
        "c_comp": int(_require(config, "c_comp", "topology")),
        "n_c": int(_require(config, "n_c", "topology")),
    }
    for name in ("star_guru", "star_leaf", "chain"):
        if name in config:
            lo, hi = config[name]
            kwargs[name] = (float(lo), float(hi))
    return TopologySpec(**kwargs)


def _mechanism_from(entry: dict) -> Mechanism:
    kind = entry.get("kind")
    if kind == "liquid":
        return Mechanism.liquid()
    if kind == "viscous":
        return Mechanism.viscous(float(_require(entry, "alpha", "mechanism")))
    if kind == "viscous_retained":
        return Mechanism.viscous_retained(float(_require(entry, "alpha", "mechanism")))
    if kind == "custom":
        return Mechanism(
            alpha=float(_require(entry, "alpha", "mechanism")),
            beta=float(_require(entry, "beta", "mechanism")),
        )
    raise ConfigurationError(f"mechanism kind must be one of {_MECHANISM_KINDS}, got {kind!r}")


def _build_graph(config: dict, rng: np.random.Generator):
    if "counterexample" in config:
        spec = CounterexampleSpec(**config["counterexample"])
        return build_counterexample(spec, rng)
    if "topology" in config:
        graph, competence = build_composite(_topology_from(config["topology"]), rng)
        return upward_delegate(graph, competence)
    raise ConfigurationError("missing 'topology' key (or 'counterexample') in config")


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _weight_rows(graph, mechanism: Mechanism, tau: float) -> list[dict]:
    w = compute_weights(graph, mechanism)
    elector = w.cast_weight > tau
    return [
        {
            "voter_id": i,
            "flow": float(w.flow[i]),
            "cast_weight": float(w.cast_weight[i]),
            "is_guru": bool(w.is_guru[i]),
            "is_elector": bool(elector[i]),
        }
        for i in range(graph.n)
    ]


def cmd_election(config: dict, out_dir: Path, figures: bool = True) -> list[Path]:
    """Accuracy/gain rows for each configured mechanism on one network.

    Also dumps the per-voter weight vector of every non-direct mechanism
    (columns voter_id, flow, cast_weight, is_guru, is_elector).
    """
    seed = int(_require(config, "seed", "election"))
    trials = _positive_int(config, "trials", "election")
    tau = float(config.get("tau", 0.0))
    mechanisms = _require(config, "mechanisms", "election")
    if not mechanisms:
        raise ConfigurationError("'mechanisms' must not be empty in election config")
    graph = _build_graph(config, np.random.default_rng([seed, 0]))
    accuracy_seed = _derived_seed(seed, 1)

    rows = []
    direct_row = None
    weight_files: list[tuple[str, list[dict]]] = []
    for entry in mechanisms:
        if entry.get("kind") == "direct":
            continue
        mechanism = _mechanism_from(entry)
        mech, direct = paired_accuracy(graph, mechanism, tau, trials, accuracy_seed)
        rows.append(
            {
                "mechanism": entry["kind"],
                "alpha": mechanism.alpha,
                "tau": tau,
                "n": graph.n,
                "p_hat": mech.p_hat,
                "half_width": mech.half_width,
                "gain": mech.p_hat - direct.p_hat,
            }
        )
        direct_row = {
            "mechanism": "direct",
            "alpha": None,
            "tau": None,
            "n": graph.n,
            "p_hat": direct.p_hat,
            "half_width": direct.half_width,
            "gain": 0.0,
        }
        name = entry["kind"]
        if any(existing == name for existing, _ in weight_files):
            name = f"{name}_{len(weight_files)}"
        weight_files.append((name, _weight_rows(graph, mechanism, tau)))
    if any(entry.get("kind") == "direct" for entry in mechanisms):
        if direct_row is None:
            # Direct-only config still needs a baseline estimate.
            _, direct = paired_accuracy(graph, Mechanism.liquid(), 0.0, trials, accuracy_seed)
            direct_row = {
                "mechanism": "direct",
                "alpha": None,
                "tau": None,
                "n": graph.n,
                "p_hat": direct.p_hat,
                "half_width": direct.half_width,
                "gain": 0.0,
            }
        rows.insert(0, direct_row)

    fields = ["mechanism", "alpha", "tau", "n", "p_hat", "half_width", "gain"]
    csv_path = out_dir / "election.csv"
    reporting.write_csv(csv_path, fields, rows, config, seed)
    written = [csv_path]
    weight_fields = ["voter_id", "flow", "cast_weight", "is_guru", "is_elector"]
    for name, voter_rows in weight_files:
        path = out_dir / f"weights_{name}.csv"
        reporting.write_csv(path, weight_fields, voter_rows, config, seed)
        written.append(path)
    if figures:
        fig_path = out_dir / "election.png"
        reporting.render_election_figure(
            [dict(r, tau=r["tau"] if r["tau"] is not None else "-") for r in rows], fig_path
        )
        written.append(fig_path)
    return written


def cmd_sweep(config: dict, out_dir: Path, figures: bool = True) -> list[Path]:
    """Threshold sweep rows on one network."""
    seed = int(_require(config, "seed", "sweep"))
    alpha = float(_require(config, "alpha", "sweep"))
    beta = float(config.get("beta", 1.0))
    cost_cfg = _require(config, "cost", "sweep")
    cost = CostModel(
        c=float(_require(cost_cfg, "c", "sweep cost")),
        c_adv=float(_require(cost_cfg, "c_adv", "sweep cost")),
    )
    graph = _build_graph(config, np.random.default_rng([seed, 0]))
    mechanism = Mechanism(alpha=alpha, beta=beta)

    grid_cfg = config.get("tau_grid", "default")
    if grid_cfg == "default":
        grid = default_tau_grid(compute_weights(graph, mechanism))
    elif isinstance(grid_cfg, list) and grid_cfg:
        grid = [float(v) for v in grid_cfg]
    else:
        raise ConfigurationError("'tau_grid' must be 'default' or a non-empty list")
    grid = sorted(set(grid) | set(float(v) for v in config.get("extra_taus", [])))

    rows = sweep_tau(graph, mechanism, cost, grid, int(config.get("agent_bound", 200)))
    dicts = [
        {
            "tau": r.tau,
            "elector_count": r.elector_count,
            "c_total": r.c_total,
            "honest_weight": r.honest_weight,
            "min_adversaries": r.min_adversaries,
            "feasible": r.feasible,
        }
        for r in rows
    ]
    fields = ["tau", "elector_count", "c_total", "honest_weight", "min_adversaries", "feasible"]
    csv_path = out_dir / "sweep.csv"
    reporting.write_csv(csv_path, fields, dicts, config, seed)
    written = [csv_path]
    if figures:
        fig_path = out_dir / "sweep.png"
        reporting.render_sweep_figure(dicts, fig_path)
        written.append(fig_path)
    return written


def _fedvrd_config_from(config: dict) -> FedVrdConfig:
    cost_cfg = _require(config, "cost", "fedvrd")
    data_cfg = config.get("client_data", {})
    if "topology" not in config:
        raise ConfigurationError("missing 'topology' key in fedvrd config (null for no edges)")
    topology = None if config["topology"] is None else _topology_from(config["topology"])
    n_clients = config.get("n_clients", topology.n if topology is not None else None)
    if n_clients is None:
        raise ConfigurationError("missing 'n_clients' key in fedvrd config")
    return FedVrdConfig(
        n_clients=int(n_clients),
        topology=topology,
        rounds=_positive_int(config, "rounds", "fedvrd"),
        d_model=_positive_int(config, "d_model", "fedvrd"),
        seed=int(_require(config, "seed", "fedvrd")),
        alpha=float(config.get("alpha", 0.5)),
        beta=float(config.get("beta", 1.0)),
        tau_policy=str(config.get("tau_policy", "optimal")),
        tau=float(config.get("tau", 0.0)),
        cost_c=float(_require(cost_cfg, "c", "fedvrd cost")),
        cost_budget=float(_require(cost_cfg, "budget", "fedvrd cost")),
        cost_adv=None if cost_cfg.get("c_adv") is None else float(cost_cfg["c_adv"]),
        samples_per_client=int(data_cfg.get("samples_per_client", 20)),
        noise_scale=float(data_cfg.get("noise_scale", 0.1)),
        heterogeneity=float(data_cfg.get("heterogeneity", 0.5)),
        lr=float(config.get("lr", 0.1)),
        lr_decay=float(config.get("lr_decay", 0.0)),
        workers=int(config.get("workers", 1)),
        agent_bound=int(config.get("agent_bound", 200)),
    )


def cmd_fedvrd(config: dict, out_dir: Path, figures: bool = True) -> list[Path]:
    """One protocol run: JSON history plus a per-round CSV summary."""
    run_config = _fedvrd_config_from(config)
    history = run(run_config)
    json_path = out_dir / "fedvrd.json"
    reporting.write_json(json_path, history.to_json_dict())
    summary = [
        {
            "round": r.round,
            "loss": r.loss,
            "tau": r.tau,
            "electors": len(r.electors),
            "cost_cum": r.cost_cumulative,
        }
        for r in history.rounds
    ]
    fields = ["round", "loss", "tau", "electors", "cost_cum"]
    csv_path = out_dir / "fedvrd.csv"
    reporting.write_csv(csv_path, fields, summary, history.config, run_config.seed)
    written = [json_path, csv_path]
    if figures:
        fig_path = out_dir / "fedvrd.png"
        reporting.render_fedvrd_figure(summary, fig_path)
        written.append(fig_path)
    return written


def cmd_dnh_suite(config: dict, out_dir: Path, figures: bool = True, threads: int = 1) -> list[Path]:
    """Do-no-harm gain rows over random composites."""
    seed = int(_require(config, "seed", "dnh-suite"))
    result = run_dnh_suite(
        composites=_positive_int(config, "composites", "dnh-suite"),
        n_values=tuple(int(v) for v in config.get("n_values", [200, 2000])),
        alpha=float(config.get("alpha", 0.5)),
        trials=_positive_int(config, "trials", "dnh-suite"),
        seed=seed,
        include_witness=bool(config.get("witness", True)),
        witness_n=int(config.get("witness_n", 2000)),
        threads=threads,
    )
    dicts = [
        {
            "composite": r.composite,
            "n": r.n,
            "mechanism": r.mechanism,
            "accuracy": r.accuracy,
            "direct": r.direct,
            "gain": r.gain,
        }
        for r in result.rows
    ]
    fields = ["composite", "n", "mechanism", "accuracy", "direct", "gain"]
    csv_path = out_dir / "dnh.csv"
    reporting.write_csv(csv_path, fields, dicts, config, seed)
    written = [csv_path]
    if figures:
        fig_path = out_dir / "dnh.png"
        reporting.render_dnh_figure(dicts, fig_path)
        written.append(fig_path)
    return written


_COMMANDS = {
    "election": cmd_election,
    "sweep": cmd_sweep,
    "fedvrd": cmd_fedvrd,
    "dnh-suite": cmd_dnh_suite,
}


def _load_config(args, command: str) -> dict:
    if args.preset and args.config:
        raise ConfigurationError("pass either --config or --preset, not both")
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigurationError(
                f"unknown preset {args.preset!r}; available: {sorted(PRESETS)}"
            )
        config = copy.deepcopy(PRESETS[args.preset])
        if config.pop("command") != command:
            raise ConfigurationError(f"preset {args.preset!r} belongs to another command")
    elif args.config:
        with open(args.config, encoding="utf-8") as handle:
            config = json.load(handle)
        config.pop("command", None)
    else:
        raise ConfigurationError("one of --config or --preset is required")
    if args.seed is not None:
        config["seed"] = args.seed
    if args.trials is not None:
        config["trials"] = args.trials
    if "seed" not in config:
        raise ConfigurationError(f"missing 'seed' key in {command} config")
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluidvote",
        description="Fluid-democracy election simulation and federated aggregation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("election", "Monte Carlo accuracy and gain for configured mechanisms"),
        ("sweep", "threshold/cost/robustness trade-off table"),
        ("fedvrd", "federated aggregation run"),
        ("dnh-suite", "do-no-harm gains over random composites"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--config", type=Path, help="JSON config file")
        cmd.add_argument("--preset", help=f"named preset, one of {sorted(PRESETS)}")
        cmd.add_argument("--seed", type=int, help="override the config seed")
        cmd.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        cmd.add_argument("--trials", type=int, help="override Monte Carlo trials")
        cmd.add_argument("--threads", type=int, default=1, help="worker threads for batch rows")
        cmd.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args, args.command)
        if args.command == "dnh-suite":
            written = cmd_dnh_suite(
                config, args.out, figures=not args.no_figures, threads=args.threads
            )
        else:
            written = _COMMANDS[args.command](config, args.out, figures=not args.no_figures)
    except ConfigurationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (DegenerateElectionError, BudgetInfeasibleError, NumericalError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0
