"""Result emission: delimited output with an embedded config header, JSON
run histories, and the matplotlib figures rendered alongside them.

CSV files start with two comment lines (``# config: <json>`` and
``# seed: <int>``) so every output is reproducible from itself; the body
uses '.' decimals, comma separators, and a header row. Floats are written
with ``repr`` so identical runs produce byte-identical bodies.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))  # builtin float: shortest round-trip repr
    if value is None:
        return ""
    return str(value)


def config_header(config: dict, seed: int) -> list[str]:
    return [
        "# config: " + json.dumps(config, sort_keys=True, ensure_ascii=False),
        f"# seed: {seed}",
    ]


def parse_config_header(path: Path) -> tuple[dict, int]:
    """Recover the embedded config and seed from a CSV written here."""
    config, seed = None, None
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.startswith("# config: "):
                config = json.loads(line[len("# config: ") :])
            elif line.startswith("# seed: "):
                seed = int(line[len("# seed: ") :])
            else:
                break
    if config is None or seed is None:
        raise ValueError(f"{path} carries no embedded config header")
    return config, seed


def write_csv(path: Path, fieldnames: list[str], rows: list[dict], config: dict, seed: int):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        for line in config_header(config, seed):
            handle.write(line + "\n")
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format(row[k]) for k in fieldnames})


def csv_body(path: Path) -> str:
    """File content without the comment header; used for determinism checks."""
    lines = Path(path).read_text(encoding="utf-8").splitlines(keepends=True)
    return "".join(line for line in lines if not line.startswith("#"))


def write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, ensure_ascii=False, indent=2)
        handle.write("\n")


def render_election_figure(rows: list[dict], path: Path):
    """Accuracy per mechanism with 95% error bars."""
    labels = [f"{r['mechanism']}\n(tau={r['tau']})" for r in rows]
    p_hats = [r["p_hat"] for r in rows]
    errors = [r["half_width"] for r in rows]
    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(rows), 4.0))
    ax.bar(range(len(rows)), p_hats, yerr=errors, capsize=4, color="#4878d0")
    ax.axhline(0.5, color="gray", linestyle="--", linewidth=1)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("accuracy (correct alternative wins)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep_figure(rows: list[dict], path: Path):
    """The cost/robustness trade-off: adversaries needed and cost versus tau."""
    taus = [r["tau"] for r in rows]
    advs = [r["min_adversaries"] if r["feasible"] else None for r in rows]
    costs = [r["c_total"] for r in rows]
    fig, ax1 = plt.subplots(figsize=(6.4, 4.0))
    known = [(t, a) for t, a in zip(taus, advs) if a is not None]
    if known:
        ax1.step([t for t, _ in known], [a for _, a in known], where="post",
                 color="#d65f5f", label="min adversaries")
    missing = [t for t, a in zip(taus, advs) if a is None]
    if missing:
        ax1.scatter(missing, [1] * len(missing), marker="x", color="#d65f5f",
                    label="attack infeasible")
    ax1.set_xlabel("threshold tau")
    ax1.set_ylabel("adversarial agents needed", color="#d65f5f")
    ax2 = ax1.twinx()
    ax2.step(taus, costs, where="post", color="#4878d0", label="transfer cost")
    ax2.set_ylabel("total transfer cost", color="#4878d0")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_fedvrd_figure(summary_rows: list[dict], path: Path):
    """Global loss and cumulative cost over rounds."""
    rounds = [r["round"] for r in summary_rows]
    losses = [r["loss"] for r in summary_rows]
    costs = [r["cost_cum"] for r in summary_rows]
    fig, ax1 = plt.subplots(figsize=(6.4, 4.0))
    ax1.plot(rounds, losses, color="#4878d0", label="global loss")
    ax1.set_xlabel("round")
    ax1.set_ylabel("global loss", color="#4878d0")
    ax1.set_yscale("log")
    ax2 = ax1.twinx()
    ax2.plot(rounds, costs, color="#d65f5f", linestyle="--", label="cumulative cost")
    ax2.set_ylabel("cumulative transfer cost", color="#d65f5f")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_dnh_figure(rows: list[dict], path: Path):
    """Gains per composite, by mechanism and network size."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    styles = {
        "viscous_retained": ("#4878d0", "o"),
        "liquid": ("#6acc64", "s"),
        "viscous_witness": ("#d65f5f", "*"),
    }
    for mechanism, (color, marker) in styles.items():
        points = [r for r in rows if r["mechanism"] == mechanism]
        if not points:
            continue
        ax.scatter(
            [r["composite"] for r in points],
            [r["gain"] for r in points],
            s=[60 if r["n"] >= 2000 else 20 for r in points],
            color=color,
            marker=marker,
            label=mechanism,
            alpha=0.7,
        )
    ax.axhline(-0.02, color="gray", linestyle="--", linewidth=1, label="-0.02 bound")
    ax.set_xlabel("composite index")
    ax.set_ylabel("gain over direct voting")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
