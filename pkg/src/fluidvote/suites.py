"""Batch property suites: do-no-harm gains over random composites.

Generates bounded-component star/chain composites, estimates the gain of
viscous-retained and liquid voting over direct voting on each (paired
ballots), and evaluates the harm-scenario witness where plain viscous
voting underperforms. Used by the ``dnh-suite`` CLI command and by the
acceptance tests.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .delegation import TopologySpec, build_composite, upward_delegate
from .elections import CounterexampleSpec, build_counterexample, paired_accuracy
from .errors import ConfigurationError
from .weights import Mechanism

_COMPONENT_SIZES = range(3, 11)


@dataclass(frozen=True)
class GainRow:
    composite: int
    n: int
    mechanism: str
    accuracy: float
    direct: float
    gain: float


@dataclass(frozen=True)
class DnhSuiteResult:
    rows: list[GainRow]
    witness_n: int | None
    witness_gain: float | None

    def min_gain(self, mechanism: str, n: int) -> float:
        return min(r.gain for r in self.rows if r.mechanism == mechanism and r.n == n)


def random_composite_spec(n: int, rng: np.random.Generator) -> TopologySpec:
    """A star/chain mix with component sizes in [3, 10] filling exactly n.

    Competence intervals are drawn per composite so the suite covers both
    regimes: separated star intervals (the center clearly outranks its
    leaves and becomes the guru) and overlapping ones (the center competes
    with its leaves, producing mild influence concentration whose
    finite-size harm has to fade as the network grows).
    """
    if n < 2 * min(_COMPONENT_SIZES):
        raise ConfigurationError("composite too small for bounded components")
    for _ in range(1000):
        n_s = int(rng.integers(_COMPONENT_SIZES.start, _COMPONENT_SIZES.stop))
        n_c = int(rng.integers(_COMPONENT_SIZES.start, _COMPONENT_SIZES.stop))
        candidates = [
            s for s in range(1, n // n_s) if (n - s * n_s) % n_c == 0 and (n - s * n_s) >= n_c
        ]
        if not candidates:
            continue
        s = int(rng.choice(candidates))
        c_comp = (n - s * n_s) // n_c
        base = float(rng.uniform(0.35, 0.60))
        high = min(0.98, base + float(rng.uniform(0.10, 0.30)))
        leaf_high = base + (high - base) * float(rng.uniform(0.5, 1.0))
        if rng.random() < 0.5:
            star_guru = (leaf_high, min(0.99, leaf_high + float(rng.uniform(0.05, 0.15))))
        else:
            star_guru = (base, leaf_high)
        return TopologySpec(
            s=s,
            n_s=n_s,
            c_comp=c_comp,
            n_c=n_c,
            star_guru=star_guru,
            star_leaf=(base, leaf_high),
            chain=(base, high),
        )
    raise ConfigurationError(f"could not partition n={n} into bounded components")


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _composite_gains(index, n, alpha, trials, seed):
    rng = np.random.default_rng([seed, index, n])
    spec = random_composite_spec(n, rng)
    graph, competence = build_composite(spec, rng)
    d = upward_delegate(graph, competence)
    rows = []
    for name, mechanism in (
        ("viscous_retained", Mechanism.viscous_retained(alpha)),
        ("liquid", Mechanism.liquid()),
    ):
        mech, direct = paired_accuracy(d, mechanism, 0.0, trials, seed=_derived_seed(seed, index, n))
        rows.append(
            GainRow(
                composite=index,
                n=n,
                mechanism=name,
                accuracy=mech.p_hat,
                direct=direct.p_hat,
                gain=mech.p_hat - direct.p_hat,
            )
        )
    return rows


def run_dnh_suite(
    composites: int = 50,
    n_values: tuple[int, ...] = (200, 2000),
    alpha: float = 0.5,
    trials: int = 10_000,
    seed: int = 0,
    include_witness: bool = True,
    witness_n: int = 2000,
    threads: int = 1,
) -> DnhSuiteResult:
    """Gains for every composite and size, plus the viscous harm witness."""
    if composites < 1:
        raise ConfigurationError("need at least one composite")
    jobs = [(i, n) for n in n_values for i in range(composites)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(
                pool.map(lambda job: _composite_gains(job[0], job[1], alpha, trials, seed), jobs)
            )
    else:
        chunks = [_composite_gains(i, n, alpha, trials, seed) for i, n in jobs]
    rows = [row for chunk in chunks for row in chunk]

    witness_gain = None
    if include_witness:
        rng = np.random.default_rng([seed, 999])
        d = build_counterexample(CounterexampleSpec(n=witness_n, alpha=alpha), rng)
        mech, direct = paired_accuracy(
            d, Mechanism.viscous(alpha), 0.0, trials, seed=_derived_seed(seed, 999)
        )
        witness_gain = mech.p_hat - direct.p_hat
        rows.append(
            GainRow(
                composite=-1,
                n=witness_n,
                mechanism="viscous_witness",
                accuracy=mech.p_hat,
                direct=direct.p_hat,
                gain=witness_gain,
            )
        )
    return DnhSuiteResult(
        rows=rows,
        witness_n=witness_n if include_witness else None,
        witness_gain=witness_gain,
    )
