"""Cost arithmetic, minimum-adversary search, the tau sweep, and optimal tau."""

import math

import numpy as np
import pytest

from fluidvote import (
    BudgetInfeasibleError,
    ConfigurationError,
    CostModel,
    Mechanism,
    SweepRow,
    compute_weights,
    default_tau_grid,
    honest_cast_weight,
    min_adversaries,
    optimal_tau,
    sweep_tau,
)


class TestCostModel:
    def test_budget_arithmetic(self):
        assert CostModel(c=0.045, c_adv=0.2).n_adv == 4
        assert CostModel(c=0.05, c_adv=0.049).n_adv == 0
        assert CostModel(c=2.0, c_adv=10.0).n_adv == 5

    def test_rejects_bad_costs(self):
        with pytest.raises(ConfigurationError):
            CostModel(c=0.0, c_adv=1.0)
        with pytest.raises(ConfigurationError):
            CostModel(c=1.0, c_adv=-1.0)


class TestMinAdversaries:
    def test_twelve_agent_anchor(self):
        search = min_adversaries(alpha=0.5, tau=1.0, target_weight=7.9921875, core_budget=4)
        assert search.found
        topo = search.topology
        assert topo.total_agents == 12
        assert len(topo.cores) == 4
        core_weights = topo.cast_weight[sorted(topo.cores)]
        assert np.all(core_weights == 2.0)
        assert topo.core_weight == pytest.approx(8.0)

    def test_single_core_suffices_for_zero_target(self):
        search = min_adversaries(alpha=0.5, tau=0.0, target_weight=0.0, core_budget=4)
        assert search.found
        assert search.topology.total_agents == 1
        assert search.topology.cast_weight[0] == 1.0

    def test_retention_floor_forces_core_only(self):
        # tau below the retained fraction: no silent helper can exist
        search = min_adversaries(alpha=0.5, tau=0.4, target_weight=3.5, core_budget=4)
        assert search.found
        topo = search.topology
        assert topo.total_agents == len(topo.cores) == 4

    def test_retention_floor_infeasible_beyond_budget(self):
        search = min_adversaries(alpha=0.5, tau=0.4, target_weight=10.0, core_budget=4)
        assert search.status == "infeasible"
        assert not search.found

    def test_core_above_tau_needs_helpers(self):
        # a bare core's weight 1 does not clear tau=1; two helpers do
        search = min_adversaries(alpha=0.5, tau=1.0, target_weight=0.0, core_budget=4)
        assert search.found
        assert search.topology.total_agents == 2

    def test_bound_exhausted_reported(self):
        search = min_adversaries(
            alpha=0.5, tau=1.0, target_weight=50.0, core_budget=4, agent_bound=20
        )
        assert search.status == "bound_exhausted"
        assert search.topology is None

    def test_zero_core_budget_infeasible(self):
        search = min_adversaries(alpha=0.5, tau=1.0, target_weight=1.0, core_budget=0)
        assert search.status == "infeasible"

    def test_returned_topology_revalidates(self):
        search = min_adversaries(alpha=0.5, tau=1.0, target_weight=7.9921875, core_budget=4)
        topo = search.topology
        regraph = topo.as_delegation_graph()
        w = compute_weights(regraph, Mechanism.viscous_retained(topo.alpha))
        assert np.array_equal(w.cast_weight, topo.cast_weight)
        recomputed_cores = frozenset(int(i) for i in np.flatnonzero(w.cast_weight > topo.tau))
        assert recomputed_cores == topo.cores
        non_core = ~np.isin(np.arange(topo.total_agents), sorted(topo.cores))
        assert np.all(w.cast_weight[non_core] <= topo.tau)

    def test_liquid_adversary(self):
        # alpha=1: helpers pass their whole vote and cast nothing
        search = min_adversaries(alpha=1.0, tau=1.5, target_weight=5.0, core_budget=2)
        assert search.found
        topo = search.topology
        assert topo.core_weight > 5.0
        assert len(topo.cores) <= 2


class TestSweep:
    def test_anchor_row(self, canonical_four_chains):
        cost = CostModel(c=0.045, c_adv=0.2)
        mechanism = Mechanism.viscous_retained(0.5)
        rows = sweep_tau(canonical_four_chains, mechanism, cost, [1.0])
        row = rows[0]
        assert row.elector_count == 4
        assert 7.98 < row.honest_weight < 8.0
        assert row.min_adversaries == 12
        assert row.feasible
        assert row.c_total == pytest.approx(4 * 0.045)

    def test_empty_grid_rejected(self, canonical_four_chains):
        with pytest.raises(ConfigurationError):
            sweep_tau(
                canonical_four_chains,
                Mechanism.viscous_retained(0.5),
                CostModel(c=0.045, c_adv=0.2),
                [],
            )

    def test_tau_above_max_weight(self, canonical_four_chains):
        rows = sweep_tau(
            canonical_four_chains,
            Mechanism.viscous_retained(0.5),
            CostModel(c=0.045, c_adv=0.2),
            [5.0],
        )
        assert rows[0].elector_count == 0
        assert rows[0].c_total == 0.0
        assert rows[0].honest_weight == 0.0

    def test_default_grid_monotonicity(self, canonical_four_chains):
        mechanism = Mechanism.viscous_retained(0.5)
        w = compute_weights(canonical_four_chains, mechanism)
        grid = default_tau_grid(w)
        rows = sweep_tau(
            canonical_four_chains, mechanism, CostModel(c=0.045, c_adv=0.2), grid
        )
        robustness = [r.min_adversaries if r.feasible else math.inf for r in rows]
        assert all(a >= b for a, b in zip(robustness, robustness[1:]))
        counts = [r.elector_count for r in rows]
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        costs = [r.c_total for r in rows]
        assert all(a >= b for a, b in zip(costs, costs[1:]))

    def test_conservation_at_tau_zero(self, canonical_four_chains):
        w = honest_cast_weight(
            canonical_four_chains, Mechanism.viscous_retained(0.5), 0.0
        )
        assert w == 40.0

    def test_weight_zero_above_max(self, canonical_four_chains):
        assert honest_cast_weight(canonical_four_chains, Mechanism.viscous_retained(0.5), 9.0) == 0.0


class TestDefaultGrid:
    def test_values_and_midpoints(self):
        from fluidvote import WeightVector

        w = WeightVector(
            flow=np.array([1.0, 2.0]),
            cast_weight=np.array([1.0, 2.0]),
            is_guru=np.array([True, True]),
        )
        assert default_tau_grid(w) == [1.0, 1.5, 2.0]


def _row(tau, c_total, adversaries, feasible=True):
    return SweepRow(
        tau=tau,
        elector_count=0,
        c_total=c_total,
        honest_weight=0.0,
        min_adversaries=adversaries,
        feasible=feasible,
        status="found" if feasible else "infeasible",
    )


class TestOptimalTau:
    def test_only_affordable_row(self):
        rows = [_row(1.0, 0.2, 12), _row(0.4, 2.0, 41)]
        assert optimal_tau(rows, 0.5) == 1.0

    def test_unconstrained_argmax(self):
        rows = [_row(1.0, 0.2, 12), _row(0.4, 2.0, 41)]
        assert optimal_tau(rows, 10.0) == 0.4

    def test_tie_prefers_larger_tau(self):
        rows = [_row(0.4, 0.3, 12), _row(1.0, 0.2, 12)]
        assert optimal_tau(rows, 1.0) == 1.0

    def test_infeasible_attack_outranks_any_count(self):
        rows = [_row(0.4, 0.3, None, feasible=False), _row(1.0, 0.2, 99)]
        assert optimal_tau(rows, 1.0) == 0.4

    def test_no_affordable_row(self):
        rows = [_row(1.0, 5.0, 12)]
        with pytest.raises(BudgetInfeasibleError):
            optimal_tau(rows, 0.5)
