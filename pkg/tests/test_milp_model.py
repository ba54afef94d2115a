import math

import numpy as np
import pytest

from conftest import S_STAR, labels_to_edges
from core.errors import ModelError
from core.instances import GenParams, generate
from core.objectives import evaluate
from solvers.brute_force import brute_force
from solvers.lp_backend import HighsBackend, LpProblem
from solvers.milp_model import (EfficiencySpec, Sense, VarKind, audit, build_bcd, build_cd, build_mcd1,
                                build_mcd2, expected_counts, sigma_bounds)
from solvers.mip_engine import solve_mip
from solvers.solution import median_optimum, solve_design, subgraph_from_values


def test_cd_counts_on_fixture(prop2):
    model = build_cd(prop2, 0.5)
    vm = model.vmap
    assert len(vm.y) == 4
    assert len(vm.x) == 5
    assert vm.gamma is not None
    assert len(vm.f) + len(vm.f_r) == sum(len(s.arcs) + 1 for s in prop2.subnetworks) == 17
    assert model.n_vars == 27
    assert audit(model, prop2) == {}


def test_bcd_counts_on_fixture(prop2):
    model = build_bcd(prop2, 20)
    assert audit(model, prop2) == {}
    counts = expected_counts(model, prop2)
    assert counts["mccormick"] == 3 * sum(len(s.edges) for s in prop2.subnetworks)


@pytest.mark.parametrize("lam", [-0.5, 1.5])
def test_cd_rejects_lambda_outside_unit_interval(prop2, lam):
    with pytest.raises(ModelError):
        build_cd(prop2, lam)


def test_bcd_rejects_negative_lambda(prop2):
    with pytest.raises(ModelError):
        build_bcd(prop2, -1)


def test_binaries_and_variable_kinds(prop2):
    model = build_cd(prop2, 0.5, relax_flows=True)
    for j in list(model.vmap.x.values()) + list(model.vmap.y.values()):
        var = model.variables[j]
        assert var.kind == VarKind.BINARY and (var.lb, var.ub) == (0, 1)
    assert all(model.variables[j].kind == VarKind.CONTINUOUS for j in model.vmap.f.values())


def test_sigma_bounds(prop2):
    bounds = sigma_bounds(prop2)
    assert bounds[prop2.pair_by_labels(1, 2).id] == 12
    assert bounds[prop2.pair_by_labels(1, 4).id] == 17
    assert bounds[prop2.pair_by_labels(2, 4).id] == 10
    assert bounds[prop2.pair_by_labels(3, 2).id] == 16


def test_sigma_bounds_need_servable_pairs(prop2):
    pair = prop2.pair_by_labels(1, 2)
    short = type(pair)(pair.id, pair.origin, pair.dest, pair.demand, 5.0)
    with pytest.raises(ModelError, match="cannot be served"):
        sigma_bounds(prop2, [short])


def test_bcd_fixture_design(prop2, tight):
    model = build_bcd(prop2, 20)
    result = solve_mip(model, tight)
    subgraph = subgraph_from_values(model, result.values, prop2)
    assert subgraph.built_edges == labels_to_edges(prop2, S_STAR)
    assert subgraph.built_nodes == frozenset(range(4))
    assert result.objective == pytest.approx(20 * 24 - 19 * 10070 / 513, abs=1e-6)


def test_bcd_duals_respect_sigma_bound(prop2, tight):
    model = build_bcd(prop2, 20)
    result = solve_mip(model, tight)
    bounds = model.vmap.sigma_bound
    for (w, _), j in model.vmap.sigma.items():
        assert result.values[j] <= bounds[w] * (1 + 1e-6) + 1e-9

    # pair (1,2) goes private on S*, so nu_1 = 24 and arc (1,2) needs sigma = 24 - 12
    w = prop2.pair_by_labels(1, 2).id
    e = prop2.network.edge_by_labels(1, 2)
    assert result.values[model.vmap.sigma[(w, e)]] == pytest.approx(bounds[w], abs=1e-6)
    assert bounds[w] == 12


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
def test_bcd_matches_cd_on_unit_interval(prop2, tight, lam):
    cd = solve_mip(build_cd(prop2, lam), tight)
    bcd = solve_mip(build_bcd(prop2, lam), tight)
    assert bcd.objective == pytest.approx(cd.objective, abs=1e-6)


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
def test_relaxed_flows_keep_the_optimum(prop2, tight, lam):
    exact = solve_mip(build_cd(prop2, lam), tight)
    relaxed = solve_mip(build_cd(prop2, lam, relax_flows=True), tight)
    assert relaxed.objective == pytest.approx(exact.objective, abs=1e-6)
    oracle = brute_force(prop2, "centdian", lam)
    model = build_cd(prop2, lam, relax_flows=True)
    design = subgraph_from_values(model, solve_mip(model, tight).values, prop2)
    assert design.built_edges in oracle.designs


def test_lp_relaxation_is_a_lower_bound(prop2, tight):
    model = build_cd(prop2, 0.5)
    a_ub, b_ub, a_eq, b_eq = model.to_matrices()
    lp = HighsBackend().solve(LpProblem(model.objective_vector, a_ub, b_ub, a_eq, b_eq,
                                        model.lower_bounds, model.upper_bounds))
    assert lp.ok
    assert lp.objective + model.obj_constant <= solve_mip(model, tight).objective + 1e-9


def test_efficiency_spec_validation():
    with pytest.raises(ModelError):
        EfficiencySpec(-0.1, 10.0).validate()
    assert EfficiencySpec(0.0, 10.0).cap == pytest.approx(10.0, abs=1e-6)


@pytest.mark.parametrize("lam, method", [(1.0, "cd"), (500.0, "bcd")])
def test_zero_delta_returns_a_median_network(prop2, tight, lam, method):
    best = median_optimum(prop2, tight)
    solution = solve_design(prop2, lam, method, delta=0.0, params=tight)
    assert solution.evaluation.f_median == pytest.approx(best, abs=1e-6)


def test_zero_delta_is_inverse_lexicographic(prop2, tight):
    solution = solve_design(prop2, 1.0, "cd", delta=0.0, params=tight)
    medians = brute_force(prop2, "median")
    assert solution.evaluation.f_center == pytest.approx(min(ev.f_center for _, ev in medians.optima))


def test_delta_trades_median_for_center(prop2, tight):
    deltas = (0.0, 0.05, 0.2, 1.0)
    solutions = [solve_design(prop2, 1.0, "cd", delta=d, params=tight) for d in deltas]
    best = solutions[0].evaluation.f_median
    for delta, solution in zip(deltas, solutions):
        assert best - 1e-9 <= solution.evaluation.f_median <= (1 + delta) * best + 1e-6
    centers = [s.objective for s in solutions]
    assert all(b <= a + 1e-9 for a, b in zip(centers, centers[1:]))


def test_efficiency_row_present(prop2):
    model = build_cd(prop2, 0.5, EfficiencySpec(0.1, 20.0))
    rows = model.vmap.rows["efficiency"]
    assert len(rows) == 1
    assert model.constraints[rows[0]].sense == Sense.LE
    assert audit(model, prop2) == {}


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_mcd_rejects_closed_endpoints(prop2, lam):
    with pytest.raises(ModelError):
        build_mcd1(prop2, lam)
    with pytest.raises(ModelError):
        build_mcd2(prop2, lam, 10.0)


def test_mcd1_value_is_h_bar(prop2, tight):
    model = build_mcd1(prop2, 0.5)
    result = solve_mip(model, tight)
    design = subgraph_from_values(model, result.values, prop2)
    oracle = brute_force(prop2, "max_centdian", 0.5)
    assert result.objective == pytest.approx(oracle.value, abs=1e-6)
    assert evaluate(prop2, design).h_max(0.5) == pytest.approx(oracle.value, abs=1e-6)


def test_mcd2_without_cap_is_cd(prop2, tight):
    plain = solve_mip(build_cd(prop2, 0.5), tight)
    uncapped = solve_mip(build_mcd2(prop2, 0.5, math.inf), tight)
    assert uncapped.objective == pytest.approx(plain.objective, abs=1e-6)


def test_mps_export(prop2, tmp_path):
    model = build_cd(prop2, 0.5)
    text = model.to_mps()
    assert text.startswith("NAME CD_lambda0.5")
    assert "'INTORG'" in text and text.rstrip().endswith("ENDATA")
    assert text.count(" BV BND ") == sum(1 for v in model.variables if v.is_integer)
    path = model.write_mps(tmp_path / "cd.mps")
    assert path.read_text(encoding="utf-8") == text
    assert np.isfinite(model.objective_vector).all()


@pytest.mark.parametrize("lam", [1.5, 5.0, 500.0])
def test_bcd_matches_shortest_path_oracle(prop2, tight, lam):
    result = solve_mip(build_bcd(prop2, lam), tight)
    assert result.objective == pytest.approx(brute_force(prop2, "centdian", lam).value, abs=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("lam", [1.5, 5.0])
def test_bcd_matches_oracle_on_generated(small_instance, tight, lam):
    result = solve_mip(build_bcd(small_instance, lam), tight)
    assert result.objective == pytest.approx(brute_force(small_instance, "centdian", lam).value, abs=1e-6)


def _median_rises_with_delta(instance, lam, params):
    deltas = (0.0, 0.02, 0.1, 0.5)
    solutions = [solve_design(instance, lam, "cd", delta=d, params=params) for d in deltas]
    for a, b in zip(solutions, solutions[1:]):
        # a lower median under a looser cap is only possible on an objective tie
        if b.evaluation.f_median < a.evaluation.f_median - 1e-6:
            assert b.objective == pytest.approx(a.objective, abs=1e-6)
        assert b.objective <= a.objective + 1e-6


def test_median_rises_with_delta_on_fixture(prop2, tight):
    _median_rises_with_delta(prop2, 0.5, tight)


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3])
@pytest.mark.parametrize("lam", [0.5, 1.0])
def test_median_rises_with_delta_on_generated(seed, lam, tight):
    _median_rises_with_delta(generate(GenParams(6, alpha=0.4, seed=seed)), lam, tight)
