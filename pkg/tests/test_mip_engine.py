import numpy as np
import pytest

from conftest import oracle_instance
from core.errors import ModelError
from solvers.brute_force import brute_force
from solvers.milp_model import Constraint, Model, Sense, VarKind, build_cd
from solvers.mip_engine import BnbParams, MipStatus, solve_mip


def knapsack() -> Model:
    model = Model("knapsack")
    values, weights = (10, 13, 7), (3, 4, 2)
    ids = [model.add_var(f"item[{k}]", VarKind.BINARY) for k in range(3)]
    model.add_constr({j: w for j, w in zip(ids, weights)}, Sense.LE, 5, "capacity")
    model.set_objective({j: -v for j, v in zip(ids, values)})
    return model


def test_knapsack_optimum():
    result = solve_mip(knapsack(), BnbParams(gap=1e-9))
    assert result.status == MipStatus.OPTIMAL
    assert result.objective == pytest.approx(-17)
    assert [round(v) for v in result.values] == [1, 0, 1]
    assert result.bound <= result.objective + 1e-9


def test_fixed_binaries_solve_at_root():
    model = Model("fixed")
    a = model.add_var("a", VarKind.BINARY, lb=1.0, ub=1.0)
    b = model.add_var("b", VarKind.BINARY, lb=0.0, ub=0.0)
    model.set_objective({a: 2.0, b: 5.0})
    result = solve_mip(model)
    assert result.nodes == 1
    assert result.objective == pytest.approx(2.0)


def test_infeasible_toy():
    model = Model("infeasible")
    x = model.add_var("x", VarKind.BINARY)
    model.add_constr({x: 1.0}, Sense.GE, 2.0, "impossible")
    result = solve_mip(model)
    assert result.status == MipStatus.INFEASIBLE
    assert not result.has_solution


def test_lazy_separator_at_integer_points():
    model = Model("lazy")
    x0 = model.add_var("x0", VarKind.BINARY)
    x1 = model.add_var("x1", VarKind.BINARY)
    model.set_objective({x0: -1.0, x1: -1.0})
    cut = Constraint("pick_one", {x0: 1.0, x1: 1.0}, Sense.LE, 1.0)
    calls = []

    def separator(values, ctx):
        calls.append(ctx)
        return [cut] if cut.violation(values) > 1e-9 else []

    result = solve_mip(model, BnbParams(gap=1e-9), separator)
    assert result.objective == pytest.approx(-1.0)
    assert result.cuts == 1
    assert calls and calls[0].is_integer and calls[0].is_root
    assert model.max_violation(result.values, result.cut_pool) <= 1e-7


def test_fractional_cut_rounds_only_at_root():
    model = knapsack()
    seen = []

    def separator(values, ctx):
        seen.append(ctx)
        return []

    solve_mip(model, BnbParams(gap=1e-9, root_cut_rounds=3, fractional_cuts=False), separator)
    assert all(ctx.is_root or ctx.is_integer for ctx in seen)


def test_bound_trace_is_monotone(prop2):
    result = solve_mip(build_cd(prop2, 0.5), BnbParams(gap=1e-9))
    trace = result.bound_trace
    assert all(a <= b + 1e-12 for a, b in zip(trace, trace[1:]))
    assert result.max_residual <= 1e-7


def test_deterministic(prop2):
    first = solve_mip(build_cd(prop2, 0.25), BnbParams(gap=1e-9))
    second = solve_mip(build_cd(prop2, 0.25), BnbParams(gap=1e-9))
    assert first.nodes == second.nodes
    assert (first.values == second.values).all()


@pytest.mark.parametrize("lam", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_cd_matches_oracle_on_fixture(prop2, lam):
    result = solve_mip(build_cd(prop2, lam), BnbParams(gap=1e-9))
    oracle = brute_force(prop2, "centdian", lam)
    assert result.objective == pytest.approx(oracle.value, abs=1e-6)


def test_center_optimum_matches_oracle(prop2):
    result = solve_mip(build_cd(prop2, 1.0), BnbParams(gap=1e-9))
    assert result.objective == pytest.approx(brute_force(prop2, "center").value, abs=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
def test_cd_matches_oracle_on_generated(small_instance, lam):
    result = solve_mip(build_cd(small_instance, lam), BnbParams(gap=1e-9))
    assert result.objective == pytest.approx(brute_force(small_instance, "centdian", lam).value, abs=1e-6)


@pytest.mark.parametrize("kwargs", [{"gap": 0}, {"int_tol": -1}, {"node_cut_rounds": 0},
                                    {"node_selection": "depth-first"}])
def test_invalid_params(kwargs):
    with pytest.raises(ModelError):
        BnbParams(**kwargs).validate()


def test_summary_fields(prop2):
    summary = solve_mip(build_cd(prop2, 0.5)).summary()
    assert set(summary) == {"status", "objective", "bound", "gap", "nodes", "cuts", "time"}


def test_start_point_prunes_the_root():
    result = solve_mip(knapsack(), BnbParams(gap=1e-9), start=np.array([1.0, 0.0, 1.0]))
    assert result.objective == pytest.approx(-17)
    assert result.heuristic_incumbents == 1
    assert result.nodes == 1


def test_infeasible_start_is_ignored():
    result = solve_mip(knapsack(), BnbParams(gap=1e-9), start=np.ones(3))
    assert result.heuristic_incumbents == 0
    assert result.objective == pytest.approx(-17)


def test_heuristic_keeps_cut_off_integer_points():
    model = Model("lazy")
    x0 = model.add_var("x0", VarKind.BINARY)
    x1 = model.add_var("x1", VarKind.BINARY)
    model.set_objective({x0: -1.0, x1: -1.0})
    cut = Constraint("pick_one", {x0: 1.0, x1: 1.0}, Sense.LE, 1.0)
    seen = []

    def separator(values, ctx):
        return [cut] if cut.violation(values) > 1e-9 else []

    def heuristic(values, ctx):
        seen.append(ctx)
        return np.array([1.0, 0.0])

    result = solve_mip(model, BnbParams(gap=1e-9), separator, heuristic=heuristic)
    assert seen and seen[0].is_integer and seen[0].is_root
    assert result.heuristic_incumbents == 1
    assert result.objective == pytest.approx(-1.0)
    assert list(result.values) == [1.0, 0.0]


@pytest.mark.slow
@pytest.mark.parametrize("n", [6, 8])
@pytest.mark.parametrize("alpha", [0.25, 0.4])
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_cd_matches_oracle_across_presets(n, alpha, seed):
    instance = oracle_instance(n, alpha, seed)
    for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
        result = solve_mip(build_cd(instance, lam), BnbParams(gap=1e-9))
        assert result.objective == pytest.approx(brute_force(instance, "centdian", lam).value, abs=1e-6)
