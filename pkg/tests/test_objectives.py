from dataclasses import replace

import pytest

from conftest import S_STAR, labels_to_edges
from core.errors import ModelError
from core.graph_core import Subgraph
from core.instances import instance_from_dict, instance_to_dict
from core.objectives import dominates, effective_length, evaluate, metrics_row, pareto_filter
from solvers.brute_force import evaluate_all

F_M_STAR = 10070 / 513
F_M_EMPTY = (181 * 24 + 168 * 34 + 43 * 20 + 121 * 32) / 513


@pytest.fixture
def s_star(prop2):
    return Subgraph.from_edges(prop2.network, labels_to_edges(prop2, S_STAR))


def test_effective_lengths(prop2, s_star):
    assert effective_length(prop2, s_star, prop2.pair_by_labels(1, 2)) == 24
    assert effective_length(prop2, s_star, prop2.pair_by_labels(1, 4)) == 20
    for pair in prop2.pairs:
        assert effective_length(prop2, Subgraph(), pair) == pair.utility


def test_evaluate_design(prop2, s_star):
    ev = evaluate(prop2, s_star, 20)
    assert ev.lengths == (24, 20, 10, 16)
    assert ev.served == (False, True, True, True)
    assert ev.f_center == 24
    assert ev.f_median == pytest.approx(F_M_STAR, abs=1e-12)
    assert ev.h_lambda == pytest.approx(20 * 24 - 19 * F_M_STAR, abs=1e-9)
    assert ev.h_lambda == pytest.approx(107.038, abs=1e-3)
    assert ev.h_bar == pytest.approx(max(20 * 24, -19 * F_M_STAR))
    assert ev.f_gc == pytest.approx(24 - F_M_STAR)


def test_evaluate_empty(prop2):
    ev = evaluate(prop2, Subgraph(), 0.5)
    assert ev.f_center == 34
    assert ev.f_median == pytest.approx(F_M_EMPTY)
    assert ev.metrics.od_share == 0
    assert ev.metrics.od_pair_share == 0


def test_extreme_lambdas_are_exact(prop2, s_star):
    assert evaluate(prop2, s_star, 0).h_lambda == evaluate(prop2, s_star, 0).f_median
    assert evaluate(prop2, s_star, 1).h_lambda == evaluate(prop2, s_star, 1).f_center


def test_negative_lambda_rejected(prop2):
    with pytest.raises(ModelError):
        evaluate(prop2, Subgraph(), -0.1)


def test_metrics(prop2, s_star):
    m = evaluate(prop2, s_star).metrics
    assert m.l_min == 10
    assert m.l_max == 24
    assert m.l_mean == pytest.approx(70 / 4)
    assert m.od_share == pytest.approx((168 + 43 + 121) / 513)
    assert m.od_pair_share == pytest.approx(0.75)
    assert m.mad_normalized == pytest.approx(m.mad / 513 ** 2)


def test_demand_scaling(prop2, s_star):
    doc = instance_to_dict(prop2)
    for raw in doc["pairs"]:
        raw["demand"] *= 3
    scaled = instance_from_dict(doc)
    base, other = evaluate(prop2, s_star), evaluate(scaled, s_star)
    assert other.f_median == pytest.approx(base.f_median)
    assert other.metrics.mad == pytest.approx(9 * base.metrics.mad)
    assert other.metrics.mad_normalized == pytest.approx(base.metrics.mad_normalized)


def test_single_breakpoint_of_h_bar(prop2, s_star):
    ev = evaluate(prop2, s_star)
    breakpoint = ev.f_median / (ev.f_median + ev.f_center)
    assert ev.h_max(breakpoint) == pytest.approx(breakpoint * ev.f_center)
    assert ev.h_max(breakpoint / 2) == pytest.approx((1 - breakpoint / 2) * ev.f_median)


def test_dominance(prop2):
    ev = evaluate(prop2, Subgraph())
    table_lambda0 = replace(ev, f_median=45.037, f_center=100.0)
    table_lambda05 = replace(ev, f_median=47.149, f_center=96.0)
    assert not dominates(table_lambda0, table_lambda05)
    assert not dominates(table_lambda05, table_lambda0)
    assert not dominates(ev, ev)
    assert dominates(replace(ev, f_median=10.0, f_center=10.0), replace(ev, f_median=11.0, f_center=10.0))


def test_mixed_instances_rejected(prop2):
    a = evaluate(prop2, Subgraph())
    b = evaluate(prop2.with_budget(20), Subgraph())
    with pytest.raises(ModelError):
        dominates(a, b)
    with pytest.raises(ModelError):
        pareto_filter([(Subgraph(), a), (Subgraph(), b)])


def test_pareto_filter_matches_pairwise_dominance(prop2):
    candidates = evaluate_all(prop2)
    kept = pareto_filter(candidates)
    kept_ids = {id(ev) for _, ev in kept}
    for _, a in kept:
        assert not any(dominates(b, a) for _, b in kept)
    for _, ev in candidates:
        if id(ev) not in kept_ids:
            assert any(dominates(k, ev) for _, k in kept)


def test_metrics_row(prop2, s_star):
    row = metrics_row(evaluate(prop2, s_star, 0.5))
    assert row["lambda"] == 0.5
    assert row["delta"] == "-"
    assert row["l_max"] == 24
    assert row["od_pairs_pct"] == 75
    assert metrics_row(evaluate(prop2, s_star), delta=0.1)["delta"] == 0.1
