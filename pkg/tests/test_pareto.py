import json

import pytest

from conftest import oracle_instance
from core.errors import ModelError
from core.objectives import dominates
from solvers import pareto
from solvers.brute_force import brute_force, frontier_values
from solvers.milp_model import build_mcd2
from solvers.mip_engine import BnbParams
from solvers.pareto import (FRONTIER_COLUMNS, coverage_gaps, generalized_center, lexicographic_centdian,
                            max_centdian, parametrize_po2, write_frontier)
from utils.file_manager import file_manager


def on_frontier(instance, ev):
    return any(fc == pytest.approx(ev.f_center, abs=1e-6) and fm == pytest.approx(ev.f_median, abs=1e-6)
               for fc, fm in frontier_values(instance))


@pytest.mark.parametrize("lam", [0.25, 0.5, 0.75])
def test_max_centdian_is_pareto_optimal(prop2, tight, lam):
    solution = max_centdian(prop2, lam, tight)
    oracle = brute_force(prop2, "max_centdian", lam)
    assert solution.stats["v_star"] == pytest.approx(oracle.value, abs=1e-6)
    assert solution.evaluation.h_max(lam) == pytest.approx(oracle.value, abs=1e-6)
    assert solution.evaluation.h(lam) == pytest.approx(min(ev.h(lam) for _, ev in oracle.optima), abs=1e-6)
    v_star = solution.stats["v_star"]
    assert solution.evaluation.h_max(lam) <= v_star + 1e-9 * max(1.0, v_star)
    assert on_frontier(prop2, solution.evaluation)
    assert solution.method == "max_centdian"


def test_max_centdian_rejects_closed_endpoints(prop2):
    with pytest.raises(ModelError):
        max_centdian(prop2, 1.0)


def test_max_centdian_keeps_stage_one_when_stage_two_fails(prop2, tight, monkeypatch):
    monkeypatch.setattr(pareto, "build_mcd2", lambda instance, lam, v_star: build_mcd2(instance, lam, 0.0))
    solution = max_centdian(prop2, 0.5, tight)
    oracle = brute_force(prop2, "max_centdian", 0.5)
    assert solution.stats["v_star"] == pytest.approx(oracle.value, abs=1e-6)
    assert solution.evaluation.h_max(0.5) == pytest.approx(solution.stats["v_star"], abs=1e-9)


def test_lexicographic_centdian(prop2, tight):
    solution = lexicographic_centdian(prop2, tight)
    centers = brute_force(prop2, "center")
    assert solution.evaluation.f_center == pytest.approx(centers.value, abs=1e-6)
    assert solution.evaluation.f_median == pytest.approx(min(ev.f_median for _, ev in centers.optima), abs=1e-6)
    assert solution.stats["center_optimum"] == pytest.approx(centers.value, abs=1e-6)
    assert on_frontier(prop2, solution.evaluation)


def test_generalized_center(prop2, tight):
    with pytest.raises(ModelError):
        generalized_center(prop2, lam_big=1.0)
    solution = generalized_center(prop2, 500, params=tight)
    assert solution.method == "generalized_center"
    oracle = brute_force(prop2, "centdian", 500)
    assert solution.evaluation.h(500) == pytest.approx(oracle.value, abs=1e-5)


def test_parametrization_traces_the_frontier(prop2, tight):
    points = parametrize_po2(prop2, lam_tolerance=0.05, params=tight)
    assert points
    assert points[0].lam_lo == pytest.approx(0.05)
    assert points[-1].lam_hi == pytest.approx(0.95)
    for point in points:
        assert point.lam_lo <= point.lam_hi
        assert on_frontier(prop2, point.solution.evaluation)
    for a, b in zip(points, points[1:]):
        assert a.lam_hi <= b.lam_lo
        assert a.value != b.value
        assert b.f_center <= a.f_center + 1e-9
        assert b.f_median >= a.f_median - 1e-9
    evaluations = [p.solution.evaluation for p in points]
    for a in evaluations:
        assert not any(dominates(b, a) for b in evaluations)
    assert all(lo < hi for lo, hi in coverage_gaps(points))


@pytest.mark.parametrize("tolerance", [0.0, 0.5, -0.1])
def test_parametrization_tolerance_range(prop2, tolerance):
    with pytest.raises(ModelError):
        parametrize_po2(prop2, lam_tolerance=tolerance)


def test_write_frontier(prop2, tight, tmp_path):
    points = parametrize_po2(prop2, lam_tolerance=0.2, params=tight)
    path = write_frontier(points, tmp_path / "frontier.csv", design_dir=tmp_path / "designs")
    rows = file_manager.read_csv(path)
    assert list(rows[0]) == list(FRONTIER_COLUMNS)
    assert len(rows) == len(points)
    for row, point in zip(rows, points):
        assert row["design_hash"] == point.solution.design_hash
        stored = json.loads((tmp_path / "designs" / f"{row['design_hash']}.json").read_text(encoding="utf-8"))
        assert stored["method"] == "max_centdian"
        assert float(row["F_c"]) == pytest.approx(point.f_center)


@pytest.mark.slow
@pytest.mark.parametrize("n", [6, 8])
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_parametrization_stays_on_generated_frontiers(n, seed):
    instance = oracle_instance(n, 0.4, seed)
    points = parametrize_po2(instance, lam_tolerance=1e-3, params=BnbParams(gap=1e-9))
    assert points
    for point in points:
        assert on_frontier(instance, point.solution.evaluation)
    for a, b in zip(points, points[1:]):
        assert b.f_center <= a.f_center + 1e-9
        assert b.f_median >= a.f_median - 1e-9
