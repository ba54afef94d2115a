"""Maximum and lexicographic cent-dians, and the bisection over lambda that traces PO2."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from core.errors import ModelError, SolverError
from core.instances import Instance
from core.objectives import evaluate
from solvers.milp_model import CAP_SLACK, add_center_cap, build_cd, build_mcd1, build_mcd2
from solvers.mip_engine import BnbParams, solve_mip
from solvers.solution import DesignSolution, solve_design, subgraph_from_values, write_solution
from utils.file_manager import file_manager

FRONTIER_COLUMNS = ("lambda_lo", "lambda_hi", "F_c", "F_m", "design_hash")
VALUE_DIGITS = 9


@dataclass
class ParetoPoint:
    lam_lo: float
    lam_hi: float
    solution: DesignSolution
    f_center: float
    f_median: float
    v_star: Optional[float] = None

    @property
    def value(self) -> Tuple[float, float]:
        return _value_key(self.solution)

    def to_row(self) -> Dict[str, object]:
        return {
            "lambda_lo": round(self.lam_lo, 12),
            "lambda_hi": round(self.lam_hi, 12),
            "F_c": self.f_center,
            "F_m": self.f_median,
            "design_hash": self.solution.design_hash,
        }


def _value_key(solution: DesignSolution) -> Tuple[float, float]:
    ev = solution.evaluation
    return (round(ev.f_center, VALUE_DIGITS), round(ev.f_median, VALUE_DIGITS))


def max_centdian(instance: Instance, lam: float, params: Optional[BnbParams] = None) -> DesignSolution:
    """Stage 1 finds V* = min max{lambda F_c, (1 - lambda) F_m}; stage 2 minimises H_lambda under V*.

    V* is the exact H_bar of the stage-1 design. A stage-2 design that breaks
    the cap on exact evaluation is replaced by the stage-1 design.
    """
    model1 = build_mcd1(instance, lam)
    stage1 = solve_mip(model1, params)
    if not stage1.has_solution:
        raise SolverError(f"max-cent-dian stage 1 ended {stage1.status.value} at lambda={lam:g}")
    first = subgraph_from_values(model1, stage1.values, instance)
    v_star = evaluate(instance, first).h_max(lam)
    cap = v_star + CAP_SLACK * max(1.0, v_star)

    model = build_mcd2(instance, lam, v_star)
    stage2 = solve_mip(model, params)
    subgraph = subgraph_from_values(model, stage2.values, instance) if stage2.has_solution else None
    if subgraph is None or evaluate(instance, subgraph).h_max(lam) > cap:
        logging.warning(f"⚠️ max-cent-dian stage 2 at lambda={lam:g} gave no design within V*={v_star:.9g} "
                        f"({stage2.status.value}); keeping the stage-1 design")
        subgraph, stage2 = first, stage1
    solution = DesignSolution.from_subgraph(
        instance, subgraph, lam, "max_centdian",
        status=stage2.status.value, stats={**stage2.summary(), "v_star": v_star})
    logging.debug(f"max-cent-dian lambda={lam:g}: V*={v_star:.9g} "
                  f"H_bar={solution.evaluation.h_max(lam):.9g}")
    return solution


def lexicographic_centdian(instance: Instance, params: Optional[BnbParams] = None) -> DesignSolution:
    """Center with the best median value."""
    center = solve_mip(build_cd(instance, 1.0), params)
    if not center.has_solution:
        raise SolverError(f"center model ended {center.status.value}")
    f_center = center.objective

    model = build_cd(instance, 0.0)
    add_center_cap(model, instance, f_center + CAP_SLACK * max(1.0, abs(f_center)))
    median = solve_mip(model, params)
    if not median.has_solution:
        raise SolverError(f"median stage under the center cap {f_center:.9g} ended {median.status.value}")
    subgraph = subgraph_from_values(model, median.values, instance)
    return DesignSolution.from_subgraph(
        instance, subgraph, 1.0, "lexicographic", objective=median.objective,
        status=median.status.value, stats={**median.summary(), "center_optimum": f_center})


def generalized_center(instance: Instance, lam_big: float = 500.0, delta: Optional[float] = None,
                       params: Optional[BnbParams] = None) -> DesignSolution:
    """Approximate argmin F_c - F_m through the bilevel model at a large lambda."""
    if lam_big <= 1:
        raise ModelError(f"generalized-center approximation needs lambda > 1, got {lam_big}")
    solution = solve_design(instance, lam_big, "bcd", delta=delta, params=params)
    solution.method = "generalized_center"
    return solution


def parametrize_po2(instance: Instance, lam_tolerance: float = 1e-3,
                    params: Optional[BnbParams] = None) -> List[ParetoPoint]:
    """Bisection on lambda in (0,1) with max-cent-dian solves at the interval ends.

    An interval whose two ends give equal (F_c, F_m) is labelled with that
    design; otherwise it is halved until narrower than ``lam_tolerance``.
    Adjacent intervals with equal values are merged.
    """
    if lam_tolerance <= 0 or lam_tolerance >= 0.5:
        raise ModelError(f"lambda tolerance must lie in (0, 0.5), got {lam_tolerance}")
    cache: Dict[float, DesignSolution] = {}

    def at(lam: float) -> DesignSolution:
        lam = min(max(lam, lam_tolerance), 1 - lam_tolerance)
        if lam not in cache:
            cache[lam] = max_centdian(instance, lam, params)
        return cache[lam]

    def bisect(lo: float, hi: float) -> List[Tuple[float, float, DesignSolution]]:
        left, right = at(lo), at(hi)
        if _value_key(left) == _value_key(right):
            return [(lo, hi, left)]
        if hi - lo < lam_tolerance:
            return [(lo, lo, left), (hi, hi, right)]
        mid = 0.5 * (lo + hi)
        return bisect(lo, mid) + bisect(mid, hi)

    pieces = bisect(lam_tolerance, 1 - lam_tolerance)
    points: List[ParetoPoint] = []
    for lo, hi, solution in pieces:
        if points and points[-1].value == _value_key(solution):
            points[-1].lam_hi = max(points[-1].lam_hi, hi)
            continue
        ev = solution.evaluation
        points.append(ParetoPoint(lo, hi, solution, ev.f_center, ev.f_median, solution.stats.get("v_star")))

    gaps = coverage_gaps(points)
    logging.info(f"✅ PO2 parametrization: {len(points)} distinct designs from {len(cache)} solves"
                 + (f", {len(gaps)} uncovered lambda gaps" if gaps else ""))
    return points


def coverage_gaps(points: List[ParetoPoint]) -> List[Tuple[float, float]]:
    """Lambda ranges between consecutive points that no sampled design covers."""
    return [(a.lam_hi, b.lam_lo) for a, b in zip(points, points[1:]) if a.lam_hi < b.lam_lo]


def write_frontier(points: List[ParetoPoint], path, design_dir=None) -> Path:
    """CSV of the frontier plus, optionally, one solution file per design."""
    if design_dir is not None:
        design_dir = Path(design_dir)
        for point in points:
            write_solution(point.solution, design_dir / f"{point.solution.design_hash}.json")
    return file_manager.write_csv(path, [p.to_row() for p in points], FRONTIER_COLUMNS)
