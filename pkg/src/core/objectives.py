"""Solution concepts and inequality measures for a built subgraph."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ModelError
from core.graph_core import DIST_TOL, Subgraph, shortest_path
from core.instances import Instance, ODPair

METRIC_COLUMNS = ("lambda", "delta", "l_min", "l_max", "l_mean", "mad", "mad_normalized", "od_pct", "od_pairs_pct")


@dataclass(frozen=True)
class Metrics:
    l_min: float
    l_max: float
    l_mean: float
    mad: float
    mad_normalized: float
    od_share: float
    od_pair_share: float


@dataclass(frozen=True)
class Evaluation:
    instance_key: str
    lengths: Tuple[float, ...]
    distances: Tuple[float, ...]
    served: Tuple[bool, ...]
    f_median: float
    f_center: float
    lam: float
    h_lambda: float
    h_bar: float
    metrics: Metrics

    @property
    def f_gc(self) -> float:
        return self.f_center - self.f_median

    def h(self, lam: float) -> float:
        return lam * self.f_center + (1 - lam) * self.f_median

    def h_max(self, lam: float) -> float:
        return max(lam * self.f_center, (1 - lam) * self.f_median)

    @property
    def objectives(self) -> Tuple[float, float]:
        return (self.f_center, self.f_median)


def effective_length(instance: Instance, subgraph: Subgraph, pair: ODPair) -> float:
    """l_S(w) = min(d_S(w), u^w)."""
    subgraph.validate(instance.network)
    path = shortest_path(instance.network, subgraph.built_edges, pair.origin, pair.dest)
    return min(path.length, pair.utility)


def _mean_absolute_difference(lengths: np.ndarray, demand: np.ndarray) -> float:
    diff = np.abs(lengths[:, None] - lengths[None, :])
    return float(0.5 * demand @ diff @ demand)


def evaluate(instance: Instance, subgraph: Subgraph, lam: float = 0.0) -> Evaluation:
    if lam < 0:
        raise ModelError(f"lambda must be non-negative, got {lam}")
    subgraph.validate(instance.network)
    dist = instance.network.distance_matrix(subgraph.built_edges)

    demand = np.array([p.demand for p in instance.pairs], dtype=float)
    utility = np.array([p.utility for p in instance.pairs], dtype=float)
    d_s = np.array([dist[p.origin, p.dest] for p in instance.pairs], dtype=float)
    lengths = np.minimum(d_s, utility)
    served = d_s <= utility + DIST_TOL

    total = float(demand.sum())
    f_median = float(demand @ lengths / total)
    f_center = float(lengths.max())
    mad = _mean_absolute_difference(lengths, demand)
    metrics = Metrics(
        l_min=float(lengths.min()),
        l_max=f_center,
        l_mean=float(lengths.mean()),
        mad=mad,
        mad_normalized=mad / total ** 2,
        od_share=float(demand[served].sum() / total),
        od_pair_share=float(served.mean()),
    )
    if lam == 0:
        h_lambda = f_median
    elif lam == 1:
        h_lambda = f_center
    else:
        h_lambda = lam * f_center + (1 - lam) * f_median
    return Evaluation(
        instance_key=instance.key,
        lengths=tuple(float(x) for x in lengths),
        distances=tuple(float(x) for x in d_s),
        served=tuple(bool(x) for x in served),
        f_median=f_median,
        f_center=f_center,
        lam=lam,
        h_lambda=h_lambda,
        h_bar=max(lam * f_center, (1 - lam) * f_median),
        metrics=metrics,
    )


def dominates(a: Evaluation, b: Evaluation) -> bool:
    """Bi-criteria dominance in (F_m, F_c), one inequality strict."""
    if a.instance_key != b.instance_key:
        raise ModelError("cannot compare evaluations of different instances")
    weakly = a.f_median <= b.f_median and a.f_center <= b.f_center
    strictly = a.f_median < b.f_median or a.f_center < b.f_center
    return weakly and strictly


def pareto_filter(candidates: Sequence[Tuple[Subgraph, Evaluation]]) -> List[Tuple[Subgraph, Evaluation]]:
    """Non-dominated subset, in input order.

    One sort by (F_m, F_c) plus a sweep; equivalent to pairwise ``dominates``.
    """
    if not candidates:
        return []
    keys = {ev.instance_key for _, ev in candidates}
    if len(keys) > 1:
        raise ModelError("cannot compare evaluations of different instances")

    order = sorted(range(len(candidates)),
                   key=lambda k: (candidates[k][1].f_median, candidates[k][1].f_center))
    dominated = set()
    best_center_before = float("inf")
    start = 0
    while start < len(order):
        median = candidates[order[start]][1].f_median
        end = start
        while end < len(order) and candidates[order[end]][1].f_median == median:
            end += 1
        group = order[start:end]
        group_best = candidates[group[0]][1].f_center
        for k in group:
            center = candidates[k][1].f_center
            if best_center_before <= center or group_best < center:
                dominated.add(k)
        best_center_before = min(best_center_before, group_best)
        start = end
    return [candidates[k] for k in range(len(candidates)) if k not in dominated]


def metrics_row(ev: Evaluation, lam: Optional[float] = None, delta: Optional[float] = None) -> Dict[str, object]:
    """Quality-table row; shares reported in percent, missing delta as '-'."""
    m = ev.metrics
    return {
        "lambda": ev.lam if lam is None else lam,
        "delta": "-" if delta is None else delta,
        "l_min": round(m.l_min, 6),
        "l_max": round(m.l_max, 6),
        "l_mean": round(m.l_mean, 6),
        "mad": round(m.mad, 6),
        "mad_normalized": round(m.mad_normalized, 6),
        "od_pct": round(100 * m.od_share, 6),
        "od_pairs_pct": round(100 * m.od_pair_share, 6),
    }
