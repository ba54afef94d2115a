"""Exhaustive oracle over edge subsets for tiny instances."""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from config.settings import Config
from core.errors import ModelError, OracleTooLargeError
from core.graph_core import DIST_TOL, Subgraph
from core.instances import Instance
from core.objectives import Evaluation, evaluate, pareto_filter

TIE_TOL = 1e-9

OBJECTIVES = (
    "median",
    "center",
    "centdian",
    "max_centdian",
    "generalized_center",
    "restricted_generalized_center",
    "restricted_centdian",
)


@dataclass
class OracleResult:
    objective: str
    lam: float
    value: float
    optima: List[Tuple[Subgraph, Evaluation]]
    n_feasible: int

    @property
    def designs(self) -> List[frozenset]:
        return [s.built_edges for s, _ in self.optima]

    def contains_edges(self, edge_ids) -> bool:
        return frozenset(edge_ids) in self.designs


def _subset_matrix(n_edges: int) -> np.ndarray:
    masks = np.arange(2 ** n_edges, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n_edges)) & 1).astype(bool)


def enumerate_feasible(instance: Instance, max_edges: Optional[int] = None) -> List[Subgraph]:
    """Budget-feasible edge subsets with exactly their endpoints built."""
    net = instance.network
    limit = Config.BRUTE_FORCE_MAX_EDGES if max_edges is None else max_edges
    if net.n_edges > limit:
        raise OracleTooLargeError(
            f"brute force refuses |E|={net.n_edges} > {limit} (2^|E| subsets)")

    chosen = _subset_matrix(net.n_edges)
    incidence = np.zeros((net.n_edges, net.n_nodes), dtype=bool)
    for e in net.edges:
        incidence[e.id, e.u] = incidence[e.id, e.v] = True
    used_nodes = (chosen.astype(np.int64) @ incidence.astype(np.int64)) > 0
    cost = chosen @ net.edge_costs + used_nodes @ net.node_costs
    feasible = np.where(cost <= instance.budget + DIST_TOL)[0]

    subgraphs = []
    for k in feasible:
        edges = frozenset(int(j) for j in np.flatnonzero(chosen[k]))
        nodes = frozenset(int(i) for i in np.flatnonzero(used_nodes[k]))
        subgraphs.append(Subgraph(nodes, edges))
    return subgraphs


def evaluate_all(instance: Instance, lam: float = 0.0,
                 max_edges: Optional[int] = None) -> List[Tuple[Subgraph, Evaluation]]:
    return [(s, evaluate(instance, s, lam)) for s in enumerate_feasible(instance, max_edges)]


def _scores(objective: str, lam: float) -> Callable[[Evaluation], Tuple[float, ...]]:
    if objective == "median":
        return lambda ev: (ev.f_median,)
    if objective == "center":
        return lambda ev: (ev.f_center,)
    if objective in ("centdian", "restricted_centdian"):
        return lambda ev: (ev.h(lam),)
    if objective == "max_centdian":
        return lambda ev: (ev.h_max(lam), ev.h(lam))
    if objective in ("generalized_center", "restricted_generalized_center"):
        return lambda ev: (ev.f_gc,)
    raise ModelError(f"unknown oracle objective '{objective}'; choose from {', '.join(OBJECTIVES)}")


def _lexicographic_optima(candidates: List[Tuple[Subgraph, Evaluation]],
                          score: Callable[[Evaluation], Tuple[float, ...]]) -> List[Tuple[Subgraph, Evaluation]]:
    pool = candidates
    for level in range(len(score(pool[0][1]))):
        best = min(score(ev)[level] for _, ev in pool)
        pool = [(s, ev) for s, ev in pool if score(ev)[level] <= best + TIE_TOL * max(1.0, abs(best))]
    return pool


def brute_force(instance: Instance, objective: str = "centdian", lam: float = 0.0,
                delta: Optional[float] = None, max_edges: Optional[int] = None) -> OracleResult:
    """All optimal budget-feasible subgraphs under shortest-path routing.

    ``delta`` keeps only subgraphs with F_m <= (1 + delta) * min F_m. The
    restricted objectives optimise over the non-dominated set only.
    """
    score = _scores(objective, lam)
    if lam < 0:
        raise ModelError(f"lambda must be non-negative, got {lam}")
    candidates = evaluate_all(instance, lam, max_edges)

    if delta is not None:
        if delta < 0:
            raise ModelError(f"delta must be non-negative, got {delta}")
        best_median = min(ev.f_median for _, ev in candidates)
        cap = (1 + delta) * best_median + TIE_TOL * max(1.0, best_median)
        candidates = [(s, ev) for s, ev in candidates if ev.f_median <= cap]

    if objective.startswith("restricted_"):
        candidates = pareto_filter(candidates)

    optima = _lexicographic_optima(candidates, score)
    value = score(optima[0][1])[0]
    logging.debug(f"oracle {objective} lambda={lam:g}: {len(optima)} optima among {len(candidates)} designs")
    return OracleResult(objective, lam, value, optima, len(candidates))


def pareto_frontier(instance: Instance, max_edges: Optional[int] = None) -> List[Tuple[Subgraph, Evaluation]]:
    """Non-dominated designs in (F_m, F_c)."""
    return pareto_filter(evaluate_all(instance, 0.0, max_edges))


def frontier_values(instance: Instance, max_edges: Optional[int] = None) -> Dict[Tuple[float, float], List[Subgraph]]:
    """Frontier grouped by its (F_c, F_m) value pairs."""
    grouped: Dict[Tuple[float, float], List[Subgraph]] = {}
    for s, ev in pareto_frontier(instance, max_edges):
        grouped.setdefault((ev.f_center, ev.f_median), []).append(s)
    return grouped
