"""Design solutions: built subgraph, per-pair routing and objective values."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config.settings import Config
from core.errors import InstanceFormatError, ModelError, SolverError
from core.graph_core import DIST_TOL, Subgraph, shortest_path
from core.instances import Instance
from core.objectives import Evaluation, evaluate
from solvers.brute_force import brute_force
from solvers.milp_model import EfficiencySpec, Model, build_bcd, build_cd
from solvers.mip_engine import solve_mip
from utils.file_manager import file_manager
from utils.run_ledger import run_ledger


@dataclass(frozen=True)
class Route:
    pair_id: int
    private: bool
    length: float
    nodes: Tuple[int, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {"pair": self.pair_id, "mode": "private" if self.private else "network",
                "length": self.length, "path": list(self.nodes)}


@dataclass
class DesignSolution:
    instance: Instance
    subgraph: Subgraph
    routes: List[Route]
    evaluation: Evaluation
    method: str
    lam: float
    delta: Optional[float] = None
    objective: Optional[float] = None
    status: str = "optimal"
    stats: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_subgraph(cls, instance: Instance, subgraph: Subgraph, lam: float, method: str,
                      objective: Optional[float] = None, delta: Optional[float] = None,
                      status: str = "optimal", stats: Optional[Dict[str, Any]] = None) -> "DesignSolution":
        ev = evaluate(instance, subgraph, lam)
        net = instance.network
        routes = []
        for pair in instance.pairs:
            path = shortest_path(net, subgraph.built_edges, pair.origin, pair.dest)
            if path.length <= pair.utility + DIST_TOL:
                routes.append(Route(pair.id, False, path.length, tuple(net.labels[i] for i in path.nodes)))
            else:
                routes.append(Route(pair.id, True, pair.utility))
        return cls(instance, subgraph, routes, ev, method, lam, delta,
                   ev.h_lambda if objective is None else objective, status, dict(stats or {}))

    @property
    def edge_labels(self) -> List[Tuple[int, int]]:
        net = self.instance.network
        return sorted(tuple(sorted(net.edge_labels(e))) for e in self.subgraph.built_edges)

    @property
    def node_labels(self) -> List[int]:
        return sorted(self.instance.network.labels[i] for i in self.subgraph.built_nodes)

    @property
    def design_hash(self) -> str:
        return "-".join(f"{a}_{b}" for a, b in self.edge_labels) or "empty"

    @property
    def lengths(self) -> Tuple[float, ...]:
        return self.evaluation.lengths

    def to_dict(self) -> Dict[str, Any]:
        ev = self.evaluation
        return {
            "format": Config.SOLUTION_FORMAT,
            "instance": self.instance.name,
            "instance_key": self.instance.key,
            "method": self.method,
            "lambda": self.lam,
            "delta": self.delta,
            "status": self.status,
            "objective": self.objective,
            "nodes": self.node_labels,
            "edges": [list(e) for e in self.edge_labels],
            "routes": [r.to_dict() for r in self.routes],
            "values": {"F_m": ev.f_median, "F_c": ev.f_center, "H_lambda": ev.h_lambda,
                       "H_bar": ev.h_bar, "F_gc": ev.f_gc},
            "stats": self.stats,
        }


def subgraph_from_values(model: Model, values: np.ndarray, instance: Instance) -> Subgraph:
    """Read the design from x/y values; every built edge brings its endpoints."""
    vm = model.vmap
    edges = {e for e, j in vm.x.items() if values[j] > 0.5}
    nodes = {i for i, j in vm.y.items() if values[j] > 0.5}
    for e in edges:
        nodes.update(instance.network.edges[e].endpoints)
    return Subgraph(frozenset(nodes), frozenset(edges))


def write_solution(solution: DesignSolution, path) -> Path:
    return file_manager.write_json(path, solution.to_dict())


def _node_label(raw: Any, path: Path, where: str) -> int:
    if isinstance(raw, bool):
        raise InstanceFormatError(f"{raw!r} is not a node id", path=str(path), field=where)
    try:
        return int(raw)
    except (TypeError, ValueError, OverflowError):
        raise InstanceFormatError(f"{raw!r} is not a node id", path=str(path), field=where) from None


def read_design(path, instance: Instance) -> Subgraph:
    """Built subgraph of a stored solution, validated against ``instance``."""
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"malformed JSON: {e.msg}", path=str(path), line=e.lineno) from e
    if not isinstance(doc, dict):
        raise InstanceFormatError("top-level document must be an object", path=str(path), line=1)
    if doc.get("format") != Config.SOLUTION_FORMAT:
        raise InstanceFormatError(f"unsupported format '{doc.get('format')}'", path=str(path), field="format")
    if "edges" not in doc:
        raise InstanceFormatError("missing required field 'edges'", path=str(path), field="edges")
    if not isinstance(doc["edges"], list) or not isinstance(doc.get("nodes", []), list):
        raise InstanceFormatError("'edges' and 'nodes' must be lists", path=str(path), field="edges")
    net = instance.network
    edges = []
    for k, raw in enumerate(doc["edges"]):
        if not isinstance(raw, list) or len(raw) != 2:
            raise InstanceFormatError(f"edge entry {raw!r} is not a pair of node ids",
                                      path=str(path), field=f"edges[{k}]")
        a, b = (_node_label(v, path, f"edges[{k}]") for v in raw)
        edges.append(net.edge_by_labels(a, b))
    subgraph = Subgraph.from_edges(net, edges)
    extra = {net.index_of(_node_label(raw, path, f"nodes[{k}]")) for k, raw in enumerate(doc.get("nodes", []))}
    subgraph = Subgraph(subgraph.built_nodes | frozenset(extra), subgraph.built_edges)
    subgraph.validate(net)
    return subgraph


METHODS = ("cd", "bcd", "brute")


def _solve_model(instance: Instance, model: Model, lam: float, method: str, params,
                 delta: Optional[float]) -> DesignSolution:
    result = solve_mip(model, params)
    if not result.has_solution:
        raise SolverError(f"{model.name} ended without a solution ({result.status.value})")
    subgraph = subgraph_from_values(model, result.values, instance)
    return DesignSolution.from_subgraph(instance, subgraph, lam, method, objective=result.objective,
                                        delta=delta, status=result.status.value, stats=result.summary())


def median_optimum(instance: Instance, params=None) -> float:
    """F_m(S_m), solved once per instance and cached in the run ledger."""
    cached = run_ledger.get_median_optimum(instance.key)
    if cached is not None:
        return cached
    value = solve_design(instance, 0.0, "cd", params=params).evaluation.f_median
    run_ledger.set_median_optimum(instance.key, value)
    return value


def efficiency_spec(instance: Instance, delta: Optional[float], params=None) -> Optional[EfficiencySpec]:
    if delta is None:
        return None
    return EfficiencySpec(delta, median_optimum(instance, params))


def solve_design(instance: Instance, lam: float, method: str = "cd", delta: Optional[float] = None,
                 params=None) -> DesignSolution:
    """Optimal design for H_lambda with the exact model or the oracle."""
    if method not in METHODS:
        raise ModelError(f"unknown method '{method}'; choose from {', '.join(METHODS)}")
    if method == "brute":
        oracle = brute_force(instance, "centdian", lam, delta=delta)
        subgraph = min((s for s, _ in oracle.optima), key=lambda s: sorted(s.built_edges))
        return DesignSolution.from_subgraph(instance, subgraph, lam, method, delta=delta,
                                            stats={"designs": oracle.n_feasible, "optima": len(oracle.optima)})
    efficiency = efficiency_spec(instance, delta, params)
    model = build_cd(instance, lam, efficiency) if method == "cd" else build_bcd(instance, lam, efficiency)
    return _solve_model(instance, model, lam, method, params, delta)
