"""Branch-and-Benders-cut for lambda in [0,1] with facet-defining feasibility cuts."""

import heapq
import logging
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from scipy import sparse

from config.settings import Config
from core.errors import CutGenerationError, InteriorPointError, ModelError
from core.graph_core import DIST_TOL, Subgraph, subgraph_cost
from core.instances import Instance, ODPair
from core.objectives import evaluate
from solvers.lp_backend import HighsBackend, LpBackend, LpProblem
from solvers.milp_model import (DESIGN_PRIORITY, Constraint, EfficiencySpec, Model, Sense,
                                VarKind)
from solvers.mip_engine import BnbParams, MipResult, NodeContext, solve_mip
from solvers.solution import DesignSolution, subgraph_from_values
from utils.performance import PerformanceMonitor

COEF_EPS = 1e-12


@dataclass(frozen=True)
class ServingPath:
    pair_id: int
    nodes: Tuple[int, ...]
    edges: Tuple[int, ...]
    cost: float
    length: float


@dataclass
class ReducedInstance:
    instance: Instance
    surviving: Tuple[int, ...]
    eliminated: Tuple[int, ...]
    paths: Dict[int, ServingPath]
    fixed_nodes: FrozenSet[int] = frozenset()
    fixed_edges: FrozenSet[int] = frozenset()

    @property
    def constant(self) -> float:
        """Median contribution of the pairs left on the private mode."""
        pairs = self.instance.pairs
        return sum(pairs[w].demand * pairs[w].utility for w in self.eliminated) / self.instance.total_demand

    @property
    def gamma_lower(self) -> float:
        return max((self.instance.pairs[w].utility for w in self.eliminated), default=0.0)

    @property
    def free_nodes(self) -> List[int]:
        return [i for i in range(self.instance.network.n_nodes) if i not in self.fixed_nodes]

    @property
    def free_edges(self) -> List[int]:
        return [e for e in range(self.instance.network.n_edges) if e not in self.fixed_edges]


def cheapest_serving_path(instance: Instance, pair: ODPair) -> Optional[ServingPath]:
    """Minimum build-cost path with length <= u^w inside N^w, or None.

    Label-correcting search on (cost, length) labels with Pareto dominance;
    labels above the budget or the utility are discarded.
    """
    net = instance.network
    sub = instance.subnetworks[pair.id]
    if sub.is_empty:
        return None
    budget = instance.budget + DIST_TOL
    limit = pair.utility + DIST_TOL

    # label: (cost, length, node, predecessor label, arc)
    labels: List[Tuple[float, float, int, int, int]] = []
    kept: Dict[int, List[Tuple[float, float]]] = {}
    heap: List[Tuple[float, float, int]] = []

    def push(cost: float, length: float, node: int, pred: int, arc: int) -> None:
        if cost > budget or length > limit:
            return
        for c, l in kept.get(node, ()):
            if c <= cost and l <= length:
                return
        kept.setdefault(node, []).append((cost, length))
        labels.append((cost, length, node, pred, arc))
        heapq.heappush(heap, (cost, length, len(labels) - 1))

    push(net.node_cost[pair.origin], 0.0, pair.origin, -1, -1)
    while heap:
        cost, length, k = heapq.heappop(heap)
        node = labels[k][2]
        if node == pair.dest:
            nodes, edges = [], []
            while k >= 0:
                _, _, at, pred, arc = labels[k]
                nodes.append(at)
                if arc >= 0:
                    edges.append(net.arcs[arc].edge)
                k = pred
            return ServingPath(pair.id, tuple(reversed(nodes)), tuple(reversed(edges)), cost, length)
        for arc_id in net.out_arcs[node]:
            if arc_id not in sub.arcs:
                continue
            arc = net.arcs[arc_id]
            push(cost + net.edges[arc.edge].cost + net.node_cost[arc.head],
                 length + arc.length, arc.head, k, arc_id)
    return None


def preprocess(instance: Instance) -> ReducedInstance:
    """Drop pairs no budget-feasible design can serve and fix unaffordable elements to 0."""
    net = instance.network
    budget = instance.budget + DIST_TOL
    surviving, eliminated, paths = [], [], {}
    for pair in instance.pairs:
        path = cheapest_serving_path(instance, pair)
        if path is None:
            eliminated.append(pair.id)
        else:
            surviving.append(pair.id)
            paths[pair.id] = path
    fixed_nodes = frozenset(i for i in range(net.n_nodes) if net.node_cost[i] > budget)
    fixed_edges = frozenset(
        e.id for e in net.edges
        if e.cost + net.node_cost[e.u] + net.node_cost[e.v] > budget
    )
    reduced = ReducedInstance(instance, tuple(surviving), tuple(eliminated), paths, fixed_nodes, fixed_edges)
    logging.info(f"✅ Preprocessing: {len(surviving)} pairs kept, {len(eliminated)} on private mode, "
                 f"{len(fixed_nodes)} nodes and {len(fixed_edges)} edges unaffordable")
    return reduced


@dataclass
class MasterPoint:
    x: np.ndarray
    y: np.ndarray
    gamma: float
    zeta: Dict[int, float]

    @classmethod
    def from_values(cls, master: Model, values: np.ndarray) -> "MasterPoint":
        vm = master.vmap
        x = np.array([values[vm.x[e]] for e in sorted(vm.x)])
        y = np.array([values[vm.y[i]] for i in sorted(vm.y)])
        return cls(x, y, float(values[vm.gamma]), {w: float(values[j]) for w, j in vm.zeta.items()})

    def coordinates(self, reduced: ReducedInstance) -> np.ndarray:
        """Free coordinates: x over free edges, y over free nodes, gamma, zeta."""
        parts = [self.x[reduced.free_edges], self.y[reduced.free_nodes], [self.gamma],
                 [self.zeta[w] for w in reduced.surviving]]
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def build_master(reduced: ReducedInstance, lam: float,
                 efficiency: Optional[EfficiencySpec] = None) -> Model:
    instance = reduced.instance
    net = instance.network
    model = Model(f"MasterCD_lambda{lam:g}")
    vm = model.vmap
    for i in range(net.n_nodes):
        vm.y[i] = model.add_var(f"y[{net.labels[i]}]", VarKind.BINARY,
                                ub=0.0 if i in reduced.fixed_nodes else 1.0, priority=DESIGN_PRIORITY)
    for e in net.edges:
        a, b = net.edge_labels(e.id)
        vm.x[e.id] = model.add_var(f"x[{a},{b}]", VarKind.BINARY,
                                   ub=0.0 if e.id in reduced.fixed_edges else 1.0, priority=DESIGN_PRIORITY)
    vm.gamma = model.add_var("gamma_max", lb=reduced.gamma_lower)
    for w in reduced.surviving:
        vm.zeta[w] = model.add_var(f"zeta[{w}]")

    budget = {vm.y[i]: net.node_cost[i] for i in range(net.n_nodes)}
    budget.update({vm.x[e.id]: e.cost for e in net.edges})
    model.add_constr(budget, Sense.LE, instance.budget, "budget", group="budget")
    for e in net.edges:
        for end in e.endpoints:
            model.add_constr({vm.x[e.id]: 1.0, vm.y[end]: -1.0}, Sense.LE, 0.0,
                             f"couple[{e.id},{net.labels[end]}]", group="coupling")
    for w in reduced.surviving:
        model.add_constr({vm.zeta[w]: 1.0, vm.gamma: -1.0}, Sense.LE, 0.0, f"incumbent[{w}]", group="incumbent")

    total = instance.total_demand
    median = {vm.zeta[w]: instance.pairs[w].demand / total for w in reduced.surviving}
    if efficiency is not None:
        efficiency.validate()
        model.add_constr(median, Sense.LE, efficiency.cap - reduced.constant, "efficiency", group="efficiency")
        model.meta["delta"] = efficiency.delta

    objective = {j: (1 - lam) * c for j, c in median.items()}
    objective[vm.gamma] = lam
    model.set_objective(objective, constant=(1 - lam) * reduced.constant)
    model.meta.update({"kind": "master", "lambda": lam})
    model.validate()
    return model


def design_point(master: Model, reduced: ReducedInstance, subgraph: Subgraph) -> np.ndarray:
    """Master vector of a built design: zeta at the exact lengths, gamma at F_c."""
    vm = master.vmap
    ev = evaluate(reduced.instance, subgraph)
    values = np.zeros(master.n_vars)
    for e in subgraph.built_edges:
        values[vm.x[e]] = 1.0
    for i in subgraph.built_nodes:
        values[vm.y[i]] = 1.0
    for w, j in vm.zeta.items():
        values[j] = ev.lengths[w]
    values[vm.gamma] = max(ev.f_center, reduced.gamma_lower)
    return values


def interior_points(reduced: ReducedInstance) -> List[MasterPoint]:
    """Feasible master points whose affine hull is the whole free space."""
    instance = reduced.instance
    net = instance.network
    base_zeta = {w: instance.pairs[w].utility for w in reduced.surviving}

    def point(nodes, edges, zeta, gamma_scale=1.0) -> MasterPoint:
        x = np.zeros(net.n_edges)
        y = np.zeros(net.n_nodes)
        x[list(edges)] = 1.0
        y[list(nodes)] = 1.0
        gamma = max(max(zeta.values(), default=0.0), reduced.gamma_lower)
        return MasterPoint(x, y, gamma_scale * gamma, dict(zeta))

    points = [point((), (), base_zeta), point((), (), base_zeta, 2.0)]
    points += [point((i,), (), base_zeta) for i in reduced.free_nodes]
    points += [point(net.edges[e].endpoints, (e,), base_zeta) for e in reduced.free_edges]
    for w in reduced.surviving:
        zeta = dict(base_zeta)
        zeta[w] = 2 * instance.pairs[w].utility
        path = reduced.paths[w]
        points.append(point(path.nodes, path.edges, zeta))
    return points


def _check_interior(reduced: ReducedInstance, p: MasterPoint, points: List[MasterPoint]) -> None:
    instance = reduced.instance
    net = instance.network
    eps = 1e-9
    for e in reduced.free_edges:
        if not eps < p.x[e] < 1 - eps:
            raise InteriorPointError(f"x[{net.edge_labels(e)}]={p.x[e]:g} not strictly inside (0,1)")
        for end in net.edges[e].endpoints:
            if not p.x[e] < p.y[end] - eps:
                raise InteriorPointError(f"coupling of edge {net.edge_labels(e)} is tight at the interior point")
    for i in reduced.free_nodes:
        if not eps < p.y[i] < 1 - eps:
            raise InteriorPointError(f"y[{net.labels[i]}]={p.y[i]:g} not strictly inside (0,1)")
    cost = p.x @ net.edge_costs + p.y @ net.node_costs
    if not cost < instance.budget - eps:
        raise InteriorPointError(f"interior point cost {cost:g} does not leave budget slack")
    if not p.gamma > reduced.gamma_lower + eps:
        raise InteriorPointError("gamma_max sits on its lower bound")
    for w in reduced.surviving:
        if not p.zeta[w] < p.gamma - eps:
            raise InteriorPointError(f"zeta[{w}] is not strictly below gamma_max", pair_id=w)
        if not p.zeta[w] > instance.pairs[w].utility + eps:
            raise InteriorPointError(f"zeta[{w}] leaves no slack over the private mode", pair_id=w)

    coords = np.array([q.coordinates(reduced) for q in points])
    rank = np.linalg.matrix_rank(coords[1:] - coords[0]) if len(coords) > 1 else 0
    if rank != coords.shape[1]:
        raise InteriorPointError(f"point family has affine rank {rank}, expected {coords.shape[1]}")


INTERIOR_CACHE_SIZE = 32
_interior_cache: "OrderedDict[str, MasterPoint]" = OrderedDict()


def interior_point(reduced: ReducedInstance) -> MasterPoint:
    """Mean of the construction points, verified strictly interior and full rank."""
    key = reduced.instance.key
    if key in _interior_cache:
        _interior_cache.move_to_end(key)
        return _interior_cache[key]
    points = interior_points(reduced)
    zeta = {w: float(np.mean([q.zeta[w] for q in points])) for w in reduced.surviving}
    mean = MasterPoint(np.mean([q.x for q in points], axis=0), np.mean([q.y for q in points], axis=0),
                       float(np.mean([q.gamma for q in points])), zeta)
    _check_interior(reduced, mean, points)
    _interior_cache[key] = mean
    while len(_interior_cache) > INTERIOR_CACHE_SIZE:
        _interior_cache.popitem(last=False)
    logging.info(f"✅ Interior point built from {len(points)} points")
    return mean


@dataclass
class Cut:
    """sigma . x + upsilon * zeta^w >= phi."""

    pair_id: int
    sigma: Dict[int, float]
    upsilon: float
    phi: float
    violation: float
    step: float
    node_id: Optional[int] = None

    def slack(self, x: np.ndarray, zeta: float) -> float:
        return sum(s * x[e] for e, s in self.sigma.items()) + self.upsilon * zeta - self.phi

    def as_constraint(self, master: Model) -> Constraint:
        vm = master.vmap
        coefs = {vm.x[e]: -s for e, s in self.sigma.items()}
        coefs[vm.zeta[self.pair_id]] = -self.upsilon
        return Constraint(f"benders[{self.pair_id}]", coefs, Sense.LE, -self.phi)


def separate(reduced: ReducedInstance, pair_id: int, exterior: MasterPoint, interior: MasterPoint,
             backend: Optional[LpBackend] = None) -> Optional[Cut]:
    """Line search from the exterior point toward the interior point for one pair."""
    instance = reduced.instance
    net = instance.network
    pair = instance.pairs[pair_id]
    sub = instance.subnetworks[pair_id]
    backend = backend or HighsBackend()

    arcs = sorted(sub.arcs)
    col = {a: k for k, a in enumerate(arcs)}
    r = len(arcs)
    mu = r + 1
    n = r + 2

    flow_nodes = [i for i in sorted(sub.nodes) if i != pair.dest]
    eq_rows, eq_cols, eq_vals = [], [], []
    origin_row = None
    for k, i in enumerate(flow_nodes):
        for a in net.out_arcs[i]:
            if a in col:
                eq_rows.append(k)
                eq_cols.append(col[a])
                eq_vals.append(1.0)
        for a in net.in_arcs[i]:
            if a in col:
                eq_rows.append(k)
                eq_cols.append(col[a])
                eq_vals.append(-1.0)
        if i == pair.origin:
            eq_rows.append(k)
            eq_cols.append(r)
            eq_vals.append(1.0)
            origin_row = k
    b_eq = np.zeros(len(flow_nodes))
    b_eq[origin_row] = 1.0

    edges = sorted(sub.edges)
    ub_rows, ub_cols, ub_vals = [], [], []
    b_ub = np.zeros(len(edges) + 1)
    for k, e in enumerate(edges):
        for a in (2 * e, 2 * e + 1):
            if a in col:
                ub_rows.append(k)
                ub_cols.append(col[a])
                ub_vals.append(1.0)
        ub_rows.append(k)
        ub_cols.append(mu)
        ub_vals.append(exterior.x[e] - interior.x[e])
        b_ub[k] = exterior.x[e]
    length_row = len(edges)
    for a in arcs:
        ub_rows.append(length_row)
        ub_cols.append(col[a])
        ub_vals.append(net.arcs[a].length)
    ub_rows += [length_row, length_row]
    ub_cols += [r, mu]
    ub_vals += [pair.utility, exterior.zeta[pair_id] - interior.zeta[pair_id]]
    b_ub[length_row] = exterior.zeta[pair_id]

    c = np.zeros(n)
    c[mu] = 1.0
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    ub[mu] = 1.0
    problem = LpProblem(
        c,
        sparse.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(b_ub), n)), b_ub,
        sparse.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(b_eq), n)), b_eq,
        lb, ub,
    )
    res = backend.solve(problem)
    if not res.ok:
        raise CutGenerationError(f"cut-generating LP ended {res.status.value}: {res.message}", pair_id=pair_id)

    step = float(res.x[mu])
    if step <= Config.SOLVER_TOL:
        return None

    phi = float(res.duals_eq[origin_row])
    sigma = {e: -float(res.duals_ub[k]) for k, e in enumerate(edges) if -res.duals_ub[k] > COEF_EPS}
    upsilon = max(0.0, -float(res.duals_ub[length_row]))
    cut = Cut(pair_id, sigma, upsilon, phi, 0.0, step)
    violation = -cut.slack(exterior.x, exterior.zeta[pair_id])
    if violation <= Config.CUT_VIOLATION_TOL:
        raise CutGenerationError(
            f"step {step:.3g} > 0 but the dual cut is not violated ({violation:.3g})", pair_id=pair_id)
    cut.violation = violation
    return cut


def separate_all(reduced: ReducedInstance, exterior: MasterPoint, interior: MasterPoint,
                 workers: int = 1) -> List[Cut]:
    """One cut attempt per surviving pair; result ordered by pair id."""
    pairs = list(reduced.surviving)
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            found = list(pool.map(lambda w: separate(reduced, w, exterior, interior), pairs))
    else:
        found = [separate(reduced, w, exterior, interior) for w in pairs]
    return sorted((c for c in found if c is not None), key=lambda c: c.pair_id)


@dataclass
class BendersResult:
    mip: MipResult
    solution: Optional[DesignSolution]
    reduced: ReducedInstance
    interior: Optional[MasterPoint]
    master: Model
    cuts: List[Cut] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.mip.objective

    def ledger_rows(self) -> List[Dict[str, object]]:
        net = self.reduced.instance.network
        pairs = self.reduced.instance.pairs
        rows = []
        for k, cut in enumerate(self.cuts):
            pair = pairs[cut.pair_id]
            rows.append({
                "cut": k,
                "pair": cut.pair_id,
                "origin": net.labels[pair.origin],
                "destination": net.labels[pair.dest],
                "node": cut.node_id,
                "phi": round(cut.phi, 12),
                "upsilon": round(cut.upsilon, 12),
                "sigma": ";".join(f"{a}-{b}:{cut.sigma[e]:.12g}"
                                  for e in sorted(cut.sigma) for a, b in [net.edge_labels(e)]),
                "violation": round(cut.violation, 12),
                "step": round(cut.step, 12),
            })
        return rows


CUT_LEDGER_COLUMNS = ("cut", "pair", "origin", "destination", "node", "phi", "upsilon", "sigma", "violation", "step")


def solve_benders(instance: Instance, lam: float, params: Optional[BnbParams] = None,
                  efficiency: Optional[EfficiencySpec] = None, workers: Optional[int] = None) -> BendersResult:
    if not 0 <= lam <= 1:
        raise ModelError(f"Benders decomposition requires lambda in [0,1], got {lam}")
    params = params or BnbParams()
    workers = Config.SEPARATION_WORKERS if workers is None else workers

    reduced = preprocess(instance)
    master = build_master(reduced, lam, efficiency)
    ledger: List[Cut] = []
    seen = set()
    perf = PerformanceMonitor(window=None)

    separator = None
    interior = None
    if reduced.surviving:
        interior = interior_point(reduced)

        def separator(values: np.ndarray, ctx: NodeContext) -> List[Constraint]:
            exterior = MasterPoint.from_values(master, values)
            timer = perf.start_timer("separate", f"{ctx.node_id}.{ctx.round}")
            try:
                found = separate_all(reduced, exterior, interior, workers)
            except CutGenerationError:
                perf.record_error("separate")
                raise
            finally:
                perf.end_timer(timer)
            rows = []
            for cut in found:
                cut.node_id = ctx.node_id
                row = cut.as_constraint(master)
                if row.signature() not in seen:
                    seen.add(row.signature())
                    ledger.append(cut)
                rows.append(row)
            return rows

    net = instance.network
    tried = set()

    def heuristic(values: np.ndarray, ctx: NodeContext) -> Optional[np.ndarray]:
        subgraph = subgraph_from_values(master, values, instance)
        if subgraph in tried or subgraph_cost(net, subgraph) > instance.budget + DIST_TOL:
            return None
        tried.add(subgraph)
        return design_point(master, reduced, subgraph)

    # the empty design is always budget-feasible
    start = design_point(master, reduced, Subgraph())
    result = solve_mip(master, params, separator, heuristic=heuristic, start=start)
    solution = None
    if result.has_solution:
        subgraph = subgraph_from_values(master, result.values, instance)
        solution = DesignSolution.from_subgraph(
            instance, subgraph, lam, "benders", objective=result.objective,
            delta=None if efficiency is None else efficiency.delta,
            status=result.status.value,
            stats={**result.summary(), "pairs_kept": len(reduced.surviving),
                   "pairs_private": len(reduced.eliminated),
                   "heuristic_incumbents": result.heuristic_incumbents,
                   "separation_calls": perf.get_stats().get("separate", {}).get("count", 0),
                   "separation_time": round(perf.get_total_time("separate"), 3)})
    logging.info(f"✅ Benders lambda={lam:g}: {result.status.value} obj={result.objective:.9g} "
                 f"cuts={len(ledger)} nodes={result.nodes}")
    return BendersResult(result, solution, reduced, interior, master, ledger)
