"""Solver-neutral MILP models: CD, BCD_R (strong duality + McCormick), MCD_1 and MCD_2."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from core.errors import ModelError
from core.graph_core import DIST_TOL
from core.instances import Instance, ODPair

# design variables are branched on before flow variables
DESIGN_PRIORITY = 2
FLOW_PRIORITY = 1

EFFICIENCY_SLACK = 1e-7
# relative slack on stage-2 caps (max-cent-dian and lexicographic)
CAP_SLACK = 1e-9


class VarKind(str, Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass
class Variable:
    id: int
    name: str
    kind: VarKind
    lb: float
    ub: float
    obj: float = 0.0
    priority: int = 0

    @property
    def is_integer(self) -> bool:
        return self.kind == VarKind.BINARY


@dataclass
class Constraint:
    name: str
    coefs: Dict[int, float]
    sense: Sense
    rhs: float

    def activity(self, values: np.ndarray) -> float:
        return float(sum(c * values[j] for j, c in self.coefs.items()))

    def violation(self, values: np.ndarray) -> float:
        lhs = self.activity(values)
        if self.sense == Sense.LE:
            return max(0.0, lhs - self.rhs)
        if self.sense == Sense.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)

    def signature(self, digits: int = 9) -> Tuple:
        return (self.sense.value, round(self.rhs, digits),
                tuple(sorted((j, round(c, digits)) for j, c in self.coefs.items() if c != 0)))


@dataclass
class EfficiencySpec:
    """Cap F_m(S) <= (1 + delta) * F_m(S_m)."""

    delta: float
    median_optimum: float

    def validate(self) -> None:
        if not self.delta >= 0:
            raise ModelError(f"delta must be non-negative, got {self.delta}")
        if not self.median_optimum >= 0:
            raise ModelError(f"median optimum must be non-negative, got {self.median_optimum}")

    @property
    def cap(self) -> float:
        return (1 + self.delta) * self.median_optimum + EFFICIENCY_SLACK * max(1.0, self.median_optimum)


@dataclass
class VariableMap:
    """Index of every model symbol; pairs keyed by pair id, arcs and edges by network id."""

    x: Dict[int, int] = field(default_factory=dict)
    y: Dict[int, int] = field(default_factory=dict)
    f: Dict[Tuple[int, int], int] = field(default_factory=dict)
    f_r: Dict[int, int] = field(default_factory=dict)
    gamma: Optional[int] = None
    zeta: Dict[int, int] = field(default_factory=dict)
    nu: Dict[Tuple[int, int], int] = field(default_factory=dict)
    sigma: Dict[Tuple[int, int], int] = field(default_factory=dict)
    xi: Dict[Tuple[int, int], int] = field(default_factory=dict)
    mu: Optional[int] = None
    sigma_bound: Dict[int, float] = field(default_factory=dict)
    rows: Dict[str, List[int]] = field(default_factory=dict)


class Model:
    """Minimization MILP with sparse rows."""

    def __init__(self, name: str):
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.obj_constant = 0.0
        self.vmap = VariableMap()
        self.meta: Dict[str, object] = {}

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    def add_var(self, name: str, kind: VarKind = VarKind.CONTINUOUS, lb: float = 0.0,
                ub: float = math.inf, obj: float = 0.0, priority: int = 0) -> int:
        if kind == VarKind.BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        var = Variable(len(self.variables), name, kind, float(lb), float(ub), float(obj), priority)
        self.variables.append(var)
        return var.id

    def add_constr(self, coefs: Dict[int, float], sense: Sense, rhs: float, name: str,
                   group: Optional[str] = None) -> int:
        merged: Dict[int, float] = {}
        for j, c in coefs.items():
            if c != 0:
                merged[j] = merged.get(j, 0.0) + float(c)
        row = Constraint(name, merged, Sense(sense), float(rhs))
        self.constraints.append(row)
        if group:
            self.vmap.rows.setdefault(group, []).append(len(self.constraints) - 1)
        return len(self.constraints) - 1

    def set_objective(self, coefs: Dict[int, float], constant: float = 0.0) -> None:
        for var in self.variables:
            var.obj = 0.0
        for j, c in coefs.items():
            self.variables[j].obj += float(c)
        self.obj_constant = float(constant)

    def validate(self) -> None:
        for var in self.variables:
            if var.lb > var.ub:
                raise ModelError(f"variable {var.name} has empty bounds [{var.lb}, {var.ub}]")
            if math.isnan(var.obj):
                raise ModelError(f"variable {var.name} has NaN objective coefficient")
        for row in self.constraints:
            if math.isnan(row.rhs):
                raise ModelError(f"row {row.name} has NaN rhs")
            for j, c in row.coefs.items():
                if not 0 <= j < self.n_vars:
                    raise ModelError(f"row {row.name} references undeclared variable {j}")
                if math.isnan(c):
                    raise ModelError(f"row {row.name} has NaN coefficient")

    def stats(self) -> Dict[str, int]:
        by_group = {group: len(rows) for group, rows in self.vmap.rows.items()}
        return {
            "variables": self.n_vars,
            "binaries": sum(1 for v in self.variables if v.is_integer),
            "continuous": sum(1 for v in self.variables if not v.is_integer),
            "constraints": self.n_rows,
            "nonzeros": sum(len(r.coefs) for r in self.constraints),
            **{f"rows:{k}": v for k, v in sorted(by_group.items())},
        }

    @property
    def objective_vector(self) -> np.ndarray:
        return np.array([v.obj for v in self.variables], dtype=float)

    @property
    def lower_bounds(self) -> np.ndarray:
        return np.array([v.lb for v in self.variables], dtype=float)

    @property
    def upper_bounds(self) -> np.ndarray:
        return np.array([v.ub for v in self.variables], dtype=float)

    @property
    def integer_mask(self) -> np.ndarray:
        return np.array([v.is_integer for v in self.variables], dtype=bool)

    @property
    def priorities(self) -> np.ndarray:
        return np.array([v.priority for v in self.variables], dtype=int)

    def objective_value(self, values: np.ndarray) -> float:
        return float(self.objective_vector @ values + self.obj_constant)

    def max_violation(self, values: np.ndarray, extra: Optional[List[Constraint]] = None) -> float:
        rows = list(self.constraints) + list(extra or [])
        worst = max((row.violation(values) for row in rows), default=0.0)
        worst = max(worst, float(np.max(self.lower_bounds - values, initial=0.0)))
        worst = max(worst, float(np.max(values - self.upper_bounds, initial=0.0)))
        return worst

    def to_matrices(self, extra: Optional[List[Constraint]] = None):
        """(A_ub, b_ub, A_eq, b_eq) in CSR form; >= rows are negated into <= rows."""
        ub_rows, ub_cols, ub_vals, b_ub = [], [], [], []
        eq_rows, eq_cols, eq_vals, b_eq = [], [], [], []
        for row in list(self.constraints) + list(extra or []):
            if row.sense == Sense.EQ:
                k = len(b_eq)
                for j, c in row.coefs.items():
                    eq_rows.append(k)
                    eq_cols.append(j)
                    eq_vals.append(c)
                b_eq.append(row.rhs)
            else:
                sign = 1.0 if row.sense == Sense.LE else -1.0
                k = len(b_ub)
                for j, c in row.coefs.items():
                    ub_rows.append(k)
                    ub_cols.append(j)
                    ub_vals.append(sign * c)
                b_ub.append(sign * row.rhs)
        n = self.n_vars
        a_ub = sparse.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(b_ub), n))
        a_eq = sparse.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(b_eq), n))
        return a_ub, np.array(b_ub, dtype=float), a_eq, np.array(b_eq, dtype=float)

    def to_mps(self) -> str:
        """Free-format MPS text; rows and columns in declaration order."""
        lines = [f"NAME {self.name}", "ROWS", " N OBJ"]
        kinds = {Sense.LE: "L", Sense.EQ: "E", Sense.GE: "G"}
        row_names = [f"R{k}" for k in range(self.n_rows)]
        for k, row in enumerate(self.constraints):
            lines.append(f" {kinds[row.sense]} {row_names[k]}")

        columns: Dict[int, List[Tuple[str, float]]] = {j: [] for j in range(self.n_vars)}
        for var in self.variables:
            if var.obj != 0:
                columns[var.id].append(("OBJ", var.obj))
        for k, row in enumerate(self.constraints):
            for j, c in sorted(row.coefs.items()):
                columns[j].append((row_names[k], c))

        lines.append("COLUMNS")
        in_integer = False
        for var in self.variables:
            if var.is_integer != in_integer:
                marker = "'INTORG'" if var.is_integer else "'INTEND'"
                lines.append(f" MARKER 'MARKER' {marker}")
                in_integer = var.is_integer
            for row_name, c in columns[var.id] or [("OBJ", 0.0)]:
                lines.append(f" C{var.id} {row_name} {c:.17g}")
        if in_integer:
            lines.append(" MARKER 'MARKER' 'INTEND'")

        lines.append("RHS")
        if self.obj_constant:
            lines.append(f" RHS OBJ {-self.obj_constant:.17g}")
        for k, row in enumerate(self.constraints):
            if row.rhs != 0:
                lines.append(f" RHS {row_names[k]} {row.rhs:.17g}")

        lines.append("BOUNDS")
        for var in self.variables:
            name = f"C{var.id}"
            if var.is_integer and var.lb == 0 and var.ub == 1:
                lines.append(f" BV BND {name}")
                continue
            if var.lb == var.ub:
                lines.append(f" FX BND {name} {var.lb:.17g}")
                continue
            if math.isinf(var.lb):
                lines.append(f" MI BND {name}")
            elif var.lb != 0:
                lines.append(f" LO BND {name} {var.lb:.17g}")
            if not math.isinf(var.ub):
                lines.append(f" UP BND {name} {var.ub:.17g}")
        lines.append("ENDATA")
        return "\n".join(lines) + "\n"

    def write_mps(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_mps(), encoding="utf-8")
        logging.info(f"💾 Model {self.name} written: {path}")
        return path


def _check_lambda_cd(lam: float) -> None:
    if lam < 0:
        raise ModelError(f"lambda must be non-negative, got {lam}")
    if lam > 1:
        raise ModelError(f"CD is only valid for lambda in [0,1], got {lam}; use the bilevel model")


def _add_design(model: Model, instance: Instance) -> None:
    net = instance.network
    vm = model.vmap
    for i in range(net.n_nodes):
        vm.y[i] = model.add_var(f"y[{net.labels[i]}]", VarKind.BINARY, priority=DESIGN_PRIORITY)
    for e in net.edges:
        a, b = net.edge_labels(e.id)
        vm.x[e.id] = model.add_var(f"x[{a},{b}]", VarKind.BINARY, priority=DESIGN_PRIORITY)

    budget = {vm.y[i]: net.node_cost[i] for i in range(net.n_nodes)}
    budget.update({vm.x[e.id]: e.cost for e in net.edges})
    model.add_constr(budget, Sense.LE, instance.budget, "budget", group="budget")
    for e in net.edges:
        for end in e.endpoints:
            model.add_constr({vm.x[e.id]: 1.0, vm.y[end]: -1.0}, Sense.LE, 0.0,
                             f"couple[{e.id},{net.labels[end]}]", group="coupling")


def _add_pair_flows(model: Model, instance: Instance, pair: ODPair, relax: bool,
                    drop_sink_row: bool) -> Dict[int, float]:
    """Flow, capacity and private-mode variables for one pair; returns the length expression."""
    net = instance.network
    vm = model.vmap
    sub = instance.subnetworks[pair.id]
    kind = VarKind.CONTINUOUS if relax else VarKind.BINARY
    ub = 1.0

    for arc_id in sorted(sub.arcs):
        arc = net.arcs[arc_id]
        vm.f[(pair.id, arc_id)] = model.add_var(
            f"f[{pair.id}][{net.labels[arc.tail]},{net.labels[arc.head]}]", kind, ub=ub, priority=FLOW_PRIORITY)
    vm.f_r[pair.id] = model.add_var(f"f_r[{pair.id}]", kind, ub=ub, priority=FLOW_PRIORITY)

    for i in sorted(sub.nodes):
        if drop_sink_row and i == pair.dest:
            continue
        coefs: Dict[int, float] = {}
        for arc_id in net.out_arcs[i]:
            if arc_id in sub.arcs:
                coefs[vm.f[(pair.id, arc_id)]] = 1.0
        for arc_id in net.in_arcs[i]:
            if arc_id in sub.arcs:
                coefs[vm.f[(pair.id, arc_id)]] = coefs.get(vm.f[(pair.id, arc_id)], 0.0) - 1.0
        rhs = 0.0
        if i == pair.origin:
            coefs[vm.f_r[pair.id]] = 1.0
            rhs = 1.0
        elif i == pair.dest:
            coefs[vm.f_r[pair.id]] = -1.0
            rhs = -1.0
        model.add_constr(coefs, Sense.EQ, rhs, f"flow[{pair.id}][{net.labels[i]}]", group="flow")

    for edge_id in sorted(sub.edges):
        coefs = {vm.f[(pair.id, a)]: 1.0 for a in (2 * edge_id, 2 * edge_id + 1) if a in sub.arcs}
        coefs[vm.x[edge_id]] = -1.0
        model.add_constr(coefs, Sense.LE, 0.0, f"capacity[{pair.id}][{edge_id}]", group="capacity")

    length = {vm.f[(pair.id, a)]: net.arcs[a].length for a in sorted(sub.arcs)}
    length[vm.f_r[pair.id]] = pair.utility
    return length


def _median_expression(instance: Instance, lengths: Dict[int, Dict[int, float]]) -> Dict[int, float]:
    total = instance.total_demand
    expr: Dict[int, float] = {}
    for pair in instance.pairs:
        for j, c in lengths[pair.id].items():
            expr[j] = expr.get(j, 0.0) + pair.demand * c / total
    return expr


def _scaled(expr: Dict[int, float], factor: float) -> Dict[int, float]:
    return {j: factor * c for j, c in expr.items()}


def _add_gamma_rows(model: Model, instance: Instance, lengths: Dict[int, Dict[int, float]]) -> None:
    vm = model.vmap
    vm.gamma = model.add_var("gamma_max")
    for pair in instance.pairs:
        coefs = dict(lengths[pair.id])
        coefs[vm.gamma] = -1.0
        model.add_constr(coefs, Sense.LE, 0.0, f"center[{pair.id}]", group="center")


def _add_efficiency(model: Model, median: Dict[int, float], efficiency: Optional[EfficiencySpec]) -> None:
    if efficiency is None:
        return
    efficiency.validate()
    model.add_constr(median, Sense.LE, efficiency.cap, "efficiency", group="efficiency")
    model.meta["delta"] = efficiency.delta


def _build_cd_base(instance: Instance, name: str, relax_flows: bool):
    model = Model(name)
    _add_design(model, instance)
    lengths = {
        pair.id: _add_pair_flows(model, instance, pair, relax_flows, drop_sink_row=False)
        for pair in instance.pairs
    }
    return model, lengths, _median_expression(instance, lengths)


def build_cd(instance: Instance, lam: float, efficiency: Optional[EfficiencySpec] = None,
             relax_flows: bool = False) -> Model:
    """Single-level cent-dian model, valid for lambda in [0,1]."""
    _check_lambda_cd(lam)
    model, lengths, median = _build_cd_base(instance, f"CD_lambda{lam:g}", relax_flows)
    _add_gamma_rows(model, instance, lengths)
    _add_efficiency(model, median, efficiency)

    objective = _scaled(median, 1 - lam)
    objective[model.vmap.gamma] = objective.get(model.vmap.gamma, 0.0) + lam
    model.set_objective(objective)
    model.meta.update({"kind": "cd", "lambda": lam, "relax_flows": relax_flows})
    model.validate()
    logging.debug(f"CD model built: {model.stats()}")
    return model


def sigma_bounds(instance: Instance, pairs: Optional[List[ODPair]] = None) -> Dict[int, float]:
    """Capacity-dual bound u^w - d_N(w) per pair; constant over the edges of E^w."""
    dist = instance.network.distances
    bounds = {}
    for pair in instance.pairs if pairs is None else pairs:
        d = dist[pair.origin, pair.dest]
        if d > pair.utility + DIST_TOL:
            raise ModelError(f"pair {pair.id} cannot be served by the full network "
                             f"(d_N={d:g} > u={pair.utility:g}); remove it before bounding duals")
        bounds[pair.id] = max(0.0, pair.utility - d)
    return bounds


def _add_pair_duals(model: Model, instance: Instance, pair: ODPair, sigma_bound: float,
                    length: Dict[int, float]) -> None:
    """Dual feasibility, strong duality and McCormick rows of the lower-level path problem."""
    net = instance.network
    vm = model.vmap
    sub = instance.subnetworks[pair.id]
    w = pair.id

    for i in sorted(sub.nodes):
        fixed = i == pair.dest
        vm.nu[(w, i)] = model.add_var(f"nu[{w}][{net.labels[i]}]", lb=0.0 if fixed else -math.inf,
                                      ub=0.0 if fixed else math.inf)
    for edge_id in sorted(sub.edges):
        vm.sigma[(w, edge_id)] = model.add_var(f"sigma[{w}][{edge_id}]")
        vm.xi[(w, edge_id)] = model.add_var(f"xi[{w}][{edge_id}]")

    for arc_id in sorted(sub.arcs):
        arc = net.arcs[arc_id]
        coefs = {vm.nu[(w, arc.tail)]: 1.0, vm.sigma[(w, arc.edge)]: -1.0}
        coefs[vm.nu[(w, arc.head)]] = coefs.get(vm.nu[(w, arc.head)], 0.0) - 1.0
        model.add_constr(coefs, Sense.LE, arc.length, f"dual_arc[{w}][{arc_id}]", group="dual_feasibility")
    model.add_constr({vm.nu[(w, pair.origin)]: 1.0}, Sense.LE, pair.utility,
                     f"dual_private[{w}]", group="dual_feasibility")

    duality = dict(length)
    duality[vm.nu[(w, pair.origin)]] = duality.get(vm.nu[(w, pair.origin)], 0.0) - 1.0
    for edge_id in sorted(sub.edges):
        duality[vm.xi[(w, edge_id)]] = 1.0
    model.add_constr(duality, Sense.EQ, 0.0, f"strong_duality[{w}]", group="strong_duality")

    for edge_id in sorted(sub.edges):
        x, s, xi = vm.x[edge_id], vm.sigma[(w, edge_id)], vm.xi[(w, edge_id)]
        model.add_constr({xi: 1.0, x: -sigma_bound}, Sense.LE, 0.0, f"mc_x[{w}][{edge_id}]", group="mccormick")
        model.add_constr({xi: 1.0, s: -1.0}, Sense.LE, 0.0, f"mc_s[{w}][{edge_id}]", group="mccormick")
        model.add_constr({s: 1.0, xi: -1.0, x: sigma_bound}, Sense.LE, sigma_bound,
                         f"mc_sx[{w}][{edge_id}]", group="mccormick")


def build_bcd(instance: Instance, lam: float, efficiency: Optional[EfficiencySpec] = None) -> Model:
    """Bilevel model reformulated by strong duality; valid for every lambda >= 0.

    Pairs without admissible arcs keep only a private-mode variable fixed at 1.
    """
    if lam < 0:
        raise ModelError(f"lambda must be non-negative, got {lam}")
    model = Model(f"BCD_lambda{lam:g}")
    vm = model.vmap
    _add_design(model, instance)

    servable = [p for p in instance.pairs if not instance.subnetworks[p.id].is_empty]
    vm.sigma_bound = sigma_bounds(instance, servable)

    lengths: Dict[int, Dict[int, float]] = {}
    for pair in instance.pairs:
        if instance.subnetworks[pair.id].is_empty:
            vm.f_r[pair.id] = model.add_var(f"f_r[{pair.id}]", VarKind.BINARY, lb=1.0, ub=1.0,
                                            priority=FLOW_PRIORITY)
            lengths[pair.id] = {vm.f_r[pair.id]: pair.utility}
            continue
        lengths[pair.id] = _add_pair_flows(model, instance, pair, relax=False, drop_sink_row=True)
        _add_pair_duals(model, instance, pair, vm.sigma_bound[pair.id], lengths[pair.id])

    median = _median_expression(instance, lengths)
    _add_gamma_rows(model, instance, lengths)
    _add_efficiency(model, median, efficiency)

    objective = _scaled(median, 1 - lam)
    objective[vm.gamma] = objective.get(vm.gamma, 0.0) + lam
    model.set_objective(objective)
    model.meta.update({"kind": "bcd", "lambda": lam})
    model.validate()
    logging.debug(f"BCD model built: {model.stats()}")
    return model


def _check_lambda_open(lam: float) -> None:
    if not 0 < lam < 1:
        raise ModelError(f"lambda must lie in (0,1) for the max-cent-dian stages, got {lam}")


def build_mcd1(instance: Instance, lam: float, relax_flows: bool = False) -> Model:
    """Stage 1: minimise max{lambda * F_c, (1 - lambda) * F_m}."""
    _check_lambda_open(lam)
    model, lengths, median = _build_cd_base(instance, f"MCD1_lambda{lam:g}", relax_flows)
    vm = model.vmap
    vm.mu = model.add_var("mu")
    for pair in instance.pairs:
        coefs = _scaled(lengths[pair.id], lam)
        coefs[vm.mu] = -1.0
        model.add_constr(coefs, Sense.LE, 0.0, f"mu_center[{pair.id}]", group="mu")
    coefs = _scaled(median, 1 - lam)
    coefs[vm.mu] = -1.0
    model.add_constr(coefs, Sense.LE, 0.0, "mu_median", group="mu")
    model.set_objective({vm.mu: 1.0})
    model.meta.update({"kind": "mcd1", "lambda": lam})
    model.validate()
    return model


def build_mcd2(instance: Instance, lam: float, v_star: float, relax_flows: bool = False) -> Model:
    """Stage 2: minimise H_lambda while keeping every stage-1 term at most V*.

    ``v_star = inf`` drops the caps and leaves plain CD.
    """
    _check_lambda_open(lam)
    if v_star < 0:
        raise ModelError(f"V* must be non-negative, got {v_star}")
    model, lengths, median = _build_cd_base(instance, f"MCD2_lambda{lam:g}", relax_flows)
    vm = model.vmap
    _add_gamma_rows(model, instance, lengths)
    if math.isfinite(v_star):
        cap = v_star + CAP_SLACK * max(1.0, v_star)
        for pair in instance.pairs:
            model.add_constr(_scaled(lengths[pair.id], lam), Sense.LE, cap,
                             f"cap_center[{pair.id}]", group="cap")
        model.add_constr(_scaled(median, 1 - lam), Sense.LE, cap, "cap_median", group="cap")

    objective = _scaled(median, 1 - lam)
    objective[vm.gamma] = objective.get(vm.gamma, 0.0) + lam
    model.set_objective(objective)
    model.meta.update({"kind": "mcd2", "lambda": lam, "v_star": v_star})
    model.validate()
    return model


def add_center_cap(model: Model, instance: Instance, cap: float) -> None:
    """Bound every per-pair length expression by ``cap`` (lexicographic second stage)."""
    vm = model.vmap
    for row_id in vm.rows.get("center", []):
        row = model.constraints[row_id]
        coefs = {j: c for j, c in row.coefs.items() if j != vm.gamma}
        model.add_constr(coefs, Sense.LE, cap, f"lex_{row.name}", group="lex_cap")


def expected_counts(model: Model, instance: Instance) -> Dict[str, int]:
    """Closed-form row and column counts for a CD or BCD model."""
    net = instance.network
    subs = instance.subnetworks
    kind = model.meta.get("kind")
    counts = {
        "budget": 1,
        "coupling": 2 * net.n_edges,
    }
    if kind == "bcd":
        live = [s for s in subs if not s.is_empty]
        counts.update({
            "flow": sum(len(s.nodes) - 1 for s in live),
            "capacity": sum(len(s.edges) for s in live),
            "center": len(subs),
            "dual_feasibility": sum(len(s.arcs) + 1 for s in live),
            "strong_duality": len(live),
            "mccormick": 3 * sum(len(s.edges) for s in live),
            "variables": (net.n_nodes + net.n_edges + 1 + len(subs)
                          + sum(len(s.arcs) + len(s.nodes) + 2 * len(s.edges) for s in live)),
        })
    else:
        counts.update({
            "flow": sum(len(s.nodes) for s in subs),
            "capacity": sum(len(s.edges) for s in subs),
            "center": len(subs),
            "variables": net.n_nodes + net.n_edges + 1 + sum(len(s.arcs) + 1 for s in subs),
        })
    if "delta" in model.meta:
        counts["efficiency"] = 1
    return counts


def audit(model: Model, instance: Instance) -> Dict[str, Tuple[int, int]]:
    """Compare built counts against the closed forms; returns mismatches only."""
    expected = expected_counts(model, instance)
    actual = {group: len(rows) for group, rows in model.vmap.rows.items()}
    actual["variables"] = model.n_vars
    mismatches = {k: (actual.get(k, 0), v) for k, v in expected.items() if actual.get(k, 0) != v}
    if mismatches:
        logging.warning(f"⚠️ Model {model.name} count mismatch: {mismatches}")
    return mismatches
