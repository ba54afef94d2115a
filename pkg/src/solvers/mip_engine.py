"""Best-bound branch-and-bound over an LP backend, with a lazy-cut hook."""

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from config.settings import Config
from core.errors import ModelError, SolverError
from solvers.lp_backend import LpBackend, LpProblem, LpStatus, default_backend
from solvers.milp_model import Constraint, Model


class MipStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time_limit"


@dataclass
class BnbParams:
    gap: float = Config.MIP_GAP
    int_tol: float = Config.INT_TOL
    time_limit: float = Config.TIME_LIMIT
    root_cut_rounds: int = Config.ROOT_CUT_ROUNDS
    node_cut_rounds: int = Config.NODE_CUT_ROUNDS
    fractional_cuts: bool = Config.FRACTIONAL_CUTS
    node_selection: str = "best-bound"
    branching: str = "most-fractional"

    def validate(self) -> None:
        if self.gap <= 0 or self.int_tol <= 0:
            raise ModelError("gap and integrality tolerances must be positive")
        if self.time_limit <= 0:
            raise ModelError("time limit must be positive")
        if self.root_cut_rounds < 0 or self.node_cut_rounds < 1:
            raise ModelError("cut round limits must be non-negative (root) and positive (node)")
        if self.node_selection != "best-bound" or self.branching != "most-fractional":
            raise ModelError("only best-bound selection with most-fractional branching is available")


@dataclass(frozen=True)
class NodeContext:
    node_id: int
    depth: int
    is_integer: bool
    round: int

    @property
    def is_root(self) -> bool:
        return self.node_id == 0


# values of all model variables in, violated rows out
Separator = Callable[[np.ndarray, NodeContext], List[Constraint]]

# LP values in, a complete feasible point (lazy rows included) or None out
Heuristic = Callable[[np.ndarray, NodeContext], Optional[np.ndarray]]


@dataclass
class MipResult:
    status: MipStatus
    values: Optional[np.ndarray]
    objective: float
    bound: float
    nodes: int
    cuts: int
    wall_time: float
    cut_pool: List[Constraint] = field(default_factory=list)
    bound_trace: List[float] = field(default_factory=list)
    max_residual: float = 0.0
    heuristic_incumbents: int = 0

    @property
    def has_solution(self) -> bool:
        return self.values is not None

    @property
    def gap(self) -> float:
        if not self.has_solution:
            return math.inf
        return abs(self.objective - self.bound) / max(1.0, abs(self.objective))

    def summary(self) -> Dict[str, object]:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "bound": self.bound,
            "gap": self.gap,
            "nodes": self.nodes,
            "cuts": self.cuts,
            "time": round(self.wall_time, 3),
        }


@dataclass
class _Node:
    id: int
    depth: int
    bound: float
    lb: np.ndarray
    ub: np.ndarray

    def key(self) -> Tuple[float, int, int]:
        return (self.bound, -self.depth, self.id)


class _CutPool:
    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.rows: List[Constraint] = []
        self._seen = set()
        self._matrix: Optional[sparse.csr_matrix] = None
        self._rhs: Optional[np.ndarray] = None

    def add(self, cuts: List[Constraint], values: np.ndarray, tol: float) -> int:
        added = 0
        for cut in cuts:
            sig = cut.signature()
            if sig in self._seen or cut.violation(values) <= tol:
                continue
            self._seen.add(sig)
            self.rows.append(cut)
            added += 1
        if added:
            self._matrix = None
        return added

    def matrices(self, model: Model) -> Tuple[sparse.csr_matrix, np.ndarray, sparse.csr_matrix, np.ndarray]:
        if self._matrix is None:
            a_ub, b_ub, a_eq, b_eq = model.to_matrices(self.rows)
            self._matrix, self._rhs = a_ub, b_ub
            self._eq = (a_eq, b_eq)
        return self._matrix, self._rhs, self._eq[0], self._eq[1]


def _fractional_candidates(values: np.ndarray, integer: np.ndarray, tol: float) -> np.ndarray:
    frac = np.abs(values - np.round(values))
    return np.where(integer & (frac > tol))[0]


def _branch_variable(values: np.ndarray, candidates: np.ndarray, priorities: np.ndarray) -> int:
    """Highest priority first, then most fractional, then lowest id."""
    best = None
    best_key = None
    for j in candidates:
        f = values[j] - math.floor(values[j])
        key = (-priorities[j], -min(f, 1 - f), j)
        if best_key is None or key < best_key:
            best, best_key = int(j), key
    return best


def solve_mip(model: Model, params: Optional[BnbParams] = None,
              lazy_separator: Optional[Separator] = None,
              backend: Optional[LpBackend] = None,
              heuristic: Optional[Heuristic] = None,
              start: Optional[np.ndarray] = None) -> MipResult:
    """Best-bound branch and bound on the integer variables of ``model``.

    The separator is called at every integer-feasible LP optimum, at the root on
    fractional points for ``root_cut_rounds`` rounds, and at fractional nodes
    when ``fractional_cuts`` is set. Returned rows are kept in a global pool.

    ``start`` and the points returned by ``heuristic`` become incumbents when
    they are integral and satisfy the model and the pool. The engine cannot see
    rows the separator has not produced yet, so both must be feasible for the
    complete lazy system. The heuristic runs on every integer point the
    separator cuts off and on the last LP point of every node.
    """
    params = params or BnbParams()
    params.validate()
    model.validate()
    backend = backend or default_backend()
    started = time.time()

    c = model.objective_vector
    integer = model.integer_mask
    priorities = model.priorities
    pool = _CutPool(model.n_vars)

    incumbent: Optional[np.ndarray] = None
    incumbent_obj = math.inf
    pruned_floor = math.inf
    bound_trace: List[float] = []
    nodes_done = 0
    next_id = 1
    timed_out = False
    heuristic_hits = 0

    root = _Node(0, 0, -math.inf, model.lower_bounds, model.upper_bounds)
    heap: List[Tuple[Tuple[float, int, int], _Node]] = [(root.key(), root)]

    def prune_level() -> float:
        if incumbent is None:
            return math.inf
        return incumbent_obj - params.gap * max(1.0, abs(incumbent_obj))

    def push(depth: int, bound: float, lb: np.ndarray, ub: np.ndarray) -> None:
        nonlocal next_id
        child = _Node(next_id, depth, bound, lb, ub)
        next_id += 1
        heapq.heappush(heap, (child.key(), child))

    def offer(candidate: Optional[np.ndarray], source: str) -> bool:
        nonlocal incumbent, incumbent_obj, heuristic_hits
        if candidate is None:
            return False
        candidate = np.asarray(candidate, dtype=float)
        if candidate.shape != c.shape or len(_fractional_candidates(candidate, integer, params.int_tol)):
            return False
        if model.max_violation(candidate, pool.rows) > Config.RESIDUAL_TOL:
            logging.debug(f"{source} point rejected: violates the model or the cut pool")
            return False
        obj = float(c @ candidate) + model.obj_constant
        if obj >= incumbent_obj:
            return False
        incumbent, incumbent_obj = candidate.copy(), obj
        heuristic_hits += 1
        logging.debug(f"🎯 {source} incumbent {obj:.9g}")
        return True

    offer(start, "start")

    while heap:
        if time.time() - started > params.time_limit:
            timed_out = True
            break
        _, node = heapq.heappop(heap)
        if node.bound >= prune_level():
            pruned_floor = min(pruned_floor, node.bound)
            continue
        bound_trace.append(max(bound_trace[-1], node.bound) if bound_trace else node.bound)
        nodes_done += 1

        rounds = 0
        values = None
        obj = math.inf
        limit_hit = False
        while True:
            a_ub, b_ub, a_eq, b_eq = pool.matrices(model)
            lp = backend.solve(LpProblem(c, a_ub, b_ub, a_eq, b_eq, node.lb, node.ub))
            if lp.status == LpStatus.INFEASIBLE:
                values = None
                break
            if lp.status == LpStatus.UNBOUNDED:
                raise SolverError("LP relaxation is unbounded", node_id=node.id)
            if not lp.ok:
                raise SolverError(f"LP backend failed: {lp.message}", node_id=node.id)
            values = lp.x
            obj = lp.objective + model.obj_constant
            if obj >= prune_level():
                pruned_floor = min(pruned_floor, obj)
                values = None
                break
            if lazy_separator is None:
                break

            is_integer = len(_fractional_candidates(values, integer, params.int_tol)) == 0
            if is_integer or params.fractional_cuts:
                limit = params.node_cut_rounds
            elif node.id == 0:
                limit = params.root_cut_rounds
            else:
                break
            if rounds >= limit:
                limit_hit = is_integer
                break
            ctx = NodeContext(node.id, node.depth, is_integer, rounds)
            added = pool.add(lazy_separator(values, ctx), values, Config.CUT_VIOLATION_TOL)
            rounds += 1
            if added == 0:
                break
            if is_integer and heuristic is not None:
                offer(heuristic(values, ctx), "heuristic")
            logging.debug(f"🔁 node {node.id} round {rounds}: +{added} cuts (pool {len(pool.rows)})")

        if values is None:
            logging.debug(f"node {node.id} pruned (bound {node.bound:.6g})")
            continue
        candidates = _fractional_candidates(values, integer, params.int_tol)
        if heuristic is not None and (limit_hit or len(candidates) > 0):
            offer(heuristic(values, NodeContext(node.id, node.depth, len(candidates) == 0, rounds)), "heuristic")
        if obj >= prune_level():
            pruned_floor = min(pruned_floor, obj)
            continue
        if limit_hit:
            # integer point still cut off; revisit once the pool has moved on
            push(node.depth, obj, node.lb, node.ub)
            continue

        if len(candidates) == 0:
            if obj < incumbent_obj:
                incumbent, incumbent_obj = values.copy(), obj
                logging.debug(f"node {node.id} new incumbent {obj:.9g}")
            continue

        j = _branch_variable(values, candidates, priorities)
        logging.debug(f"node {node.id} bound {obj:.9g} incumbent {incumbent_obj:.9g} "
                      f"cuts {len(pool.rows)} branch on {model.variables[j].name}={values[j]:.4f}")
        down_ub = node.ub.copy()
        down_ub[j] = math.floor(values[j])
        up_lb = node.lb.copy()
        up_lb[j] = math.ceil(values[j])
        push(node.depth + 1, obj, node.lb, down_ub)
        push(node.depth + 1, obj, up_lb, node.ub)

    open_bound = min((n.bound for _, n in heap), default=math.inf)
    wall = time.time() - started
    if incumbent is None:
        status = MipStatus.TIME_LIMIT if timed_out else MipStatus.INFEASIBLE
        result = MipResult(status, None, math.inf, open_bound if timed_out else math.inf,
                           nodes_done, len(pool.rows), wall, list(pool.rows), bound_trace)
    else:
        bound = min(incumbent_obj, open_bound, pruned_floor)
        status = MipStatus.FEASIBLE if timed_out else MipStatus.OPTIMAL
        residual = model.max_violation(incumbent, pool.rows)
        if residual > Config.RESIDUAL_TOL:
            logging.warning(f"⚠️ Incumbent residual {residual:.3g} exceeds {Config.RESIDUAL_TOL:g}")
        result = MipResult(status, incumbent, incumbent_obj, bound, nodes_done, len(pool.rows), wall,
                           list(pool.rows), bound_trace, residual, heuristic_hits)

    emoji = "✅" if result.status == MipStatus.OPTIMAL else "⚠️"
    logging.info(f"{emoji} {model.name}: {result.status.value} obj={result.objective:.9g} "
                 f"nodes={result.nodes} cuts={result.cuts} time={wall:.2f}s")
    return result
