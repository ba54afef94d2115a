"""LP backend contract and the HiGHS binding through scipy.optimize.linprog."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from config.settings import Config
from core.errors import SolverError


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ERROR = "error"


@dataclass
class LpProblem:
    c: np.ndarray
    a_ub: Optional[sparse.csr_matrix]
    b_ub: Optional[np.ndarray]
    a_eq: Optional[sparse.csr_matrix]
    b_eq: Optional[np.ndarray]
    lb: np.ndarray
    ub: np.ndarray


@dataclass
class LpResult:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    # scipy sign convention: d(objective)/d(rhs); <= rows of a minimisation give values <= 0
    duals_ub: Optional[np.ndarray] = None
    duals_eq: Optional[np.ndarray] = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == LpStatus.OPTIMAL


class LpBackend(Protocol):
    name: str

    def solve(self, problem: LpProblem) -> LpResult:
        ...


_STATUS = {0: LpStatus.OPTIMAL, 2: LpStatus.INFEASIBLE, 3: LpStatus.UNBOUNDED}


def _nonempty(matrix, rhs):
    if matrix is None or matrix.shape[0] == 0:
        return None, None
    return matrix, rhs


class HighsBackend:
    """linprog with a HiGHS method; retries with dual simplex on numerical trouble."""

    FALLBACKS = ("highs-ds", "highs-ipm")

    def __init__(self, method: Optional[str] = None):
        self.method = method or Config.LP_METHOD
        self.name = f"scipy-{self.method}"

    def _run(self, problem: LpProblem, method: str):
        a_ub, b_ub = _nonempty(problem.a_ub, problem.b_ub)
        a_eq, b_eq = _nonempty(problem.a_eq, problem.b_eq)
        bounds = [
            (None if np.isneginf(lo) else float(lo), None if np.isposinf(hi) else float(hi))
            for lo, hi in zip(problem.lb, problem.ub)
        ]
        return linprog(problem.c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                       bounds=bounds, method=method)

    def solve(self, problem: LpProblem) -> LpResult:
        methods = [self.method] + [m for m in self.FALLBACKS if m != self.method]
        res = None
        for method in methods:
            try:
                res = self._run(problem, method)
            except ValueError as e:
                raise SolverError(f"LP backend rejected the problem: {e}") from e
            if res.status in _STATUS:
                break
            logging.warning(f"⚠️ LP method {method} ended with status {res.status} ({res.message}); retrying")
        status = _STATUS.get(res.status, LpStatus.ERROR)
        if status != LpStatus.OPTIMAL:
            return LpResult(status, message=res.message)

        n_ub = 0 if problem.a_ub is None else problem.a_ub.shape[0]
        n_eq = 0 if problem.a_eq is None else problem.a_eq.shape[0]
        duals_ub = np.zeros(n_ub)
        duals_eq = np.zeros(n_eq)
        if n_ub and getattr(res, "ineqlin", None) is not None:
            duals_ub = np.asarray(res.ineqlin.marginals, dtype=float)
        if n_eq and getattr(res, "eqlin", None) is not None:
            duals_eq = np.asarray(res.eqlin.marginals, dtype=float)
        return LpResult(status, np.asarray(res.x, dtype=float), float(res.fun),
                        duals_ub, duals_eq, res.message)


def default_backend() -> LpBackend:
    return HighsBackend()
