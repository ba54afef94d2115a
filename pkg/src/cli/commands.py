"""Command-line surface: generate, solve, benders, pareto, evaluate, bench."""

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from cli.bench import run_bench
from config.settings import Config
from core.errors import ModelError, SolverError, ValidationError
from core.instances import GenParams, Instance, generate, load_fixture, read_instance, write_instance
from core.objectives import METRIC_COLUMNS, evaluate, metrics_row
from solvers.benders import CUT_LEDGER_COLUMNS, solve_benders
from solvers.mip_engine import BnbParams
from solvers.pareto import coverage_gaps, parametrize_po2, write_frontier
from solvers.solution import (METHODS, DesignSolution, efficiency_spec, read_design, solve_design,
                              write_solution)
from utils.file_manager import file_manager
from utils.run_ledger import run_ledger

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_IO = 4

COMMANDS = ("generate", "solve", "benders", "pareto", "evaluate", "bench")
SOLVE_METHODS = METHODS + ("benders",)
EVALUATE_COLUMNS = METRIC_COLUMNS + ("F_m", "F_c", "H_lambda", "design_hash")


@dataclass
class RunConfig:
    command: str
    instance: Optional[Path] = None
    fixture: Optional[str] = None
    lam: float = 0.0
    delta: Optional[float] = None
    alpha: Optional[float] = None
    budget: Optional[float] = None
    method: str = "cd"
    gap: float = Config.MIP_GAP
    time_limit: float = Config.TIME_LIMIT
    seed: int = 0
    output: Optional[Path] = None
    # generate / bench
    n: int = Config.BENCH_NODES
    count: int = 1
    seeds: int = Config.BENCH_SEEDS
    alphas: Sequence[float] = Config.BENCH_ALPHAS
    lambdas: Sequence[float] = Config.BENCH_LAMBDAS
    # evaluate
    deltas: Sequence[Optional[float]] = (None,)
    designs: List[Path] = field(default_factory=list)
    # benders / pareto
    workers: int = Config.SEPARATION_WORKERS
    cuts: Optional[Path] = None
    tolerance: float = 1e-3
    design_dir: Optional[Path] = None

    @property
    def params(self) -> BnbParams:
        return BnbParams(gap=self.gap, time_limit=self.time_limit)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ModelError(f"unknown command '{self.command}'")
        if self.command in ("solve", "benders", "pareto", "evaluate") and not (self.instance or self.fixture):
            raise ModelError(f"'{self.command}' needs --instance or --fixture")
        if self.command == "solve" and self.method not in SOLVE_METHODS:
            raise ModelError(f"unknown method '{self.method}'; choose from {', '.join(SOLVE_METHODS)}")
        if self.lam < 0:
            raise ModelError(f"lambda must be non-negative, got {self.lam}")
        uses_benders = self.command == "benders" or (self.command == "solve" and self.method == "benders")
        if uses_benders and self.lam > 1:
            raise ModelError("Benders decomposition requires lambda in [0,1]; use --method bcd")
        if self.command == "solve" and self.method == "cd" and self.lam > 1:
            raise ModelError("lambda > 1 needs the bilevel model; use --method bcd")
        if self.delta is not None and self.delta < 0:
            raise ModelError(f"delta must be non-negative, got {self.delta}")
        if self.alpha is not None and self.budget is not None:
            raise ModelError("give either --alpha or --budget, not both")
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise ModelError(f"alpha must lie in (0,1], got {self.alpha}")
        if self.budget is not None and self.budget < 0:
            raise ModelError(f"budget must be non-negative, got {self.budget}")
        if self.command in ("generate", "bench") and self.n < 2:
            raise ModelError(f"--n must be at least 2, got {self.n}")
        if self.command == "generate" and self.count < 1:
            raise ModelError(f"--count must be positive, got {self.count}")


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _delta_list(text: str) -> List[Optional[float]]:
    return [None if v.strip() in ("-", "none") else float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="centdian", description="Cent-dian network design solvers")
    parser.add_argument("--version", action="version", version=f"%(prog)s {Config.VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    def instance_args(p):
        p.add_argument("--instance", type=Path, help="instance file")
        p.add_argument("--fixture", help="embedded instance (prop2)")
        p.add_argument("--alpha", type=float, help="override the budget factor")
        p.add_argument("--budget", type=float, help="override the absolute budget")

    def solver_args(p):
        p.add_argument("--gap", type=float, default=Config.MIP_GAP)
        p.add_argument("--time-limit", dest="time_limit", type=float, default=Config.TIME_LIMIT)

    p = sub.add_parser("generate", help="write random planar instances")
    p.add_argument("--n", type=int, default=Config.BENCH_NODES)
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1, help="instances with consecutive seeds")
    p.add_argument("--output", type=Path, default=Config.DATA_DIR / "instances")

    p = sub.add_parser("solve", help="solve one cent-dian model")
    instance_args(p)
    solver_args(p)
    p.add_argument("--method", choices=SOLVE_METHODS, default="cd")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--delta", type=float)
    p.add_argument("--output", type=Path, help="solution file")

    p = sub.add_parser("benders", help="branch-and-Benders-cut")
    instance_args(p)
    solver_args(p)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--delta", type=float)
    p.add_argument("--workers", type=int, default=Config.SEPARATION_WORKERS)
    p.add_argument("--cuts", type=Path, help="cut ledger CSV")
    p.add_argument("--output", type=Path, help="solution file")

    p = sub.add_parser("pareto", help="trace PO2 by bisection on lambda")
    instance_args(p)
    solver_args(p)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--output", type=Path, default=Path("frontier.csv"))
    p.add_argument("--designs", dest="design_dir", type=Path, help="directory for design files")

    p = sub.add_parser("evaluate", help="quality metrics per (lambda, delta) or per stored design")
    instance_args(p)
    solver_args(p)
    p.add_argument("--lambda", dest="lambdas", type=_float_list, default=[0.0],
                   help="comma-separated lambda values")
    p.add_argument("--delta", dest="deltas", type=_delta_list, default=[None],
                   help="comma-separated delta values, '-' for none")
    p.add_argument("--design", dest="designs", type=Path, action="append", default=[])
    p.add_argument("--output", type=Path, default=Path("metrics.csv"))

    p = sub.add_parser("bench", help="benchmark sweep with A/B/C blocks")
    solver_args(p)
    p.add_argument("--n", type=int, default=Config.BENCH_NODES)
    p.add_argument("--seeds", type=int, default=Config.BENCH_SEEDS)
    p.add_argument("--alpha", dest="alphas", type=_float_list, default=list(Config.BENCH_ALPHAS))
    p.add_argument("--lambda", dest="lambdas", type=_float_list, default=list(Config.BENCH_LAMBDAS))
    p.add_argument("--output", type=Path, default=Path("bench.csv"))
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    known = RunConfig.__dataclass_fields__
    values = {k: v for k, v in vars(args).items() if k in known and v is not None}
    return RunConfig(**values)


def load_instance(config: RunConfig) -> Instance:
    instance = load_fixture(config.fixture) if config.fixture else read_instance(config.instance)
    if config.alpha is not None:
        instance = instance.with_alpha(config.alpha)
    if config.budget is not None:
        instance = instance.with_budget(config.budget)
    return instance


def _format_edges(solution: DesignSolution) -> str:
    return " ".join(f"{{{a},{b}}}" for a, b in solution.edge_labels) or "(none)"


def _report(solution: DesignSolution) -> None:
    ev = solution.evaluation
    print(f"design edges: {_format_edges(solution)}")
    print(f"design nodes: {{{','.join(str(i) for i in solution.node_labels)}}}")
    print(f"F_m={ev.f_median:.9g} F_c={ev.f_center:.9g} H_lambda={ev.h_lambda:.9g} "
          f"objective={solution.objective:.9g} status={solution.status}")


def _record(config: RunConfig, instance: Instance, solution: DesignSolution, started: float) -> None:
    run_ledger.add_run({
        "command": config.command,
        "instance": instance.key,
        "method": solution.method,
        "lambda": solution.lam,
        "delta": solution.delta,
        "objective": solution.objective,
        "status": solution.status,
        "design": solution.design_hash,
        "time": round(time.time() - started, 3),
    })


def _cmd_generate(config: RunConfig) -> int:
    out_dir = Path(config.output or Config.DATA_DIR / "instances")
    for seed in range(config.seed, config.seed + config.count):
        params = GenParams(config.n, alpha=config.alpha if config.alpha is not None else 0.4, seed=seed)
        instance = generate(params)
        path = write_instance(instance, out_dir / f"{instance.name}.json")
        print(path)
    return EXIT_OK


def _cmd_solve(config: RunConfig) -> int:
    instance = load_instance(config)
    started = time.time()
    if config.method == "benders":
        solution = _benders_solution(config, instance)
    else:
        solution = solve_design(instance, config.lam, config.method, config.delta, config.params)
    _report(solution)
    if config.output:
        write_solution(solution, config.output)
    _record(config, instance, solution, started)
    return EXIT_OK


def _benders_solution(config: RunConfig, instance: Instance) -> DesignSolution:
    efficiency = efficiency_spec(instance, config.delta, config.params)
    result = solve_benders(instance, config.lam, config.params, efficiency, config.workers)
    if result.solution is None:
        raise SolverError(f"Benders ended without a solution ({result.mip.status.value})")
    if config.cuts:
        file_manager.write_csv(config.cuts, result.ledger_rows(), CUT_LEDGER_COLUMNS)
    return result.solution


def _cmd_benders(config: RunConfig) -> int:
    instance = load_instance(config)
    started = time.time()
    solution = _benders_solution(config, instance)
    _report(solution)
    print(f"cuts={solution.stats.get('cuts', 0)} nodes={solution.stats.get('nodes', 0)} "
          f"pairs on private mode={solution.stats.get('pairs_private', 0)}")
    if config.output:
        write_solution(solution, config.output)
    _record(config, instance, solution, started)
    return EXIT_OK


def _cmd_pareto(config: RunConfig) -> int:
    instance = load_instance(config)
    points = parametrize_po2(instance, config.tolerance, config.params)
    path = write_frontier(points, config.output or "frontier.csv", config.design_dir)
    for p in points:
        print(f"lambda [{p.lam_lo:.6f}, {p.lam_hi:.6f}]  F_c={p.f_center:.9g}  F_m={p.f_median:.9g}  "
              f"{p.solution.design_hash}")
    for lo, hi in coverage_gaps(points):
        print(f"uncovered lambda range ({lo:.6f}, {hi:.6f})")
    print(f"{len(points)} distinct designs -> {path}")
    return EXIT_OK


def _evaluation_row(instance: Instance, solution_or_subgraph, lam: float, delta: Optional[float]) -> Dict:
    if isinstance(solution_or_subgraph, DesignSolution):
        ev = evaluate(instance, solution_or_subgraph.subgraph, lam)
        design = solution_or_subgraph.design_hash
    else:
        ev = evaluate(instance, solution_or_subgraph, lam)
        design = DesignSolution.from_subgraph(instance, solution_or_subgraph, lam, "stored").design_hash
    row = metrics_row(ev, lam, delta)
    row.update({"F_m": ev.f_median, "F_c": ev.f_center, "H_lambda": ev.h_lambda, "design_hash": design})
    return row


def _cmd_evaluate(config: RunConfig) -> int:
    instance = load_instance(config)
    rows = []
    if config.designs:
        for path in config.designs:
            subgraph = read_design(path, instance)
            for lam in config.lambdas:
                rows.append(_evaluation_row(instance, subgraph, lam, None))
    else:
        for lam in config.lambdas:
            method = "cd" if lam <= 1 else "bcd"
            for delta in config.deltas:
                solution = solve_design(instance, lam, method, delta, config.params)
                rows.append(_evaluation_row(instance, solution, lam, delta))
    path = file_manager.write_csv(config.output or "metrics.csv", rows, EVALUATE_COLUMNS)
    for row in rows:
        print("  ".join(f"{k}={row[k]}" for k in EVALUATE_COLUMNS))
    print(f"{len(rows)} rows -> {path}")
    return EXIT_OK


def _cmd_bench(config: RunConfig) -> int:
    summary = run_bench(config.n, config.alphas, config.lambdas, config.seeds,
                        params=config.params, output=config.output or "bench.csv")
    for row in summary:
        print("  ".join(f"{k}={v}" for k, v in row.items()))
    return EXIT_OK


HANDLERS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "benders": _cmd_benders,
    "pareto": _cmd_pareto,
    "evaluate": _cmd_evaluate,
    "bench": _cmd_bench,
}


def run(config: RunConfig) -> int:
    """Execute one command; errors become exit codes."""
    try:
        config.validate()
        return HANDLERS[config.command](config)
    except ModelError as e:
        logging.error(f"❌ {e}")
        return EXIT_USAGE
    except SolverError as e:
        logging.error(f"❌ Solver failure: {e}")
        return EXIT_SOLVER
    except (OSError, ValidationError) as e:
        logging.error(f"❌ IO failure: {e}")
        return EXIT_IO


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
