"""Benchmark sweep over generated instances, with A/B/C block classification."""

import logging
import uuid
from collections import defaultdict
from typing import Callable, Dict, Iterable, List, Optional, Sequence

from core.errors import SolverError
from core.instances import GenParams, Instance, generate
from solvers.benders import solve_benders
from solvers.milp_model import build_cd
from solvers.mip_engine import BnbParams, MipResult, MipStatus, solve_mip
from utils.file_manager import file_manager
from utils.performance import PerformanceMonitor
from utils.run_ledger import run_ledger

BENCH_COLUMNS = ("bench", "instance", "alpha", "seed", "lambda", "method", "status",
                 "objective", "bound", "gap", "time", "nodes", "cuts")
SUMMARY_COLUMNS = ("block", "method", "runs", "mean_time", "mean_gap", "mean_cuts")

BENCH_METHODS: Dict[str, Callable[[Instance, float, BnbParams], MipResult]] = {
    "cd": lambda instance, lam, params: solve_mip(build_cd(instance, lam), params),
    "benders": lambda instance, lam, params: solve_benders(instance, lam, params).mip,
}


def classify_blocks(records: Iterable[Dict], methods: Sequence[str]) -> Dict[tuple, str]:
    """Block per (instance, lambda): A solved by every method, B by none, C by some."""
    solved = defaultdict(set)
    seen = set()
    for r in records:
        key = (r["instance"], r["lambda"])
        seen.add(key)
        if r["status"] == MipStatus.OPTIMAL.value:
            solved[key].add(r["method"])
    blocks = {}
    for key in seen:
        count = len(solved[key] & set(methods))
        blocks[key] = "A" if count == len(methods) else ("B" if count == 0 else "C")
    return blocks


def summarize(records: List[Dict], methods: Sequence[str]) -> List[Dict[str, object]]:
    blocks = classify_blocks(records, methods)
    grouped = defaultdict(list)
    for r in records:
        grouped[(blocks[(r["instance"], r["lambda"])], r["method"])].append(r)
    summary = []
    for block in "ABC":
        for method in methods:
            runs = grouped.get((block, method), [])
            if not runs:
                continue
            gaps = [r["gap"] for r in runs if r["gap"] is not None]
            summary.append({
                "block": block,
                "method": method,
                "runs": len(runs),
                "mean_time": round(sum(r["time"] for r in runs) / len(runs), 3),
                "mean_gap": round(sum(gaps) / len(gaps), 9) if gaps else None,
                "mean_cuts": round(sum(r["cuts"] for r in runs) / len(runs), 2),
            })
    return summary


def run_bench(n: int, alphas: Sequence[float], lambdas: Sequence[float], seeds: int,
              methods: Sequence[str] = ("cd", "benders"), params: Optional[BnbParams] = None,
              output="bench.csv") -> List[Dict[str, object]]:
    """Solve every (seed, alpha, lambda) with every method; returns the block summary."""
    params = params or BnbParams()
    bench_id = uuid.uuid4().hex[:8]
    perf = PerformanceMonitor()

    for seed in range(seeds):
        for alpha in alphas:
            instance = generate(GenParams(n, alpha=alpha, seed=seed))
            for lam in lambdas:
                for method in methods:
                    timer = perf.start_timer(method, f"{instance.name}:{lam:g}")
                    try:
                        result = BENCH_METHODS[method](instance, lam, params)
                    except SolverError as e:
                        perf.record_error(method)
                        logging.error(f"❌ {method} failed on {instance.name} lambda={lam:g}: {e}")
                        result = None
                    elapsed = perf.end_timer(timer)
                    run_ledger.add_run({
                        "command": "bench",
                        "bench": bench_id,
                        "instance": instance.name,
                        "alpha": alpha,
                        "seed": seed,
                        "lambda": lam,
                        "method": method,
                        "status": result.status.value if result else "error",
                        "objective": result.objective if result and result.has_solution else None,
                        "bound": result.bound if result else None,
                        "gap": result.gap if result and result.has_solution else None,
                        "time": round(elapsed, 3),
                        "nodes": result.nodes if result else 0,
                        "cuts": result.cuts if result else 0,
                    })

    records = [r for r in run_ledger.runs("bench") if r.get("bench") == bench_id]
    file_manager.write_csv(output, records, BENCH_COLUMNS)
    summary = summarize(records, methods)
    file_manager.write_csv(_summary_path(output),
                           summary, SUMMARY_COLUMNS)
    for method, stats in perf.get_stats().items():
        logging.info(f"📊 {method}: {stats['count']} runs, avg {stats['avg_time']:.2f}s, "
                     f"{stats['errors']} errors")
    return summary


def _summary_path(output) -> str:
    text = str(output)
    return text[:-4] + "_summary.csv" if text.endswith(".csv") else text + "_summary.csv"
