import json

from utils.file_manager import FileManager
from utils.performance import PerformanceMonitor
from utils.run_ledger import run_ledger


def test_performance_monitor_window():
    perf = PerformanceMonitor(window=2)
    for k in range(3):
        perf.end_timer(perf.start_timer("solve", str(k)))
    perf.record_error("solve")
    stats = perf.get_stats()["solve"]
    assert stats["count"] == 2
    assert stats["errors"] == 1
    assert perf.end_timer("solve:unknown") == 0.0

    unbounded = PerformanceMonitor(window=None)
    for k in range(3):
        unbounded.end_timer(unbounded.start_timer("separate", str(k)))
    assert unbounded.get_stats()["separate"]["count"] == 3


def test_run_ledger_persists(tmp_path):
    path = tmp_path / "ledger.json"
    run_ledger.use_file(path)
    run_ledger.set_median_optimum("abc", 19.5)
    run_ledger.add_run({"command": "solve", "objective": 1.0})
    run_ledger.add_run({"command": "bench", "objective": 2.0})

    doc = json.loads(path.read_text(encoding="utf-8"))
    assert doc["median_optima"] == {"abc": 19.5}
    run_ledger.use_file(path)
    assert run_ledger.get_median_optimum("abc") == 19.5
    assert [r["objective"] for r in run_ledger.runs("bench")] == [2.0]
    assert len(run_ledger.runs()) == 2
    run_ledger.clear()
    assert run_ledger.get_median_optimum("abc") is None


def test_corrupt_ledger_starts_empty(tmp_path):
    path = tmp_path / "ledger.json"
    path.write_text("{not json", encoding="utf-8")
    run_ledger.use_file(path)
    assert run_ledger.runs() == []


def test_csv_is_byte_stable(tmp_path):
    manager = FileManager(tmp_path)
    rows = [{"b": 0.1, "a": None, "c": "x"}, {"a": float("nan"), "b": 2.0, "c": 3}]
    first = manager.write_csv("table.csv", rows, ("a", "b", "c")).read_bytes()
    second = manager.write_csv("table.csv", rows, ("a", "b", "c")).read_bytes()
    assert first == second
    assert first == b"a,b,c\n,0.1,x\nnan,2.0,3\n"
    assert manager.resolve("table.csv") == tmp_path / "table.csv"
    assert manager.resolve(tmp_path / "sub" / "t.csv").parent.is_dir()
