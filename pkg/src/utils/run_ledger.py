import json
import logging
import threading
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from config.settings import Config


class RunLedger:
    """Machine-readable run ledger: median-optimum cache plus one record per solve."""

    _instance = None
    _initialized = False

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if not self._initialized:
            self._lock = threading.Lock()
            self.use_file(Config.DATA_DIR / "run_ledger.json")
            self._initialized = True

    def use_file(self, path) -> None:
        """Point the ledger at another file and load it."""
        self.ledger_file = Path(path)
        self._data: Dict[str, Any] = {"median_optima": {}, "runs": []}
        self._load_ledger()

    def _load_ledger(self):
        """Load ledger from JSON."""
        try:
            if self.ledger_file.exists():
                with open(self.ledger_file, 'r', encoding='utf-8') as f:
                    data = json.load(f)
                self._data["median_optima"] = dict(data.get("median_optima", {}))
                self._data["runs"] = list(data.get("runs", []))
        except (json.JSONDecodeError, IOError) as e:
            logging.error(f"❌ Error loading run ledger: {e}")

    def _save_ledger(self):
        """Save ledger to JSON."""
        try:
            self.ledger_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.ledger_file, 'w', encoding='utf-8') as f:
                json.dump(self._data, f, indent=4)
        except IOError as e:
            logging.error(f"❌ Error saving run ledger: {e}")

    def get_median_optimum(self, instance_key: str) -> Optional[float]:
        with self._lock:
            value = self._data["median_optima"].get(instance_key)
            return None if value is None else float(value)

    def set_median_optimum(self, instance_key: str, value: float):
        with self._lock:
            self._data["median_optima"][instance_key] = float(value)
            self._save_ledger()
        logging.info(f"💾 Cached median optimum {value:.9g} for instance {instance_key}")

    def add_run(self, record: Dict[str, Any]):
        """Append a run record; oldest records drop past the size cap."""
        with self._lock:
            entry = dict(record)
            entry.setdefault("timestamp", time.time())
            self._data["runs"].append(entry)
            max_runs = getattr(Config, "MAX_LEDGER_RUNS", 5000)
            if len(self._data["runs"]) > max_runs:
                self._data["runs"].pop(0)
            self._save_ledger()

    def runs(self, command: Optional[str] = None) -> List[Dict[str, Any]]:
        with self._lock:
            return [r for r in self._data["runs"] if command is None or r.get("command") == command]

    def clear(self):
        with self._lock:
            self._data = {"median_optima": {}, "runs": []}
            self._save_ledger()


run_ledger = RunLedger()
