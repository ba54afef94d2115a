import time
from collections import defaultdict
from typing import Any, Dict, Optional


class PerformanceMonitor:
    """Wall-clock timers per operation (build, solve, separate, ...)"""

    def __init__(self, window: Optional[int] = 500):
        self.metrics = defaultdict(list)
        self.start_times = {}
        self.error_counts = defaultdict(int)
        self.window = window

    def start_timer(self, operation: str, identifier: str = "default") -> str:
        """Start timer."""
        key = f"{operation}:{identifier}"
        self.start_times[key] = time.perf_counter()
        return key

    def end_timer(self, key: str) -> float:
        """End timer."""
        if key in self.start_times:
            duration = time.perf_counter() - self.start_times.pop(key)
            operation = key.split(':')[0]
            self.metrics[operation].append(duration)

            if self.window is not None and len(self.metrics[operation]) > self.window:
                self.metrics[operation].pop(0)

            return duration
        return 0.0

    def record_error(self, operation: str):
        """Record error."""
        self.error_counts[operation] += 1

    def get_avg_time(self, operation: str) -> float:
        times = self.metrics[operation]
        return sum(times) / len(times) if times else 0.0

    def get_total_time(self, operation: str) -> float:
        return sum(self.metrics[operation])

    def get_stats(self) -> Dict[str, Any]:
        """Per-operation average, total, count and error tally"""
        stats = {}
        for operation, times in self.metrics.items():
            if times:
                stats[operation] = {
                    'avg_time': self.get_avg_time(operation),
                    'total_time': self.get_total_time(operation),
                    'count': len(times),
                    'errors': self.error_counts.get(operation, 0)
                }
        return stats
