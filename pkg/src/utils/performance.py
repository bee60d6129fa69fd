"""Stage timing for pipeline runs."""

import logging
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List

logger = logging.getLogger(__name__)


class PerformanceMonitor:
    """Wall-clock timings of a stage and its steps, plus item counts.

    Steps timed inside an open timer are recorded as `<outer>/<step>`, so
    the timings file shows where a stage spent its time.
    """

    def __init__(self):
        self._timings: Dict[str, List[float]] = {}
        self._counters: Dict[str, int] = {}
        self._open: List[str] = []

    @contextmanager
    def timed(self, name: str) -> Iterator[None]:
        key = "/".join(self._open + [name])
        self._open.append(name)
        start = time.perf_counter()
        try:
            yield
        finally:
            duration = time.perf_counter() - start
            self._open.pop()
            self._timings.setdefault(key, []).append(duration)
            logger.debug(f"{key} took {duration:.3f}s")

    def count(self, name: str, amount: int = 1):
        self._counters[name] = self._counters.get(name, 0) + int(amount)

    def total(self, name: str) -> float:
        """Summed duration of a timer, 0.0 if it never ran."""

        return sum(self._timings.get(name, []))

    def get_stats(self) -> Dict[str, Any]:
        return {
            "timings": {
                name: {"total_s": sum(durations), "calls": len(durations)}
                for name, durations in self._timings.items()
            },
            "counters": dict(self._counters)
        }

    def reset(self):
        self._timings.clear()
        self._counters.clear()
        self._open.clear()
