from functools import wraps
import logging
import time
from typing import List, Optional, Tuple

from django.conf import settings


monitor_logger = logging.getLogger('perfmonitor')


class PerfMonitor:
    def __init__(self, name: Optional[str] = None):
        self.checkpoints: List[Tuple[str, float]] = []
        self.name = name
        self.previous = time.perf_counter()

    def start(self) -> None:
        self.previous = time.perf_counter()
        self.checkpoint(f"start {self.name}")

    def end(self) -> None:
        self.checkpoint(f"end {self.name}")

    def checkpoint(self, tag: str) -> None:
        now = time.perf_counter()
        self.checkpoints.append((tag, now - self.previous))
        self.previous = now

    def total(self) -> float:
        return sum(t for _, t in self.checkpoints)

    def formatted(self, decimals: int = 2) -> str:
        lines = [f"{tag}: {elapsed:.{decimals}f}" for tag, elapsed in self.checkpoints]
        if len(self.checkpoints) > 1:
            lines.append(f"Total: {self.total():.{decimals}f}")
        return "\n".join(lines)

    def __str__(self) -> str:
        return self.formatted(5)


_active: List[PerfMonitor] = []


def checkpoint(tag: str) -> None:
    """Records a phase boundary in the innermost monitored call, if any."""
    if _active:
        _active[-1].checkpoint(tag)


def monitorperf(func):
    """Decorator that times a numeric entry point and its phases.
    Output goes to the perfmonitor logger. The setting
    ENABLE_PERFORMANCE_MONITORING is read at call time, so tests can
    toggle it with override_settings.

    Usage:
    @monitorperf
    def factorize(...):
        # build the M-table
        checkpoint("M-table")
        # select lambda
        checkpoint("lambda selection")
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        if not settings.ENABLE_PERFORMANCE_MONITORING:
            return func(*args, **kwargs)

        perfmonitor = PerfMonitor(func.__name__)
        _active.append(perfmonitor)
        perfmonitor.start()
        try:
            return func(*args, **kwargs)
        finally:
            perfmonitor.end()
            _active.pop()
            monitor_logger.info(str(perfmonitor))

    return wrapper
