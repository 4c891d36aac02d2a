"""
Thread worker pool for grid evaluations with deterministic result ordering
"""
import concurrent.futures
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Generic, Iterable, List, Optional, TypeVar

import psutil

from bjpa.errors import ErrorDetail
from bjpa.settings import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class PoolStatus(Enum):
    """Status of worker pool"""
    IDLE = "idle"
    RUNNING = "running"
    STOPPED = "stopped"


@dataclass
class PointOutcome(Generic[R]):
    """Result of one evaluation: either a value or an error detail"""
    index: int
    value: Optional[R] = None
    error: Optional[ErrorDetail] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class WorkerPoolStats:
    """Statistics for one pool run"""
    submitted: int = 0
    succeeded: int = 0
    failed: int = 0
    elapsed_seconds: float = 0.0
    errors_by_type: Dict[str, int] = field(default_factory=dict)

    @property
    def success_rate(self) -> float:
        """Success rate as percentage"""
        if self.submitted == 0:
            return 0.0
        return (self.succeeded / self.submitted) * 100

    def to_dict(self) -> Dict[str, Any]:
        return {
            "submitted": self.submitted,
            "succeeded": self.succeeded,
            "failed": self.failed,
            "success_rate": self.success_rate,
            "elapsed_seconds": self.elapsed_seconds,
            "errors_by_type": dict(self.errors_by_type),
        }


def default_worker_count() -> int:
    if settings.default_workers:
        return settings.default_workers
    return psutil.cpu_count(logical=True) or 1


class WorkerPool:
    """
    Evaluates a function over many points.

    Failures never abort the run: each failing point becomes a PointOutcome
    carrying an ErrorDetail. Outcomes are returned in submission order, so
    results do not depend on the worker count.
    """

    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = max(1, max_workers or default_worker_count())
        self.status = PoolStatus.IDLE
        self.stats = WorkerPoolStats()

    def map_ordered(self, func: Callable[[T], R], items: Iterable[T],
                    context: Optional[Callable[[T], Dict[str, Any]]] = None) -> List[PointOutcome[R]]:
        items = list(items)
        self.status = PoolStatus.RUNNING
        self.stats = WorkerPoolStats(submitted=len(items))
        start = time.perf_counter()

        def run(index: int) -> PointOutcome[R]:
            item = items[index]
            try:
                return PointOutcome(index=index, value=func(item))
            except Exception as exc:
                detail = ErrorDetail.from_exception(exc, context(item) if context else None)
                return PointOutcome(index=index, error=detail)

        if self.max_workers == 1 or len(items) <= 1:
            outcomes = [run(index) for index in range(len(items))]
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                outcomes = list(executor.map(run, range(len(items))))

        for outcome in outcomes:
            if outcome.ok:
                self.stats.succeeded += 1
            else:
                self.stats.failed += 1
                name = outcome.error.exception_type
                self.stats.errors_by_type[name] = self.stats.errors_by_type.get(name, 0) + 1

        self.stats.elapsed_seconds = time.perf_counter() - start
        self.status = PoolStatus.STOPPED
        logger.info("Pool run finished", extra={"event_type": "pool_run", "workers": self.max_workers,
                                                **self.stats.to_dict()})
        return outcomes
