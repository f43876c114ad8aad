"""
App State Module
Manages process-wide runtime state: the thread budget and parallel helpers.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV_VAR = "ELASTICA_THREADS"


class AppState:
    """
    Holds state that should be consistent across the library and the CLI.
    The thread budget is read from the environment once and cached.
    """

    _threads: Optional[int] = None

    @staticmethod
    def thread_count() -> int:
        """
        Get the number of worker threads available for internal parallelism.

        Returns:
            Value of ELASTICA_THREADS if it is a positive integer, otherwise
            the hardware thread count
        """
        if AppState._threads is None:
            default = os.cpu_count() or 1
            raw = os.environ.get(THREADS_ENV_VAR)
            threads = default
            if raw:
                try:
                    threads = int(raw)
                except ValueError:
                    threads = 0
                if threads < 1:
                    logger.warning(
                        f"Ignoring {THREADS_ENV_VAR}={raw!r}, using {default} threads"
                    )
                    threads = default
            AppState._threads = threads
        return AppState._threads

    @staticmethod
    def set_thread_count(threads: int):
        """
        Override the thread budget for the rest of the process.

        Args:
            threads: Number of worker threads (at least 1)
        """
        AppState._threads = max(1, int(threads))

    @staticmethod
    def clear():
        """Forget the cached thread budget so the environment is read again."""
        AppState._threads = None

    @staticmethod
    def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        """
        Apply a function to every item, concurrently when the budget allows.

        Results are returned in input order, so reductions over them are
        deterministic regardless of the thread count.

        Args:
            fn: Pure function to apply
            items: Inputs

        Returns:
            List of results, one per input
        """
        threads = min(AppState.thread_count(), len(items))
        if threads <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
