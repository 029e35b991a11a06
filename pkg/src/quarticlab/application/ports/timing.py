from __future__ import annotations

import abc
import threading
from types import TracebackType


class Timer(abc.ABC):
    """
    Context manager to allow easy timing of solver runs.

    This is an abstraction that needs to be implemented using a subclass
    that implements the get_current_time method.

    Usage:

        with timer:
            solve_something()
        logger.info(f"Solved in {timer.duration_in_s:.2f}s")

    One timer may be shared by worker threads: each thread keeps its own stack of start
    times and reads back its own last duration.
    """

    def __init__(self) -> None:
        self._local = threading.local()

    @property
    def _start_stack(self) -> list[float]:
        # Nested solves (e.g. a harness timing a Stieltjes run) push onto the same stack.
        try:
            return self._local.start_stack
        except AttributeError:
            self._local.start_stack = []
            return self._local.start_stack

    @property
    def duration_in_s(self) -> float:
        return getattr(self._local, "duration_in_s", 0.0)

    @duration_in_s.setter
    def duration_in_s(self, value: float) -> None:
        self._local.duration_in_s = value

    def __enter__(self) -> Timer:
        self._start_stack.append(self.get_current_time())
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: TracebackType | None,
    ) -> None:
        end = self.get_current_time()
        start = self._start_stack.pop()
        self.duration_in_s = end - start

    @abc.abstractmethod
    def get_current_time(self) -> float:
        """
        Return a monotonic time in seconds as a floating point number.
        """
        raise NotImplementedError
