import time

from quarticlab.application.ports.timing import Timer


class SystemClockTimer(Timer):
    def get_current_time(self) -> float:
        return time.perf_counter()
