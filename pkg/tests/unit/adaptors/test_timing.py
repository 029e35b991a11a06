import threading

from quarticlab.adaptors.timing import SystemClockTimer
from quarticlab.application.ports.timing import Timer
from tests.adaptors.timing import FakeTimer

WAIT_S = 5.0


class ManualClockTimer(Timer):
    def __init__(self) -> None:
        super().__init__()
        self.now = 0.0

    def get_current_time(self) -> float:
        return self.now


class TestSystemClockTimer:
    def test_duration_is_not_negative(self):
        timer = SystemClockTimer()

        with timer:
            sum(range(1000))

        assert timer.duration_in_s >= 0


class TestFakeTimer:
    def test_nested_timings(self):
        timer = FakeTimer(tick_duration=10, increment=1)

        with timer:
            with timer:
                pass
            inner = timer.duration_in_s

        assert inner == 10
        assert timer.duration_in_s == 21
        assert timer.durations == [10, 21]


class TestTimerSharedBetweenThreads:
    def test_overlapping_timings_stay_separate(self):
        timer = ManualClockTimer()
        durations: dict[str, float] = {}
        entered = {"first": threading.Event(), "second": threading.Event()}
        may_exit = {"first": threading.Event(), "second": threading.Event()}

        def timed(name: str) -> None:
            with timer:
                entered[name].set()
                may_exit[name].wait(WAIT_S)
            durations[name] = timer.duration_in_s

        first = threading.Thread(target=timed, args=("first",))
        second = threading.Thread(target=timed, args=("second",))

        # first runs from 0 to 20, second from 10 to 30.
        first.start()
        assert entered["first"].wait(WAIT_S)
        timer.now = 10.0
        second.start()
        assert entered["second"].wait(WAIT_S)
        timer.now = 20.0
        may_exit["first"].set()
        first.join(WAIT_S)
        timer.now = 30.0
        may_exit["second"].set()
        second.join(WAIT_S)

        assert durations == {"first": 20.0, "second": 20.0}

    def test_a_thread_reads_only_its_own_duration(self):
        timer = ManualClockTimer()
        with timer:
            timer.now = 5.0

        seen: list[float] = []
        thread = threading.Thread(target=lambda: seen.append(timer.duration_in_s))
        thread.start()
        thread.join(WAIT_S)

        assert timer.duration_in_s == 5.0
        assert seen == [0.0]
