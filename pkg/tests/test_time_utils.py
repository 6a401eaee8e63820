import time

import pytest

from time_utils import Stopwatch, TimeoutException, break_after


def _slow(value):
    time.sleep(2.0)
    return value


def test_fallback_on_timeout():
    wrapped = break_after(0.05, fallback_func=lambda value: -value)(_slow)
    assert wrapped(3) == -3


def test_timeout_without_fallback():
    with pytest.raises(TimeoutException):
        break_after(0.05)(_slow)(3)


def test_no_limit():
    assert break_after(None)(lambda value: value + 1)(1) == 2
    assert break_after(1.0)(lambda value: value + 1)(1) == 2


def test_stopwatch():
    watch = Stopwatch()
    time.sleep(0.01)
    assert watch.elapsed_ms() >= 9.0
