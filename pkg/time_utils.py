import functools
import logging
import signal
import time


class TimeoutException(Exception):
    def __init__(self, value='Timed Out'):
        self.value = value

    def __str__(self):
        return repr(self.value)


def break_after(seconds=None, fallback_func=None):
    """
    Aborts the wrapped call after `seconds` (wall clock, SIGALRM based, main thread only).
    On time-out the fallback is called with the same arguments; without a fallback the
    TimeoutException propagates. A falsy `seconds` disables the limit.
    """
    def timeout_handler(signum, frame):   # Custom signal handler
        raise TimeoutException()

    def function(function):
        @functools.wraps(function)
        def wrapper(*args, **kwargs):
            if not seconds:
                return function(*args, **kwargs)
            previous = signal.signal(signal.SIGALRM, timeout_handler)
            signal.setitimer(signal.ITIMER_REAL, seconds)
            try:
                return function(*args, **kwargs)
            except TimeoutException:
                logger = logging.getLogger(__name__)
                if fallback_func is None:
                    logger.error(f'{function.__qualname__} took longer than {seconds}s.')
                    raise
                logger.warning(f'{function.__qualname__} took longer than {seconds}s. Falling back.')
                return fallback_func(*args, **kwargs)
            finally:
                signal.setitimer(signal.ITIMER_REAL, 0)  # Clear alarm
                signal.signal(signal.SIGALRM, previous)
        return wrapper
    return function


class Stopwatch:
    def __init__(self):
        self.start = time.perf_counter()

    def elapsed_ms(self) -> float:
        return (time.perf_counter() - self.start) * 1000.0
