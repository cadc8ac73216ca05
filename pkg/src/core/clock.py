"""
Часы сервера. Вынесены в протокол, чтобы тесты и сценарии могли двигать время вручную.
"""

from __future__ import annotations

import threading
import time
from typing import Protocol


class Clock(Protocol):
    def now(self) -> int:
        """Текущее время в Unix-секундах."""
        ...


class SystemClock:
    def now(self) -> int:
        return int(time.time())


class ManualClock:
    """
    Часы, которые идут только по команде.
    """

    def __init__(self, start: int = 0) -> None:
        self._now = int(start)
        self._lock = threading.Lock()

    def now(self) -> int:
        with self._lock:
            return self._now

    def advance(self, seconds: int) -> int:
        with self._lock:
            self._now += int(seconds)
            return self._now

    def set(self, value: int) -> None:
        with self._lock:
            self._now = int(value)


def clock_from_settings(source: str, start: int) -> Clock:
    if source == "manual":
        return ManualClock(start)
    return SystemClock()
