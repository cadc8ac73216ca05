"""
Исключения симулятора трекера.
"""

from __future__ import annotations


class TrackerError(Exception):
    """
    Базовая ошибка симулятора трекера.
    """


class OutOfRange(TrackerError):
    def __init__(self, address: int, length: int) -> None:
        self.address = address
        self.length = length
        super().__init__(f"диапазон 0x{address:04X}+{length} выходит за пределы EEPROM (8192 байт)")


class ReadProtected(TrackerError):
    """
    Уровень защиты 1: чтение ключа и области активности через отладочный порт запрещено.
    """

    def __init__(self, address: int, region: str) -> None:
        self.address = address
        self.region = region
        super().__init__(f"чтение 0x{address:04X} ({region}) запрещено защитой уровня 1")


class DebugDisabled(TrackerError):
    """
    Отладочный порт недоступен на текущем уровне защиты.
    """

    def __init__(self, level: int, operation: str) -> None:
        self.level = level
        self.operation = operation
        super().__init__(f"{operation} через отладочный порт недоступна на уровне защиты {level}")


class ProtectionDowngrade(TrackerError):
    def __init__(self, current: int, requested: int) -> None:
        self.current = current
        self.requested = requested
        super().__init__(f"уровень защиты нельзя понизить: {current} -> {requested}")


class ClockRegression(TrackerError):
    def __init__(self, clock: int, at: int) -> None:
        self.clock = clock
        self.at = at
        super().__init__(f"время не может идти назад: {at} < {clock}")


class ResponseMismatch(TrackerError):
    """
    Ответ сервера адресован другому трекеру.
    """


class ActivityOverflow(TrackerError):
    """
    Область активности EEPROM переполнена.
    """


class CorruptImage(TrackerError):
    """
    Образ EEPROM неверного размера или область активности не разбирается.
    """
