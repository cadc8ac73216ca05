"""
Исключения кодека кадров трекера.
Все ошибки разбора/сборки наследуются от FrameError, чтобы верхние слои
(сервер, CLI) могли ловить их одним блоком.
"""

from __future__ import annotations


class FrameError(Exception):
    """
    Базовая ошибка кодека кадров.
    """


class MalformedEscape(FrameError):
    """
    Байт DB внутри секции не продолжен DC/DD, либо поток оборвался на середине escape-пары.
    """

    def __init__(self, offset: int, message: str = "") -> None:
        self.offset = offset
        super().__init__(message or f"некорректная escape-последовательность на смещении {offset}")


class TruncatedFrame(FrameError):
    """
    Кадр короче, чем требуют заголовок, футер или заявленная длина полезной нагрузки.
    """


class BadCrc(FrameError):
    """
    Контрольная сумма футера не совпала с вычисленной по телу кадра.

    Attributes:
        expected: CRC, вычисленная по фактическому телу кадра
        found: CRC, заявленная в футере
    """

    def __init__(self, expected: int, found: int) -> None:
        self.expected = expected
        self.found = found
        super().__init__(f"CRC mismatch: expected 0x{expected:04X}, found 0x{found:04X}")


class UnknownSectionLayout(FrameError):
    """
    Тело кадра не раскладывается ровно на четыре известные секции.
    Неизвестные секции не пропускаются: декодер отказывает целиком.
    """


class SectionOrderViolation(FrameError):
    """
    Записи секции нарушают порядок (метки времени дневной сводки должны строго возрастать).
    """


class OversizePayload(FrameError):
    """
    Тело кадра длиннее 65 535 байт.
    """

    def __init__(self, size: int) -> None:
        self.size = size
        super().__init__(f"тело кадра {size} байт превышает лимит 65535")


class InvalidField(FrameError):
    """
    Значение поля не помещается в свою ширину на проводе.
    """


class EncryptedPayload(FrameError):
    """
    Тело кадра зашифровано; для разбора секций нужен ключ устройства.
    """


class MalformedEnvelope(FrameError):
    """
    XML-конверт или ответ сервера не разбирается: нет нужных элементов, битый Base64 или tracker-id.
    """
