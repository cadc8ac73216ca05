"""
Доменные типы протокола синхронизации: заголовок, секции мегадампа, футер, микродамп.
Все типы неизменяемые, их можно свободно передавать между потоками.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

from src.protocol.errors import InvalidField

TRACKER_ID_LEN = 6
HEADER_LEN = 16
FOOTER_LEN = 6
MAX_BODY_LEN = 0xFFFF
DEFAULT_PERIOD_MINUTES = 2

FLAG_ENCRYPTED = 0x01
FLAG_SIGNED = 0x02

# Статус кадра подтверждения (микродамп от сервера): биты можно комбинировать
ACK_OK = 0x00
ACK_ENABLE_ENCRYPTION = 0x02
ACK_ERROR = 0x80


def _check_range(name: str, value: int, bits: int) -> None:
    if not 0 <= value < (1 << bits):
        raise InvalidField(f"{name}={value} не помещается в {bits} бит")


def utc_date(timestamp: int) -> str:
    """
    Календарная дата (UTC) метки времени в формате YYYY-MM-DD.
    """
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).date().isoformat()


@dataclass(frozen=True)
class TrackerId:
    """
    6-байтовый идентификатор трекера (btAddress). Печатается 12 заглавными hex-символами.
    """

    raw: bytes

    def __post_init__(self) -> None:
        if len(self.raw) != TRACKER_ID_LEN:
            raise InvalidField(f"tracker id должен быть {TRACKER_ID_LEN} байт, получено {len(self.raw)}")

    @classmethod
    def from_hex(cls, text: str) -> "TrackerId":
        value = (text or "").strip()
        if len(value) != TRACKER_ID_LEN * 2:
            raise InvalidField(f"tracker id должен быть 12 hex-символов: {text!r}")
        try:
            return cls(bytes.fromhex(value))
        except ValueError as exc:
            raise InvalidField(f"tracker id не является hex: {text!r}") from exc

    @property
    def hex(self) -> str:
        return self.raw.hex().upper()

    def __str__(self) -> str:
        return self.hex


@dataclass(frozen=True)
class FrameHeader:
    """
    Заголовок кадра. Всегда передаётся открытым текстом, даже если тело зашифровано.

    Раскладка (16 байт): device_id(6) | firmware_version(2, LE) | flags(1) | sequence(4, LE) | reserved(3)
    """

    device_id: TrackerId
    firmware_version: int  # major*100 + minor, например 781 для 7.81
    encrypted_flag: bool = False
    sequence: int = 0
    signed_flag: bool = False

    def __post_init__(self) -> None:
        _check_range("firmware_version", self.firmware_version, 16)
        _check_range("sequence", self.sequence, 32)

    @property
    def flags(self) -> int:
        return (FLAG_ENCRYPTED if self.encrypted_flag else 0) | (FLAG_SIGNED if self.signed_flag else 0)

    @property
    def firmware_label(self) -> str:
        return f"{self.firmware_version // 100}.{self.firmware_version % 100:02d}"


@dataclass(frozen=True)
class DailyRecord:
    """
    Запись дневной сводки, фиксированные 14 байт на проводе.
    """

    timestamp: int
    steps: int
    distance_mm: int
    calories: int

    def __post_init__(self) -> None:
        _check_range("timestamp", self.timestamp, 32)
        _check_range("steps", self.steps, 32)
        _check_range("distance_mm", self.distance_mm, 32)
        _check_range("calories", self.calories, 16)


@dataclass(frozen=True)
class PerMinuteSummary:
    """
    Поминутная сводка: базовое время (big-endian на проводе), длина слота в минутах
    и шаги по слотам. Слот i покрывает [base_time + i*period*60, следующий слот).
    """

    base_time: int = 0
    period_code: int = DEFAULT_PERIOD_MINUTES
    slots: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        _check_range("base_time", self.base_time, 32)
        _check_range("period_code", self.period_code, 8)
        if self.period_code == 0:
            raise InvalidField("period_code должен быть не меньше 1 минуты")
        for index, steps in enumerate(self.slots):
            _check_range(f"slots[{index}]", steps, 8)

    @classmethod
    def empty(cls) -> "PerMinuteSummary":
        return cls()

    @property
    def is_empty(self) -> bool:
        return self == PerMinuteSummary.empty()

    @property
    def period_seconds(self) -> int:
        return self.period_code * 60

    def slot_index(self, at: int) -> int:
        """
        Номер слота для момента времени at.
        """
        return (at - self.base_time) // self.period_seconds

    @property
    def total_steps(self) -> int:
        return sum(self.slots)


@dataclass(frozen=True)
class OverallSummary:
    """
    Итоговая сводка. Порядок полей на проводе ровно такой, все значения little-endian.
    """

    timestamp: int = 0
    calories: int = 0
    steps: int = 0
    distance_mm: int = 0
    elevation: int = 0
    floors: int = 0
    active_minutes: int = 0

    def __post_init__(self) -> None:
        _check_range("timestamp", self.timestamp, 32)
        _check_range("calories", self.calories, 16)
        _check_range("steps", self.steps, 32)
        _check_range("distance_mm", self.distance_mm, 32)
        _check_range("elevation", self.elevation, 16)
        _check_range("floors", self.floors, 16)
        _check_range("active_minutes", self.active_minutes, 16)

    @property
    def date(self) -> str:
        return utc_date(self.timestamp)


@dataclass(frozen=True)
class AlarmEntry:
    timestamp: int
    repeat_mask: int = 0

    def __post_init__(self) -> None:
        _check_range("timestamp", self.timestamp, 32)
        _check_range("repeat_mask", self.repeat_mask, 8)


@dataclass(frozen=True)
class AlarmSection:
    """
    Будильники; обычно секция пустая.
    """

    entries: tuple[AlarmEntry, ...] = ()


def current_day(overall: OverallSummary, daily: tuple[DailyRecord, ...]) -> OverallSummary:
    """
    Итог текущего дня. Итоговая сводка накопительная: в ней и дни, ещё лежащие
    в дневной сводке, и поминутные слоты текущего дня. Разность не бывает
    отрицательной, даже если сводку правили вручную.
    """
    return OverallSummary(
        timestamp=overall.timestamp,
        calories=max(0, overall.calories - sum(r.calories for r in daily)),
        steps=max(0, overall.steps - sum(r.steps for r in daily)),
        distance_mm=max(0, overall.distance_mm - sum(r.distance_mm for r in daily)),
        elevation=overall.elevation,
        floors=overall.floors,
        active_minutes=overall.active_minutes,
    )


@dataclass(frozen=True)
class FrameFooter:
    """
    Футер: CRC-CCITT тела и длина тела в байтах.
    Раскладка (6 байт): crc(2, LE) | payload_len(4, LE)
    """

    crc: int
    payload_len: int


@dataclass(frozen=True)
class Megadump:
    """
    Кадр синхронизации активности: заголовок, четыре секции, футер.

    footer заполняется декодером; при кодировании всегда вычисляется заново.
    """

    header: FrameHeader
    daily: tuple[DailyRecord, ...] = ()
    per_minute: PerMinuteSummary = field(default_factory=PerMinuteSummary.empty)
    overall: OverallSummary = field(default_factory=OverallSummary)
    alarms: AlarmSection = field(default_factory=AlarmSection)
    footer: FrameFooter | None = None

    @property
    def current_day(self) -> OverallSummary:
        return current_day(self.overall, self.daily)


@dataclass(frozen=True)
class Microdump:
    """
    Статусный кадр: идентификация трекера и его состояние, без данных активности.
    """

    header: FrameHeader
    status_code: int = 0
    battery_pct: int = 100
    footer: FrameFooter | None = None

    def __post_init__(self) -> None:
        _check_range("status_code", self.status_code, 8)
        _check_range("battery_pct", self.battery_pct, 8)
