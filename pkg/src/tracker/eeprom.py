"""
==============================================================================
EEPROM MODEL - образ 8 КиБ EEPROM трекера и его карта памяти
==============================================================================
| смещение | длина | поле                                        |
|----------|-------|---------------------------------------------|
| 0x0020   | 6     | serial_id (tracker id)                      |
| 0x0030   | 16    | device_key                                  |
| 0x0040   | 2     | firmware_version (LE)                       |
| 0x0046   | 1     | encryption_flag (01 = шифровать)            |
| 0x0047   | 1     | signature_flag (01 = подписывать)           |
| 0x0100   | 20    | overall summary (steps по адресу 0x0106)    |
| 0x0120   | 2+990 | daily: длина (LE) + записи                  |
| 0x0500   | 2+5886| per-minute: длина (LE) + содержимое секции  |
| 0x1C00   | 2+766 | alarms: длина (LE) + записи                 |

Область активности 0x0100..0x1F00 хранит содержимое секций в том же формате,
что и мегадамп (без экранирования и разделителей).
==============================================================================
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

from construct import ConstructError

from src.crypto.suite import DeviceKey
from src.protocol.errors import FrameError
from src.protocol.frames import (
    DAILY_RECORD_LEN,
    OVERALL_LEN,
    decode_alarms,
    decode_daily,
    decode_overall,
    decode_per_minute,
    encode_alarms,
    encode_daily,
    encode_overall,
    encode_per_minute,
)
from src.protocol.models import AlarmSection, DailyRecord, OverallSummary, PerMinuteSummary, TrackerId
from src.tracker.errors import ActivityOverflow, CorruptImage, OutOfRange

EEPROM_SIZE = 8192
PROTECTION_LEVELS = (0, 1, 2)

FLAG_ON = 0x01
FLAG_OFF = 0x00


@dataclass(frozen=True)
class MemoryRegion:
    name: str
    start: int
    length: int
    sensitive: bool = False  # закрыт для чтения на уровне защиты 1

    @property
    def end(self) -> int:
        return self.start + self.length

    def overlaps(self, address: int, length: int) -> bool:
        return address < self.end and self.start < address + length


SERIAL_ID = MemoryRegion("serial_id", 0x0020, 6)
DEVICE_KEY = MemoryRegion("device_key", 0x0030, 16, sensitive=True)
FIRMWARE_VERSION = MemoryRegion("firmware_version", 0x0040, 2)
ENCRYPTION_FLAG = MemoryRegion("encryption_flag", 0x0046, 1)
SIGNATURE_FLAG = MemoryRegion("signature_flag", 0x0047, 1)
ACTIVITY = MemoryRegion("activity", 0x0100, 0x1E00, sensitive=True)

OVERALL = MemoryRegion("overall", 0x0100, OVERALL_LEN)
DAILY = MemoryRegion("daily", 0x0120, 0x0500 - 0x0120)
PER_MINUTE = MemoryRegion("per_minute", 0x0500, 0x1C00 - 0x0500)
ALARMS = MemoryRegion("alarms", 0x1C00, 0x1F00 - 0x1C00)
OVERALL_STEPS_ADDR = OVERALL.start + 6

MEMORY_MAP: tuple[MemoryRegion, ...] = (
    SERIAL_ID,
    DEVICE_KEY,
    FIRMWARE_VERSION,
    ENCRYPTION_FLAG,
    SIGNATURE_FLAG,
    ACTIVITY,
)

_LENGTH_PREFIX = struct.Struct("<H")
# столько дневных записей помещается в область; при переполнении трекер забывает самые старые дни
DAILY_CAPACITY = (DAILY.length - _LENGTH_PREFIX.size) // DAILY_RECORD_LEN


@dataclass(frozen=True)
class ActivityRecords:
    daily: tuple[DailyRecord, ...] = ()
    per_minute: PerMinuteSummary = PerMinuteSummary()
    overall: OverallSummary = OverallSummary()
    alarms: AlarmSection = AlarmSection()


@dataclass(frozen=True)
class EepromImage:
    """
    Неизменяемый образ EEPROM. Запись возвращает новый образ.

    protection_level - настройка микроконтроллера, а не байт EEPROM.
    """

    data: bytes
    protection_level: int = 0

    def __post_init__(self) -> None:
        if len(self.data) != EEPROM_SIZE:
            raise CorruptImage(f"образ EEPROM должен быть {EEPROM_SIZE} байт, получено {len(self.data)}")
        if self.protection_level not in PROTECTION_LEVELS:
            raise ValueError(f"уровень защиты должен быть 0, 1 или 2: {self.protection_level}")

    # region raw access ---------------------------------------------------------
    def read(self, address: int, length: int) -> bytes:
        if address < 0 or length < 0 or address + length > EEPROM_SIZE:
            raise OutOfRange(address, length)
        return self.data[address:address + length]

    def write(self, address: int, payload: bytes) -> "EepromImage":
        payload = bytes(payload)
        if address < 0 or address + len(payload) > EEPROM_SIZE:
            raise OutOfRange(address, len(payload))
        data = self.data[:address] + payload + self.data[address + len(payload):]
        return EepromImage(data=data, protection_level=self.protection_level)

    def region(self, region: MemoryRegion) -> bytes:
        return self.read(region.start, region.length)

    # endregion -----------------------------------------------------------------

    # region fields -------------------------------------------------------------
    @property
    def serial(self) -> TrackerId:
        return TrackerId(self.region(SERIAL_ID))

    @property
    def device_key(self) -> DeviceKey:
        return DeviceKey(self.region(DEVICE_KEY))

    @property
    def firmware_version(self) -> int:
        return struct.unpack("<H", self.region(FIRMWARE_VERSION))[0]

    @property
    def encryption_flag(self) -> bool:
        return self.region(ENCRYPTION_FLAG)[0] == FLAG_ON

    @property
    def signature_flag(self) -> bool:
        return self.region(SIGNATURE_FLAG)[0] == FLAG_ON

    def with_flag(self, region: MemoryRegion, enabled: bool) -> "EepromImage":
        return self.write(region.start, bytes((FLAG_ON if enabled else FLAG_OFF,)))

    # endregion -----------------------------------------------------------------

    # region activity -----------------------------------------------------------
    def _prefixed(self, region: MemoryRegion) -> bytes:
        raw = self.region(region)
        (length,) = _LENGTH_PREFIX.unpack(raw[:_LENGTH_PREFIX.size])
        if length > region.length - _LENGTH_PREFIX.size:
            raise CorruptImage(f"длина {region.name} {length} больше области")
        return raw[_LENGTH_PREFIX.size:_LENGTH_PREFIX.size + length]

    def read_activity(self) -> ActivityRecords:
        """
        Raises:
            CorruptImage: область активности не разбирается декодерами секций
        """
        try:
            return ActivityRecords(
                daily=decode_daily(self._prefixed(DAILY)),
                per_minute=decode_per_minute(self._prefixed(PER_MINUTE)),
                overall=decode_overall(self.region(OVERALL)),
                alarms=decode_alarms(self._prefixed(ALARMS)),
            )
        except (FrameError, ConstructError) as exc:
            raise CorruptImage(f"область активности не разбирается: {exc}") from exc

    def with_activity(self, records: ActivityRecords) -> "EepromImage":
        """
        Raises:
            ActivityOverflow: записи не помещаются в свою область
        """
        image = self.write(OVERALL.start, encode_overall(records.overall))
        for region, content in (
            (DAILY, encode_daily(records.daily)),
            (PER_MINUTE, encode_per_minute(records.per_minute)),
            (ALARMS, encode_alarms(records.alarms)),
        ):
            if len(content) > region.length - _LENGTH_PREFIX.size:
                raise ActivityOverflow(f"{region.name}: {len(content)} байт не помещаются в область")
            image = image.write(region.start, _LENGTH_PREFIX.pack(len(content)) + content)
        return image

    # endregion -----------------------------------------------------------------

    @classmethod
    def blank(
        cls,
        serial: TrackerId,
        key: DeviceKey,
        *,
        firmware_version: int,
        encrypted: bool,
        signed: bool = False,
        protection_level: int = 0,
    ) -> "EepromImage":
        image = cls(data=bytes(EEPROM_SIZE), protection_level=protection_level)
        image = image.write(SERIAL_ID.start, serial.raw)
        image = image.write(DEVICE_KEY.start, key.raw)
        image = image.write(FIRMWARE_VERSION.start, struct.pack("<H", firmware_version))
        image = image.with_flag(ENCRYPTION_FLAG, encrypted).with_flag(SIGNATURE_FLAG, signed)
        return image.with_activity(ActivityRecords())

    @classmethod
    def load(cls, path: str | Path, protection_level: int = 0) -> "EepromImage":
        return cls(data=Path(path).read_bytes(), protection_level=protection_level)

    def save(self, path: str | Path) -> None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(self.data)


def sensitive_region_at(address: int, length: int) -> MemoryRegion | None:
    for region in MEMORY_MAP:
        if region.sensitive and region.overlaps(address, length):
            return region
    return None
