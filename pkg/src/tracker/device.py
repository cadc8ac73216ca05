"""
==============================================================================
TRACKER SIMULATOR - накопление активности, генерация кадров, отладочный порт
==============================================================================
Все операции чистые: принимают TrackerState и возвращают новое состояние.
Кадры строятся из записей в EEPROM, поэтому правка EEPROM через отладочный
порт сразу отражается в следующей синхронизации.
==============================================================================
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from src.crypto.errors import NonceReuse
from src.crypto.frames import seal_frame
from src.crypto.suite import DeviceKey
from src.protocol.frames import decode_microdump, encode_microdump, encode_sections
from src.protocol.models import (
    ACK_ENABLE_ENCRYPTION,
    ACK_ERROR,
    ACK_OK,
    DEFAULT_PERIOD_MINUTES,
    DailyRecord,
    FrameHeader,
    Microdump,
    OverallSummary,
    PerMinuteSummary,
    TrackerId,
    current_day,
    utc_date,
)
from src.tracker.eeprom import (
    DAILY_CAPACITY,
    ENCRYPTION_FLAG,
    EEPROM_SIZE,
    ActivityRecords,
    EepromImage,
    sensitive_region_at,
)
from src.tracker.errors import (
    ClockRegression,
    DebugDisabled,
    OutOfRange,
    ProtectionDowngrade,
    ReadProtected,
    ResponseMismatch,
)

logger = logging.getLogger(__name__)

FIRMWARE_PLAINTEXT = 764  # 7.64: открытый текст, пока сервер не попросит шифровать
FIRMWARE_ENCRYPTED = 781  # 7.81: шифрует с завода

STRIDE_MM = 762
CALORIES_PER_100_STEPS = 4
MAX_SLOT_STEPS = 0xFF


@dataclass(frozen=True)
class PendingActivity:
    """
    Активность, ещё не подтверждённая сервером.
    """

    steps: int = 0
    distance_mm: int = 0
    calories: int = 0

    @property
    def is_empty(self) -> bool:
        return self == PendingActivity()


@dataclass(frozen=True)
class TrackerState:
    eeprom: EepromImage
    clock: int = 0
    pending: PendingActivity = field(default_factory=PendingActivity)
    sequence: int = 1
    last_sent_sequence: int = 0
    battery_pct: int = 100

    @property
    def tracker_id(self) -> TrackerId:
        return self.eeprom.serial

    @property
    def protection_level(self) -> int:
        return self.eeprom.protection_level

    @property
    def activity(self) -> ActivityRecords:
        return self.eeprom.read_activity()


def new_tracker(
    serial: TrackerId,
    key: DeviceKey,
    encrypted: bool,
    *,
    firmware_version: int | None = None,
    signed: bool = False,
    protection_level: int = 0,
    clock: int = 0,
) -> TrackerState:
    """
    Трекер с заводским образом EEPROM. По умолчанию защита памяти выключена (уровень 0).
    """
    if firmware_version is None:
        firmware_version = FIRMWARE_ENCRYPTED if encrypted else FIRMWARE_PLAINTEXT
    image = EepromImage.blank(
        serial,
        key,
        firmware_version=firmware_version,
        encrypted=encrypted,
        signed=signed,
        protection_level=protection_level,
    )
    logger.debug("Новый трекер %s, прошивка %s, ключ %s", serial, firmware_version, key.fingerprint)
    return TrackerState(eeprom=image, clock=clock)


# region activity ---------------------------------------------------------------
SECONDS_PER_DAY = 86_400


def _calories(steps: int) -> int:
    return steps * CALORIES_PER_100_STEPS // 100


def _without_days(overall: OverallSummary, days: tuple[DailyRecord, ...]) -> OverallSummary:
    """
    Вычитает дни из накопительной итоговой сводки.
    """
    reduced = current_day(overall, days)
    return replace(overall, steps=reduced.steps, distance_mm=reduced.distance_mm, calories=reduced.calories)


def _rollover(records: ActivityRecords) -> ActivityRecords:
    """
    Закрывает прошедший день: его итог уходит в дневную сводку, поминутная сводка обнуляется.
    Итоговая сводка остаётся накопительной (сумма дневных записей и слотов текущего дня).
    """
    today = current_day(records.overall, records.daily)
    day = DailyRecord(
        timestamp=today.timestamp,
        steps=today.steps,
        distance_mm=today.distance_mm,
        calories=today.calories,
    )
    daily = records.daily + (day,)
    overall = records.overall
    if len(daily) > DAILY_CAPACITY:
        dropped, daily = daily[:-DAILY_CAPACITY], daily[-DAILY_CAPACITY:]
        overall = _without_days(overall, dropped)
        logger.warning("Дневная сводка заполнена: забыто дней %d, шагов %d", len(dropped), sum(d.steps for d in dropped))
    return replace(
        records,
        daily=daily,
        per_minute=PerMinuteSummary.empty(),
        overall=replace(overall, active_minutes=0),
    )


def _spill(slots: list[int], index: int, last: int, steps: int) -> int:
    """
    Раскладывает шаги по слотам текущего дня: сначала слот index, затем более ранние
    слоты, затем более поздние вплоть до last. Слот вмещает не больше 255 шагов.

    Возвращает, сколько шагов удалось разложить.
    """
    if index > last:
        return 0
    if len(slots) <= index:
        slots.extend([0] * (index + 1 - len(slots)))
    order = [index, *range(index - 1, -1, -1), *range(index + 1, last + 1)]
    remaining = steps
    for i in order:
        if not remaining:
            break
        if i >= len(slots):
            slots.extend([0] * (i + 1 - len(slots)))
        taken = min(MAX_SLOT_STEPS - slots[i], remaining)
        slots[i] += taken
        remaining -= taken
    return steps - remaining


def record_steps(t: TrackerState, at: int, steps: int) -> TrackerState:
    """
    Записывает шаги в момент времени at (Unix-секунды, UTC).

    Инвариант: overall.steps равно сумме слотов поминутной сводки и шагов дневных
    записей (если EEPROM не правили через отладочный порт). Слоты не выходят за
    пределы текущего дня; шаги сверх их ёмкости отбрасываются с предупреждением.

    Raises:
        ClockRegression: at раньше текущего времени трекера
        ValueError: отрицательное количество шагов
    """
    if at < t.clock:
        raise ClockRegression(t.clock, at)
    if steps < 0:
        raise ValueError(f"количество шагов не может быть отрицательным: {steps}")
    if steps == 0:
        return replace(t, clock=at)

    records = t.eeprom.read_activity()
    if records.overall.timestamp and utc_date(at) != records.overall.date:
        records = _rollover(records)

    per_minute = records.per_minute
    if per_minute.is_empty:
        period_s = DEFAULT_PERIOD_MINUTES * 60
        per_minute = PerMinuteSummary(base_time=at - at % period_s, period_code=DEFAULT_PERIOD_MINUTES)
    day_end = at - at % SECONDS_PER_DAY + SECONDS_PER_DAY
    slots = list(per_minute.slots)
    recorded = _spill(slots, max(0, per_minute.slot_index(at)), per_minute.slot_index(day_end - 1), steps)
    if recorded < steps:
        logger.warning(
            "Трекер %s: поминутная сводка за %s заполнена, отброшено шагов %d",
            t.tracker_id,
            utc_date(at),
            steps - recorded,
        )
    per_minute = replace(per_minute, slots=tuple(slots))

    overall = records.overall
    distance = min(recorded * STRIDE_MM, 0xFFFFFFFF - overall.distance_mm)
    calories = min(_calories(overall.steps + recorded) - _calories(overall.steps), 0xFFFF - overall.calories)
    overall = replace(
        overall,
        timestamp=at,
        steps=overall.steps + recorded,
        distance_mm=overall.distance_mm + distance,
        calories=overall.calories + calories,
        active_minutes=min(0xFFFF, sum(1 for s in slots if s) * per_minute.period_code),
    )
    image = t.eeprom.with_activity(replace(records, per_minute=per_minute, overall=overall))
    pending = PendingActivity(
        steps=t.pending.steps + recorded,
        distance_mm=t.pending.distance_mm + distance,
        calories=t.pending.calories + calories,
    )
    return replace(t, eeprom=image, clock=at, pending=pending)


# endregion -----------------------------------------------------------------------


# region frames -----------------------------------------------------------------
def _header(t: TrackerState) -> FrameHeader:
    return FrameHeader(
        device_id=t.eeprom.serial,
        firmware_version=t.eeprom.firmware_version,
        sequence=t.sequence,
    )


def generate_megadump(t: TrackerState) -> tuple[TrackerState, bytes]:
    """
    Строит мегадамп из записей EEPROM. Тело шифруется, если байт 0x0046 равен 01,
    и подписывается, если байт 0x0047 равен 01. Заголовок всегда открыт.

    Возвращает состояние с увеличенным номером сообщения и сам кадр.

    Raises:
        NonceReuse: номер сообщения уже использован (например, после отката состояния)
        CorruptImage: область активности не разбирается
    """
    image = t.eeprom
    encrypt = image.encryption_flag
    sign = image.signature_flag
    if t.sequence <= t.last_sent_sequence:
        raise NonceReuse(t.sequence)
    records = image.read_activity()
    body = encode_sections(records.daily, records.per_minute, records.overall, records.alarms)
    key = image.device_key if (encrypt or sign) else None
    wire = seal_frame(_header(t), body, key, encrypt=encrypt, sign=sign)
    logger.debug(
        "Трекер %s: мегадамп seq=%d, %d байт, encrypted=%s signed=%s",
        image.serial,
        t.sequence,
        len(wire),
        encrypt,
        sign,
    )
    return replace(t, sequence=t.sequence + 1, last_sent_sequence=t.sequence), wire


def generate_microdump(t: TrackerState) -> bytes:
    """
    Статусный кадр для validate-запроса: идентификатор, прошивка, заряд. Всегда открытый.
    """
    return encode_microdump(Microdump(header=_header(t), status_code=ACK_OK, battery_pct=t.battery_pct))


def apply_server_response(t: TrackerState, response: bytes) -> TrackerState:
    """
    Применяет кадр подтверждения от сервера.

    Подтверждение очищает pending и выгруженные дневные записи (их итоги
    вычитаются из накопительной итоговой сводки); ошибка оставляет всё как есть.
    Команда enable-encryption включает шифрование (байт 0x0046).

    Raises:
        ResponseMismatch: ответ адресован другому трекеру
        BadCrc, TruncatedFrame: кадр подтверждения повреждён
    """
    ack = decode_microdump(response)
    if ack.header.device_id != t.tracker_id:
        raise ResponseMismatch(f"ответ для {ack.header.device_id}, а трекер {t.tracker_id}")

    image = t.eeprom
    if ack.status_code & ACK_ENABLE_ENCRYPTION and not image.encryption_flag:
        image = image.with_flag(ENCRYPTION_FLAG, True)
        logger.info("Трекер %s: сервер включил шифрование", t.tracker_id)
    if ack.status_code & ACK_ERROR:
        return replace(t, eeprom=image)

    records = image.read_activity()
    overall = _without_days(records.overall, records.daily)
    image = image.with_activity(replace(records, daily=(), overall=overall))
    return replace(t, eeprom=image, pending=PendingActivity())


# endregion -----------------------------------------------------------------------


# region debug port ---------------------------------------------------------------
def debug_read(t: TrackerState, address: int, length: int) -> bytes:
    """
    Чтение EEPROM через отладочный порт.

    Raises:
        DebugDisabled: уровень защиты 2
        OutOfRange: диапазон за пределами 8192 байт
        ReadProtected: уровень 1 и диапазон задевает ключ или область активности
    """
    level = t.protection_level
    if level >= 2:
        raise DebugDisabled(level, "чтение")
    if address < 0 or length < 0 or address + length > EEPROM_SIZE:
        raise OutOfRange(address, length)
    if level == 1:
        region = sensitive_region_at(address, length)
        if region is not None:
            raise ReadProtected(address, region.name)
    return t.eeprom.read(address, length)


def debug_write(t: TrackerState, address: int, payload: bytes) -> TrackerState:
    """
    Запись EEPROM через отладочный порт; возможна только на уровне защиты 0.

    Raises:
        DebugDisabled: уровень защиты 1 или 2
        OutOfRange: диапазон за пределами 8192 байт
    """
    level = t.protection_level
    if level >= 1:
        raise DebugDisabled(level, "запись")
    image = t.eeprom.write(address, payload)
    logger.info("Трекер %s: отладочная запись %d байт по адресу 0x%04X", t.tracker_id, len(payload), address)
    return replace(t, eeprom=image)


def raise_protection(t: TrackerState, level: int) -> TrackerState:
    """
    Повышает уровень защиты памяти. Понижение невозможно (уровень 2 необратим).

    Raises:
        ProtectionDowngrade: level ниже текущего
    """
    if level not in (0, 1, 2):
        raise ValueError(f"уровень защиты должен быть 0, 1 или 2: {level}")
    if level < t.protection_level:
        raise ProtectionDowngrade(t.protection_level, level)
    return replace(t, eeprom=replace(t.eeprom, protection_level=level))


# endregion -----------------------------------------------------------------------
