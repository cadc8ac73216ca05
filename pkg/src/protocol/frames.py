"""
==============================================================================
FRAME CODEC - сборка и разбор микродампов и мегадампов
==============================================================================
Кадр на проводе: заголовок (16 байт) | тело | футер (6 байт).

Тело мегадампа - ровно четыре секции в порядке daily, per-minute, overall, alarms.
Каждая секция начинается с C0 CD DB DC, заканчивается C0, содержимое экранировано.
CRC и payload_len футера считаются по телу ровно в том виде, в каком оно
передаётся между заголовком и футером.
==============================================================================
"""

from __future__ import annotations

from construct import (
    Bytes,
    ConstructError,
    GreedyRange,
    Int8ul,
    Int16ul,
    Int32ub,
    Int32ul,
    Padding,
    Struct,
)

from src.protocol.crc import crc_ccitt
from src.protocol.errors import (
    BadCrc,
    EncryptedPayload,
    InvalidField,
    OversizePayload,
    SectionOrderViolation,
    TruncatedFrame,
    UnknownSectionLayout,
)
from src.protocol.escaping import SLIP_END, escape_section, unescape_section
from src.protocol.models import (
    FLAG_ENCRYPTED,
    FLAG_SIGNED,
    FOOTER_LEN,
    HEADER_LEN,
    MAX_BODY_LEN,
    AlarmEntry,
    AlarmSection,
    DailyRecord,
    FrameFooter,
    FrameHeader,
    Megadump,
    Microdump,
    OverallSummary,
    PerMinuteSummary,
    TrackerId,
)

SECTION_START = b"\xC0\xCD\xDB\xDC"
SECTION_END = bytes((SLIP_END,))
SECTION_NAMES = ("daily", "per_minute", "overall", "alarms")
TAG_LEN = 8

RECORD_MORE = 0xFF
RECORD_LAST = SLIP_END

HEADER_STRUCT = Struct(
    "device_id" / Bytes(6),
    "firmware_version" / Int16ul,
    "flags" / Int8ul,
    "sequence" / Int32ul,
    Padding(3),
)
FOOTER_STRUCT = Struct(
    "crc" / Int16ul,
    "payload_len" / Int32ul,
)
DAILY_RECORD_STRUCT = Struct(
    "timestamp" / Int32ul,
    "steps" / Int32ul,
    "distance_mm" / Int32ul,
    "calories" / Int16ul,
)
# Единственное big-endian поле протокола
PER_MINUTE_HEAD_STRUCT = Struct(
    "base_time" / Int32ub,
    "period_code" / Int8ul,
)
OVERALL_STRUCT = Struct(
    "timestamp" / Int32ul,
    "calories" / Int16ul,
    "steps" / Int32ul,
    "distance_mm" / Int32ul,
    "elevation" / Int16ul,
    "floors" / Int16ul,
    "active_minutes" / Int16ul,
)
ALARM_STRUCT = Struct(
    "timestamp" / Int32ul,
    "repeat_mask" / Int8ul,
)

DAILY_RECORD_LEN = DAILY_RECORD_STRUCT.sizeof()
PER_MINUTE_HEAD_LEN = PER_MINUTE_HEAD_STRUCT.sizeof()
OVERALL_LEN = OVERALL_STRUCT.sizeof()
ALARM_LEN = ALARM_STRUCT.sizeof()
MICRODUMP_BODY_LEN = 2


# region header / footer ------------------------------------------------------
def encode_header(header: FrameHeader) -> bytes:
    return HEADER_STRUCT.build(
        {
            "device_id": header.device_id.raw,
            "firmware_version": header.firmware_version,
            "flags": header.flags,
            "sequence": header.sequence,
        }
    )


def decode_header(raw: bytes) -> FrameHeader:
    if len(raw) < HEADER_LEN:
        raise TruncatedFrame(f"заголовок короче {HEADER_LEN} байт ({len(raw)})")
    parsed = HEADER_STRUCT.parse(raw[:HEADER_LEN])
    return FrameHeader(
        device_id=TrackerId(parsed.device_id),
        firmware_version=parsed.firmware_version,
        encrypted_flag=bool(parsed.flags & FLAG_ENCRYPTED),
        sequence=parsed.sequence,
        signed_flag=bool(parsed.flags & FLAG_SIGNED),
    )


def encode_frame(header: FrameHeader, body: bytes) -> bytes:
    """
    Собирает кадр: заголовок | тело | футер. Футер всегда вычисляется.

    Raises:
        OversizePayload: тело длиннее 65 535 байт
    """
    if len(body) > MAX_BODY_LEN:
        raise OversizePayload(len(body))
    footer = FOOTER_STRUCT.build({"crc": crc_ccitt(body), "payload_len": len(body)})
    return encode_header(header) + bytes(body) + footer


def split_frame(wire: bytes) -> tuple[FrameHeader, bytes, FrameFooter]:
    """
    Делит кадр на заголовок, тело и футер и проверяет длину и CRC тела.

    Raises:
        TruncatedFrame: кадр короче заголовка+футера или короче заявленной длины
        UnknownSectionLayout: за телом лишние байты
        BadCrc: CRC футера не совпадает с вычисленной
    """
    wire = bytes(wire)
    if len(wire) < HEADER_LEN + FOOTER_LEN:
        raise TruncatedFrame(f"кадр {len(wire)} байт короче заголовка и футера")
    header = decode_header(wire)
    parsed = FOOTER_STRUCT.parse(wire[-FOOTER_LEN:])
    footer = FrameFooter(crc=parsed.crc, payload_len=parsed.payload_len)
    body = wire[HEADER_LEN:-FOOTER_LEN]
    if footer.payload_len > len(body):
        raise TruncatedFrame(f"заявлено {footer.payload_len} байт тела, получено {len(body)}")
    if footer.payload_len < len(body):
        raise UnknownSectionLayout(f"заявлено {footer.payload_len} байт тела, получено {len(body)}")
    computed = crc_ccitt(body)
    if computed != footer.crc:
        raise BadCrc(expected=computed, found=footer.crc)
    return header, body, footer


# endregion -------------------------------------------------------------------


# region section contents -----------------------------------------------------
def encode_daily(records: tuple[DailyRecord, ...]) -> bytes:
    previous = None
    for record in records:
        if previous is not None and record.timestamp <= previous:
            raise SectionOrderViolation(
                f"метки времени дневной сводки должны строго возрастать: {previous} -> {record.timestamp}"
            )
        previous = record.timestamp
    return GreedyRange(DAILY_RECORD_STRUCT).build(
        [
            {
                "timestamp": r.timestamp,
                "steps": r.steps,
                "distance_mm": r.distance_mm,
                "calories": r.calories,
            }
            for r in records
        ]
    )


def decode_daily(content: bytes) -> tuple[DailyRecord, ...]:
    if len(content) % DAILY_RECORD_LEN:
        raise UnknownSectionLayout(f"длина дневной сводки {len(content)} не кратна {DAILY_RECORD_LEN}")
    records = tuple(
        DailyRecord(
            timestamp=item.timestamp,
            steps=item.steps,
            distance_mm=item.distance_mm,
            calories=item.calories,
        )
        for item in GreedyRange(DAILY_RECORD_STRUCT).parse(content)
    )
    for prev, cur in zip(records, records[1:]):
        if cur.timestamp <= prev.timestamp:
            raise SectionOrderViolation(f"метки времени дневной сводки не возрастают: {prev.timestamp} -> {cur.timestamp}")
    return records


def encode_per_minute(summary: PerMinuteSummary) -> bytes:
    """
    Содержимое поминутной секции без терминатора.

    Запись слота - 4 байта: 00 | шаги | 00 | FF. Четвёртый байт последней записи
    совпадает с терминатором секции C0, поэтому здесь он не пишется.
    """
    if summary.is_empty:
        return b""
    out = bytearray(
        PER_MINUTE_HEAD_STRUCT.build({"base_time": summary.base_time, "period_code": summary.period_code})
    )
    last = len(summary.slots) - 1
    for index, steps in enumerate(summary.slots):
        out += bytes((0x00, steps, 0x00))
        if index != last:
            out.append(RECORD_MORE)
    return bytes(out)


def decode_per_minute(content: bytes) -> PerMinuteSummary:
    if not content:
        return PerMinuteSummary.empty()
    if len(content) < PER_MINUTE_HEAD_LEN:
        raise UnknownSectionLayout(f"поминутная секция короче {PER_MINUTE_HEAD_LEN} байт")
    head = PER_MINUTE_HEAD_STRUCT.parse(content[:PER_MINUTE_HEAD_LEN])
    if head.period_code == 0:
        raise UnknownSectionLayout("длина слота поминутной сводки равна нулю")
    records = content[PER_MINUTE_HEAD_LEN:]
    if not records:
        return PerMinuteSummary(base_time=head.base_time, period_code=head.period_code)
    if (len(records) + 1) % 4:
        raise UnknownSectionLayout(f"поминутные записи: {len(records)} байт не складываются в 4-байтовые записи")
    records += bytes((RECORD_LAST,))
    slots = []
    for offset in range(0, len(records), 4):
        record = records[offset:offset + 4]
        is_last = offset + 4 == len(records)
        if not is_last and record[3] != RECORD_MORE:
            raise UnknownSectionLayout(f"поминутная запись {offset // 4}: ожидался FF, получено {record[3]:02X}")
        # байты 0 и 2 записи не интерпретируются
        slots.append(record[1])
    return PerMinuteSummary(base_time=head.base_time, period_code=head.period_code, slots=tuple(slots))


def encode_overall(summary: OverallSummary) -> bytes:
    return OVERALL_STRUCT.build(
        {
            "timestamp": summary.timestamp,
            "calories": summary.calories,
            "steps": summary.steps,
            "distance_mm": summary.distance_mm,
            "elevation": summary.elevation,
            "floors": summary.floors,
            "active_minutes": summary.active_minutes,
        }
    )


def decode_overall(content: bytes) -> OverallSummary:
    if not content:
        # Очищенная секция: все поля нулевые
        return OverallSummary()
    if len(content) != OVERALL_LEN:
        raise UnknownSectionLayout(f"итоговая сводка должна быть {OVERALL_LEN} байт, получено {len(content)}")
    parsed = OVERALL_STRUCT.parse(content)
    return OverallSummary(
        timestamp=parsed.timestamp,
        calories=parsed.calories,
        steps=parsed.steps,
        distance_mm=parsed.distance_mm,
        elevation=parsed.elevation,
        floors=parsed.floors,
        active_minutes=parsed.active_minutes,
    )


def encode_alarms(alarms: AlarmSection) -> bytes:
    return GreedyRange(ALARM_STRUCT).build(
        [{"timestamp": a.timestamp, "repeat_mask": a.repeat_mask} for a in alarms.entries]
    )


def decode_alarms(content: bytes) -> AlarmSection:
    if len(content) % ALARM_LEN:
        raise UnknownSectionLayout(f"длина секции будильников {len(content)} не кратна {ALARM_LEN}")
    return AlarmSection(
        entries=tuple(
            AlarmEntry(timestamp=item.timestamp, repeat_mask=item.repeat_mask)
            for item in GreedyRange(ALARM_STRUCT).parse(content)
        )
    )


# endregion -------------------------------------------------------------------


# region sections -------------------------------------------------------------
def wrap_section(content: bytes) -> bytes:
    return SECTION_START + escape_section(content) + SECTION_END


def iter_raw_sections(body: bytes) -> list[tuple[int, bytes]]:
    """
    Делит тело на секции. Возвращает (смещение начала секции, экранированное содержимое).

    Raises:
        TruncatedFrame: последняя секция без терминатора
        UnknownSectionLayout: байты вне секций
    """
    sections: list[tuple[int, bytes]] = []
    pos = 0
    while pos < len(body):
        if body[pos:pos + len(SECTION_START)] != SECTION_START:
            raise UnknownSectionLayout(f"ожидался разделитель секции на смещении {pos}")
        end = body.find(SECTION_END, pos + len(SECTION_START))
        if end < 0:
            raise TruncatedFrame(f"секция на смещении {pos} без терминатора C0")
        sections.append((pos, body[pos + len(SECTION_START):end]))
        pos = end + 1
    return sections


def encode_sections(
    daily: tuple[DailyRecord, ...],
    per_minute: PerMinuteSummary,
    overall: OverallSummary,
    alarms: AlarmSection,
) -> bytes:
    """
    Тело мегадампа в открытом виде: четыре секции в каноническом порядке.
    """
    return b"".join(
        (
            wrap_section(encode_daily(daily)),
            wrap_section(encode_per_minute(per_minute)),
            wrap_section(encode_overall(overall)),
            wrap_section(encode_alarms(alarms)),
        )
    )


def decode_sections(
    body: bytes,
) -> tuple[tuple[DailyRecord, ...], PerMinuteSummary, OverallSummary, AlarmSection]:
    """
    Разбирает открытое тело мегадампа на четыре секции.

    Raises:
        UnknownSectionLayout: секций не ровно четыре или содержимое не по формату
        MalformedEscape: повреждённое экранирование
        TruncatedFrame: секция без терминатора
    """
    raw_sections = iter_raw_sections(body)
    if len(raw_sections) != len(SECTION_NAMES):
        raise UnknownSectionLayout(f"ожидалось 4 секции, найдено {len(raw_sections)}")
    contents = [unescape_section(content) for _, content in raw_sections]
    try:
        return (
            decode_daily(contents[0]),
            decode_per_minute(contents[1]),
            decode_overall(contents[2]),
            decode_alarms(contents[3]),
        )
    except ConstructError as exc:
        raise UnknownSectionLayout(f"секция не разбирается: {exc}") from exc


# endregion -------------------------------------------------------------------


# region megadump / microdump -------------------------------------------------
def encode_megadump(dump: Megadump) -> bytes:
    """
    Кодирует мегадамп в открытом виде. Футер из dump игнорируется и вычисляется заново.

    Raises:
        SectionOrderViolation: записи дневной сводки не по возрастанию времени
        OversizePayload: тело длиннее 65 535 байт
        InvalidField: заголовок помечен как зашифрованный/подписанный (для этого есть crypto.seal_frame)
    """
    if dump.header.encrypted_flag or dump.header.signed_flag:
        raise InvalidField("encode_megadump собирает только открытые неподписанные кадры")
    body = encode_sections(dump.daily, dump.per_minute, dump.overall, dump.alarms)
    return encode_frame(dump.header, body)


def decode_megadump(wire: bytes) -> Megadump:
    """
    Разбирает открытый мегадамп с проверкой футера.

    Подпись (если флаг signed выставлен) здесь не проверяется, а лишь отрезается:
    проверка подлинности - задача crypto.open_frame.

    Raises:
        BadCrc, TruncatedFrame, UnknownSectionLayout, MalformedEscape, EncryptedPayload
    """
    header, body, footer = split_frame(wire)
    if header.encrypted_flag:
        raise EncryptedPayload(f"тело кадра трекера {header.device_id} зашифровано")
    if header.signed_flag:
        if len(body) < TAG_LEN:
            raise TruncatedFrame("подписанный кадр короче тега")
        body = body[:-TAG_LEN]
    daily, per_minute, overall, alarms = decode_sections(body)
    return Megadump(
        header=header,
        daily=daily,
        per_minute=per_minute,
        overall=overall,
        alarms=alarms,
        footer=footer,
    )


def encode_microdump(dump: Microdump) -> bytes:
    """
    Микродамп всегда открытый и без подписи.

    Raises:
        InvalidField: заголовок помечен как зашифрованный/подписанный
    """
    if dump.header.encrypted_flag or dump.header.signed_flag:
        raise InvalidField("микродамп передаётся только открытым и без подписи")
    body = bytes((dump.status_code, dump.battery_pct))
    return encode_frame(dump.header, body)


def decode_microdump(wire: bytes) -> Microdump:
    """
    Raises:
        BadCrc, TruncatedFrame, UnknownSectionLayout
    """
    header, body, footer = split_frame(wire)
    if len(body) < MICRODUMP_BODY_LEN:
        raise TruncatedFrame(f"тело микродампа {len(body)} байт, ожидалось {MICRODUMP_BODY_LEN}")
    if len(body) > MICRODUMP_BODY_LEN:
        raise UnknownSectionLayout(f"тело микродампа {len(body)} байт, ожидалось {MICRODUMP_BODY_LEN}")
    return Microdump(header=header, status_code=body[0], battery_pct=body[1], footer=footer)


def with_crc(wire: bytes, crc: int) -> bytes:
    """
    Копия кадра с заменённым полем CRC футера (остальные байты не меняются).
    """
    wire = bytes(wire)
    if len(wire) < HEADER_LEN + FOOTER_LEN:
        raise TruncatedFrame(f"кадр {len(wire)} байт короче заголовка и футера")
    crc_field = FOOTER_STRUCT.build({"crc": crc, "payload_len": 0})[:2]
    offset = len(wire) - FOOTER_LEN
    return wire[:offset] + crc_field + wire[offset + 2:]


def refresh_crc(wire: bytes) -> bytes:
    """
    Пересчитывает CRC футера по текущему телу.
    """
    body = bytes(wire)[HEADER_LEN:-FOOTER_LEN]
    return with_crc(wire, crc_ccitt(body))


# endregion -------------------------------------------------------------------
