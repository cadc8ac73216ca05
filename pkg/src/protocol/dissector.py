"""
==============================================================================
FRAME DISSECTOR - человекочитаемый разбор кадров
==============================================================================
Текстовый аналог плагина анализатора протокола: одна строка на поле:
смещение, сырые байты, имя поля, декодированное значение.
Неинтерпретируемые байты помечаются UNKNOWN. На любом некорректном кадре
разбор деградирует до чистого hex-дампа и никогда не падает.
==============================================================================
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Callable

from construct import ConstructError, Struct

from src.protocol.crc import crc_ccitt
from src.protocol.errors import FrameError
from src.protocol.escaping import SLIP_ESC, SLIP_ESC_END
from src.protocol.frames import (
    ALARM_LEN,
    ALARM_STRUCT,
    DAILY_RECORD_LEN,
    DAILY_RECORD_STRUCT,
    FOOTER_STRUCT,
    HEADER_STRUCT,
    MICRODUMP_BODY_LEN,
    OVERALL_LEN,
    OVERALL_STRUCT,
    PER_MINUTE_HEAD_LEN,
    PER_MINUTE_HEAD_STRUCT,
    SECTION_NAMES,
    SECTION_START,
    TAG_LEN,
    iter_raw_sections,
)
from src.protocol.models import FLAG_ENCRYPTED, FLAG_SIGNED, FOOTER_LEN, HEADER_LEN
from src.utils.hexdump import format_hexdump

UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class DissectedField:
    offset: int
    raw: bytes
    name: str
    value: str

    def render(self) -> str:
        return f"{self.offset:04X}  {self.raw.hex(' ').upper():<23}  {self.name}: {self.value}"


def _timestamp(value: int) -> str:
    moment = datetime.fromtimestamp(value, tz=timezone.utc)
    return f"{value} ({moment:%Y-%m-%d %H:%M:%S} UTC)"


def _unescape_with_offsets(escaped: bytes, base: int) -> tuple[bytes, list[int]]:
    """
    Снимает экранирование и запоминает смещение на проводе для каждого байта результата.
    """
    out = bytearray()
    offsets: list[int] = []
    index = 0
    while index < len(escaped):
        byte = escaped[index]
        if byte == SLIP_ESC:
            if index + 1 >= len(escaped):
                raise FrameError("escape-пара оборвана")
            nxt = escaped[index + 1]
            out.append(0xC0 if nxt == SLIP_ESC_END else 0xDB)
            offsets.append(base + index)
            index += 2
            continue
        out.append(byte)
        offsets.append(base + index)
        index += 1
    return bytes(out), offsets


class FrameDissector:
    """
    Разбор кадра в список полей. Используйте render_dissection для текстового вывода.
    """

    def __init__(self, wire: bytes) -> None:
        self.wire = bytes(wire)
        self.fields: list[DissectedField] = []

    # region helpers ------------------------------------------------------------
    def _add(self, offset: int, raw: bytes, name: str, value: object) -> None:
        self.fields.append(DissectedField(offset, bytes(raw), name, str(value)))

    def _add_chunks(self, offset: int, raw: bytes, name: str, width: int = 8) -> None:
        for pos in range(0, len(raw), width):
            chunk = raw[pos:pos + width]
            self._add(offset + pos, chunk, name, f"{len(chunk)} bytes")

    def _field(self, content: bytes, offsets: list[int], start: int, size: int, name: str, value: object) -> None:
        self._add(offsets[start], content[start:start + size], name, value)

    def _record(
        self,
        layout: Struct,
        content: bytes,
        offsets: list[int],
        start: int,
        prefix: str = "",
        render: dict[str, Callable[[Any], object]] | None = None,
    ) -> None:
        """
        Одна запись по раскладке из frames: поле на каждый именованный подконструкт.
        """
        parsed = layout.parse(content[start:start + layout.sizeof()])
        render = render or {}
        at = start
        for sub in layout.subcons:
            size = sub.sizeof()
            if sub.name:
                value = parsed[sub.name]
                shown = render[sub.name](value) if sub.name in render else value
                self._field(content, offsets, at, size, prefix + sub.name, shown)
            at += size

    # endregion -----------------------------------------------------------------

    def dissect(self) -> list[DissectedField]:
        """
        Raises:
            FrameError, ConstructError, IndexError: кадр не раскладывается (ловится в render_dissection)
        """
        wire = self.wire
        if len(wire) < HEADER_LEN + FOOTER_LEN:
            raise FrameError("кадр короче заголовка и футера")
        footer = FOOTER_STRUCT.parse(wire[-FOOTER_LEN:])
        crc, payload_len = footer.crc, footer.payload_len
        body = wire[HEADER_LEN:-FOOTER_LEN]
        if payload_len != len(body):
            raise FrameError("payload_len не совпадает с длиной тела")

        self._dissect_header()
        flags = wire[8]
        if flags & FLAG_ENCRYPTED:
            self._dissect_encrypted(body, signed=bool(flags & FLAG_SIGNED))
        elif body.startswith(SECTION_START):
            self._dissect_sections(body, signed=bool(flags & FLAG_SIGNED))
        elif len(body) == MICRODUMP_BODY_LEN:
            self._add(HEADER_LEN, body[:1], "status_code", f"0x{body[0]:02X}")
            self._add(HEADER_LEN + 1, body[1:], "battery_pct", f"{body[1]}%")
        else:
            raise FrameError("тело не похоже ни на мегадамп, ни на микродамп")

        footer_at = len(wire) - FOOTER_LEN
        computed = crc_ccitt(body)
        status = "ok" if computed == crc else f"MISMATCH, computed 0x{computed:04X}"
        self._add(footer_at, wire[footer_at:footer_at + 2], "crc", f"0x{crc:04X} ({status})")
        self._add(footer_at + 2, wire[footer_at + 2:], "payload_len", payload_len)
        return self.fields

    def _dissect_header(self) -> None:
        header = self.wire[:HEADER_LEN]
        self._record(
            HEADER_STRUCT,
            header,
            list(range(HEADER_LEN)),
            0,
            render={
                "device_id": lambda raw: raw.hex().upper(),
                "firmware_version": lambda fw: f"{fw // 100}.{fw % 100:02d}",
                "flags": lambda flags: (
                    f"encrypted={'yes' if flags & FLAG_ENCRYPTED else 'no'} "
                    f"signed={'yes' if flags & FLAG_SIGNED else 'no'}"
                ),
            },
        )
        reserved = header[13:16]
        self._add(13, reserved, "reserved" if reserved == b"\x00\x00\x00" else UNKNOWN, reserved.hex().upper())

    def _dissect_encrypted(self, body: bytes, signed: bool) -> None:
        ciphertext = body[:-TAG_LEN] if signed else body
        self._add_chunks(HEADER_LEN, ciphertext, "ciphertext")
        if signed:
            tag_at = HEADER_LEN + len(ciphertext)
            self._add(tag_at, body[-TAG_LEN:], "tag", body[-TAG_LEN:].hex().upper())

    def _dissect_sections(self, body: bytes, signed: bool) -> None:
        tag = b""
        if signed:
            body, tag = body[:-TAG_LEN], body[-TAG_LEN:]
        sections = iter_raw_sections(body)
        if len(sections) != len(SECTION_NAMES):
            raise FrameError("секций не четыре")
        for name, (start, escaped) in zip(SECTION_NAMES, sections):
            at = HEADER_LEN + start
            self._add(at, SECTION_START, f"{name}.section_start", "C0 CD DB DC")
            content_at = at + len(SECTION_START)
            content, offsets = _unescape_with_offsets(escaped, content_at)
            getattr(self, f"_dissect_{name}")(content, offsets)
            end_at = content_at + len(escaped)
            self._add(end_at, b"\xC0", f"{name}.section_end", "C0")
        if tag:
            tag_at = HEADER_LEN + len(body)
            self._add(tag_at, tag, "tag", tag.hex().upper())

    # region sections -----------------------------------------------------------
    def _dissect_daily(self, content: bytes, offsets: list[int]) -> None:
        if len(content) % DAILY_RECORD_LEN:
            raise FrameError("дневная сводка не кратна длине записи")
        for index, pos in enumerate(range(0, len(content), DAILY_RECORD_LEN)):
            self._record(DAILY_RECORD_STRUCT, content, offsets, pos, f"daily[{index}].", {"timestamp": _timestamp})

    def _dissect_per_minute(self, content: bytes, offsets: list[int]) -> None:
        if not content:
            return
        self._record(
            PER_MINUTE_HEAD_STRUCT,
            content,
            offsets,
            0,
            "per_minute.",
            {"base_time": lambda ts: _timestamp(ts) + " big-endian", "period_code": lambda code: f"{code} min"},
        )
        records = content[PER_MINUTE_HEAD_LEN:]
        if records and (len(records) + 1) % 4:
            raise FrameError("поминутные записи не кратны 4 байтам")
        for index, pos in enumerate(range(PER_MINUTE_HEAD_LEN, len(content), 4)):
            self._field(content, offsets, pos, 1, UNKNOWN, f"slot[{index}] byte 0")
            self._field(content, offsets, pos + 1, 1, f"slot[{index}].steps", content[pos + 1])
            self._field(content, offsets, pos + 2, 1, UNKNOWN, f"slot[{index}] byte 2")
            if pos + 3 < len(content):
                self._field(content, offsets, pos + 3, 1, f"slot[{index}].next", "more records")

    def _dissect_overall(self, content: bytes, offsets: list[int]) -> None:
        if not content:
            return
        if len(content) != OVERALL_LEN:
            raise FrameError("итоговая сводка неверной длины")
        self._record(OVERALL_STRUCT, content, offsets, 0, render={"timestamp": _timestamp})

    def _dissect_alarms(self, content: bytes, offsets: list[int]) -> None:
        if len(content) % ALARM_LEN:
            raise FrameError("секция будильников не кратна длине записи")
        for index, pos in enumerate(range(0, len(content), ALARM_LEN)):
            self._record(
                ALARM_STRUCT,
                content,
                offsets,
                pos,
                f"alarm[{index}].",
                {"timestamp": _timestamp, "repeat_mask": lambda mask: f"0b{mask:07b}"},
            )

    # endregion -----------------------------------------------------------------


def render_dissection(wire: bytes) -> str:
    """
    Текстовый разбор кадра. Никогда не бросает исключений:
    если кадр не раскладывается, возвращается чистый hex-дамп.
    """
    try:
        fields = FrameDissector(wire).dissect()
    except (FrameError, ConstructError, IndexError, ValueError, OverflowError, OSError):
        return format_hexdump(bytes(wire))
    return "\n".join(field.render() for field in fields)
