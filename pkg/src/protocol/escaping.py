"""
Экранирование содержимого секций в стиле SLIP (RFC 1055).

C0 -> DB DC, DB -> DB DD. Применяется только к содержимому секций,
разделители, заголовок и футер не экранируются.
"""

from __future__ import annotations

from src.protocol.errors import MalformedEscape

SLIP_END = 0xC0
SLIP_ESC = 0xDB
SLIP_ESC_END = 0xDC
SLIP_ESC_ESC = 0xDD


def escape_section(raw: bytes) -> bytes:
    """
    Экранирует содержимое секции. Результат гарантированно не содержит 0xC0.
    """
    out = bytearray()
    for byte in raw:
        if byte == SLIP_END:
            out += bytes((SLIP_ESC, SLIP_ESC_END))
        elif byte == SLIP_ESC:
            out += bytes((SLIP_ESC, SLIP_ESC_ESC))
        else:
            out.append(byte)
    return bytes(out)


def unescape_section(escaped: bytes) -> bytes:
    """
    Обратное преобразование к escape_section.

    Raises:
        MalformedEscape: DB не продолжен DC/DD или поток оборвался после DB
    """
    out = bytearray()
    pending_escape = False
    for offset, byte in enumerate(escaped):
        if pending_escape:
            pending_escape = False
            if byte == SLIP_ESC_END:
                out.append(SLIP_END)
            elif byte == SLIP_ESC_ESC:
                out.append(SLIP_ESC)
            else:
                raise MalformedEscape(offset, f"за DB следует 0x{byte:02X} на смещении {offset}")
        elif byte == SLIP_ESC:
            pending_escape = True
        else:
            out.append(byte)
    if pending_escape:
        raise MalformedEscape(len(escaped), "поток оборвался на середине escape-пары")
    return bytes(out)
