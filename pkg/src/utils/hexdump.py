"""
Текстовый hex-дамп: формат фикстур и вывода CLI.

Строка: смещение (hex), затем байты через пробел, например
    0000  C0 CD DB DC C0
Двоеточие после смещения допускается, всё после '#' считается комментарием.
"""

from __future__ import annotations

import re

BYTES_PER_LINE = 16

_OFFSET_RE = re.compile(r"^([0-9A-Fa-f]+):?$")


class HexdumpError(ValueError):
    """
    Строка дампа не разбирается или смещения идут не подряд.
    """


def format_hexdump(data: bytes, width: int = BYTES_PER_LINE) -> str:
    lines = []
    for offset in range(0, len(data), width):
        chunk = data[offset:offset + width]
        lines.append(f"{offset:04X}  {chunk.hex(' ').upper()}")
    return "\n".join(lines)


def load_hexdump(text: str) -> bytes:
    """
    Собирает байты из hex-дампа. Смещение каждой строки должно совпадать
    с количеством уже прочитанных байт.
    """
    out = bytearray()
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        match = _OFFSET_RE.match(parts[0])
        if not match:
            raise HexdumpError(f"строка {line_no}: нет смещения")
        offset = int(match.group(1), 16)
        if offset != len(out):
            raise HexdumpError(f"строка {line_no}: смещение {offset:04X}, ожидалось {len(out):04X}")
        try:
            out += bytes(int(token, 16) for token in parts[1:])
        except ValueError as exc:
            raise HexdumpError(f"строка {line_no}: некорректный байт") from exc
    return bytes(out)
