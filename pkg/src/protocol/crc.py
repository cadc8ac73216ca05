"""
CRC-16/CCITT-FALSE: полином 0x1021, начальное значение 0xFFFF, без отражения и финального XOR.
"""

from __future__ import annotations

from binascii import crc_hqx

CRC_INIT = 0xFFFF


def crc_ccitt(data: bytes) -> int:
    """
    Считает CRC-CCITT (вариант FALSE) по буферу.

    binascii.crc_hqx реализует тот же регистр сдвига (0x1021, MSB first),
    начальное значение передаём явно.
    """
    return crc_hqx(bytes(data), CRC_INIT)
