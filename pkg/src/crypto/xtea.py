"""
Блочный шифр XTEA: 64-битный блок, 128-битный ключ, 32 цикла, delta 0x9E3779B9.
Слова блока и ключа читаются big-endian.
"""

from __future__ import annotations

import struct

from src.crypto.errors import BadBlockLength, BadKeyLength

BLOCK_SIZE = 8
KEY_SIZE = 16
CYCLES = 32
DELTA = 0x9E3779B9
MASK = 0xFFFFFFFF


def _words(key: bytes, block: bytes) -> tuple[tuple[int, int, int, int], int, int]:
    if len(block) != BLOCK_SIZE:
        raise BadBlockLength(len(block))
    if len(key) != KEY_SIZE:
        raise BadKeyLength(len(key))
    v0, v1 = struct.unpack(">2I", block)
    return struct.unpack(">4I", key), v0, v1


def xtea_encrypt_block(key: bytes, block: bytes) -> bytes:
    """
    Шифрует один 8-байтовый блок.

    Raises:
        BadBlockLength: блок не 8 байт
        BadKeyLength: ключ не 16 байт
    """
    k, v0, v1 = _words(bytes(key), bytes(block))
    total = 0
    for _ in range(CYCLES):
        v0 = (v0 + ((((v1 << 4) ^ (v1 >> 5)) + v1) ^ (total + k[total & 3]))) & MASK
        total = (total + DELTA) & MASK
        v1 = (v1 + ((((v0 << 4) ^ (v0 >> 5)) + v0) ^ (total + k[(total >> 11) & 3]))) & MASK
    return struct.pack(">2I", v0, v1)


def xtea_decrypt_block(key: bytes, block: bytes) -> bytes:
    """
    Обратное преобразование к xtea_encrypt_block.
    """
    k, v0, v1 = _words(bytes(key), bytes(block))
    total = (DELTA * CYCLES) & MASK
    for _ in range(CYCLES):
        v1 = (v1 - ((((v0 << 4) ^ (v0 >> 5)) + v0) ^ (total + k[(total >> 11) & 3]))) & MASK
        total = (total - DELTA) & MASK
        v0 = (v0 - ((((v1 << 4) ^ (v1 >> 5)) + v1) ^ (total + k[total & 3]))) & MASK
    return struct.pack(">2I", v0, v1)
