"""
==============================================================================
CRYPTO SUITE - шифрование и подпись тела кадра на базе XTEA
==============================================================================
- encrypt_payload / decrypt_payload: XTEA-CTR, блок счётчика = nonce + i (mod 2^64)
- derive_subkey: подключ устройства для шифрования (ENCR0001) и подписи (SIGN0001)
- mac / verify_mac: XTEA-CBC-MAC с блоком длины в начале

Сырые байты ключа никогда не попадают в repr и логи, наружу выходит только отпечаток.
==============================================================================
"""

from __future__ import annotations

import hmac
import secrets
import struct
from dataclasses import dataclass, field

from src.crypto.errors import BadKeyLength, BadLabel, BadTag
from src.crypto.xtea import BLOCK_SIZE, KEY_SIZE, xtea_encrypt_block

LABEL_SIGN = b"SIGN0001"
LABEL_ENCR = b"ENCR0001"
KNOWN_LABELS = frozenset({LABEL_SIGN, LABEL_ENCR})
FINGERPRINT_LABEL = b"FPRINT01"
NONCE_SIZE = 8
TAG_SIZE = 8
_COUNTER_MOD = 1 << 64


@dataclass(frozen=True)
class DeviceKey:
    """
    16-байтовый секретный ключ устройства (или производный подключ).
    """

    raw: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.raw) != KEY_SIZE:
            raise BadKeyLength(len(self.raw))

    @classmethod
    def from_hex(cls, text: str) -> "DeviceKey":
        try:
            return cls(bytes.fromhex(text.strip()))
        except ValueError as exc:
            raise BadKeyLength(len(text.strip()) // 2) from exc

    @classmethod
    def generate(cls) -> "DeviceKey":
        return cls(secrets.token_bytes(KEY_SIZE))

    @property
    def fingerprint(self) -> str:
        return fingerprint(self)

    def __repr__(self) -> str:
        return f"DeviceKey(fingerprint={self.fingerprint})"

    __str__ = __repr__


@dataclass(frozen=True)
class EncryptedBody:
    nonce: bytes
    ciphertext: bytes
    tag: bytes | None = None


def nonce_for_sequence(sequence: int) -> bytes:
    """
    Nonce кадра: номер сообщения в старших 4 байтах, младшие 4 байта отданы счётчику CTR.
    """
    return struct.pack(">II", sequence & 0xFFFFFFFF, 0)


def _xor(left: bytes, right: bytes) -> bytes:
    return bytes(a ^ b for a, b in zip(left, right))


def keystream(key: DeviceKey, nonce: bytes, length: int) -> bytes:
    if len(nonce) != NONCE_SIZE:
        raise ValueError(f"nonce должен быть {NONCE_SIZE} байт")
    start = int.from_bytes(nonce, "big")
    blocks = (length + BLOCK_SIZE - 1) // BLOCK_SIZE
    stream = bytearray()
    for index in range(blocks):
        counter = ((start + index) % _COUNTER_MOD).to_bytes(BLOCK_SIZE, "big")
        stream += xtea_encrypt_block(key.raw, counter)
    return bytes(stream[:length])


def encrypt_payload(key: DeviceKey, nonce: bytes, plaintext: bytes) -> EncryptedBody:
    """
    XTEA-CTR. Длина шифртекста равна длине открытого текста.
    """
    data = bytes(plaintext)
    return EncryptedBody(nonce=bytes(nonce), ciphertext=_xor(data, keystream(key, nonce, len(data))))


def decrypt_payload(key: DeviceKey, body: EncryptedBody) -> bytes:
    return _xor(body.ciphertext, keystream(key, body.nonce, len(body.ciphertext)))


def derive_subkey(key: DeviceKey, label: bytes | str) -> DeviceKey:
    """
    subkey = XTEA(key, label) | XTEA(key, label XOR FF..FF)

    Raises:
        BadLabel: метка не SIGN0001/ENCR0001
    """
    raw_label = label.encode("ascii") if isinstance(label, str) else bytes(label)
    if raw_label not in KNOWN_LABELS:
        raise BadLabel(f"неизвестная метка подключа: {raw_label!r}")
    inverted = bytes(b ^ 0xFF for b in raw_label)
    return DeviceKey(xtea_encrypt_block(key.raw, raw_label) + xtea_encrypt_block(key.raw, inverted))


def mac(subkey: DeviceKey, message: bytes) -> bytes:
    """
    XTEA-CBC-MAC: первый блок - длина сообщения (8 байт, big-endian),
    затем сообщение, дополненное нулями до кратности 8.
    """
    data = bytes(message)
    padded = data + b"\x00" * (-len(data) % BLOCK_SIZE)
    state = bytes(BLOCK_SIZE)
    for block in [struct.pack(">Q", len(data))] + [padded[i:i + BLOCK_SIZE] for i in range(0, len(padded), BLOCK_SIZE)]:
        state = xtea_encrypt_block(subkey.raw, _xor(state, block))
    return state


def verify_mac(subkey: DeviceKey, message: bytes, tag: bytes) -> None:
    """
    Raises:
        BadTag: тег не совпал
    """
    if not hmac.compare_digest(mac(subkey, message), bytes(tag)):
        raise BadTag("тег подписи не совпал")


def fingerprint(key: DeviceKey) -> str:
    """
    Короткий отпечаток ключа для логов.
    """
    return mac(key, FINGERPRINT_LABEL).hex()[:8]
