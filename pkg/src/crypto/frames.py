"""
Кадры со сквозным шифрованием: encrypt-then-MAC поверх кодека кадров.

Тело зашифрованного кадра: шифртекст (CTR на подключе ENCR0001) и, если выставлен
флаг signed, 8-байтовый тег mac(SIGN0001, заголовок | шифртекст).
Заголовок всегда остаётся открытым.
"""

from __future__ import annotations

from dataclasses import replace

from src.crypto.errors import BadTag
from src.crypto.suite import (
    LABEL_ENCR,
    LABEL_SIGN,
    TAG_SIZE,
    DeviceKey,
    EncryptedBody,
    decrypt_payload,
    derive_subkey,
    encrypt_payload,
    mac,
    nonce_for_sequence,
    verify_mac,
)
from src.protocol.errors import EncryptedPayload, TruncatedFrame
from src.protocol.frames import decode_sections, encode_frame, encode_header, split_frame
from src.protocol.models import FrameHeader, Megadump


def seal_frame(
    header: FrameHeader,
    body: bytes,
    key: DeviceKey | None,
    *,
    encrypt: bool,
    sign: bool,
) -> bytes:
    """
    Собирает кадр из открытого тела: шифрует и/или подписывает его ключом устройства.

    Флаги encrypted/signed заголовка выставляются по аргументам, а не берутся из header.
    """
    header = replace(header, encrypted_flag=encrypt, signed_flag=sign)
    if (encrypt or sign) and key is None:
        raise ValueError("для шифрования или подписи нужен ключ устройства")
    payload = bytes(body)
    if encrypt:
        payload = encrypt_payload(derive_subkey(key, LABEL_ENCR), nonce_for_sequence(header.sequence), payload).ciphertext
    if sign:
        payload += mac(derive_subkey(key, LABEL_SIGN), encode_header(header) + payload)
    return encode_frame(header, payload)


def open_frame(
    wire: bytes,
    key: DeviceKey | None,
    *,
    require_tag: bool = False,
) -> tuple[FrameHeader, bytes]:
    """
    Проверяет футер, тег (если есть) и расшифровывает тело.

    Returns:
        (заголовок, открытое тело без тега)

    Raises:
        BadCrc, TruncatedFrame, UnknownSectionLayout: ошибки кадра
        BadTag: тег отсутствует при require_tag или не совпал
        EncryptedPayload: тело зашифровано, а ключа нет
    """
    header, body, _ = split_frame(wire)
    if header.signed_flag:
        if len(body) < TAG_SIZE:
            raise TruncatedFrame("подписанный кадр короче тега")
        body, tag = body[:-TAG_SIZE], body[-TAG_SIZE:]
        if key is None:
            if require_tag:
                raise BadTag(f"нет ключа для проверки подписи трекера {header.device_id}")
        else:
            verify_mac(derive_subkey(key, LABEL_SIGN), encode_header(header) + body, tag)
    elif require_tag:
        raise BadTag(f"кадр трекера {header.device_id} не подписан")

    if header.encrypted_flag:
        if key is None:
            raise EncryptedPayload(f"тело кадра трекера {header.device_id} зашифровано")
        body = decrypt_payload(
            derive_subkey(key, LABEL_ENCR),
            EncryptedBody(nonce=nonce_for_sequence(header.sequence), ciphertext=body),
        )
    return header, body


def open_megadump(wire: bytes, key: DeviceKey | None, *, require_tag: bool = False) -> Megadump:
    """
    open_frame + разбор секций. Для открытых неподписанных кадров эквивалентно decode_megadump.
    """
    header, body = open_frame(wire, key, require_tag=require_tag)
    _, _, footer = split_frame(wire)
    daily, per_minute, overall, alarms = decode_sections(body)
    return Megadump(
        header=header,
        daily=daily,
        per_minute=per_minute,
        overall=overall,
        alarms=alarms,
        footer=footer,
    )
