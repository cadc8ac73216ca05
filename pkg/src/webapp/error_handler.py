"""
Логирование и единая точка превращения отказов сервера в XML-ответы.
В vulnerable-режиме клиент видит подробности (включая правильную CRC),
в hardened-режиме - одно общее сообщение.
"""

from __future__ import annotations

import logging
import os
from logging.handlers import RotatingFileHandler

from src.protocol.envelope import ServerResponse, encode_response
from src.services.errors import (
    CrcMismatch,
    InvalidFrame,
    LockedOut,
    ServerRejection,
)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


def init_logging(log_dir: str = "logs", debug: bool = False) -> None:
    """
    Ротация: максимум 10 МБ на файл, храним текущий + 2 старых файла.
    Повторный вызов не добавляет обработчики.
    """
    root = logging.getLogger()
    root.setLevel(logging.DEBUG if debug else logging.INFO)
    if any(getattr(h, "_trackersync", False) for h in root.handlers):
        return

    os.makedirs(log_dir, exist_ok=True)
    file_handler = RotatingFileHandler(
        os.path.join(log_dir, "trackersync.log"),
        maxBytes=10 * 1024 * 1024,  # 10 МБ
        backupCount=2,
        encoding="utf-8",
    )
    console_handler = logging.StreamHandler()
    for handler in (file_handler, console_handler):
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._trackersync = True
        root.addHandler(handler)


class ResponseBuilder:
    """Класс для централизованного формирования ответов сервера"""

    GENERIC_INVALID = "invalid message"

    # Сообщения для клиента по коду отказа (vulnerable-режим)
    USER_MESSAGES = {
        "malformed_envelope": "malformed envelope",
        "unknown_tracker": "unknown tracker",
        "unknown_user": "unknown user",
        "no_data": "no data for date",
        "already_paired": "tracker already paired",
        "crc_mismatch": "checksum mismatch",
        "invalid_frame": "invalid frame",
        "locked_out": "too many errors, try again later",
        "rejected": "request rejected",
    }

    def __init__(self, hardened: bool) -> None:
        self.hardened = hardened

    def message_for(self, exc: ServerRejection) -> str:
        if isinstance(exc, LockedOut):
            return self.USER_MESSAGES["locked_out"]
        if self.hardened:
            return self.GENERIC_INVALID
        base = self.USER_MESSAGES.get(exc.code, self.USER_MESSAGES["rejected"])
        return f"{base}: {exc}"

    def rejection(self, exc: ServerRejection) -> tuple[int, bytes]:
        """
        Возвращает (HTTP-статус, XML-документ) для отказа.
        """
        response = ServerResponse(status="error", error=self.message_for(exc))
        if isinstance(exc, CrcMismatch) and not self.hardened:
            response = ServerResponse(status="error", error=response.error, expected_crc=exc.expected)
        if isinstance(exc, InvalidFrame) and exc.tracker_command:
            response = ServerResponse(
                status="error",
                error=response.error,
                data=exc.ack,
                tracker_command=exc.tracker_command,
            )
        status = exc.status
        if self.hardened and not isinstance(exc, LockedOut):
            status = 400
        return status, encode_response(response)

    @staticmethod
    def accepted(ack: bytes, tracker_command: str | None = None) -> bytes:
        return encode_response(ServerResponse(status="ok", data=ack, tracker_command=tracker_command))

    @staticmethod
    def validated(valid: bool) -> bytes:
        return encode_response(ServerResponse(status="ok", valid=valid))
