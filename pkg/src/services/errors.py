"""
Отказы облачного сервера и ошибки хранилища аккаунтов.

Каждый отказ несёт HTTP-статус и код для журнала; текст для клиента
выбирает ResponseBuilder в зависимости от режима сервера.
"""

from __future__ import annotations


class ServerRejection(Exception):
    """
    Базовый отказ сервера. Все отказы по известному трекеру считаются ошибками для блокировки.
    """

    status = 400
    code = "rejected"


class MalformedRequest(ServerRejection):
    code = "malformed_envelope"


class UnknownTracker(ServerRejection):
    status = 404
    code = "unknown_tracker"

    def __init__(self, tracker_id: str) -> None:
        self.tracker_id = tracker_id
        super().__init__(f"трекер {tracker_id} не привязан ни к одному аккаунту")


class UnknownUser(ServerRejection):
    status = 404
    code = "unknown_user"

    def __init__(self, user_id: str) -> None:
        self.user_id = user_id
        super().__init__(f"пользователь {user_id} не найден")


class NoData(ServerRejection):
    status = 404
    code = "no_data"

    def __init__(self, date: str) -> None:
        self.date = date
        super().__init__(f"нет данных за {date}")


class AlreadyPaired(ServerRejection):
    status = 409
    code = "already_paired"


class CrcMismatch(ServerRejection):
    """
    Vulnerable-режим: ответ раскрывает правильную CRC.
    """

    code = "crc_mismatch"

    def __init__(self, expected: int, found: int) -> None:
        self.expected = expected
        self.found = found
        super().__init__(f"CRC mismatch: expected {expected:04X}, found {found:04X}")


class InvalidFrame(ServerRejection):
    """
    Кадр не прошёл проверку (формат, шифрование, подпись, номер сообщения, антифрод).
    reason уходит в журнал; клиенту в hardened-режиме отдаётся только общее сообщение.
    """

    code = "invalid_frame"

    def __init__(self, reason: str, *, tracker_command: str | None = None, ack: bytes | None = None) -> None:
        self.reason = reason
        self.tracker_command = tracker_command
        self.ack = ack
        super().__init__(reason)


class LockedOut(ServerRejection):
    status = 429
    code = "locked_out"

    def __init__(self, tracker_id: str, until: int) -> None:
        self.tracker_id = tracker_id
        self.until = until
        super().__init__(f"трекер {tracker_id} заблокирован до {until}")


class StoreError(Exception):
    """
    Базовая ошибка хранилища аккаунтов.
    """


class CorruptStore(StoreError):
    """
    Файл хранилища не разбирается.
    """
