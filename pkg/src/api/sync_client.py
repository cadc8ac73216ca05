"""
HTTP-клиент сервера синхронизации (агент синхронизации и сценарии атак).

Повторяет запрос только при сетевых ошибках и 5xx; ответы 4xx - это
содержательные ответы протокола, они возвращаются вызывающему коду.
"""

from __future__ import annotations

import asyncio
import logging
import ssl

import certifi
import httpx

from src.protocol.envelope import ServerResponse, SyncEnvelope, decode_response, encode_envelope
from src.protocol.errors import MalformedEnvelope
from src.protocol.models import TrackerId

logger = logging.getLogger(__name__)

SYNC_PATH = "/1/devices/client/sync"
VALIDATE_PATH = "/1/devices/client/validate.json"


class ClientError(Exception):
    """
    Базовая ошибка клиента синхронизации.
    """


class ServerError(ClientError):
    """
    Сервер недоступен, ответил 5xx после всех попыток или прислал неразбираемый ответ.
    """

    def __init__(self, message: str, status: int | None = None) -> None:
        self.status = status
        super().__init__(message)


class SyncReply:
    """Ответ сервера на sync/validate: HTTP-статус и разобранный XML-документ"""

    def __init__(self, status: int, document: ServerResponse, raw: bytes) -> None:
        self.status = status
        self.document = document
        self.raw = raw

    @property
    def ok(self) -> bool:
        return self.status == 200 and self.document.ok

    def __repr__(self) -> str:
        return f"SyncReply(status={self.status}, document={self.document!r})"


def build_verify(disable: bool = False, ca_bundle: str = "") -> ssl.SSLContext | bool:
    """
    SSL для https-адресов: certifi по умолчанию, свой CA-файл для MITM-прокси.
    """
    if disable:
        # ВНИМАНИЕ: Отключение проверки SSL небезопасно
        logger.warning("SSL verification is DISABLED. This is not recommended!")
        return False
    return ssl.create_default_context(cafile=ca_bundle or certifi.where())


class SyncClient:
    """
    Асинхронный клиент. Считает отправленные запросы: сценарии проверяют их количество.
    """

    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 10.0,
        attempts: int = 3,
        backoff: float = 0.2,
        verify: ssl.SSLContext | bool = True,
        transport: httpx.AsyncBaseTransport | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.attempts = max(1, attempts)
        self.backoff = backoff
        self.requests_sent = 0
        # Раздельные таймауты: подключение быстрое, чтение - по настройке
        self._timeout = httpx.Timeout(connect=min(timeout, 5.0), read=timeout, write=timeout, pool=timeout)
        self._client = httpx.AsyncClient(
            base_url=self.base_url,
            timeout=self._timeout,
            verify=verify,
            transport=transport,
        )

    @classmethod
    def from_settings(cls, settings, base_url: str | None = None) -> "SyncClient":
        return cls(
            base_url or settings.SERVER_URL,
            timeout=settings.CLIENT_TIMEOUT,
            attempts=settings.CLIENT_RETRY_ATTEMPTS,
            backoff=settings.CLIENT_RETRY_BACKOFF,
            verify=build_verify(settings.DISABLE_SSL_VERIFY, settings.CA_BUNDLE),
        )

    async def __aenter__(self) -> "SyncClient":
        return self

    async def __aexit__(self, *exc_info) -> None:
        await self.aclose()

    async def aclose(self) -> None:
        await self._client.aclose()

    # region transport ----------------------------------------------------------
    async def _request(self, method: str, path: str, **kwargs) -> httpx.Response:
        """
        Raises:
            ServerError: сетевые ошибки или 5xx после всех попыток
        """
        for attempt in range(1, self.attempts + 1):
            self.requests_sent += 1
            try:
                response = await self._client.request(method, path, **kwargs)
                if response.status_code < 500:
                    return response
                error: Exception = ServerError(f"{method} {path}: HTTP {response.status_code}", response.status_code)
            except httpx.RequestError as exc:
                error = exc
            logger.warning(
                "%s %s attempt %d/%d failed: %s: %s", method, path, attempt, self.attempts, type(error).__name__, error
            )
            if attempt == self.attempts:
                if isinstance(error, ServerError):
                    raise error
                raise ServerError(f"{method} {path}: {type(error).__name__}: {error}") from error
            await asyncio.sleep(self.backoff * (2 ** (attempt - 1)))
        raise ServerError(f"{method} {path}: нет попыток")

    async def _post_envelope(self, path: str, envelope: SyncEnvelope, params: dict | None = None) -> SyncReply:
        response = await self._request(
            "POST",
            path,
            content=encode_envelope(envelope),
            params=params,
            headers={"Content-Type": "application/xml"},
        )
        try:
            document = decode_response(response.content)
        except MalformedEnvelope as exc:
            raise ServerError(f"неразбираемый ответ сервера: {exc}", response.status_code) from exc
        return SyncReply(response.status_code, document, response.content)

    # endregion -----------------------------------------------------------------

    async def sync(self, envelope: SyncEnvelope) -> SyncReply:
        return await self._post_envelope(SYNC_PATH, envelope)

    async def validate(self, envelope: SyncEnvelope) -> SyncReply:
        return await self._post_envelope(VALIDATE_PATH, envelope, params={"btAddress": envelope.tracker_id.hex})

    async def pair(self, user_id: str, tracker_id: TrackerId) -> dict:
        response = await self._request("POST", f"/1/user/{user_id}/devices.json", json={"tracker_id": tracker_id.hex})
        if response.status_code != 200:
            raise ServerError(f"привязка не удалась: {response.text}", response.status_code)
        return response.json()

    async def digest(self, user_id: str, date: str) -> dict | None:
        """
        Дневная сводка; None, если за дату нет данных или пользователь неизвестен.
        """
        response = await self._request("GET", f"/1/user/{user_id}/activities/date/{date}.json")
        if response.status_code == 404:
            return None
        if response.status_code != 200:
            raise ServerError(f"сводка недоступна: HTTP {response.status_code}", response.status_code)
        return response.json()

    async def health(self) -> dict:
        response = await self._request("GET", "/health")
        return response.json()
