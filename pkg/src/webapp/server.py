"""
HTTP-сервер облачной синхронизации: принимает конверты с кадрами трекеров,
ведёт аккаунты и отдаёт дневные сводки.
"""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path

from aiohttp import web

from src.core.clock import Clock, clock_from_settings
from src.crypto.keystore import Keystore
from src.protocol.envelope import SyncEnvelope, decode_envelope
from src.protocol.errors import InvalidField, MalformedEnvelope
from src.protocol.models import TrackerId
from src.services.accounts import AccountStore
from src.services.errors import MalformedRequest, NoData, ServerRejection, UnknownUser
from src.services.server_config import ServerConfig
from src.services.sync_service import SyncService
from src.webapp.error_handler import ResponseBuilder

logger = logging.getLogger(__name__)

XML_CONTENT_TYPE = "application/xml"


class HealthCheckFilter(logging.Filter):
    """
    Исключает healthcheck запросы из access-логов.
    """

    def filter(self, record: logging.LogRecord) -> bool:
        try:
            return "/health" not in record.getMessage()
        except Exception:
            # Если фильтр сломался - лучше не скрывать логи
            return True


class CloudServer:
    """
    aiohttp-сервер синхронизации. Логика в SyncService; вызовы уходят в поток,
    чтобы запись JSON-хранилища не блокировала цикл событий.
    """

    def __init__(
        self,
        service: SyncService,
        *,
        host: str = "127.0.0.1",
        port: int = 8088,
    ) -> None:
        self.service = service
        self.host = host or "127.0.0.1"
        self.port = port
        self.responses = ResponseBuilder(hardened=service.config.hardened)

        self._app = web.Application()
        self._runner: web.AppRunner | None = None
        self._site: web.TCPSite | None = None

        # Отключаем access-логирование для healthcheck запросов
        self._setup_logging_filter()
        self._register_routes()

    @classmethod
    def from_settings(cls, settings, *, mode: str | None = None, clock: Clock | None = None) -> "CloudServer":
        config = ServerConfig.from_settings(settings, mode=mode)
        service = SyncService(
            config=config,
            store=AccountStore(Path(settings.STORE_PATH)),
            keystore=Keystore(Path(settings.KEYSTORE_PATH)),
            clock=clock or clock_from_settings(settings.CLOCK_SOURCE, settings.CLOCK_START),
        )
        return cls(service, host=settings.SERVER_HOST, port=settings.SERVER_PORT)

    @property
    def app(self) -> web.Application:
        return self._app

    # region web server bootstrap ------------------------------------------------
    def _setup_logging_filter(self) -> None:
        access_logger = logging.getLogger("aiohttp.access")
        if not any(isinstance(f, HealthCheckFilter) for f in access_logger.filters):
            access_logger.addFilter(HealthCheckFilter())

    def _register_routes(self) -> None:
        """
        Настраивает эндпоинты сервера.
        """
        router = self._app.router
        router.add_get("/health", self.handle_health)
        router.add_post("/1/devices/client/validate.json", self.handle_validate)
        router.add_post("/1/devices/client/sync", self.handle_sync)
        router.add_post("/1/user/{user_id}/devices.json", self.handle_pair)
        router.add_get("/1/user/{user_id}/activities/date/{date:[0-9-]+}.json", self.handle_digest)

    async def start(self) -> None:
        """
        Запускает HTTP-сервер синхронизации.
        """
        if self._runner:
            return

        self._runner = web.AppRunner(self._app)
        await self._runner.setup()
        self._site = web.TCPSite(self._runner, self.host, self.port)
        await self._site.start()
        logger.info(
            "Сервер синхронизации запущен на http://%s:%s (режим %s)",
            self.host,
            self.port,
            self.service.config.mode,
        )

    async def stop(self) -> None:
        """
        Останавливает HTTP-сервер.
        """
        if not self._runner:
            return
        await self._runner.cleanup()
        self._runner = None
        self._site = None

    # endregion -----------------------------------------------------------------

    # region helpers ------------------------------------------------------------
    @staticmethod
    def _xml(body: bytes, status: int = 200) -> web.Response:
        return web.Response(body=body, status=status, content_type=XML_CONTENT_TYPE, charset="utf-8")

    async def _read_envelope(self, request: web.Request) -> SyncEnvelope:
        try:
            return decode_envelope(await request.read())
        except MalformedEnvelope as exc:
            raise MalformedRequest(str(exc)) from exc

    def _reject(self, exc: ServerRejection) -> web.Response:
        status, body = self.responses.rejection(exc)
        return self._xml(body, status=status)

    # endregion -----------------------------------------------------------------

    # region route handlers -----------------------------------------------------
    async def handle_health(self, request: web.Request) -> web.Response:
        """
        Простой healthcheck для мониторинга.
        """
        return web.json_response({"status": "ok", "mode": self.service.config.mode})

    async def handle_validate(self, request: web.Request) -> web.Response:
        try:
            envelope = await self._read_envelope(request)
            valid = await asyncio.to_thread(self.service.validate, envelope)
        except ServerRejection as exc:
            return self._reject(exc)
        bt_address = request.query.get("btAddress")
        if bt_address and bt_address.upper() != envelope.tracker_id.hex:
            logger.info("validate: btAddress=%s, в конверте %s", bt_address, envelope.tracker_id)
        return self._xml(self.responses.validated(valid))

    async def handle_sync(self, request: web.Request) -> web.Response:
        try:
            envelope = await self._read_envelope(request)
            outcome = await asyncio.to_thread(self.service.sync, envelope)
        except ServerRejection as exc:
            return self._reject(exc)
        return self._xml(self.responses.accepted(outcome.ack, outcome.tracker_command))

    async def handle_pair(self, request: web.Request) -> web.Response:
        """
        Привязывает трекер к пользователю. Ожидаемый JSON: {"tracker_id": "0A0B0C0D0E0F"}
        """
        user_id = request.match_info["user_id"]
        try:
            payload = await request.json()
            tracker_id = TrackerId.from_hex(str(payload.get("tracker_id", "")))
        except (ValueError, AttributeError, InvalidField) as exc:
            return web.json_response({"error": f"Неверный запрос: {exc}"}, status=400)
        try:
            account = await asyncio.to_thread(self.service.register_account, user_id, tracker_id)
        except ServerRejection as exc:
            return web.json_response({"error": str(exc)}, status=exc.status)
        return web.json_response({"status": "ok", "user_id": account.user_id, "tracker_id": account.tracker_id})

    async def handle_digest(self, request: web.Request) -> web.Response:
        user_id = request.match_info["user_id"]
        date = request.match_info["date"]
        try:
            report = await asyncio.to_thread(self.service.digest, user_id, date)
        except (UnknownUser, NoData) as exc:
            return web.json_response({"error": exc.code, "message": str(exc)}, status=exc.status)
        return web.json_response(report.as_dict)

    # endregion -----------------------------------------------------------------
