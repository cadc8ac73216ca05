"""
Перехватывающий прокси между агентом синхронизации и сервером.

Пересылает все запросы на upstream как есть; конверты sync проходят через хук,
который может их прочитать или переписать. Хук identity даёт побайтово тот же запрос.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Callable

import httpx
from aiohttp import web

from src.protocol.envelope import SyncEnvelope, decode_envelope, encode_envelope
from src.protocol.errors import FrameError
from src.protocol.frames import decode_header, decode_megadump, encode_megadump, refresh_crc
from src.protocol.models import FOOTER_LEN, HEADER_LEN, FrameHeader

logger = logging.getLogger(__name__)

SYNC_PATH = "/1/devices/client/sync"

EnvelopeHook = Callable[[SyncEnvelope], SyncEnvelope]


def identity(envelope: SyncEnvelope) -> SyncEnvelope:
    return envelope


def _flip_first_body_byte(wire: bytes) -> bytes:
    if len(wire) <= HEADER_LEN + FOOTER_LEN:
        return wire
    out = bytearray(wire)
    out[HEADER_LEN] ^= 0x01
    return bytes(out)


def tamper(envelope: SyncEnvelope) -> SyncEnvelope:
    """
    Портит первый байт тела, CRC не пересчитывает.
    """
    return replace(envelope, payload=_flip_first_body_byte(envelope.payload))


def double_steps(envelope: SyncEnvelope) -> SyncEnvelope:
    """
    Удваивает шаги и дистанцию в итоговой сводке открытого кадра, CRC считается заново.
    Зашифрованный кадр без ключа переписать нельзя: портится байт шифртекста, CRC обновляется.
    """
    try:
        header: FrameHeader = decode_header(envelope.payload)
        if header.encrypted_flag:
            return replace(envelope, payload=refresh_crc(_flip_first_body_byte(envelope.payload)))
        dump = decode_megadump(envelope.payload)
    except FrameError as exc:
        logger.warning("double_steps: кадр не разбирается, пропускаем как есть: %s", exc)
        return envelope
    overall = replace(
        dump.overall,
        steps=min(0xFFFFFFFF, dump.overall.steps * 2),
        distance_mm=min(0xFFFFFFFF, dump.overall.distance_mm * 2),
    )
    return replace(envelope, payload=encode_megadump(replace(dump, overall=overall, footer=None)))


HOOKS: dict[str, EnvelopeHook] = {
    "identity": identity,
    "double_steps": double_steps,
    "tamper": tamper,
}


class CaptureProxy:
    """
    aiohttp-прокси. captured хранит пары (исходный конверт, отправленный конверт).
    """

    def __init__(
        self,
        upstream: str,
        hook: EnvelopeHook = identity,
        *,
        host: str = "127.0.0.1",
        port: int = 8089,
        timeout: float = 10.0,
        transport: httpx.AsyncBaseTransport | None = None,
    ) -> None:
        self.upstream = upstream.rstrip("/")
        self.hook = hook
        self.host = host
        self.port = port
        self.captured: list[tuple[SyncEnvelope, SyncEnvelope]] = []
        self._timeout = httpx.Timeout(connect=min(timeout, 5.0), read=timeout, write=timeout, pool=timeout)
        self._transport = transport
        self._client: httpx.AsyncClient | None = None

        self._app = web.Application()
        self._app.router.add_route("*", "/{tail:.*}", self.handle)
        self._app.on_cleanup.append(self._close_client)
        self._runner: web.AppRunner | None = None

    @property
    def app(self) -> web.Application:
        return self._app

    def _upstream_client(self) -> httpx.AsyncClient:
        if self._client is None:
            self._client = httpx.AsyncClient(base_url=self.upstream, timeout=self._timeout, transport=self._transport)
        return self._client

    async def _close_client(self, _app: web.Application) -> None:
        if self._client is not None:
            await self._client.aclose()
            self._client = None

    async def start(self) -> None:
        if self._runner:
            return
        self._runner = web.AppRunner(self._app)
        await self._runner.setup()
        await web.TCPSite(self._runner, self.host, self.port).start()
        logger.info("Прокси http://%s:%s -> %s", self.host, self.port, self.upstream)

    async def stop(self) -> None:
        if not self._runner:
            return
        await self._runner.cleanup()
        self._runner = None

    def _rewrite(self, body: bytes) -> bytes:
        try:
            original = decode_envelope(body)
        except FrameError as exc:
            logger.warning("Прокси: конверт не разбирается, пересылаем как есть: %s", exc)
            return body
        modified = self.hook(original)
        self.captured.append((original, modified))
        if modified is original:
            return body
        logger.info("Прокси: хук переписал кадр трекера %s", original.tracker_id)
        return encode_envelope(modified)

    async def handle(self, request: web.Request) -> web.Response:
        body = await request.read()
        if request.method == "POST" and request.path == SYNC_PATH:
            body = self._rewrite(body)
        headers = {k: v for k, v in request.headers.items() if k.lower() in {"content-type", "accept"}}
        try:
            upstream = await self._upstream_client().request(
                request.method,
                request.path_qs,
                content=body or None,
                headers=headers,
            )
        except httpx.RequestError as exc:
            logger.error("Прокси: upstream недоступен: %s", exc)
            return web.Response(status=502, text=f"upstream error: {exc}")
        return web.Response(
            status=upstream.status_code,
            body=upstream.content,
            content_type=upstream.headers.get("content-type", "application/octet-stream").split(";")[0],
        )
