"""
==============================================================================
TRACKERSYNC - COMMAND LINE
==============================================================================
trackersync <scenario> --server URL --tracker HEX12 [--date ... --steps ...] --expect pass|blocked
trackersync serve | pair | dissect | proxy | keygen

Сценарии печатают JSON-вердикт в stdout; код возврата 0 - ожидание выполнено.
==============================================================================
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path

from src.api.sync_client import ClientError, SyncClient
from src.cli.proxy import HOOKS, CaptureProxy
from src.cli.scenarios import (
    DEFAULT_DATE,
    PROFILE_HARDENED,
    PROFILE_VULNERABLE,
    SCENARIOS,
    FABRICATE_CALORIES,
    ScenarioParams,
    run_scenario,
)
from src.core.config import Settings, settings as default_settings
from src.crypto.keystore import Keystore
from src.crypto.suite import DeviceKey
from src.protocol.dissector import render_dissection
from src.protocol.errors import InvalidField
from src.protocol.models import TrackerId
from src.utils.hexdump import HexdumpError, load_hexdump
from src.webapp.error_handler import init_logging
from src.webapp.server import CloudServer

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_EXPECTATION_FAILED = 1
EXIT_ERROR = 2


def _tracker_id(text: str) -> TrackerId:
    try:
        return TrackerId.from_hex(text)
    except InvalidField as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _non_negative(text: str) -> int:
    value = int(text, 0)
    if value < 0:
        raise argparse.ArgumentTypeError(f"значение не может быть отрицательным: {text}")
    return value


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trackersync",
        description="Симулятор синхронизации фитнес-трекера: сервер, агент и сценарии атак",
    )
    parser.add_argument("--debug", action="store_true", default=settings.DEBUG_MODE, help="Подробные логи")
    commands = parser.add_subparsers(dest="command", required=True)

    for name in SCENARIOS:
        sub = commands.add_parser(name, help=f"Сценарий {name}")
        sub.add_argument("--server", default=settings.SERVER_URL, help="Адрес сервера синхронизации")
        sub.add_argument("--tracker", type=_tracker_id, required=True, help="ID трекера (жертвы), 12 hex")
        sub.add_argument("--user", default="victim", help="Пользователь, к которому привязан трекер")
        sub.add_argument("--date", default=DEFAULT_DATE, help="Дата активности YYYY-MM-DD")
        sub.add_argument("--steps", type=_non_negative, help="Шаги (по умолчанию - своё значение у сценария)")
        sub.add_argument("--distance-mm", type=_non_negative, help="Дистанция в мм для поддельной сводки")
        sub.add_argument("--calories", type=_non_negative, default=FABRICATE_CALORIES, help="Калории поддельной сводки")
        sub.add_argument("--attacker", type=_tracker_id, help="ID трекера атакующего (impersonate)")
        sub.add_argument("--expect", choices=("pass", "blocked"), required=True, help="Ожидаемый вердикт")
        sub.add_argument(
            "--device-profile",
            choices=(PROFILE_VULNERABLE, PROFILE_HARDENED),
            default=PROFILE_VULNERABLE,
            help="hardened: подпись кадров и защита памяти уровня 2",
        )
        sub.add_argument("--seed", type=int, default=0, help="Seed генератора активности и ключей")
        sub.add_argument("--until-lockout", action="store_true", help="crc-oracle: повторять неверную CRC до блокировки")
        sub.add_argument("--keystore", default=settings.KEYSTORE_PATH, help="Файл ключей устройств")
        sub.set_defaults(handler=cmd_scenario)

    serve = commands.add_parser("serve", help="Запустить сервер синхронизации")
    serve.add_argument("--mode", choices=("vulnerable", "hardened"), default=settings.SERVER_MODE)
    serve.add_argument("--host", default=settings.SERVER_HOST)
    serve.add_argument("--port", type=int, default=settings.SERVER_PORT)
    serve.add_argument("--store", default=settings.STORE_PATH, help="JSON-файл аккаунтов")
    serve.add_argument("--keystore", default=settings.KEYSTORE_PATH, help="Файл ключей устройств")
    serve.set_defaults(handler=cmd_serve)

    pair = commands.add_parser("pair", help="Привязать трекер к пользователю")
    pair.add_argument("--server", default=settings.SERVER_URL)
    pair.add_argument("--user", required=True)
    pair.add_argument("--tracker", type=_tracker_id, required=True)
    pair.set_defaults(handler=cmd_pair)

    dissect = commands.add_parser("dissect", help="Разобрать кадр по полям")
    dissect.add_argument("file", help="Hex-дамп кадра (или бинарный файл с --binary)")
    dissect.add_argument("--binary", action="store_true", help="Файл содержит сырые байты")
    dissect.set_defaults(handler=cmd_dissect)

    proxy = commands.add_parser("proxy", help="Перехватывающий прокси перед сервером")
    proxy.add_argument("--server", default=settings.SERVER_URL, help="Upstream-сервер")
    proxy.add_argument("--listen-host", default="127.0.0.1")
    proxy.add_argument("--listen-port", type=int, default=8089)
    proxy.add_argument("--hook", choices=sorted(HOOKS), default="identity")
    proxy.set_defaults(handler=cmd_proxy)

    keygen = commands.add_parser("keygen", help="Выпустить ключ трекера и записать в хранилище")
    keygen.add_argument("--tracker", type=_tracker_id, required=True)
    keygen.add_argument("--keystore", default=settings.KEYSTORE_PATH)
    keygen.add_argument("--force", action="store_true", help="Перезаписать существующий ключ")
    keygen.set_defaults(handler=cmd_keygen)
    return parser


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


# region commands -----------------------------------------------------------------
async def cmd_scenario(args: argparse.Namespace, settings: Settings) -> int:
    params = ScenarioParams(
        tracker=args.tracker,
        keystore=Keystore(Path(args.keystore)),
        user=args.user,
        date=args.date,
        steps=args.steps,
        distance_mm=args.distance_mm,
        calories=args.calories,
        expect=args.expect,
        device_profile=args.device_profile,
        seed=args.seed,
        until_lockout=args.until_lockout,
        attacker=args.attacker,
    )
    client = SyncClient.from_settings(settings, base_url=args.server)
    try:
        async with client:
            report = await run_scenario(args.command, client, params)
    except ClientError as exc:
        _print_json({"scenario": args.command, "verdict": "FAIL", "expected": args.expect, "error": str(exc)})
        return EXIT_ERROR
    _print_json(report.as_dict())
    return EXIT_OK if report.expectation_met else EXIT_EXPECTATION_FAILED


async def cmd_serve(args: argparse.Namespace, settings: Settings) -> int:
    overrides = settings.model_copy(
        update={
            "SERVER_HOST": args.host,
            "SERVER_PORT": args.port,
            "STORE_PATH": args.store,
            "KEYSTORE_PATH": args.keystore,
        }
    )
    server = CloudServer.from_settings(overrides, mode=args.mode)
    await server.start()
    try:
        await asyncio.Event().wait()
    finally:
        await server.stop()
    return EXIT_OK


async def cmd_pair(args: argparse.Namespace, settings: Settings) -> int:
    try:
        async with SyncClient.from_settings(settings, base_url=args.server) as client:
            result = await client.pair(args.user, args.tracker)
    except ClientError as exc:
        logger.error("Привязка не удалась: %s", exc)
        return EXIT_ERROR
    _print_json(result)
    return EXIT_OK


async def cmd_dissect(args: argparse.Namespace, settings: Settings) -> int:
    path = Path(args.file)
    try:
        wire = path.read_bytes() if args.binary else load_hexdump(path.read_text(encoding="utf-8"))
    except (OSError, HexdumpError) as exc:
        logger.error("Не удалось прочитать кадр %s: %s", path, exc)
        return EXIT_ERROR
    print(render_dissection(wire))
    return EXIT_OK


async def cmd_proxy(args: argparse.Namespace, settings: Settings) -> int:
    proxy = CaptureProxy(
        args.server,
        HOOKS[args.hook],
        host=args.listen_host,
        port=args.listen_port,
        timeout=settings.CLIENT_TIMEOUT,
    )
    await proxy.start()
    try:
        await asyncio.Event().wait()
    finally:
        await proxy.stop()
    return EXIT_OK


async def cmd_keygen(args: argparse.Namespace, settings: Settings) -> int:
    keystore = Keystore(Path(args.keystore))
    if args.tracker in keystore and not args.force:
        logger.error("Ключ для %s уже есть в %s (используйте --force)", args.tracker, args.keystore)
        return EXIT_ERROR
    key = DeviceKey.generate()
    keystore.add(args.tracker, key)
    _print_json({"tracker_id": args.tracker.hex, "fingerprint": key.fingerprint})
    return EXIT_OK


# endregion -----------------------------------------------------------------------


def main(argv: list[str] | None = None, settings: Settings | None = None) -> int:
    settings = settings or default_settings
    args = build_parser(settings).parse_args(argv)
    init_logging(settings.LOG_DIR, args.debug)
    try:
        return asyncio.run(args.handler(args, settings))
    except KeyboardInterrupt:
        logger.info("Остановлено пользователем")
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
