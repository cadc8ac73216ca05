"""
==============================================================================
SCENARIOS - честная синхронизация и сценарии атак против сервера
==============================================================================
Каждый сценарий снимает сводку до и после, отправляет кадры через SyncClient
и выносит вердикт:
    PASS    - действие удалось (данные приняты и видны в сводке)
    BLOCKED - сервер или трекер отказали, сводка не изменилась
    FAIL    - всё остальное (сводка разошлась с ожиданием)

Трекер привязывает только honest-sync. Сценарии атак работают с уже привязанной
жертвой; если сервер её не знает (404), сценарий завершается ошибкой UnknownTracker.
==============================================================================
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Awaitable, Callable

from src.api.sync_client import ClientError, ServerError, SyncClient, SyncReply
from src.crypto.frames import open_megadump
from src.crypto.keystore import Keystore
from src.crypto.suite import DeviceKey
from src.protocol.envelope import SyncEnvelope
from src.protocol.errors import FrameError
from src.protocol.frames import decode_header, encode_megadump, split_frame, with_crc
from src.protocol.models import FrameHeader, Megadump, OverallSummary, TrackerId, current_day
from src.services.accounts import distance_km
from src.tracker.device import (
    FIRMWARE_PLAINTEXT,
    TrackerState,
    apply_server_response,
    debug_read,
    debug_write,
    generate_megadump,
    new_tracker,
    record_steps,
)
from src.tracker.eeprom import DEVICE_KEY, ENCRYPTION_FLAG, OVERALL_STEPS_ADDR, ActivityRecords
from src.tracker.errors import DebugDisabled

logger = logging.getLogger(__name__)

PASS = "PASS"
BLOCKED = "BLOCKED"
FAIL = "FAIL"

PROFILE_VULNERABLE = "vulnerable"
PROFILE_HARDENED = "hardened"

DEFAULT_DATE = "2017-01-15"
DAY_START_HOUR = 11
HW_INJECT_STEPS = 0x00FFFFFF
FABRICATE_STEPS = 10_000
FABRICATE_DISTANCE_MM = 10_000_000
FABRICATE_CALORIES = 100
LOCKOUT_ATTEMPT_LIMIT = 20


@dataclass(frozen=True)
class ScenarioParams:
    """
    Параметры сценария. steps/distance_mm = None - значение по умолчанию для сценария.
    """

    tracker: TrackerId
    keystore: Keystore
    user: str = "victim"
    date: str = DEFAULT_DATE
    steps: int | None = None
    distance_mm: int | None = None
    calories: int = FABRICATE_CALORIES
    expect: str | None = None  # pass | blocked
    device_profile: str = PROFILE_VULNERABLE
    seed: int = 0
    until_lockout: bool = False
    attacker: TrackerId | None = None


@dataclass
class ScenarioReport:
    scenario: str
    verdict: str
    expected: str | None = None
    requests: int = 0
    digest_before: dict | None = None
    digest_after: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def expectation_met(self) -> bool:
        if self.expected is None:
            return self.verdict != FAIL
        return self.verdict == {"pass": PASS, "blocked": BLOCKED}.get(self.expected)

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "verdict": self.verdict,
            "expected": self.expected,
            "expectation_met": self.expectation_met,
            "requests": self.requests,
            "digest_before": self.digest_before,
            "digest_after": self.digest_after,
            "details": self.details,
        }


# region helpers ------------------------------------------------------------------
def day_start(date: str) -> int:
    """
    Полночь UTC указанной даты (YYYY-MM-DD) в Unix-секундах.
    """
    moment = datetime.strptime(date, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    return int(moment.timestamp())


def activity_start(date: str) -> int:
    return day_start(date) + DAY_START_HOUR * 3600


def ensure_key(keystore: Keystore, tracker_id: TrackerId, rng: random.Random) -> DeviceKey:
    """
    Ключ трекера из общего хранилища; если его нет - выпускает детерминированный от seed.
    """
    key = keystore.get(tracker_id)
    if key is None:
        key = DeviceKey(bytes(rng.getrandbits(8) for _ in range(16)))
        keystore.add(tracker_id, key)
    return key


def build_tracker(
    tracker_id: TrackerId,
    key: DeviceKey,
    profile: str,
    *,
    encrypted: bool,
    clock: int,
) -> TrackerState:
    """
    hardened-профиль: шифрует и подписывает кадры, защита памяти уровня 2.
    """
    if profile == PROFILE_HARDENED:
        return new_tracker(tracker_id, key, True, signed=True, protection_level=2, clock=clock)
    return new_tracker(tracker_id, key, encrypted, clock=clock)


def walk(t: TrackerState, date: str, total_steps: int, rng: random.Random) -> TrackerState:
    """
    Генератор честной активности: порции по 20-120 шагов с интервалом 1-4 минуты в пределах дня.
    """
    at = max(t.clock, activity_start(date))
    last_moment = day_start(date) + 86400 - 1
    remaining = total_steps
    while remaining > 0:
        chunk = min(remaining, rng.randint(20, 120))
        t = record_steps(t, at, chunk)
        remaining -= chunk
        at = min(last_moment, at + rng.choice((60, 120, 240)))
    return t


def expected_digest(records: ActivityRecords) -> dict:
    overall = current_day(records.overall, records.daily)
    return {
        "steps": overall.steps,
        "distance_km": distance_km(overall.distance_mm),
        "calories": overall.calories,
    }


def digest_matches(digest: dict | None, expected: dict) -> bool:
    return digest is not None and all(digest.get(name) == value for name, value in expected.items())


def reply_details(reply: SyncReply) -> dict:
    document = reply.document
    details = {"http_status": reply.status, "status": document.status}
    if document.error:
        details["error"] = document.error
    if document.expected_crc is not None:
        details["expected_crc"] = f"{document.expected_crc:04X}"
    if document.tracker_command:
        details["tracker_command"] = document.tracker_command
    return details


def settle(accepted: bool, before: dict | None, after: dict | None, reflected: bool) -> str:
    """
    Итоговый вердикт по ответу сервера и сводкам до/после.
    """
    if accepted and reflected:
        return PASS
    if not accepted and before == after:
        return BLOCKED
    return FAIL


async def ensure_paired(client: SyncClient, user: str, tracker: TrackerId) -> None:
    """
    Привязка для честной синхронизации; 409 (уже привязан) не ошибка.
    """
    try:
        await client.pair(user, tracker)
    except ServerError as exc:
        if exc.status != 409:
            raise
        logger.debug("Трекер %s уже привязан", tracker)


class UnknownTracker(ClientError):
    """
    Сервер не знает трекер (HTTP 404 на sync): он не привязан ни к одному пользователю.
    """


async def submit(client: SyncClient, envelope: SyncEnvelope) -> SyncReply:
    """
    Raises:
        UnknownTracker: сервер ответил 404
        ServerError: сервер недоступен
    """
    reply = await client.sync(envelope)
    if reply.status == 404:
        raise UnknownTracker(f"трекер {envelope.tracker_id.hex} не привязан: {reply.document.error or 'unknown tracker'}")
    return reply


def fabricated_frame(params: ScenarioParams) -> bytes:
    """
    Кадр только с итоговой сводкой: дневные, поминутные и будильники пустые.
    """
    steps = FABRICATE_STEPS if params.steps is None else params.steps
    distance = FABRICATE_DISTANCE_MM if params.distance_mm is None else params.distance_mm
    overall = OverallSummary(
        timestamp=activity_start(params.date),
        calories=params.calories,
        steps=steps,
        distance_mm=distance,
    )
    header = FrameHeader(device_id=params.tracker, firmware_version=FIRMWARE_PLAINTEXT, sequence=1)
    return encode_megadump(Megadump(header=header, overall=overall))


# endregion -----------------------------------------------------------------------


# region scenarios ----------------------------------------------------------------
async def run_honest_sync(client: SyncClient, params: ScenarioParams) -> ScenarioReport:
    """
    Трекер набирает шаги и синхронизируется как обычный агент.
    Если сервер прислал команду enable-encryption, трекер применяет её и повторяет попытку один раз.
    """
    rng = random.Random(params.seed)
    key = ensure_key(params.keystore, params.tracker, rng)
    t = build_tracker(params.tracker, key, params.device_profile, encrypted=False, clock=activity_start(params.date))
    t = walk(t, params.date, params.steps if params.steps is not None else rng.randint(300, 3000), rng)
    expected = expected_digest(t.activity)

    await ensure_paired(client, params.user, params.tracker)
    before = await client.digest(params.user, params.date)
    sent = client.requests_sent

    t, wire = generate_megadump(t)
    reply = await submit(client, SyncEnvelope(params.tracker, wire))
    details = {"first_attempt": reply_details(reply), "encrypted": decode_header(wire).encrypted_flag}
    if not reply.ok and reply.document.tracker_command and reply.document.data:
        t = apply_server_response(t, reply.document.data)
        t, wire = generate_megadump(t)
        reply = await submit(client, SyncEnvelope(params.tracker, wire))
        details["retry"] = reply_details(reply)
    if reply.ok and reply.document.data:
        t = apply_server_response(t, reply.document.data)
    requests = client.requests_sent - sent

    after = await client.digest(params.user, params.date)
    details["expected_digest"] = expected
    verdict = settle(reply.ok, before, after, digest_matches(after, expected))
    return ScenarioReport("honest-sync", verdict, params.expect, requests, before, after, details)


async def run_impersonate(client: SyncClient, params: ScenarioParams) -> ScenarioReport:
    """
    Кадр трекера атакующего отправляется под идентификатором жертвы.
    """
    rng = random.Random(params.seed)
    attacker = params.attacker or TrackerId(params.tracker.raw[:-1] + bytes((params.tracker.raw[-1] ^ 0x01,)))
    key = ensure_key(params.keystore, attacker, rng)
    t = build_tracker(attacker, key, params.device_profile, encrypted=False, clock=activity_start(params.date))
    t = walk(t, params.date, params.steps if params.steps is not None else rng.randint(300, 3000), rng)
    expected = expected_digest(t.activity)
    _, captured = generate_megadump(t)

    before = await client.digest(params.user, params.date)
    sent = client.requests_sent
    reply = await submit(client, SyncEnvelope(params.tracker, captured))
    requests = client.requests_sent - sent
    after = await client.digest(params.user, params.date)

    details = reply_details(reply)
    details.update(attacker=attacker.hex, victim=params.tracker.hex, expected_digest=expected)
    verdict = settle(reply.ok, before, after, digest_matches(after, expected))
    return ScenarioReport("impersonate", verdict, params.expect, requests, before, after, details)


async def run_fabricate(client: SyncClient, params: ScenarioParams) -> ScenarioReport:
    """
    Поддельный кадр из одной итоговой сводки с произвольными значениями.
    """
    wire = fabricated_frame(params)
    overall = open_megadump(wire, None).overall
    expected = {"steps": overall.steps, "distance_km": distance_km(overall.distance_mm)}

    before = await client.digest(params.user, params.date)
    sent = client.requests_sent
    reply = await submit(client, SyncEnvelope(params.tracker, wire))
    requests = client.requests_sent - sent
    after = await client.digest(params.user, params.date)

    details = reply_details(reply)
    details["expected_digest"] = expected
    verdict = settle(reply.ok, before, after, digest_matches(after, expected))
    return ScenarioReport("fabricate", verdict, params.expect, requests, before, after, details)


async def run_crc_oracle(client: SyncClient, params: ScenarioParams) -> ScenarioReport:
    """
    Поддельный кадр уходит с нулевой CRC; правильная CRC берётся из ответа об ошибке.
    С until_lockout после атаки повторяет неверную CRC до блокировки.
    """
    wire = fabricated_frame(params)
    _, _, footer = split_frame(wire)
    wrong = 0x0000 if footer.crc != 0x0000 else 0x0001
    overall = open_megadump(wire, None).overall
    expected = {"steps": overall.steps, "distance_km": distance_km(overall.distance_mm)}

    before = await client.digest(params.user, params.date)
    sent = client.requests_sent
    first = await submit(client, SyncEnvelope(params.tracker, with_crc(wire, wrong)))
    details: dict = {"bad_crc": reply_details(first)}
    accepted = False
    oracle = first.document.expected_crc
    if oracle is not None:
        reply = await submit(client, SyncEnvelope(params.tracker, with_crc(wire, oracle)))
        details["resubmit"] = reply_details(reply)
        accepted = reply.ok
    requests = client.requests_sent - sent

    if params.until_lockout:
        details["lockout"] = await _repeat_until_lockout(client, params.tracker, with_crc(wire, wrong))

    after = await client.digest(params.user, params.date)
    details["expected_digest"] = expected
    verdict = settle(accepted, before, after, digest_matches(after, expected))
    return ScenarioReport("crc-oracle", verdict, params.expect, requests, before, after, details)


async def _repeat_until_lockout(client: SyncClient, tracker: TrackerId, bad_frame: bytes) -> dict:
    for attempt in range(1, LOCKOUT_ATTEMPT_LIMIT + 1):
        reply = await submit(client, SyncEnvelope(tracker, bad_frame))
        if reply.status == 429:
            return {"locked_out": True, "locked_at_request": attempt, "error": reply.document.error}
    return {"locked_out": False, "requests": LOCKOUT_ATTEMPT_LIMIT}


async def run_hw_inject(client: SyncClient, params: ScenarioParams) -> ScenarioReport:
    """
    Запись количества шагов прямо в EEPROM через отладочный порт и обычная синхронизация.
    Трекер шифрует кадры, сервер получает корректно зашифрованные поддельные данные.
    """
    rng = random.Random(params.seed)
    steps = HW_INJECT_STEPS if params.steps is None else params.steps
    key = ensure_key(params.keystore, params.tracker, rng)
    t = build_tracker(params.tracker, key, params.device_profile, encrypted=True, clock=activity_start(params.date))
    t = walk(t, params.date, rng.randint(100, 500), rng)

    before = await client.digest(params.user, params.date)
    try:
        t = debug_write(t, OVERALL_STEPS_ADDR, steps.to_bytes(4, "little"))
    except DebugDisabled as exc:
        after = await client.digest(params.user, params.date)
        details = {"tracker_error": str(exc), "protection_level": t.protection_level}
        return ScenarioReport("hw-inject", BLOCKED, params.expect, 0, before, after, details)

    sent = client.requests_sent
    t, wire = generate_megadump(t)
    reply = await submit(client, SyncEnvelope(params.tracker, wire))
    requests = client.requests_sent - sent
    after = await client.digest(params.user, params.date)

    details = reply_details(reply)
    details["injected_steps"] = steps
    reflected = after is not None and after.get("steps") == steps
    verdict = settle(reply.ok, before, after, reflected)
    return ScenarioReport("hw-inject", verdict, params.expect, requests, before, after, details)


async def run_hw_decrypt_flag(client: SyncClient, params: ScenarioParams) -> ScenarioReport:
    """
    Сброс флага шифрования (0x0046) через отладочный порт: следующий кадр уходит открытым текстом.
    Заодно считывается ключ устройства и им расшифровывается кадр, перехваченный до сброса.
    """
    rng = random.Random(params.seed)
    key = ensure_key(params.keystore, params.tracker, rng)
    t = build_tracker(params.tracker, key, params.device_profile, encrypted=True, clock=activity_start(params.date))
    t = walk(t, params.date, params.steps if params.steps is not None else rng.randint(300, 3000), rng)

    before = await client.digest(params.user, params.date)
    t, captured = generate_megadump(t)
    details: dict = {"captured_encrypted": decode_header(captured).encrypted_flag}
    try:
        extracted = DeviceKey(debug_read(t, DEVICE_KEY.start, DEVICE_KEY.length))
        t = debug_write(t, ENCRYPTION_FLAG.start, b"\x00")
    except DebugDisabled as exc:
        after = await client.digest(params.user, params.date)
        details.update(tracker_error=str(exc), protection_level=t.protection_level)
        return ScenarioReport("hw-decrypt-flag", BLOCKED, params.expect, 0, before, after, details)

    details["key_fingerprint"] = extracted.fingerprint
    details["captured_steps"] = open_megadump(captured, extracted).overall.steps

    t, wire = generate_megadump(t)
    try:
        plain = open_megadump(wire, None)
        details["plaintext_steps"] = plain.overall.steps
        readable = True
    except FrameError as exc:
        details["plaintext_error"] = str(exc)
        readable = False

    sent = client.requests_sent
    reply = await submit(client, SyncEnvelope(params.tracker, wire))
    requests = client.requests_sent - sent
    details["sync"] = reply_details(reply)
    after = await client.digest(params.user, params.date)
    return ScenarioReport("hw-decrypt-flag", PASS if readable else FAIL, params.expect, requests, before, after, details)


# endregion -----------------------------------------------------------------------


ScenarioRunner = Callable[[SyncClient, ScenarioParams], Awaitable[ScenarioReport]]

SCENARIOS: dict[str, ScenarioRunner] = {
    "honest-sync": run_honest_sync,
    "impersonate": run_impersonate,
    "fabricate": run_fabricate,
    "crc-oracle": run_crc_oracle,
    "hw-inject": run_hw_inject,
    "hw-decrypt-flag": run_hw_decrypt_flag,
}


async def run_scenario(name: str, client: SyncClient, params: ScenarioParams) -> ScenarioReport:
    """
    Raises:
        KeyError: неизвестный сценарий
        ServerError: сервер недоступен
    """
    report = await SCENARIOS[name](client, params)
    logger.info("Сценарий %s: %s (ожидалось %s)", name, report.verdict, params.expect or "-")
    return report
