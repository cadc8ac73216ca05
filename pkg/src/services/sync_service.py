"""
==============================================================================
SYNC SERVICE - приём кадров синхронизации и обновление аккаунтов
==============================================================================
vulnerable: сервер без мер защиты
    - принимает открытый текст от любого известного трекера
    - зачисляет данные аккаунту из tracker-id конверта, а не из заголовка кадра
    - на несовпадение CRC отвечает правильной CRC
hardened: все пять мер защиты
    - tracker-id конверта должен совпадать с заголовком кадра
    - открытый текст от трекера с ключом отклоняется, трекеру уходит enable-encryption
    - обязательна подпись mac(SIGN0001, заголовок | тело)
    - номер сообщения должен расти (повтор отклоняется)
    - антифрод до записи в аккаунт
В обоих режимах ошибки подряд ведут к блокировке трекера.
==============================================================================
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass

from src.core.clock import Clock
from src.crypto.errors import CryptoError
from src.crypto.frames import open_frame
from src.crypto.keystore import Keystore
from src.protocol.envelope import COMMAND_ENABLE_ENCRYPTION, SyncEnvelope
from src.protocol.errors import BadCrc, FrameError
from src.protocol.frames import decode_header, decode_microdump, decode_sections, encode_microdump
from src.protocol.models import (
    ACK_ENABLE_ENCRYPTION,
    ACK_ERROR,
    ACK_OK,
    FrameHeader,
    Megadump,
    Microdump,
    TrackerId,
    utc_date,
)
from src.services.accounts import Account, AccountStore, DailyTotals, DigestReport
from src.services.errors import CrcMismatch, InvalidFrame, MalformedRequest, ServerRejection
from src.services.fraud import FraudVerdict, fraud_check
from src.services.lockout import LockoutPolicy
from src.services.server_config import ServerConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyncOutcome:
    ack: bytes
    dates: tuple[str, ...]
    fraud_verdict: FraudVerdict = FraudVerdict.ACCEPT
    tracker_command: str | None = None


def _event(event: str, **fields) -> str:
    return json.dumps({"event": event, **fields}, ensure_ascii=False)


def _ack_frame(header: FrameHeader, status: int) -> bytes:
    ack_header = FrameHeader(
        device_id=header.device_id,
        firmware_version=header.firmware_version,
        sequence=header.sequence,
    )
    return encode_microdump(Microdump(header=ack_header, status_code=status, battery_pct=0))


class SyncService:
    """
    Логика облачного сервера без HTTP. Методы синхронные и потокобезопасные:
    переходы состояния одного аккаунта строго упорядочены.
    """

    def __init__(
        self,
        config: ServerConfig,
        store: AccountStore,
        keystore: Keystore,
        clock: Clock,
    ) -> None:
        self.config = config
        self.store = store
        self.keystore = keystore
        self.clock = clock
        self.lockout = LockoutPolicy(config.error_threshold, config.lockout_seconds)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _account_lock(self, tracker_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(tracker_id, threading.Lock())

    # region pairing / validate -------------------------------------------------
    def register_account(self, user_id: str, tracker_id: TrackerId) -> Account:
        account = self.store.register(user_id, tracker_id.hex)
        logger.info(_event("paired", user_id=user_id, tracker_id=tracker_id.hex))
        return account

    def validate(self, envelope: SyncEnvelope) -> bool:
        """
        Raises:
            MalformedRequest: в конверте не микродамп
        """
        try:
            dump = decode_microdump(envelope.payload)
        except FrameError as exc:
            raise MalformedRequest(f"микродамп не разбирается: {exc}") from exc
        if self.config.hardened and dump.header.device_id != envelope.tracker_id:
            return False
        return self.store.find_by_tracker(envelope.tracker_id.hex) is not None

    # endregion -----------------------------------------------------------------

    # region sync ---------------------------------------------------------------
    def sync(self, envelope: SyncEnvelope) -> SyncOutcome:
        """
        Принимает кадр синхронизации.

        Raises:
            UnknownTracker: tracker-id конверта не привязан к аккаунту
            LockedOut: трекер заблокирован после серии ошибок
            CrcMismatch: (vulnerable) CRC кадра неверна, в исключении правильная
            InvalidFrame: кадр отклонён (причина в reason)
        """
        tracker_hex = envelope.tracker_id.hex
        with self._account_lock(tracker_hex):
            account = self.store.get_by_tracker(tracker_hex)
            now = self.clock.now()
            if self.lockout.check(account, now):
                self.store.save(account)
            try:
                dump = self._open(envelope, account)
                verdict = FraudVerdict.ACCEPT
                if self.config.hardened:
                    verdict = fraud_check(account, dump, self.config).verdict
                    if verdict is not FraudVerdict.ACCEPT:
                        account.fraud_flag = True
                    if verdict is FraudVerdict.REJECT:
                        raise InvalidFrame("антифрод: активность отклонена")
            except ServerRejection as exc:
                self.lockout.record_failure(account, now)
                self.store.save(account)
                logger.warning(
                    _event(
                        "sync_rejected",
                        mode=self.config.mode,
                        tracker_id=tracker_hex,
                        code=exc.code,
                        reason=str(exc),
                        error_count=account.error_count,
                    )
                )
                raise

            dates = self._merge(account, dump)
            account.last_sequence = max(account.last_sequence, dump.header.sequence)
            self.lockout.record_success(account)
            self.store.save(account)

        logger.info(
            _event(
                "sync_accepted",
                mode=self.config.mode,
                tracker_id=tracker_hex,
                frame_device_id=dump.header.device_id.hex,
                sequence=dump.header.sequence,
                dates=list(dates),
                fraud_verdict=verdict.value,
            )
        )
        return SyncOutcome(ack=_ack_frame(dump.header, ACK_OK), dates=dates, fraud_verdict=verdict)

    def _open(self, envelope: SyncEnvelope, account: Account) -> Megadump:
        if self.config.hardened:
            return self._open_hardened(envelope, account)
        return self._open_vulnerable(envelope)

    def _open_vulnerable(self, envelope: SyncEnvelope) -> Megadump:
        try:
            header = decode_header(envelope.payload)
            key = self.keystore.get(header.device_id)
            header, body = open_frame(envelope.payload, key)
            daily, per_minute, overall, alarms = decode_sections(body)
        except BadCrc as exc:
            logger.warning(
                _event("crc_oracle", tracker_id=envelope.tracker_id.hex, expected=f"{exc.expected:04X}", found=f"{exc.found:04X}")
            )
            raise CrcMismatch(exc.expected, exc.found) from exc
        except (FrameError, CryptoError) as exc:
            raise InvalidFrame(f"{type(exc).__name__}: {exc}") from exc
        return Megadump(header=header, daily=daily, per_minute=per_minute, overall=overall, alarms=alarms)

    def _open_hardened(self, envelope: SyncEnvelope, account: Account) -> Megadump:
        try:
            header = decode_header(envelope.payload)
        except FrameError as exc:
            raise InvalidFrame(f"заголовок не разбирается: {exc}") from exc
        if header.device_id != envelope.tracker_id:
            raise InvalidFrame(f"заголовок кадра от {header.device_id}, конверт от {envelope.tracker_id}")

        key = self.keystore.get(envelope.tracker_id)
        if key is None:
            raise InvalidFrame("для трекера не зарегистрирован ключ, подпись проверить нечем")
        if not header.encrypted_flag:
            raise InvalidFrame(
                "открытый текст от трекера с ключом шифрования",
                tracker_command=COMMAND_ENABLE_ENCRYPTION,
                ack=_ack_frame(header, ACK_ERROR | ACK_ENABLE_ENCRYPTION),
            )
        try:
            header, body = open_frame(envelope.payload, key, require_tag=True)
            daily, per_minute, overall, alarms = decode_sections(body)
        except (FrameError, CryptoError) as exc:
            raise InvalidFrame(f"{type(exc).__name__}: {exc}") from exc
        if header.sequence <= account.last_sequence:
            raise InvalidFrame(f"повтор номера сообщения {header.sequence} <= {account.last_sequence}")
        return Megadump(header=header, daily=daily, per_minute=per_minute, overall=overall, alarms=alarms)

    @staticmethod
    def _merge(account: Account, dump: Megadump) -> tuple[str, ...]:
        """
        Последняя запись за дату побеждает: сначала дневные записи, затем текущий день.
        Итоговая сводка накопительная, поэтому дате overall достаётся разность
        overall и дневных записей кадра.
        """
        dates: list[str] = []
        for record in dump.daily:
            date = utc_date(record.timestamp)
            account.daily_log[date] = DailyTotals(
                steps=record.steps,
                distance_mm=record.distance_mm,
                calories=record.calories,
            )
            dates.append(date)
        overall = dump.current_day
        if overall.timestamp:
            account.daily_log[overall.date] = DailyTotals(
                steps=overall.steps,
                distance_mm=overall.distance_mm,
                calories=overall.calories,
                floors=overall.floors,
                active_minutes=overall.active_minutes,
            )
            dates.append(overall.date)
        return tuple(dict.fromkeys(dates))

    # endregion -----------------------------------------------------------------

    def digest(self, user_id: str, date: str) -> DigestReport:
        return self.store.digest(user_id, date)
