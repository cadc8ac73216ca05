"""
Сервис аккаунтов облачного сервера.
Хранит аккаунты в JSON файле (без БД); запись атомарная: временный файл и os.replace.
"""

from __future__ import annotations

import copy
import json
import logging
import os
import tempfile
import threading
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from src.services.errors import AlreadyPaired, CorruptStore, NoData, UnknownTracker, UnknownUser

logger = logging.getLogger(__name__)

STORE_VERSION = 1


@dataclass
class DailyTotals:
    """Итоги за календарный день (UTC)"""
    steps: int = 0
    distance_mm: int = 0
    calories: int = 0
    floors: int = 0
    active_minutes: int = 0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} не может быть отрицательным")


@dataclass
class Account:
    """Аккаунт пользователя, привязанный к одному трекеру"""
    user_id: str
    tracker_id: str  # 12 hex-символов, верхний регистр
    daily_log: dict[str, DailyTotals] = field(default_factory=dict)  # YYYY-MM-DD → итоги
    fraud_flag: bool = False
    error_count: int = 0  # Ошибок подряд
    locked_until: int | None = None  # Unix-секунды
    last_sequence: int = 0  # Последний принятый номер сообщения


@dataclass(frozen=True)
class DigestReport:
    date: str
    steps: int
    distance_km: str
    calories: int
    active_minutes: int

    @property
    def as_dict(self) -> dict:
        return {
            "steps": self.steps,
            "distance_km": self.distance_km,
            "calories": self.calories,
            "active_minutes": self.active_minutes,
        }


def distance_km(distance_mm: int) -> str:
    """
    Миллиметры в километры с двумя знаками: 522720 → "0.52".
    """
    value = (Decimal(distance_mm) / Decimal(1_000_000)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return f"{value:.2f}"


class AccountStore:
    """
    Потокобезопасное хранилище аккаунтов. Ключ - tracker_id: один аккаунт на трекер.
    """

    def __init__(self, storage_file: str | Path = "data/accounts.json") -> None:
        self.storage_file = Path(storage_file)
        self._lock = threading.RLock()
        self._accounts: dict[str, Account] = {}
        self.load()

    # region persistence --------------------------------------------------------
    def load(self) -> None:
        """
        Загружает аккаунты из файла. Отсутствующий файл - пустое хранилище.

        Raises:
            CorruptStore: файл обрезан или не соответствует формату
        """
        with self._lock:
            if not self.storage_file.exists():
                self._accounts = {}
                return
            try:
                with open(self.storage_file, "r", encoding="utf-8") as fh:
                    payload = json.load(fh)
                accounts = {}
                for tracker_id, raw in payload["accounts"].items():
                    daily = {date: DailyTotals(**totals) for date, totals in raw.pop("daily_log", {}).items()}
                    accounts[tracker_id] = Account(daily_log=daily, **raw)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as exc:
                raise CorruptStore(f"хранилище {self.storage_file} повреждено: {exc}") from exc
            self._accounts = accounts
            logger.info("Загружено аккаунтов: %d из %s", len(accounts), self.storage_file)

    def persist(self) -> None:
        with self._lock:
            data = {
                "version": STORE_VERSION,
                "accounts": {tid: asdict(acc) for tid, acc in sorted(self._accounts.items())},
            }
            self.storage_file.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(dir=self.storage_file.parent, prefix=".accounts-", suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    json.dump(data, fh, ensure_ascii=False, indent=2)
                os.replace(tmp_name, self.storage_file)
            except OSError:
                Path(tmp_name).unlink(missing_ok=True)
                raise

    # endregion -----------------------------------------------------------------

    def __len__(self) -> int:
        with self._lock:
            return len(self._accounts)

    def register(self, user_id: str, tracker_id: str) -> Account:
        """
        Raises:
            AlreadyPaired: трекер или пользователь уже привязаны
        """
        with self._lock:
            if tracker_id in self._accounts:
                raise AlreadyPaired(f"трекер {tracker_id} уже привязан к аккаунту")
            if any(acc.user_id == user_id for acc in self._accounts.values()):
                raise AlreadyPaired(f"у пользователя {user_id} уже есть трекер")
            account = Account(user_id=user_id, tracker_id=tracker_id)
            self._accounts[tracker_id] = account
            self.persist()
            return copy.deepcopy(account)

    def find_by_tracker(self, tracker_id: str) -> Account | None:
        with self._lock:
            account = self._accounts.get(tracker_id)
            return copy.deepcopy(account) if account else None

    def get_by_tracker(self, tracker_id: str) -> Account:
        account = self.find_by_tracker(tracker_id)
        if account is None:
            raise UnknownTracker(tracker_id)
        return account

    def get_by_user(self, user_id: str) -> Account:
        with self._lock:
            for account in self._accounts.values():
                if account.user_id == user_id:
                    return copy.deepcopy(account)
        raise UnknownUser(user_id)

    def save(self, account: Account) -> None:
        with self._lock:
            if account.tracker_id not in self._accounts:
                raise UnknownTracker(account.tracker_id)
            self._accounts[account.tracker_id] = copy.deepcopy(account)
            self.persist()

    def digest(self, user_id: str, date: str) -> DigestReport:
        """
        Raises:
            UnknownUser, NoData
        """
        account = self.get_by_user(user_id)
        totals = account.daily_log.get(date)
        if totals is None:
            raise NoData(date)
        return DigestReport(
            date=date,
            steps=totals.steps,
            distance_km=distance_km(totals.distance_mm),
            calories=totals.calories,
            active_minutes=totals.active_minutes,
        )
