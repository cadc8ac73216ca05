"""
Блокировка трекера после серии ошибок подряд.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

from src.services.accounts import Account
from src.services.errors import LockedOut

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LockoutPolicy:
    threshold: int = 5
    lockout_seconds: int = 3600

    def check(self, account: Account, now: int) -> bool:
        """
        Проверяет блокировку. Возвращает True, если истёкшая блокировка была снята
        (аккаунт изменён и его нужно сохранить).

        Raises:
            LockedOut: блокировка ещё действует
        """
        if account.locked_until is None:
            return False
        if now < account.locked_until:
            raise LockedOut(account.tracker_id, account.locked_until)
        account.locked_until = None
        account.error_count = 0
        return True

    def record_failure(self, account: Account, now: int) -> None:
        account.error_count += 1
        if account.error_count >= self.threshold:
            account.locked_until = now + self.lockout_seconds
            logger.warning(
                json.dumps(
                    {
                        "event": "lockout",
                        "tracker_id": account.tracker_id,
                        "errors": account.error_count,
                        "locked_until": account.locked_until,
                    },
                    ensure_ascii=False,
                )
            )

    @staticmethod
    def record_success(account: Account) -> None:
        account.error_count = 0
