"""
Антифрод: отсеивает заведомо неправдоподобную активность до записи в аккаунт.

- reject: шагов за день больше max_daily_steps или слот поминутной сводки больше max_steps_per_minute * period
- flag: длина шага (distance_mm / steps) вне [stride_min_m, stride_max_m]
- accept: всё остальное
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass

from src.protocol.models import Megadump
from src.services.accounts import Account
from src.services.server_config import ServerConfig

logger = logging.getLogger(__name__)


class FraudVerdict(str, enum.Enum):
    ACCEPT = "accept"
    FLAG = "flag"
    REJECT = "reject"


@dataclass(frozen=True)
class FraudReport:
    verdict: FraudVerdict
    reasons: tuple[str, ...] = ()


def _stride_reason(label: str, steps: int, distance_mm: int, config: ServerConfig) -> str | None:
    if steps == 0:
        return f"{label}: {distance_mm} мм без шагов" if distance_mm else None
    stride_m = distance_mm / steps / 1000
    if not config.stride_min_m <= stride_m <= config.stride_max_m:
        return f"{label}: длина шага {stride_m:.2f} м вне [{config.stride_min_m}, {config.stride_max_m}]"
    return None


def fraud_check(account: Account, dump: Megadump, config: ServerConfig) -> FraudReport:
    rejects: list[str] = []
    flags: list[str] = []

    days = [(f"daily@{r.timestamp}", r.steps, r.distance_mm) for r in dump.daily]
    today = dump.current_day
    days.append(("overall", today.steps, today.distance_mm))
    for label, steps, distance_mm in days:
        if steps > config.max_daily_steps:
            rejects.append(f"{label}: {steps} шагов за день больше {config.max_daily_steps}")
        reason = _stride_reason(label, steps, distance_mm, config)
        if reason:
            flags.append(reason)

    slot_limit = config.max_steps_per_minute * dump.per_minute.period_code
    for index, steps in enumerate(dump.per_minute.slots):
        if steps > slot_limit:
            rejects.append(f"per_minute[{index}]: {steps} шагов больше {slot_limit}")

    if rejects:
        report = FraudReport(FraudVerdict.REJECT, tuple(rejects + flags))
    elif flags:
        report = FraudReport(FraudVerdict.FLAG, tuple(flags))
    else:
        report = FraudReport(FraudVerdict.ACCEPT)

    if report.verdict is not FraudVerdict.ACCEPT:
        logger.warning(
            json.dumps(
                {
                    "event": "fraud_verdict",
                    "user_id": account.user_id,
                    "tracker_id": account.tracker_id,
                    "verdict": report.verdict.value,
                    "reasons": list(report.reasons),
                },
                ensure_ascii=False,
            )
        )
    return report
