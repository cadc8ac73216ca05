"""
Параметры облачного сервера. Чистые модули получают их явно, а не читают settings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

MODE_VULNERABLE = "vulnerable"
MODE_HARDENED = "hardened"

ServerMode = Literal["vulnerable", "hardened"]


@dataclass(frozen=True)
class ServerConfig:
    mode: ServerMode = MODE_VULNERABLE
    error_threshold: int = 5
    lockout_seconds: int = 3600
    max_daily_steps: int = 100_000
    max_steps_per_minute: int = 300
    stride_min_m: float = 0.2
    stride_max_m: float = 2.5

    def __post_init__(self) -> None:
        if self.mode not in (MODE_VULNERABLE, MODE_HARDENED):
            raise ValueError(f"неизвестный режим сервера: {self.mode!r}")
        for name in (
            "error_threshold",
            "lockout_seconds",
            "max_daily_steps",
            "max_steps_per_minute",
            "stride_min_m",
            "stride_max_m",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} должен быть положительным")
        if self.stride_min_m >= self.stride_max_m:
            raise ValueError("stride_min_m должен быть меньше stride_max_m")

    @property
    def hardened(self) -> bool:
        return self.mode == MODE_HARDENED

    @classmethod
    def from_settings(cls, settings, **overrides) -> "ServerConfig":
        values = {
            "mode": settings.SERVER_MODE,
            "error_threshold": settings.ERROR_THRESHOLD,
            "lockout_seconds": settings.LOCKOUT_SECONDS,
            "max_daily_steps": settings.MAX_DAILY_STEPS,
            "max_steps_per_minute": settings.MAX_STEPS_PER_MINUTE,
            "stride_min_m": settings.STRIDE_MIN_M,
            "stride_max_m": settings.STRIDE_MAX_M,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
