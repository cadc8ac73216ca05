"""
Симулятор трекера: образ EEPROM, накопление активности, кадры, отладочный порт.
"""

from src.tracker.device import (
    FIRMWARE_ENCRYPTED,
    FIRMWARE_PLAINTEXT,
    PendingActivity,
    TrackerState,
    apply_server_response,
    debug_read,
    debug_write,
    generate_megadump,
    generate_microdump,
    new_tracker,
    raise_protection,
    record_steps,
)
from src.tracker.eeprom import (
    DEVICE_KEY,
    EEPROM_SIZE,
    ENCRYPTION_FLAG,
    MEMORY_MAP,
    OVERALL_STEPS_ADDR,
    SERIAL_ID,
    SIGNATURE_FLAG,
    ActivityRecords,
    EepromImage,
    MemoryRegion,
)
from src.tracker.errors import (
    ActivityOverflow,
    ClockRegression,
    CorruptImage,
    DebugDisabled,
    OutOfRange,
    ProtectionDowngrade,
    ReadProtected,
    ResponseMismatch,
    TrackerError,
)

__all__ = [
    "ActivityOverflow",
    "ActivityRecords",
    "ClockRegression",
    "CorruptImage",
    "DEVICE_KEY",
    "DebugDisabled",
    "EEPROM_SIZE",
    "ENCRYPTION_FLAG",
    "EepromImage",
    "FIRMWARE_ENCRYPTED",
    "FIRMWARE_PLAINTEXT",
    "MEMORY_MAP",
    "MemoryRegion",
    "OVERALL_STEPS_ADDR",
    "OutOfRange",
    "PendingActivity",
    "ProtectionDowngrade",
    "ReadProtected",
    "ResponseMismatch",
    "SERIAL_ID",
    "SIGNATURE_FLAG",
    "TrackerError",
    "TrackerState",
    "apply_server_response",
    "debug_read",
    "debug_write",
    "generate_megadump",
    "generate_microdump",
    "new_tracker",
    "raise_protection",
    "record_steps",
]
