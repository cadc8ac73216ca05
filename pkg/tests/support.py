"""
Общие построители для тестов: трекеры, конверты, поддельные кадры.
"""

from __future__ import annotations

from pathlib import Path

from src.crypto.keystore import Keystore
from src.crypto.suite import DeviceKey
from src.protocol.envelope import SyncEnvelope
from src.protocol.frames import encode_megadump
from src.protocol.models import FrameHeader, Megadump, OverallSummary, TrackerId
from src.tracker.device import FIRMWARE_PLAINTEXT, TrackerState, new_tracker, record_steps

FIXTURES = Path(__file__).parent / "fixtures"

START = 1484478000  # 2017-01-15 11:00:00 UTC
DATE = "2017-01-15"

TRACKER_A = TrackerId.from_hex("0A0B0C0D0E0F")
TRACKER_B = TrackerId.from_hex("1A1B1C1D1E1F")

KEY_A = DeviceKey(bytes(range(16)))
KEY_B = DeviceKey(bytes(range(16, 32)))


def tracker(
    tracker_id: TrackerId = TRACKER_A,
    key: DeviceKey = KEY_A,
    *,
    encrypted: bool = False,
    signed: bool = False,
    protection_level: int = 0,
    steps: int = 300,
) -> TrackerState:
    t = new_tracker(tracker_id, key, encrypted, signed=signed, protection_level=protection_level, clock=START)
    if steps:
        t = record_steps(t, START, steps)
    return t


def register_keys(path: Path, *pairs: tuple[TrackerId, DeviceKey]) -> Keystore:
    keystore = Keystore(path)
    for tracker_id, key in pairs:
        keystore.add(tracker_id, key)
    return keystore


def fabricated(
    tracker_id: TrackerId = TRACKER_A,
    *,
    steps: int = 10_000,
    distance_mm: int = 10_000_000,
    calories: int = 100,
    timestamp: int = START,
) -> bytes:
    header = FrameHeader(device_id=tracker_id, firmware_version=FIRMWARE_PLAINTEXT, sequence=1)
    overall = OverallSummary(timestamp=timestamp, calories=calories, steps=steps, distance_mm=distance_mm)
    return encode_megadump(Megadump(header=header, overall=overall))


def envelope(tracker_id: TrackerId, wire: bytes) -> SyncEnvelope:
    return SyncEnvelope(tracker_id=tracker_id, payload=wire)


def crc_oracle_bitwise(data: bytes) -> int:
    """CRC-16/CCITT-FALSE, побитовая эталонная реализация."""
    crc = 0xFFFF
    for byte in data:
        for bit in range(7, -1, -1):
            top = (crc >> 15) & 1
            crc = (crc << 1) & 0xFFFF
            if top ^ ((byte >> bit) & 1):
                crc ^= 0x1021
    return crc
