import tempfile
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from src.core.clock import ManualClock
from src.crypto.keystore import Keystore
from src.protocol.crc import crc_ccitt
from src.protocol.envelope import COMMAND_ENABLE_ENCRYPTION
from src.protocol.errors import BadCrc
from src.protocol.frames import decode_megadump, decode_microdump, encode_frame, split_frame, with_crc
from src.protocol.models import ACK_ENABLE_ENCRYPTION, ACK_ERROR, ACK_OK, FrameHeader
from src.services.accounts import AccountStore
from src.services.errors import (
    CrcMismatch,
    InvalidFrame,
    LockedOut,
    MalformedRequest,
    ServerRejection,
    UnknownTracker,
)
from src.services.fraud import FraudVerdict
from src.services.server_config import ServerConfig
from src.services.sync_service import SyncService
from src.tracker.device import apply_server_response, debug_write, generate_megadump, generate_microdump, record_steps
from src.tracker.eeprom import OVERALL, OVERALL_STEPS_ADDR
from tests.support import DATE, KEY_A, KEY_B, START, TRACKER_A, TRACKER_B, envelope, fabricated, register_keys, tracker


def digest(service, user="victim"):
    return service.digest(user, DATE).as_dict


# region vulnerable ---------------------------------------------------------------
def test_honest_plaintext_sync(make_service):
    service = make_service()
    service.register_account("alice", TRACKER_A)
    t, wire = generate_megadump(tracker(steps=812))
    outcome = service.sync(envelope(TRACKER_A, wire))
    assert outcome.dates == (DATE,)
    assert digest(service, "alice")["steps"] == 812

    ack = decode_microdump(outcome.ack)
    assert ack.header.device_id == TRACKER_A
    assert ack.header.sequence == 1
    assert ack.status_code == ACK_OK
    assert apply_server_response(t, outcome.ack).pending.is_empty


def test_impersonation_credits_victim(make_service):
    service = make_service()
    service.register_account("victim", TRACKER_B)
    _, wire = generate_megadump(tracker(TRACKER_A, steps=4321))
    service.sync(envelope(TRACKER_B, wire))
    assert digest(service) == {"steps": 4321, "distance_km": "3.29", "calories": 172, "active_minutes": 34}


def test_fabricated_summary_only_frame(make_service):
    service = make_service()
    service.register_account("victim", TRACKER_A)
    service.sync(envelope(TRACKER_A, fabricated()))
    report = digest(service)
    assert report["steps"] == 10_000
    assert report["distance_km"] == "10.00"
    assert report["calories"] == 100


def test_fabricated_zero_steps(make_service):
    service = make_service()
    service.register_account("victim", TRACKER_A)
    service.sync(envelope(TRACKER_A, fabricated(steps=0, distance_mm=0)))
    assert digest(service)["steps"] == 0


def test_encrypted_sync_uses_header_device_key(make_service, keystore_path):
    register_keys(keystore_path, (TRACKER_A, KEY_A))
    service = make_service()
    service.register_account("victim", TRACKER_B)
    _, wire = generate_megadump(tracker(TRACKER_A, encrypted=True, steps=500))
    service.sync(envelope(TRACKER_B, wire))
    assert digest(service)["steps"] == 500


def test_hardware_injection_reaches_digest(make_service, keystore_path):
    register_keys(keystore_path, (TRACKER_A, KEY_A))
    service = make_service()
    service.register_account("victim", TRACKER_A)
    t = debug_write(tracker(encrypted=True), OVERALL_STEPS_ADDR, (0x00FFFFFF).to_bytes(4, "little"))
    _, wire = generate_megadump(t)
    service.sync(envelope(TRACKER_A, wire))
    assert digest(service)["steps"] == 16_777_215


def test_crc_oracle_in_two_requests(make_service):
    service = make_service()
    service.register_account("victim", TRACKER_A)
    wire = fabricated()
    expected = crc_ccitt(split_frame(wire)[1])
    with pytest.raises(CrcMismatch) as info:
        service.sync(envelope(TRACKER_A, with_crc(wire, 0)))
    assert info.value.expected == expected
    assert isinstance(info.value.__cause__, BadCrc)
    service.sync(envelope(TRACKER_A, with_crc(wire, info.value.expected)))
    assert digest(service)["steps"] == 10_000


def test_lockout_after_threshold_and_recovery(make_service, clock):
    service = make_service()
    service.register_account("victim", TRACKER_A)
    bad = with_crc(fabricated(), 0)
    for _ in range(5):
        with pytest.raises(CrcMismatch):
            service.sync(envelope(TRACKER_A, bad))
    with pytest.raises(LockedOut) as info:
        service.sync(envelope(TRACKER_A, bad))
    assert info.value.until == START + 3600
    with pytest.raises(LockedOut):
        service.sync(envelope(TRACKER_A, fabricated()))

    clock.advance(3599)
    with pytest.raises(LockedOut):
        service.sync(envelope(TRACKER_A, fabricated()))
    clock.advance(1)
    service.sync(envelope(TRACKER_A, fabricated()))
    assert service.store.get_by_tracker(TRACKER_A.hex).error_count == 0


def test_success_resets_error_count(make_service):
    service = make_service(error_threshold=3)
    service.register_account("victim", TRACKER_A)
    for _ in range(2):
        with pytest.raises(CrcMismatch):
            service.sync(envelope(TRACKER_A, with_crc(fabricated(), 0)))
    service.sync(envelope(TRACKER_A, fabricated()))
    for _ in range(2):
        with pytest.raises(CrcMismatch):
            service.sync(envelope(TRACKER_A, with_crc(fabricated(), 0)))


def test_unknown_tracker(make_service):
    with pytest.raises(UnknownTracker):
        make_service().sync(envelope(TRACKER_B, fabricated()))


def test_garbage_body_is_invalid_frame(make_service):
    service = make_service()
    service.register_account("victim", TRACKER_A)
    wire = encode_frame(FrameHeader(device_id=TRACKER_A, firmware_version=764), b"\x01\x02\x03")
    with pytest.raises(InvalidFrame):
        service.sync(envelope(TRACKER_A, wire))


def test_daily_records_merged_before_overall(make_service):
    service = make_service()
    service.register_account("victim", TRACKER_A)
    t = record_steps(tracker(steps=300), START + 86_400, 50)
    _, wire = generate_megadump(t)
    assert decode_megadump(wire).overall.steps == 350
    outcome = service.sync(envelope(TRACKER_A, wire))
    assert outcome.dates == ("2017-01-15", "2017-01-16")
    assert service.digest("victim", "2017-01-15").steps == 300
    assert service.digest("victim", "2017-01-16").steps == 50
    assert service.digest("victim", "2017-01-16").as_dict["distance_km"] == "0.04"


def test_state_survives_restart(make_service, store_path):
    service = make_service()
    service.register_account("victim", TRACKER_A)
    service.sync(envelope(TRACKER_A, fabricated()))
    restarted = SyncService(
        config=service.config,
        store=AccountStore(store_path),
        keystore=service.keystore,
        clock=service.clock,
    )
    assert digest(restarted)["steps"] == 10_000


def test_validate(make_service):
    service = make_service()
    service.register_account("victim", TRACKER_A)
    assert service.validate(envelope(TRACKER_A, generate_microdump(tracker(steps=0)))) is True
    assert service.validate(envelope(TRACKER_B, generate_microdump(tracker(TRACKER_B, steps=0)))) is False
    with pytest.raises(MalformedRequest):
        service.validate(envelope(TRACKER_A, fabricated()))


# endregion -----------------------------------------------------------------------


# region hardened -----------------------------------------------------------------
@pytest.fixture
def hardened(make_service, keystore_path):
    register_keys(keystore_path, (TRACKER_A, KEY_A), (TRACKER_B, KEY_B))
    service = make_service("hardened")
    service.register_account("victim", TRACKER_B)
    service.register_account("attacker", TRACKER_A)
    return service


def assert_rejected_unchanged(service, tracker_id, wire, exc_type=InvalidFrame):
    before = service.store.get_by_tracker(tracker_id.hex).daily_log
    with pytest.raises(exc_type) as info:
        service.sync(envelope(tracker_id, wire))
    assert service.store.get_by_tracker(tracker_id.hex).daily_log == before
    return info.value


def test_hardened_accepts_signed_encrypted_frame(hardened):
    _, wire = generate_megadump(tracker(TRACKER_B, KEY_B, encrypted=True, signed=True, steps=812))
    outcome = hardened.sync(envelope(TRACKER_B, wire))
    assert outcome.fraud_verdict is FraudVerdict.ACCEPT
    assert digest(hardened)["steps"] == 812


def test_hardened_blocks_impersonation(hardened):
    _, wire = generate_megadump(tracker(TRACKER_A, KEY_A, encrypted=True, signed=True))
    assert_rejected_unchanged(hardened, TRACKER_B, wire)


def test_hardened_blocks_plaintext_and_requests_encryption(hardened):
    t = tracker(TRACKER_B, KEY_B)
    t, wire = generate_megadump(t)
    exc = assert_rejected_unchanged(hardened, TRACKER_B, wire)
    assert exc.tracker_command == COMMAND_ENABLE_ENCRYPTION
    ack = decode_microdump(exc.ack)
    assert ack.status_code == ACK_ERROR | ACK_ENABLE_ENCRYPTION
    t = apply_server_response(t, exc.ack)
    assert t.eeprom.encryption_flag
    assert t.pending.steps == 300


def test_hardened_blocks_fabrication(hardened):
    assert_rejected_unchanged(hardened, TRACKER_B, fabricated(TRACKER_B))


def test_hardened_hides_crc_oracle(hardened):
    exc = assert_rejected_unchanged(hardened, TRACKER_B, with_crc(fabricated(TRACKER_B), 0))
    assert not isinstance(exc, CrcMismatch)


def test_hardened_requires_signature(hardened):
    _, wire = generate_megadump(tracker(TRACKER_B, KEY_B, encrypted=True, signed=False))
    assert_rejected_unchanged(hardened, TRACKER_B, wire)


def test_hardened_refuses_replay(hardened):
    _, wire = generate_megadump(tracker(TRACKER_B, KEY_B, encrypted=True, signed=True))
    hardened.sync(envelope(TRACKER_B, wire))
    assert_rejected_unchanged(hardened, TRACKER_B, wire)


def test_hardened_rejects_injected_steps(hardened):
    t = debug_write(tracker(TRACKER_B, KEY_B, encrypted=True, signed=True), OVERALL_STEPS_ADDR, (0x00FFFFFF).to_bytes(4, "little"))
    _, wire = generate_megadump(t)
    assert_rejected_unchanged(hardened, TRACKER_B, wire)
    assert hardened.store.get_by_tracker(TRACKER_B.hex).fraud_flag is True


def test_hardened_flags_implausible_stride(hardened):
    t = tracker(TRACKER_B, KEY_B, encrypted=True, signed=True, steps=300)
    t = debug_write(t, OVERALL.start + 10, (300 * 100).to_bytes(4, "little"))
    _, wire = generate_megadump(t)
    outcome = hardened.sync(envelope(TRACKER_B, wire))
    assert outcome.fraud_verdict is FraudVerdict.FLAG
    assert hardened.store.get_by_tracker(TRACKER_B.hex).fraud_flag is True
    assert digest(hardened)["steps"] == 300


def test_hardened_fraud_check_uses_current_day(hardened):
    t = record_steps(tracker(TRACKER_B, KEY_B, encrypted=True, signed=True, steps=0), START, 60_000)
    t = record_steps(t, START + 86_400, 60_000)
    _, wire = generate_megadump(t)
    outcome = hardened.sync(envelope(TRACKER_B, wire))
    assert outcome.fraud_verdict is FraudVerdict.ACCEPT
    assert hardened.digest("victim", "2017-01-15").steps == 60_000
    assert hardened.digest("victim", "2017-01-16").steps == 60_000


def test_hardened_lockout_stays_generic(hardened, clock):
    bad = with_crc(fabricated(TRACKER_B), 0)
    for _ in range(5):
        with pytest.raises(InvalidFrame):
            hardened.sync(envelope(TRACKER_B, bad))
    with pytest.raises(LockedOut):
        hardened.sync(envelope(TRACKER_B, bad))


def test_hardened_validate_checks_header(hardened):
    assert hardened.validate(envelope(TRACKER_B, generate_microdump(tracker(TRACKER_A, steps=0)))) is False
    assert hardened.validate(envelope(TRACKER_B, generate_microdump(tracker(TRACKER_B, KEY_B, steps=0)))) is True


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    steps=st.integers(0, 0xFFFFFFFF),
    distance_mm=st.integers(0, 0xFFFFFFFF),
    attack=st.sampled_from(["impersonate", "fabricate", "crc-oracle", "hw-inject"]),
)
def test_hardened_matrix_leaves_account_unchanged(steps, distance_mm, attack):
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        register_keys(root / "keys.txt", (TRACKER_A, KEY_A), (TRACKER_B, KEY_B))
        service = SyncService(
            config=ServerConfig(mode="hardened"),
            store=AccountStore(root / "accounts.json"),
            keystore=Keystore(root / "keys.txt"),
            clock=ManualClock(START),
        )
        service.register_account("victim", TRACKER_B)
        if attack == "impersonate":
            _, wire = generate_megadump(tracker(TRACKER_A, KEY_A, steps=steps % 5000))
        elif attack == "fabricate":
            wire = fabricated(TRACKER_B, steps=steps, distance_mm=distance_mm)
        elif attack == "crc-oracle":
            forged = fabricated(TRACKER_B, steps=steps, distance_mm=distance_mm)
            crc = split_frame(forged)[2].crc
            wire = with_crc(forged, crc ^ 0xFFFF)
        else:
            t = tracker(TRACKER_B, KEY_B, encrypted=True, steps=100)
            wire = generate_megadump(debug_write(t, OVERALL_STEPS_ADDR, steps.to_bytes(4, "little")))[1]

        with pytest.raises(ServerRejection) as info:
            service.sync(envelope(TRACKER_B, wire))
        assert info.value.code != "crc_mismatch"
        account = service.store.get_by_tracker(TRACKER_B.hex)
        assert account.daily_log == {}


# endregion -----------------------------------------------------------------------
