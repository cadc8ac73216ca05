import json

import pytest

from src.services.accounts import AccountStore, DailyTotals, distance_km
from src.services.errors import AlreadyPaired, CorruptStore, NoData, UnknownTracker, UnknownUser


@pytest.mark.parametrize(
    "mm, km",
    [(522_720, "0.52"), (10_000_000, "10.00"), (0, "0.00"), (5_000, "0.01"), (4_999, "0.00"), (12_780_000_000, "12780.00")],
)
def test_distance_km(mm, km):
    assert distance_km(mm) == km


def test_register_and_digest(tmp_path):
    store = AccountStore(tmp_path / "accounts.json")
    account = store.register("alice", "0A0B0C0D0E0F")
    account.daily_log["2017-01-15"] = DailyTotals(steps=812, distance_mm=522_720, calories=30, active_minutes=14)
    store.save(account)
    report = store.digest("alice", "2017-01-15")
    assert report.as_dict == {"steps": 812, "distance_km": "0.52", "calories": 30, "active_minutes": 14}


def test_one_account_per_tracker_and_user(tmp_path):
    store = AccountStore(tmp_path / "accounts.json")
    store.register("alice", "0A0B0C0D0E0F")
    with pytest.raises(AlreadyPaired):
        store.register("bob", "0A0B0C0D0E0F")
    with pytest.raises(AlreadyPaired):
        store.register("alice", "1A1B1C1D1E1F")


def test_lookup_errors(tmp_path):
    store = AccountStore(tmp_path / "accounts.json")
    store.register("alice", "0A0B0C0D0E0F")
    with pytest.raises(UnknownTracker):
        store.get_by_tracker("FFFFFFFFFFFF")
    with pytest.raises(UnknownUser):
        store.digest("bob", "2017-01-15")
    with pytest.raises(NoData):
        store.digest("alice", "2017-01-15")


def test_returned_accounts_are_copies(tmp_path):
    store = AccountStore(tmp_path / "accounts.json")
    account = store.register("alice", "0A0B0C0D0E0F")
    account.fraud_flag = True
    assert store.get_by_tracker("0A0B0C0D0E0F").fraud_flag is False


def test_store_survives_restart(tmp_path):
    path = tmp_path / "accounts.json"
    store = AccountStore(path)
    account = store.register("alice", "0A0B0C0D0E0F")
    account.daily_log["2017-01-15"] = DailyTotals(steps=10)
    account.last_sequence = 9
    store.save(account)

    reopened = AccountStore(path)
    restored = reopened.get_by_tracker("0A0B0C0D0E0F")
    assert restored.daily_log["2017-01-15"].steps == 10
    assert restored.last_sequence == 9
    assert json.loads(path.read_text(encoding="utf-8"))["version"] == 1


def test_missing_store_is_empty(tmp_path):
    assert len(AccountStore(tmp_path / "absent" / "accounts.json")) == 0


@pytest.mark.parametrize("content", ['{"accounts": {"X": {"user_id": ', '{"version": 1}', '{"accounts": {"X": {"bogus": 1}}}'])
def test_corrupt_store(tmp_path, content):
    path = tmp_path / "accounts.json"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(CorruptStore):
        AccountStore(path)


def test_negative_totals_rejected():
    with pytest.raises(ValueError):
        DailyTotals(steps=-1)
