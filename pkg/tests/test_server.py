import httpx
import pytest

from src.api.sync_client import ServerError
from src.protocol.crc import crc_ccitt
from src.protocol.frames import decode_microdump, split_frame, with_crc
from src.protocol.models import ACK_OK
from src.tracker.device import generate_megadump, generate_microdump
from src.webapp.error_handler import ResponseBuilder
from tests.support import DATE, KEY_A, TRACKER_A, TRACKER_B, envelope, fabricated, register_keys, tracker


async def test_health(start_server, client_for):
    _, url = await start_server("hardened")
    assert await client_for(url).health() == {"status": "ok", "mode": "hardened"}


async def test_pair_then_conflict(start_server, client_for):
    _, url = await start_server()
    client = client_for(url)
    assert await client.pair("alice", TRACKER_A) == {"status": "ok", "user_id": "alice", "tracker_id": TRACKER_A.hex}
    with pytest.raises(ServerError) as info:
        await client.pair("bob", TRACKER_A)
    assert info.value.status == 409


async def test_pair_rejects_bad_tracker_id(start_server):
    _, url = await start_server()
    async with httpx.AsyncClient(base_url=url) as http:
        response = await http.post("/1/user/alice/devices.json", json={"tracker_id": "XYZ"})
    assert response.status_code == 400


async def test_sync_then_digest(start_server, client_for):
    _, url = await start_server()
    client = client_for(url)
    await client.pair("victim", TRACKER_A)
    _, wire = generate_megadump(tracker(steps=686))

    reply = await client.sync(envelope(TRACKER_A, wire))
    assert reply.ok
    assert decode_microdump(reply.document.data).status_code == ACK_OK
    assert await client.digest("victim", DATE) == {
        "steps": 686,
        "distance_km": "0.52",
        "calories": 27,
        "active_minutes": 6,
    }


async def test_digest_missing(start_server, client_for):
    _, url = await start_server()
    client = client_for(url)
    assert await client.digest("nobody", DATE) is None
    await client.pair("victim", TRACKER_A)
    assert await client.digest("victim", DATE) is None


async def test_crc_oracle_over_http(start_server, client_for):
    _, url = await start_server()
    client = client_for(url)
    await client.pair("victim", TRACKER_A)
    wire = fabricated()

    reply = await client.sync(envelope(TRACKER_A, with_crc(wire, 0)))
    assert reply.status == 400
    assert reply.document.expected_crc == crc_ccitt(split_frame(wire)[1])

    reply = await client.sync(envelope(TRACKER_A, with_crc(wire, reply.document.expected_crc)))
    assert reply.ok
    assert (await client.digest("victim", DATE))["steps"] == 10_000


async def test_hardened_responses_are_generic(start_server, client_for, keystore_path):
    register_keys(keystore_path, (TRACKER_A, KEY_A))
    _, url = await start_server("hardened")
    client = client_for(url)
    await client.pair("victim", TRACKER_A)

    reply = await client.sync(envelope(TRACKER_A, with_crc(fabricated(), 0)))
    assert reply.status == 400
    assert reply.document.error == ResponseBuilder.GENERIC_INVALID
    assert reply.document.expected_crc is None

    unknown = await client.sync(envelope(TRACKER_B, fabricated(TRACKER_B)))
    assert unknown.status == 400
    assert unknown.document.error == ResponseBuilder.GENERIC_INVALID


async def test_hardened_plaintext_gets_enable_encryption(start_server, client_for, keystore_path):
    register_keys(keystore_path, (TRACKER_A, KEY_A))
    _, url = await start_server("hardened")
    client = client_for(url)
    await client.pair("victim", TRACKER_A)
    _, wire = generate_megadump(tracker())

    reply = await client.sync(envelope(TRACKER_A, wire))
    assert not reply.ok
    assert reply.document.tracker_command == "enable-encryption"
    assert reply.document.data is not None


async def test_lockout_returns_429(start_server, client_for):
    _, url = await start_server(error_threshold=2)
    client = client_for(url)
    await client.pair("victim", TRACKER_A)
    bad = envelope(TRACKER_A, with_crc(fabricated(), 0))
    statuses = [(await client.sync(bad)).status for _ in range(3)]
    assert statuses == [400, 400, 429]
    assert (await client.sync(envelope(TRACKER_A, fabricated()))).status == 429


async def test_malformed_envelope(start_server):
    _, url = await start_server()
    async with httpx.AsyncClient(base_url=url) as http:
        response = await http.post("/1/devices/client/sync", content=b"<not-xml")
    assert response.status_code == 400
    assert b"<status>error</status>" in response.content


async def test_unknown_tracker_is_404_in_vulnerable_mode(start_server, client_for):
    _, url = await start_server()
    reply = await client_for(url).sync(envelope(TRACKER_B, fabricated(TRACKER_B)))
    assert reply.status == 404


async def test_validate(start_server, client_for):
    _, url = await start_server()
    client = client_for(url)
    await client.pair("victim", TRACKER_A)
    known = await client.validate(envelope(TRACKER_A, generate_microdump(tracker(steps=0))))
    unknown = await client.validate(envelope(TRACKER_B, generate_microdump(tracker(TRACKER_B, steps=0))))
    assert known.document.valid is True
    assert unknown.document.valid is False


async def test_state_survives_server_restart(start_server, client_for):
    _, url = await start_server()
    client = client_for(url)
    await client.pair("victim", TRACKER_A)
    assert (await client.sync(envelope(TRACKER_A, fabricated()))).ok

    _, restarted = await start_server()
    assert (await client_for(restarted).digest("victim", DATE))["steps"] == 10_000
