import httpx
import pytest

from src.api.sync_client import ServerError, SyncClient, build_verify
from src.protocol.envelope import ServerResponse, decode_envelope, encode_response
from tests.support import DATE, TRACKER_A, envelope, fabricated

OK_DOCUMENT = encode_response(ServerResponse(status="ok", data=b"\x01\x02"))


def client_with(handler, attempts: int = 3) -> SyncClient:
    return SyncClient("http://sync.test", attempts=attempts, backoff=0.0, transport=httpx.MockTransport(handler))


async def test_retries_server_errors():
    statuses = iter([503, 502, 200])

    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(next(statuses), content=OK_DOCUMENT)

    async with client_with(handler) as client:
        reply = await client.sync(envelope(TRACKER_A, fabricated()))
    assert reply.ok
    assert reply.document.data == b"\x01\x02"
    assert client.requests_sent == 3


async def test_gives_up_after_attempts():
    async with client_with(lambda request: httpx.Response(500), attempts=2) as client:
        with pytest.raises(ServerError) as info:
            await client.health()
    assert info.value.status == 500
    assert client.requests_sent == 2


async def test_client_errors_are_not_retried():
    document = encode_response(ServerResponse(status="error", error="checksum mismatch", expected_crc=0x1234))

    async with client_with(lambda request: httpx.Response(400, content=document)) as client:
        reply = await client.sync(envelope(TRACKER_A, fabricated()))
    assert not reply.ok
    assert reply.status == 400
    assert reply.document.expected_crc == 0x1234
    assert client.requests_sent == 1


async def test_connection_error_becomes_server_error():
    def handler(request: httpx.Request) -> httpx.Response:
        raise httpx.ConnectError("refused", request=request)

    async with client_with(handler, attempts=2) as client:
        with pytest.raises(ServerError) as info:
            await client.digest("victim", DATE)
    assert info.value.status is None
    assert isinstance(info.value.__cause__, httpx.ConnectError)


async def test_unparseable_reply():
    async with client_with(lambda request: httpx.Response(200, content=b"<html/>")) as client:
        with pytest.raises(ServerError):
            await client.sync(envelope(TRACKER_A, fabricated()))


async def test_request_shapes():
    seen: list[httpx.Request] = []

    def handler(request: httpx.Request) -> httpx.Response:
        seen.append(request)
        if request.url.path.endswith(".json") and request.method == "GET":
            return httpx.Response(404, json={"error": "no_data"})
        if request.url.path.endswith("devices.json"):
            return httpx.Response(200, json={"status": "ok"})
        return httpx.Response(200, content=encode_response(ServerResponse(status="ok", valid=True)))

    wire = fabricated()
    async with client_with(handler) as client:
        assert await client.digest("victim", DATE) is None
        assert await client.pair("victim", TRACKER_A) == {"status": "ok"}
        assert (await client.validate(envelope(TRACKER_A, wire))).document.valid is True

    digest, pair, validate = seen
    assert digest.url.path == f"/1/user/victim/activities/date/{DATE}.json"
    assert pair.url.path == "/1/user/victim/devices.json"
    assert validate.url.params["btAddress"] == TRACKER_A.hex
    assert validate.headers["content-type"] == "application/xml"
    assert decode_envelope(validate.content).payload == wire


def test_build_verify():
    assert build_verify(disable=True) is False
    assert build_verify() is not False
