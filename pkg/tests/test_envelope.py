import base64

import pytest

from src.protocol.envelope import (
    ServerResponse,
    SyncEnvelope,
    decode_envelope,
    decode_response,
    encode_envelope,
    encode_response,
)
from src.protocol.errors import MalformedEnvelope
from tests.support import TRACKER_A, fabricated


def test_envelope_xml_shape():
    document = encode_envelope(SyncEnvelope(TRACKER_A, fabricated()))
    assert b"<galileo-client" in document
    assert b"<tracker-id>0A0B0C0D0E0F</tracker-id>" in document
    assert base64.b64encode(fabricated()) in document


def test_envelope_decode():
    decoded = decode_envelope(encode_envelope(SyncEnvelope(TRACKER_A, fabricated(), client_version="test/2")))
    assert decoded == SyncEnvelope(TRACKER_A, fabricated(), client_version="test/2")


@pytest.mark.parametrize(
    "document",
    [
        b"not xml",
        b"<galileo-server/>",
        b"<galileo-client><data>AAAA</data></galileo-client>",
        b"<galileo-client><tracker-id>XYZ</tracker-id><data>AAAA</data></galileo-client>",
        b"<galileo-client><tracker-id>0A0B0C0D0E0F</tracker-id><data>!!!</data></galileo-client>",
        b"<galileo-client><tracker-id>0A0B0C0D0E0F</tracker-id><data>AAAA</data></galileo-client>",
    ],
)
def test_malformed_envelopes(document):
    with pytest.raises(MalformedEnvelope):
        decode_envelope(document)


def test_response_expected_crc_is_hex():
    document = encode_response(ServerResponse(status="error", error="checksum mismatch", expected_crc=0x0A1B))
    assert b"<expected-crc>0A1B</expected-crc>" in document
    assert decode_response(document).expected_crc == 0x0A1B


def test_response_with_command():
    response = ServerResponse(status="error", data=b"\x01\x02", error="invalid message", tracker_command="enable-encryption")
    assert decode_response(encode_response(response)) == response


def test_unknown_status_rejected():
    with pytest.raises(MalformedEnvelope):
        decode_response(b"<galileo-server><status>maybe</status></galileo-server>")
