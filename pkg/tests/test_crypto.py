import struct

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from src.crypto.errors import BadBlockLength, BadKeyLength, BadLabel, BadTag, KeystoreError
from src.crypto.frames import open_frame, open_megadump, seal_frame
from src.crypto.keystore import Keystore
from src.crypto.suite import (
    LABEL_ENCR,
    LABEL_SIGN,
    DeviceKey,
    decrypt_payload,
    derive_subkey,
    encrypt_payload,
    fingerprint,
    keystream,
    mac,
    nonce_for_sequence,
    verify_mac,
)
from src.crypto.xtea import xtea_decrypt_block, xtea_encrypt_block
from src.protocol.errors import BadCrc, EncryptedPayload
from src.protocol.frames import encode_frame
from src.protocol.models import FrameHeader
from tests.support import KEY_A, KEY_B, TRACKER_A, TRACKER_B, fabricated

keys = st.binary(min_size=16, max_size=16)
blocks = st.binary(min_size=8, max_size=8)


def reference_xtea(key: bytes, block: bytes, rounds: int = 32) -> bytes:
    """Прямой перенос эталонной процедуры encipher (num_rounds=32)."""
    v0, v1 = struct.unpack(">2L", block)
    k = struct.unpack(">4L", key)
    delta, mask, total = 0x9E3779B9, 0xFFFFFFFF, 0
    for _ in range(rounds):
        v0 = (v0 + ((((v1 << 4) ^ (v1 >> 5)) + v1) ^ (total + k[total & 3]))) & mask
        total = (total + delta) & mask
        v1 = (v1 + ((((v0 << 4) ^ (v0 >> 5)) + v0) ^ (total + k[(total >> 11) & 3]))) & mask
    return struct.pack(">2L", v0, v1)


def test_xtea_published_vector():
    key = bytes.fromhex("000102030405060708090A0B0C0D0E0F")
    assert xtea_encrypt_block(key, bytes.fromhex("4142434445464748")) == bytes.fromhex("497DF3D072612CB5")


@settings(max_examples=1000, deadline=None)
@given(keys, blocks)
def test_xtea_decrypt_inverts_encrypt(key, block):
    assert xtea_decrypt_block(key, xtea_encrypt_block(key, block)) == block


@settings(max_examples=100, deadline=None)
@given(keys, blocks)
def test_xtea_matches_reference(key, block):
    assert xtea_encrypt_block(key, block) == reference_xtea(key, block)


def test_xtea_length_checks():
    with pytest.raises(BadBlockLength):
        xtea_encrypt_block(bytes(16), bytes(7))
    with pytest.raises(BadKeyLength):
        xtea_encrypt_block(bytes(15), bytes(8))


def test_ctr_counter_blocks():
    nonce = nonce_for_sequence(5)
    assert nonce == bytes.fromhex("0000000500000000")
    stream = keystream(KEY_A, nonce, 20)
    assert stream[:8] == xtea_encrypt_block(KEY_A.raw, nonce)
    assert stream[8:16] == xtea_encrypt_block(KEY_A.raw, bytes.fromhex("0000000500000001"))
    assert len(stream) == 20


def test_ctr_counter_wraps_modulo_2_64():
    stream = keystream(KEY_A, b"\xFF" * 8, 16)
    assert stream[8:] == xtea_encrypt_block(KEY_A.raw, bytes(8))


@settings(max_examples=1000, deadline=None)
@given(keys, st.binary(max_size=65_536), st.integers(0, 0xFFFFFFFF))
def test_ctr_roundtrip_preserves_length(raw_key, plaintext, sequence):
    key = DeviceKey(raw_key)
    body = encrypt_payload(key, nonce_for_sequence(sequence), plaintext)
    assert len(body.ciphertext) == len(plaintext)
    assert decrypt_payload(key, body) == plaintext


def test_ctr_roundtrip_at_body_limit():
    plaintext = bytes(i & 0xFF for i in range(65_536))
    body = encrypt_payload(KEY_B, nonce_for_sequence(7), plaintext)
    assert body.ciphertext != plaintext
    assert decrypt_payload(KEY_B, body) == plaintext


def test_one_bit_key_change_flips_many_ciphertext_bits():
    block = bytes.fromhex("4142434445464748")
    reference = int.from_bytes(xtea_encrypt_block(KEY_A.raw, block), "big")
    distances = []
    for bit in range(128):
        flipped = (int.from_bytes(KEY_A.raw, "big") ^ (1 << bit)).to_bytes(16, "big")
        cipher = int.from_bytes(xtea_encrypt_block(flipped, block), "big")
        distances.append(bin(reference ^ cipher).count("1"))
    assert sum(d >= 20 for d in distances) >= 124
    assert 28 <= sum(distances) / len(distances) <= 36


def test_mac_layout():
    subkey = derive_subkey(KEY_A, LABEL_SIGN)
    message = b"abc"
    state = xtea_encrypt_block(subkey.raw, struct.pack(">Q", 3))
    block = bytes(a ^ b for a, b in zip(state, b"abc" + bytes(5)))
    assert mac(subkey, message) == xtea_encrypt_block(subkey.raw, block)


def test_mac_distinguishes_padding():
    subkey = derive_subkey(KEY_A, LABEL_SIGN)
    assert mac(subkey, b"abc") != mac(subkey, b"abc\x00")


def test_verify_mac():
    subkey = derive_subkey(KEY_A, LABEL_SIGN)
    tag = mac(subkey, b"payload")
    verify_mac(subkey, b"payload", tag)
    with pytest.raises(BadTag):
        verify_mac(subkey, b"payload!", tag)


@settings(max_examples=1000, deadline=None)
@given(keys, st.binary(max_size=256))
def test_wrong_subkey_never_verifies(raw_key, message):
    subkey = derive_subkey(KEY_A, LABEL_SIGN)
    forger = DeviceKey(raw_key)
    assume(forger != subkey)
    with pytest.raises(BadTag):
        verify_mac(subkey, message, mac(forger, message))


def test_subkeys_differ_and_use_inverted_label():
    sign = derive_subkey(KEY_A, LABEL_SIGN)
    encr = derive_subkey(KEY_A, "ENCR0001")
    assert sign != encr
    inverted = bytes(b ^ 0xFF for b in LABEL_ENCR)
    assert encr.raw == xtea_encrypt_block(KEY_A.raw, LABEL_ENCR) + xtea_encrypt_block(KEY_A.raw, inverted)
    with pytest.raises(BadLabel):
        derive_subkey(KEY_A, b"OTHER001")


def test_key_is_masked():
    assert KEY_A.raw.hex() not in repr(KEY_A)
    assert repr(KEY_A) == f"DeviceKey(fingerprint={fingerprint(KEY_A)})"
    assert len(KEY_A.fingerprint) == 8


def test_bad_key_length():
    with pytest.raises(BadKeyLength):
        DeviceKey(b"short")
    with pytest.raises(BadKeyLength):
        DeviceKey.from_hex("zz")


# region frames -----------------------------------------------------------------
def body() -> bytes:
    return fabricated()[16:-6]


def header(sequence: int = 1) -> FrameHeader:
    return FrameHeader(device_id=TRACKER_A, firmware_version=781, sequence=sequence)


def test_sealed_frame_roundtrip():
    wire = seal_frame(header(), body(), KEY_A, encrypt=True, sign=True)
    opened_header, plaintext = open_frame(wire, KEY_A, require_tag=True)
    assert plaintext == body()
    assert opened_header.encrypted_flag and opened_header.signed_flag
    assert open_megadump(wire, KEY_A).overall.steps == 10_000


def test_ciphertext_differs_per_sequence():
    first = seal_frame(header(1), body(), KEY_A, encrypt=True, sign=False)
    second = seal_frame(header(2), body(), KEY_A, encrypt=True, sign=False)
    assert first[16:-6] != second[16:-6]


def test_wrong_key_fails_tag():
    wire = seal_frame(header(), body(), KEY_A, encrypt=True, sign=True)
    with pytest.raises(BadTag):
        open_frame(wire, KEY_B)


def test_require_tag_on_unsigned_frame():
    wire = seal_frame(header(), body(), KEY_A, encrypt=True, sign=False)
    with pytest.raises(BadTag):
        open_frame(wire, KEY_A, require_tag=True)


def test_encrypted_without_key():
    wire = seal_frame(header(), body(), KEY_A, encrypt=True, sign=False)
    with pytest.raises(EncryptedPayload):
        open_frame(wire, None)


def test_crc_covers_ciphertext():
    wire = bytearray(seal_frame(header(), body(), KEY_A, encrypt=True, sign=True))
    wire[20] ^= 0x01
    with pytest.raises(BadCrc):
        open_frame(bytes(wire), KEY_A)


def test_header_is_authenticated():
    wire = bytearray(seal_frame(header(), body(), KEY_A, encrypt=True, sign=True))
    wire[0] ^= 0x01  # device_id в заголовке, CRC его не покрывает
    with pytest.raises(BadTag):
        open_frame(bytes(wire), KEY_A)


def test_plain_frame_opens_without_key():
    wire = encode_frame(header(), body())
    assert open_frame(wire, None)[1] == body()


# endregion -----------------------------------------------------------------------


# region keystore -----------------------------------------------------------------
def test_keystore_persists_and_reloads(tmp_path):
    path = tmp_path / "keys.txt"
    writer = Keystore(path)
    writer.add(TRACKER_A, KEY_A)
    reader = Keystore(path)
    assert reader.get(TRACKER_A) == KEY_A
    writer.add(TRACKER_B, KEY_B)
    assert reader.get(TRACKER_B) == KEY_B
    assert len(reader) == 2
    assert TRACKER_A in reader


def test_keystore_ignores_comments(tmp_path):
    path = tmp_path / "keys.txt"
    path.write_text(f"# ключи\n\n{TRACKER_A.hex} {KEY_A.raw.hex()}  # трекер A\n", encoding="utf-8")
    assert Keystore(path).get(TRACKER_A) == KEY_A


def test_keystore_missing_file_is_empty(tmp_path):
    assert Keystore(tmp_path / "absent.txt").get(TRACKER_A) is None


@pytest.mark.parametrize("line", ["0A0B0C0D0E0F", "0A0B0C0D0E0F 0011", "XYZ 000102030405060708090A0B0C0D0E0F"])
def test_keystore_rejects_bad_lines(tmp_path, line):
    path = tmp_path / "keys.txt"
    path.write_text(line + "\n", encoding="utf-8")
    with pytest.raises(KeystoreError):
        Keystore(path).get(TRACKER_A)


def test_keystore_never_logs_key(tmp_path, caplog):
    caplog.set_level("DEBUG")
    Keystore(tmp_path / "keys.txt").add(TRACKER_A, KEY_A)
    assert KEY_A.raw.hex() not in caplog.text
    assert KEY_A.raw.hex().upper() not in caplog.text


# endregion -----------------------------------------------------------------------
