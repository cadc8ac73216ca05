"""
XTEA, режим CTR, CBC-MAC, подключи устройства и хранилище ключей.
"""

from src.crypto.errors import (
    BadBlockLength,
    BadKeyLength,
    BadLabel,
    BadTag,
    CryptoError,
    KeystoreError,
    NonceReuse,
)
from src.crypto.frames import open_frame, open_megadump, seal_frame
from src.crypto.keystore import Keystore
from src.crypto.suite import (
    LABEL_ENCR,
    LABEL_SIGN,
    DeviceKey,
    EncryptedBody,
    decrypt_payload,
    derive_subkey,
    encrypt_payload,
    fingerprint,
    mac,
    nonce_for_sequence,
    verify_mac,
)
from src.crypto.xtea import xtea_decrypt_block, xtea_encrypt_block

__all__ = [
    "BadBlockLength",
    "BadKeyLength",
    "BadLabel",
    "BadTag",
    "CryptoError",
    "DeviceKey",
    "EncryptedBody",
    "Keystore",
    "KeystoreError",
    "LABEL_ENCR",
    "LABEL_SIGN",
    "NonceReuse",
    "decrypt_payload",
    "derive_subkey",
    "encrypt_payload",
    "fingerprint",
    "mac",
    "nonce_for_sequence",
    "open_frame",
    "open_megadump",
    "seal_frame",
    "verify_mac",
    "xtea_decrypt_block",
    "xtea_encrypt_block",
]
