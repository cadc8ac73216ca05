"""
Исключения криптографического набора (XTEA, CTR, CBC-MAC, хранилище ключей).
"""

from __future__ import annotations


class CryptoError(Exception):
    """
    Базовая ошибка криптографии.
    """


class BadBlockLength(CryptoError):
    def __init__(self, length: int) -> None:
        self.length = length
        super().__init__(f"блок XTEA должен быть 8 байт, получено {length}")


class BadKeyLength(CryptoError):
    def __init__(self, length: int) -> None:
        self.length = length
        super().__init__(f"ключ устройства должен быть 16 байт, получено {length}")


class BadLabel(CryptoError):
    """
    Метка подключа не из списка известных (SIGN0001, ENCR0001).
    """


class BadTag(CryptoError):
    """
    Тег аутентификации отсутствует или не совпал с пересчитанным.
    """


class NonceReuse(CryptoError):
    """
    Номер сообщения (он же nonce) уже использовался с этим ключом.
    """

    def __init__(self, sequence: int) -> None:
        self.sequence = sequence
        super().__init__(f"nonce для sequence={sequence} уже использован")


class KeystoreError(CryptoError):
    """
    Файл ключей не разбирается.
    """
