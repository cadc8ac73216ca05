"""
==============================================================================
TRACKERSYNC - CONFIGURATION
==============================================================================
Управление конфигурацией через переменные окружения.
Использует Pydantic Settings для валидации и загрузки из .env файла.
==============================================================================
"""

from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Класс для управления настройками приложения.

    Автоматически загружает переменные окружения из файла .env
    с валидацией типов и значений по умолчанию.

    Attributes:
        SERVER_MODE (str): Режим облачного сервера: vulnerable или hardened
        SERVER_HOST (str): Хост HTTP-сервера синхронизации
        SERVER_PORT (int): Порт HTTP-сервера синхронизации
        STORE_PATH (str): JSON-файл с аккаунтами
        KEYSTORE_PATH (str): Файл ключей устройств (общий для сервера и трекеров)
        ERROR_THRESHOLD (int): Число ошибок подряд до блокировки трекера
        LOCKOUT_SECONDS (int): Длительность блокировки в секундах
        MAX_DAILY_STEPS (int): Порог шагов за день для антифрода
        MAX_STEPS_PER_MINUTE (int): Порог шагов в минуту для антифрода
        STRIDE_MIN_M (float): Минимальная правдоподобная длина шага (м)
        STRIDE_MAX_M (float): Максимальная правдоподобная длина шага (м)
        CLOCK_SOURCE (str): Источник времени сервера: system или manual
        CLOCK_START (int): Начальное время для manual-часов (Unix-секунды)
        DEBUG_MODE (bool): Режим отладки с подробными логами
        LOG_DIR (str): Каталог файловых логов
        SERVER_URL (str): Адрес сервера для CLI-клиента
        CLIENT_TIMEOUT (float): Таймаут HTTP-запросов клиента в секундах
        CLIENT_RETRY_ATTEMPTS (int): Количество попыток при сетевых ошибках/5xx
        CLIENT_RETRY_BACKOFF (float): Базовая задержка перед повтором (сек)
        DISABLE_SSL_VERIFY (bool): Отключить проверку SSL (не рекомендуется)
        CA_BUNDLE (str): Свой CA-файл (например, сертификат MITM-прокси)
    """

    # Сервер
    SERVER_MODE: Literal["vulnerable", "hardened"] = "vulnerable"  # vulnerable - без мер защиты
    SERVER_HOST: str = "127.0.0.1"  # Хост сервера синхронизации
    SERVER_PORT: int = Field(8088, gt=0)  # Порт сервера синхронизации
    STORE_PATH: str = "data/accounts.json"  # Хранилище аккаунтов
    KEYSTORE_PATH: str = "data/keystore.txt"  # Строки "<HEX12> <HEX32>"

    # Блокировка после ошибок
    ERROR_THRESHOLD: int = Field(5, gt=0)  # Ошибок подряд до блокировки
    LOCKOUT_SECONDS: int = Field(3600, gt=0)  # Длительность блокировки (по умолчанию час)

    # Антифрод (только hardened)
    MAX_DAILY_STEPS: int = Field(100_000, gt=0)  # Больше за день - отклоняем
    MAX_STEPS_PER_MINUTE: int = Field(300, gt=0)  # Больше в минуту - отклоняем
    STRIDE_MIN_M: float = Field(0.2, gt=0)  # Короче - помечаем аккаунт
    STRIDE_MAX_M: float = Field(2.5, gt=0)  # Длиннее - помечаем аккаунт

    # Часы сервера
    CLOCK_SOURCE: Literal["system", "manual"] = "system"  # manual - для воспроизводимых прогонов
    CLOCK_START: int = 1484478000  # Начальное время manual-часов (2017-01-15 11:00 UTC)

    # Логи
    DEBUG_MODE: bool = False  # Режим отладки - подробные логи в консоли
    LOG_DIR: str = "logs"  # Каталог для trackersync.log

    # Клиент синхронизации
    SERVER_URL: str = "http://127.0.0.1:8088"  # Адрес сервера для CLI
    CLIENT_TIMEOUT: float = Field(10.0, gt=0)  # Таймаут запросов клиента (секунды)
    CLIENT_RETRY_ATTEMPTS: int = Field(3, gt=0)  # Повторы при сетевых ошибках и 5xx
    CLIENT_RETRY_BACKOFF: float = Field(0.2, gt=0)  # Базовая задержка перед повтором, экспоненциальный рост
    DISABLE_SSL_VERIFY: bool = False  # Отключить проверку SSL (только если есть проблемы с сертификатами)
    CA_BUNDLE: str = ""  # Путь к CA-файлу; пусто - certifi

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra='ignore'  # Игнорировать лишние переменные в .env
    )


settings = Settings()
