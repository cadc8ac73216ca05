"""
TrackerSync - Source Code Package
=================================
Симулятор синхронизации фитнес-трекера: протокол, трекер, облачный сервер, сценарии атак.

Структура:
- protocol/ - кадры, секции, экранирование, CRC, конверты, разбор
- crypto/   - XTEA, CTR, CBC-MAC, хранилище ключей
- tracker/  - образ EEPROM и симулятор трекера
- services/ - логика облачного сервера (аккаунты, блокировка, антифрод)
- webapp/   - HTTP-сервер синхронизации
- api/      - HTTP-клиент сервера
- cli/      - командная строка, сценарии, перехватывающий прокси
- core/     - конфигурация и часы
- utils/    - hex-дампы
"""

__version__ = "1.0.0"
