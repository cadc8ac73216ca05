"""
Core Package
============
Конфигурация и часы.
"""

# Избегаем жёстких импортов здесь: settings читает .env при импорте
__all__ = []
