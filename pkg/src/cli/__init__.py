"""
Командная строка trackersync: сервер, прокси, разбор кадров и сценарии атак.
"""
