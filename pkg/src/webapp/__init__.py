"""
Пакет, содержащий HTTP-сервер синхронизации и обработку ошибок.
"""
