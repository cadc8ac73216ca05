"""
API Package
===========
HTTP-клиент сервера синхронизации.
"""

from .sync_client import ClientError, ServerError, SyncClient, SyncReply

__all__ = [
    'ClientError',
    'ServerError',
    'SyncClient',
    'SyncReply',
]
