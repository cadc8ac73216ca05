from __future__ import annotations

import pytest
from aiohttp.test_utils import TestServer

from src.api.sync_client import SyncClient
from src.core.clock import ManualClock
from src.crypto.keystore import Keystore
from src.services.accounts import AccountStore
from src.services.server_config import ServerConfig
from src.services.sync_service import SyncService
from src.webapp.server import CloudServer
from tests.support import START


@pytest.fixture
def clock() -> ManualClock:
    return ManualClock(START)


@pytest.fixture
def keystore_path(tmp_path):
    return tmp_path / "keystore.txt"


@pytest.fixture
def store_path(tmp_path):
    return tmp_path / "accounts.json"


@pytest.fixture
def make_service(store_path, keystore_path, clock):
    def factory(mode: str = "vulnerable", **overrides) -> SyncService:
        return SyncService(
            config=ServerConfig(mode=mode, **overrides),
            store=AccountStore(store_path),
            keystore=Keystore(keystore_path),
            clock=clock,
        )

    return factory


@pytest.fixture
async def start_server(make_service):
    """
    Поднимает CloudServer на случайном порту; возвращает (сервер, базовый URL).
    """
    running: list[TestServer] = []

    async def factory(mode: str = "vulnerable", **overrides) -> tuple[CloudServer, str]:
        cloud = CloudServer(make_service(mode, **overrides))
        test_server = TestServer(cloud.app)
        await test_server.start_server()
        running.append(test_server)
        return cloud, str(test_server.make_url("")).rstrip("/")

    yield factory
    for test_server in running:
        await test_server.close()


@pytest.fixture
async def client_for():
    clients: list[SyncClient] = []

    def factory(base_url: str) -> SyncClient:
        client = SyncClient(base_url, attempts=1, backoff=0.0)
        clients.append(client)
        return client

    yield factory
    for client in clients:
        await client.aclose()
