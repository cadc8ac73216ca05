"""
Общее хранилище ключей устройств: текстовый файл, одна строка "<HEX12> <HEX32>" на трекер.
Строки, начинающиеся с #, и пустые строки игнорируются.

Файл читают и сервер, и симулятор трекера; сервер перечитывает его при изменении mtime.
"""

from __future__ import annotations

import logging
import os
import tempfile
import threading
from pathlib import Path

from src.crypto.errors import CryptoError, KeystoreError
from src.crypto.suite import DeviceKey
from src.protocol.errors import InvalidField
from src.protocol.models import TrackerId

logger = logging.getLogger(__name__)


class Keystore:
    """
    Потокобезопасное хранилище ключей с ленивой перезагрузкой файла.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._keys: dict[str, DeviceKey] = {}
        self._signature: tuple[int, int, int] | None = None

    # region file io -------------------------------------------------------------
    def _parse(self, text: str) -> dict[str, DeviceKey]:
        keys: dict[str, DeviceKey] = {}
        for number, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise KeystoreError(f"{self.path}:{number}: ожидалось '<HEX12> <HEX32>'")
            try:
                tracker = TrackerId.from_hex(parts[0])
                key = DeviceKey.from_hex(parts[1])
            except (InvalidField, CryptoError) as exc:
                raise KeystoreError(f"{self.path}:{number}: {exc}") from exc
            keys[tracker.hex] = key
        return keys

    def _reload_if_changed(self) -> None:
        try:
            stat = self.path.stat()
        except FileNotFoundError:
            self._keys = {}
            self._signature = None
            return
        signature = (stat.st_mtime_ns, stat.st_size, stat.st_ino)
        if signature == self._signature:
            return
        self._keys = self._parse(self.path.read_text(encoding="utf-8"))
        self._signature = signature
        logger.info("Хранилище ключей %s загружено: %d трекеров", self.path, len(self._keys))

    def save(self) -> None:
        """
        Атомарно записывает файл ключей.
        """
        with self._lock:
            self._write_locked()

    def _write_locked(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["# tracker-id device-key"]
        lines += [f"{tracker} {key.raw.hex().upper()}" for tracker, key in sorted(self._keys.items())]
        fd, tmp_name = tempfile.mkstemp(dir=self.path.parent, prefix=".keystore-", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")
        os.replace(tmp_name, self.path)
        stat = self.path.stat()
        self._signature = (stat.st_mtime_ns, stat.st_size, stat.st_ino)

    # endregion -----------------------------------------------------------------

    def get(self, tracker_id: TrackerId) -> DeviceKey | None:
        with self._lock:
            self._reload_if_changed()
            return self._keys.get(tracker_id.hex)

    def add(self, tracker_id: TrackerId, key: DeviceKey, *, persist: bool = True) -> None:
        with self._lock:
            self._reload_if_changed()
            self._keys[tracker_id.hex] = key
            if persist:
                self._write_locked()
        logger.info("Ключ трекера %s сохранён (fingerprint=%s)", tracker_id, key.fingerprint)

    def __contains__(self, tracker_id: object) -> bool:
        return isinstance(tracker_id, TrackerId) and self.get(tracker_id) is not None

    def __len__(self) -> int:
        with self._lock:
            self._reload_if_changed()
            return len(self._keys)
