"""
XML-конверт запроса синхронизации и XML-документ ответа сервера.

Запрос:
    <galileo-client version="2.0">
      <client-info><client-version>...</client-version></client-info>
      <tracker-id>0A0B0C0D0E0F</tracker-id>
      <data>Base64 кадра</data>
    </galileo-client>

Ответ:
    <galileo-server version="2.0">
      <status>ok|error</status>
      <data>Base64 кадра подтверждения</data>         (необязательно)
      <error>текст ошибки</error>                    (необязательно)
      <expected-crc>ABCD</expected-crc>              (только vulnerable)
      <tracker-command>enable-encryption</tracker-command>  (необязательно)
      <valid>true|false</valid>                      (ответ validate)
    </galileo-server>
"""

from __future__ import annotations

import base64
import binascii
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from src.protocol.errors import InvalidField, MalformedEnvelope
from src.protocol.models import FOOTER_LEN, HEADER_LEN, TrackerId

CLIENT_ROOT = "galileo-client"
SERVER_ROOT = "galileo-server"
PROTOCOL_VERSION = "2.0"
DEFAULT_CLIENT_VERSION = "trackersync/1.0"

COMMAND_ENABLE_ENCRYPTION = "enable-encryption"


@dataclass(frozen=True)
class SyncEnvelope:
    tracker_id: TrackerId
    payload: bytes
    client_version: str = DEFAULT_CLIENT_VERSION

    @property
    def payload_b64(self) -> str:
        return base64.b64encode(self.payload).decode("ascii")


@dataclass(frozen=True)
class ServerResponse:
    status: str
    data: bytes | None = None
    error: str | None = None
    expected_crc: int | None = None
    tracker_command: str | None = None
    valid: bool | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _parse_root(document: str | bytes, root_name: str) -> ET.Element:
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise MalformedEnvelope(f"XML не разбирается: {exc}") from exc
    if root.tag != root_name:
        raise MalformedEnvelope(f"ожидался корневой элемент <{root_name}>, получен <{root.tag}>")
    return root


def _b64decode(text: str) -> bytes:
    try:
        return base64.b64decode(text.strip(), validate=True)
    except (binascii.Error, ValueError) as exc:
        raise MalformedEnvelope(f"поле data не является Base64: {exc}") from exc


def encode_envelope(envelope: SyncEnvelope) -> bytes:
    root = ET.Element(CLIENT_ROOT, version=PROTOCOL_VERSION)
    info = ET.SubElement(root, "client-info")
    ET.SubElement(info, "client-version").text = envelope.client_version
    ET.SubElement(root, "tracker-id").text = envelope.tracker_id.hex
    ET.SubElement(root, "data").text = envelope.payload_b64
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def decode_envelope(document: str | bytes) -> SyncEnvelope:
    """
    Raises:
        MalformedEnvelope: нет tracker-id/data, битый Base64 или кадр короче заголовка и футера
    """
    root = _parse_root(document, CLIENT_ROOT)
    tracker_text = root.findtext("tracker-id")
    data_text = root.findtext("data")
    if not tracker_text or data_text is None:
        raise MalformedEnvelope("в конверте нет tracker-id или data")
    try:
        tracker_id = TrackerId.from_hex(tracker_text)
    except InvalidField as exc:
        raise MalformedEnvelope(str(exc)) from exc
    payload = _b64decode(data_text)
    if len(payload) < HEADER_LEN + FOOTER_LEN:
        raise MalformedEnvelope(f"кадр в конверте {len(payload)} байт короче заголовка и футера")
    client_version = (root.findtext("client-info/client-version") or DEFAULT_CLIENT_VERSION).strip()
    return SyncEnvelope(tracker_id=tracker_id, payload=payload, client_version=client_version)


def encode_response(response: ServerResponse) -> bytes:
    root = ET.Element(SERVER_ROOT, version=PROTOCOL_VERSION)
    ET.SubElement(root, "status").text = response.status
    if response.valid is not None:
        ET.SubElement(root, "valid").text = "true" if response.valid else "false"
    if response.data is not None:
        ET.SubElement(root, "data").text = base64.b64encode(response.data).decode("ascii")
    if response.error:
        ET.SubElement(root, "error").text = response.error
    if response.expected_crc is not None:
        ET.SubElement(root, "expected-crc").text = f"{response.expected_crc:04X}"
    if response.tracker_command:
        ET.SubElement(root, "tracker-command").text = response.tracker_command
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def decode_response(document: str | bytes) -> ServerResponse:
    """
    Raises:
        MalformedEnvelope: документ не является ответом сервера
    """
    root = _parse_root(document, SERVER_ROOT)
    status = (root.findtext("status") or "").strip()
    if status not in {"ok", "error"}:
        raise MalformedEnvelope(f"неизвестный статус ответа: {status!r}")
    data_text = root.findtext("data")
    crc_text = root.findtext("expected-crc")
    valid_text = root.findtext("valid")
    expected_crc = None
    if crc_text is not None:
        try:
            expected_crc = int(crc_text.strip(), 16)
        except ValueError as exc:
            raise MalformedEnvelope(f"expected-crc не является hex: {crc_text!r}") from exc
    return ServerResponse(
        status=status,
        data=_b64decode(data_text) if data_text is not None else None,
        error=root.findtext("error"),
        expected_crc=expected_crc,
        tracker_command=root.findtext("tracker-command"),
        valid=None if valid_text is None else valid_text.strip() == "true",
    )
