"""
Кодек протокола синхронизации трекера: кадры, секции, экранирование, CRC, разбор.
"""

from src.protocol.crc import crc_ccitt
from src.protocol.dissector import FrameDissector, render_dissection
from src.protocol.errors import (
    BadCrc,
    EncryptedPayload,
    FrameError,
    InvalidField,
    MalformedEscape,
    OversizePayload,
    SectionOrderViolation,
    TruncatedFrame,
    UnknownSectionLayout,
)
from src.protocol.escaping import escape_section, unescape_section
from src.protocol.frames import (
    TAG_LEN,
    decode_header,
    decode_megadump,
    decode_microdump,
    decode_sections,
    encode_frame,
    encode_header,
    encode_megadump,
    encode_microdump,
    encode_sections,
    refresh_crc,
    split_frame,
    with_crc,
)
from src.protocol.models import (
    AlarmEntry,
    AlarmSection,
    DailyRecord,
    FrameFooter,
    FrameHeader,
    Megadump,
    Microdump,
    OverallSummary,
    PerMinuteSummary,
    TrackerId,
    utc_date,
)

__all__ = [
    "AlarmEntry",
    "AlarmSection",
    "BadCrc",
    "DailyRecord",
    "EncryptedPayload",
    "FrameDissector",
    "FrameError",
    "FrameFooter",
    "FrameHeader",
    "InvalidField",
    "MalformedEscape",
    "Megadump",
    "Microdump",
    "OverallSummary",
    "OversizePayload",
    "PerMinuteSummary",
    "SectionOrderViolation",
    "TAG_LEN",
    "TrackerId",
    "TruncatedFrame",
    "UnknownSectionLayout",
    "crc_ccitt",
    "decode_header",
    "decode_megadump",
    "decode_microdump",
    "decode_sections",
    "encode_frame",
    "encode_header",
    "encode_megadump",
    "encode_microdump",
    "encode_sections",
    "escape_section",
    "refresh_crc",
    "render_dissection",
    "split_frame",
    "unescape_section",
    "utc_date",
    "with_crc",
]
