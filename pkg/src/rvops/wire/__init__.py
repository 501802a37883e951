"""Binary wire protocol, JSON mirror, and record/replay logs."""

from .framing import (CRC, HEADER, MAGIC, MAX_PAYLOAD, VERSION, StreamDecoder,
                      crc32, decode_stream, encode_message)
from .jsonmirror import message_from_json, message_to_json
from .messages import (Heartbeat, Hello, MetricsReport, MsgType,
                       PointCloudChunk, Role, Subscribe, WireDecodeError,
                       WireMessage, decode_payload, encode_payload)
from .recordlog import LOG_MAGIC, LogStats, RecordWriter, read_log, replay

__all__ = [
    "CRC", "HEADER", "MAGIC", "MAX_PAYLOAD", "VERSION", "StreamDecoder",
    "crc32", "decode_stream", "encode_message",
    "message_from_json", "message_to_json",
    "Heartbeat", "Hello", "MetricsReport", "MsgType", "PointCloudChunk",
    "Role", "Subscribe", "WireDecodeError", "WireMessage",
    "decode_payload", "encode_payload",
    "LOG_MAGIC", "LogStats", "RecordWriter", "read_log", "replay",
]
