"""Length-prefixed CRC-protected frame envelope and the resyncing decoder.

Layout (little-endian): magic "RV", version u8, msg_type u8, seq u32,
stamp_ns u64, payload_len u32, payload bytes, crc32 u32 over the payload
only. Header corruption is caught by magic/version/length sanity checks.
"""

from __future__ import annotations

import struct
import zlib

from .messages import MsgType, WireDecodeError, WireMessage, decode_payload, encode_payload

MAGIC = b"RV"
VERSION = 1
HEADER = struct.Struct("<2sBBIQI")
CRC = struct.Struct("<I")
MAX_PAYLOAD = 16 * 1024 * 1024  # exclusive cap


def crc32(payload: bytes) -> int:
    return zlib.crc32(payload) & 0xFFFFFFFF


def encode_message(m: WireMessage) -> bytes:
    """Serialize one message; a pure function of the message value."""
    payload = encode_payload(m.msg_type, m.payload)
    if len(payload) >= MAX_PAYLOAD:
        raise ValueError(f"payload of {len(payload)} bytes exceeds the size cap")
    header = HEADER.pack(MAGIC, VERSION, int(m.msg_type),
                         m.seq & 0xFFFFFFFF, m.stamp_ns & 0xFFFFFFFFFFFFFFFF,
                         len(payload))
    return header + payload + CRC.pack(crc32(payload))


class StreamDecoder:
    """Incremental decoder; malformed input degrades to dropped-frame counters.

    On bad magic it scans forward byte-by-byte; on CRC mismatch it drops the
    frame, counts it, and resynchronizes past the magic. A partial trailing
    frame stays buffered until more bytes arrive (or finish() is called).
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self.frames_decoded = 0
        self.crc_errors = 0
        self.payload_errors = 0
        self.resync_bytes = 0

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)

    def feed(self, data: bytes) -> list[WireMessage]:
        self._buf += data
        return self._scan(eof=False)

    def finish(self) -> list[WireMessage]:
        """Drain at end-of-stream: incomplete frames are treated as garbage."""
        return self._scan(eof=True)

    def _scan(self, eof: bool) -> list[WireMessage]:
        msgs: list[WireMessage] = []
        buf = self._buf
        pos = 0
        while True:
            idx = buf.find(MAGIC, pos)
            if idx < 0:
                keep = 1 if (not eof and len(buf) > pos and buf[-1] == MAGIC[0]) else 0
                self.resync_bytes += len(buf) - pos - keep
                pos = len(buf) - keep
                break
            self.resync_bytes += idx - pos
            pos = idx
            avail = len(buf) - pos
            if avail < HEADER.size:
                if not eof:
                    break
                self.resync_bytes += 2
                pos += 2
                continue
            _, version, mtype, seq, stamp, plen = HEADER.unpack_from(buf, pos)
            if version != VERSION or plen >= MAX_PAYLOAD or not 1 <= mtype <= 13:
                self.resync_bytes += 1
                pos += 1
                continue
            total = HEADER.size + plen + CRC.size
            if avail < total:
                if not eof:
                    break
                self.resync_bytes += 2
                pos += 2
                continue
            payload = bytes(buf[pos + HEADER.size:pos + HEADER.size + plen])
            (crc,) = CRC.unpack_from(buf, pos + HEADER.size + plen)
            if crc32(payload) != crc:
                self.crc_errors += 1
                pos += 2
                continue
            try:
                obj = decode_payload(mtype, payload, seq, stamp)
            except WireDecodeError:
                self.payload_errors += 1
                pos += 2
                continue
            msgs.append(WireMessage(MsgType(mtype), seq, stamp, obj))
            self.frames_decoded += 1
            pos += total
        del self._buf[:pos]
        return msgs


def decode_stream(data: bytes) -> tuple[list[WireMessage], int]:
    """One-shot decode of a byte block: (complete valid messages, consumed)."""
    dec = StreamDecoder()
    msgs = dec.feed(data)
    return msgs, len(data) - dec.pending_bytes
