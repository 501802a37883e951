"""Message log files for deterministic record/replay of a session.

File layout: 8-byte magic, then concatenated frame envelopes in arrival
order. A truncated tail is tolerated with a warning counter.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .framing import StreamDecoder, encode_message
from .messages import WireMessage

logger = logging.getLogger(__name__)

LOG_MAGIC = b"RVLOG\x00\x00\x01"


class RecordWriter:
    """Appends encoded messages to a log file."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._f = open(self.path, "wb")
        self._f.write(LOG_MAGIC)
        self.count = 0

    def write(self, msg: WireMessage) -> None:
        self._f.write(encode_message(msg))
        self.count += 1

    def close(self) -> None:
        self._f.close()

    def __enter__(self) -> "RecordWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass(frozen=True)
class LogStats:
    messages: int
    dropped_bytes: int
    crc_errors: int


def read_log(path: str | Path) -> tuple[list[WireMessage], LogStats]:
    """Decode a whole log file. Raises ValueError on bad file magic."""
    data = Path(path).read_bytes()
    if data[:len(LOG_MAGIC)] != LOG_MAGIC:
        raise ValueError(f"{path}: not a message log (bad magic)")
    dec = StreamDecoder()
    msgs = dec.feed(data[len(LOG_MAGIC):])
    msgs += dec.finish()
    dropped = dec.resync_bytes
    if dropped or dec.crc_errors or dec.payload_errors:
        logger.warning("%s: %d bytes dropped, %d crc errors, %d payload errors",
                       path, dropped, dec.crc_errors, dec.payload_errors)
    return msgs, LogStats(messages=len(msgs), dropped_bytes=dropped,
                          crc_errors=dec.crc_errors)


def replay(path: str | Path, realtime: bool = False) -> Iterator[WireMessage]:
    """Yield recorded messages in order; optionally pace by stamp deltas."""
    msgs, _ = read_log(path)
    prev_stamp = None
    for m in msgs:
        if realtime and prev_stamp is not None and m.stamp_ns > prev_stamp:
            time.sleep((m.stamp_ns - prev_stamp) / 1e9)
        prev_stamp = m.stamp_ns
        yield m
