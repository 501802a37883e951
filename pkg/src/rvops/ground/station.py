"""Live ground station: rover TCP link, console hub, watchdog loop.

The pipeline runs on a single-worker executor so frame processing stays
in-order while network I/O continues on the event loop.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor

from .. import config
from ..safety import TwistCommand
from ..wire.framing import StreamDecoder, encode_message
from ..wire.jsonmirror import message_from_json, message_to_json
from ..wire.messages import Hello, MsgType, Role, Subscribe, WireMessage
from ..wire.recordlog import RecordWriter
from .pipeline import Pipeline, PipelineConfig

logger = logging.getLogger(__name__)

ROVER_TOPICS = Subscribe.of(MsgType.RGB_FRAME, MsgType.DEPTH_FRAME,
                            MsgType.POSE_ESTIMATE)


class ConsoleClient:
    def __init__(self) -> None:
        self.queue: asyncio.Queue[str] = asyncio.Queue(maxsize=256)
        self.sub = Subscribe(0)
        self.hello: Hello | None = None
        self.dropped = 0

    def offer(self, text: str) -> None:
        try:
            self.queue.put_nowait(text)
        except asyncio.QueueFull:
            self.dropped += 1


class ConsoleHub:
    """Fans publications out to connected consoles as JSON text."""

    def __init__(self) -> None:
        self.clients: set[ConsoleClient] = set()

    def add(self) -> ConsoleClient:
        c = ConsoleClient()
        self.clients.add(c)
        return c

    def remove(self, c: ConsoleClient) -> None:
        self.clients.discard(c)

    def broadcast(self, pubs: list[WireMessage]) -> None:
        if not self.clients or not pubs:
            return
        for m in pubs:
            text = None
            for c in self.clients:
                if c.sub.wants(m.msg_type):
                    if text is None:
                        text = json.dumps(message_to_json(m))
                    c.offer(text)


class GroundStation:
    """Owns the pipeline and both links; single writer for pipeline state."""

    def __init__(self, cfg: PipelineConfig | None = None,
                 record_path: str | None = None) -> None:
        self.pipeline = Pipeline(cfg)
        self.hub = ConsoleHub()
        self.started_at = time.time()
        self.rover_connected = False
        self._rover_writer: asyncio.StreamWriter | None = None
        self._recorder = RecordWriter(record_path) if record_path else None
        self._held_rgb = None
        self._exec = ThreadPoolExecutor(max_workers=1,
                                        thread_name_prefix="pipeline")

    # -- rover link --------------------------------------------------------

    async def run_rover_link(self, host: str, port: int,
                             reconnect: bool = True) -> None:
        while True:
            try:
                await self._rover_session(host, port)
            except (ConnectionError, OSError) as e:
                logger.warning("rover link lost: %s", e)
            self.rover_connected = False
            if not reconnect:
                return
            await asyncio.sleep(1.0)

    async def _rover_session(self, host: str, port: int) -> None:
        reader, writer = await asyncio.open_connection(host, port)
        self._rover_writer = writer
        self.rover_connected = True
        writer.write(encode_message(WireMessage(
            MsgType.HELLO, 0, time.time_ns(), Hello(Role.GROUND))))
        writer.write(encode_message(WireMessage(
            MsgType.SUBSCRIBE, 0, time.time_ns(), ROVER_TOPICS)))
        await writer.drain()
        decoder = StreamDecoder()
        loop = asyncio.get_running_loop()
        while True:
            data = await reader.read(1 << 20)
            if not data:
                raise ConnectionError("rover closed the connection")
            for msg in decoder.feed(data):
                if self._recorder:
                    self._recorder.write(msg)
                if msg.msg_type == MsgType.POSE_ESTIMATE:
                    self.pipeline.on_pose_estimate(msg.payload, msg.stamp_ns)
                elif msg.msg_type == MsgType.RGB_FRAME:
                    self._held_rgb = msg.payload
                elif msg.msg_type == MsgType.DEPTH_FRAME:
                    rgb = self._held_rgb
                    pubs = await loop.run_in_executor(
                        self._exec, self.pipeline.on_depth_frame,
                        msg.payload, rgb)
                    self.hub.broadcast(pubs)

    def forward_to_rover(self, cmd: TwistCommand, stamp_ns: int) -> bool:
        if self._rover_writer is None or self._rover_writer.is_closing():
            return False
        msg = WireMessage(MsgType.TWIST_COMMAND, 0, stamp_ns, cmd)
        self._rover_writer.write(encode_message(msg))
        return True

    # -- console messages ---------------------------------------------------

    def handle_console_json(self, client: ConsoleClient, text: str,
                            ) -> dict | None:
        """Process one console JSON message; returns an optional direct reply."""
        try:
            msg = message_from_json(json.loads(text))
        except (ValueError, KeyError) as e:
            self.pipeline.counters["malformed_commands"] += 1
            return {"type": "error", "error": str(e)}
        if msg.msg_type == MsgType.HELLO:
            client.hello = msg.payload
            return {"type": "hello", "role": int(Role.GROUND), "proto_version": 1}
        if msg.msg_type == MsgType.SUBSCRIBE:
            client.sub = msg.payload
            return None
        if msg.msg_type == MsgType.TWIST_COMMAND:
            now = time.time_ns()
            fwd, status, pubs = self.pipeline.on_console_command(msg.payload, now)
            if fwd is not None:
                self.forward_to_rover(fwd, now)
            self.hub.broadcast(pubs)
            return None
        return None

    # -- watchdog ------------------------------------------------------------

    async def run_watchdog(self) -> None:
        while True:
            await asyncio.sleep(config.SIM_TICK_S)
            now = time.time_ns()
            stop, pubs = self.pipeline.check_watchdog(now)
            if stop is not None:
                self.forward_to_rover(stop, now)
            self.hub.broadcast(pubs)

    def close(self) -> None:
        self._exec.shutdown(wait=False)
        if self._recorder:
            self._recorder.close()

    def snapshot(self) -> dict:
        snap = self.pipeline.snapshot()
        snap.update(rover_connected=self.rover_connected,
                    console_count=len(self.hub.clients),
                    uptime_s=time.time() - self.started_at)
        return snap
