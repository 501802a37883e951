"""Rover endpoint: TCP server streaming RGBD frames and odometry poses,
accepting drive commands. This process stands in for the physical rover."""

from __future__ import annotations

import asyncio
import logging
import time

import numpy as np

from .. import config
from ..geometry import body_to_camera, default_intrinsics
from ..safety import CommandSource, TwistCommand
from ..wire.framing import StreamDecoder, encode_message
from ..wire.messages import Hello, MsgType, Role, Subscribe, WireMessage
from .render import camera_pose_for_state, render_rgbd
from .rover import OdometryTracker, OdomNoise, RoverState, check_collision, step_rover
from .scene import Scene

logger = logging.getLogger(__name__)

_ALL_TOPICS = Subscribe.of(MsgType.RGB_FRAME, MsgType.DEPTH_FRAME,
                           MsgType.POSE_ESTIMATE, MsgType.HEARTBEAT)


class _Client:
    def __init__(self, writer: asyncio.StreamWriter) -> None:
        self.writer = writer
        self.sub = _ALL_TOPICS
        self.hello: Hello | None = None


class RoverServer:
    """Real-time simulation loop plus the rover's wire endpoint.

    Stamps are wall-clock in live mode. The rover holds the last received
    command; link-loss stopping is the ground station watchdog's job.
    """

    def __init__(self, scene: Scene, port: int = config.DEFAULT_ROVER_PORT,
                 host: str = "127.0.0.1", truth_log: str | None = None) -> None:
        self.scene = scene
        self.port = port
        self.host = host
        self.state = RoverState()
        self.odom = OdometryTracker()
        self.cmd = TwistCommand(0.0, 0.0, source=CommandSource.CONSOLE)
        self.intrinsics = default_intrinsics()
        self.extrinsic = body_to_camera()
        self.noise = OdomNoise()
        self.ticks = 0
        self.frame_seq = 0
        self.pose_seq = 0
        self._rng = np.random.Generator(np.random.Philox(key=np.array(
            [scene.seed & 0xFFFFFFFFFFFFFFFF, config.STREAM_ODOMETRY << 48],
            dtype=np.uint64)))
        self._clients: set[_Client] = set()
        self._truth_log = open(truth_log, "w") if truth_log else None
        self._server: asyncio.base_events.Server | None = None
        self._collisions = 0
        self._colliding: set[int] = set()

    async def start(self) -> None:
        self._server = await asyncio.start_server(self._handle, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        if self._truth_log:
            self._truth_log.write("rvtruth 1\n")
        logger.info("rover endpoint on %s:%d, scene seed %d, %d rocks",
                    self.host, self.port, self.scene.seed, len(self.scene.rocks))

    async def serve_forever(self) -> None:
        await self.start()
        try:
            while True:
                t0 = time.monotonic()
                self.tick()
                delay = config.SIM_TICK_S - (time.monotonic() - t0)
                if delay > 0:
                    await asyncio.sleep(delay)
        finally:
            await self.close()

    async def close(self) -> None:
        if self._server:
            self._server.close()
            await self._server.wait_closed()
        for c in list(self._clients):
            c.writer.close()
        if self._truth_log:
            self._truth_log.close()

    # -- simulation --------------------------------------------------------

    def tick(self) -> None:
        """One 50 ms dynamics step plus publications."""
        self.state, (v_meas, om_meas) = step_rover(self.state, self.cmd,
                                                   config.SIM_TICK_S,
                                                   self.noise, self._rng)
        self.odom.update(v_meas, om_meas, config.SIM_TICK_S)
        self.ticks += 1
        now = time.time_ns()
        self.pose_seq += 1
        self._broadcast(WireMessage(MsgType.POSE_ESTIMATE, self.pose_seq, now,
                                    self.odom.pose()))
        hits = check_collision(self.scene, self.state, config.ROVER_RADIUS_M)
        self._collisions += sum(1 for i in hits if i not in self._colliding)
        self._colliding = set(hits)
        if self._truth_log:
            self._truth_log.write(
                f"t={self.ticks * config.SIM_TICK_S:.2f} x={self.state.x:.6f} "
                f"y={self.state.y:.6f} theta={self.state.theta:.6f} "
                f"v={self.state.v:.3f} omega={self.state.omega:.3f} "
                f"collisions={self._collisions}\n")
        if self.ticks % config.FRAME_EVERY_TICKS == 0:
            self.frame_seq += 1
            cam = camera_pose_for_state(self.scene, self.state, self.extrinsic)
            rgb, depth = render_rgbd(self.scene, cam, self.intrinsics,
                                     seq=self.frame_seq, stamp_ns=now)
            self._broadcast(WireMessage(MsgType.RGB_FRAME, self.frame_seq, now, rgb))
            self._broadcast(WireMessage(MsgType.DEPTH_FRAME, self.frame_seq, now, depth))

    def _broadcast(self, msg: WireMessage) -> None:
        if not self._clients:
            return
        data = encode_message(msg)
        for c in list(self._clients):
            if not c.sub.wants(msg.msg_type):
                continue
            try:
                c.writer.write(data)
            except (ConnectionError, RuntimeError):
                self._drop(c)

    def _drop(self, c: _Client) -> None:
        self._clients.discard(c)
        c.writer.close()

    # -- wire endpoint -----------------------------------------------------

    async def _handle(self, reader: asyncio.StreamReader,
                      writer: asyncio.StreamWriter) -> None:
        client = _Client(writer)
        self._clients.add(client)
        decoder = StreamDecoder()
        hello = WireMessage(MsgType.HELLO, 0, time.time_ns(),
                            Hello(Role.ROVER))
        writer.write(encode_message(hello))
        try:
            while True:
                data = await reader.read(65536)
                if not data:
                    break
                for msg in decoder.feed(data):
                    self._on_message(client, msg)
                await writer.drain()
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            self._drop(client)

    def _on_message(self, client: _Client, msg: WireMessage) -> None:
        if msg.msg_type == MsgType.HELLO:
            client.hello = msg.payload
        elif msg.msg_type == MsgType.SUBSCRIBE:
            client.sub = msg.payload
        elif msg.msg_type == MsgType.TWIST_COMMAND:
            self.cmd = msg.payload
        elif msg.msg_type == MsgType.HEARTBEAT:
            pass
        else:
            logger.debug("rover ignoring %s", msg.msg_type.name)
