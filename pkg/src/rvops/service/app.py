"""FastAPI app wrapping a ground station: HTTP introspection + command
endpoint, and the WebSocket console link speaking the JSON protocol."""

from __future__ import annotations

import asyncio
import logging
import time

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .. import __version__
from ..safety import CommandSource, TwistCommand
from ..ground.station import GroundStation
from .models import (CommandRequest, CommandResponse, HealthResponse,
                     SafetyStatusModel, StatusResponse)

logger = logging.getLogger(__name__)

_STATE_NAMES = {0: "clear", 1: "warning", 2: "blocked", 3: "stale_command"}


def _status_model(status) -> SafetyStatusModel:
    return SafetyStatusModel(state=_STATE_NAMES[int(status.state)],
                             nearest_obstacle_id=status.nearest_obstacle_id,
                             clearance_m=status.clearance,
                             horizon_s=status.horizon)


def create_app(station: GroundStation) -> FastAPI:
    app = FastAPI(title="rvops ground station", version=__version__)
    app.state.station = station

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(uptime_s=time.time() - station.started_at)

    @app.get("/status", response_model=StatusResponse)
    def status() -> StatusResponse:
        snap = station.snapshot()
        last = station.pipeline.last_status
        return StatusResponse(
            rover_connected=snap["rover_connected"],
            console_count=snap["console_count"],
            counters=snap["counters"],
            topic_seq=snap["topic_seq"],
            landmarks=snap["landmarks"],
            confirmed_landmarks=snap["confirmed_landmarks"],
            voxel_cells=snap["voxel_cells"],
            mean_frame_latency_ms=snap["mean_frame_latency_ms"],
            safety=_status_model(last) if last else None,
        )

    @app.post("/command", response_model=CommandResponse)
    def command(req: CommandRequest) -> CommandResponse:
        now = time.time_ns()
        cmd = TwistCommand(req.v, req.omega, stamp_ns=now,
                           source=CommandSource.CONSOLE)
        fwd, status, pubs = station.pipeline.on_console_command(cmd, now)
        station.hub.broadcast(pubs)
        delivered = fwd is not None and station.forward_to_rover(fwd, now)
        assert fwd is not None and status is not None  # finite by validation
        return CommandResponse(forwarded_v=fwd.v, forwarded_omega=fwd.omega,
                               delivered=delivered, safety=_status_model(status))

    @app.websocket("/ws")
    async def console(ws: WebSocket) -> None:
        await ws.accept()
        client = station.hub.add()

        async def pump() -> None:
            while True:
                await ws.send_text(await client.queue.get())

        sender = asyncio.create_task(pump())
        try:
            while True:
                text = await ws.receive_text()
                reply = station.handle_console_json(client, text)
                if reply is not None:
                    await ws.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            station.hub.remove(client)

    return app
