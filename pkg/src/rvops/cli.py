"""Single entry point: every process and tool behind one `rvops` command.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
from pathlib import Path

from . import config

logger = logging.getLogger("rvops")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _env_port(name: str, default: int) -> int:
    value = os.environ.get(name)
    return int(value) if value else default


def build_parser() -> _Parser:
    p = _Parser(prog="rvops", description=__doc__)
    p.add_argument("--log-level", default="warning",
                   choices=["debug", "info", "warning", "error"])
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    sim = sub.add_parser("sim", help="run the simulated rover endpoint")
    sim.add_argument("--port", type=int,
                     default=_env_port(config.ENV_ROVER_PORT, config.DEFAULT_ROVER_PORT))
    sim.add_argument("--host", default="127.0.0.1")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--scene", help="scene JSON file (overrides --seed generation)")
    sim.add_argument("--truth-log", help="write per-tick ground truth here")
    sim.set_defaults(func=cmd_sim)

    gnd = sub.add_parser("ground", help="run the ground station service")
    gnd.add_argument("--rover", default=f"127.0.0.1:{config.DEFAULT_ROVER_PORT}",
                     help="rover endpoint host:port")
    gnd.add_argument("--ws-port", type=int,
                     default=_env_port(config.ENV_WS_PORT, config.DEFAULT_WS_PORT))
    gnd.add_argument("--host", default="127.0.0.1")
    gnd.add_argument("--seed", type=int, default=0)
    gnd.add_argument("--safety", choices=["on", "off"], default="on")
    gnd.add_argument("--record", help="record the rover stream to this log")
    gnd.add_argument("--config", help="pipeline config overrides (JSON file)")
    gnd.set_defaults(func=cmd_ground)

    scen = sub.add_parser("scenario", help="headless scenario tools")
    scen_sub = scen.add_subparsers(dest="scenario_command", metavar="ACTION")
    run = scen_sub.add_parser("run", help="run a scenario file to completion")
    run.add_argument("file", help="scenario file (rvscen 1)")
    run.add_argument("--safety", choices=["on", "off"],
                     help="override the scenario's safety setting")
    run.add_argument("--record", help="record the rover stream to this log")
    run.add_argument("--pub-log", help="record pipeline publications to this log")
    run.add_argument("--truth-log", help="write per-tick ground truth here")
    run.set_defaults(func=cmd_scenario_run)

    rec = sub.add_parser("record", help="record a live rover stream to a log")
    rec.add_argument("out", help="output log path")
    rec.add_argument("--rover", default=f"127.0.0.1:{config.DEFAULT_ROVER_PORT}")
    rec.add_argument("--duration", type=float, default=0.0,
                     help="stop after this many seconds (0 = until Ctrl-C)")
    rec.set_defaults(func=cmd_record)

    rep = sub.add_parser("replay", help="re-run the pipeline over a recorded log")
    rep.add_argument("log", help="input log path")
    rep.add_argument("--out", help="write publications to this log")
    rep.add_argument("--seed", type=int, default=0,
                     help="pipeline seed (must match the recording session)")
    rep.add_argument("--safety", choices=["on", "off"], default="on")
    rep.set_defaults(func=cmd_replay)

    gen = sub.add_parser("gen-scene", help="generate a deterministic scene file")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", help="output path (default: stdout)")
    gen.add_argument("--rocks", type=int, default=12)
    gen.add_argument("--arena", type=float, default=10.0)
    gen.add_argument("--roughness", type=float, default=0.05)
    gen.add_argument("--radius-min", type=float, default=0.1)
    gen.add_argument("--radius-max", type=float, default=0.35)
    gen.set_defaults(func=cmd_gen_scene)

    st = sub.add_parser("selftest", help="run the embedded acceptance suite")
    st.add_argument("--only", action="append", metavar="CHECK",
                    help="run only the named check (repeatable)")
    st.add_argument("--list", action="store_true", help="list check names")
    st.set_defaults(func=cmd_selftest)
    return p


# -- handlers ---------------------------------------------------------------


def cmd_sim(args) -> int:
    from .simkit import generate_scene, load_scene
    from .simkit.server import RoverServer

    scene = load_scene(args.scene) if args.scene else generate_scene(args.seed)
    server = RoverServer(scene, port=args.port, host=args.host,
                         truth_log=args.truth_log)
    try:
        asyncio.run(server.serve_forever())
    except KeyboardInterrupt:
        pass
    return 0


def _parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise UsageError(f"bad address {addr!r}, expected host:port")
    return host, int(port)


def _apply_config_file(cfg, path: str):
    """Apply JSON overrides: top-level PipelineConfig scalars plus a nested
    `detector` object for DetectorParams fields."""
    import dataclasses

    from .perception import DetectorParams

    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    det = doc.pop("detector", None)
    scalar_fields = {"seed", "gate_m", "confirm_hits", "voxel_size",
                     "mesh_cell", "mesh_regen_frames", "safety_enabled",
                     "watchdog_timeout_ms", "pose_pair_tol_ns"}
    unknown = set(doc) - scalar_fields
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    for key, value in doc.items():
        setattr(cfg, key, value)
    if det is not None:
        cfg.detector = dataclasses.replace(DetectorParams(), **det)
    return cfg


def cmd_ground(args) -> int:
    import uvicorn

    from .ground.scenario import pipeline_config_for
    from .ground.station import GroundStation
    from .service.app import create_app

    host, port = _parse_addr(args.rover)
    cfg = pipeline_config_for(args.seed, args.safety == "on")
    if args.config:
        _apply_config_file(cfg, args.config)
    station = GroundStation(cfg, record_path=args.record)
    app = create_app(station)

    async def serve() -> None:
        uv = uvicorn.Server(uvicorn.Config(app, host=args.host, port=args.ws_port,
                                           log_level="warning"))
        tasks = [asyncio.create_task(uv.serve()),
                 asyncio.create_task(station.run_rover_link(host, port)),
                 asyncio.create_task(station.run_watchdog())]
        try:
            await tasks[0]
        finally:
            for t in tasks[1:]:
                t.cancel()
            station.close()

    try:
        asyncio.run(serve())
    except KeyboardInterrupt:
        pass
    return 0


def cmd_scenario_run(args) -> int:
    from .ground.scenario import load_scenario, run_scenario

    scn = load_scenario(args.file)
    if args.safety:
        scn.safety_on = args.safety == "on"
    res = run_scenario(scn, record_path=args.record, pub_log_path=args.pub_log,
                       truth_log_path=args.truth_log)
    print(res.metrics_json())
    if res.mean_frame_latency_s is not None:
        print(f"mean frame latency: {res.mean_frame_latency_s * 1e3:.1f} ms "
              f"over {res.frames} frames", file=sys.stderr)
    return 0


def cmd_record(args) -> int:
    from .wire.framing import StreamDecoder, encode_message
    from .wire.messages import Hello, MsgType, Role, WireMessage
    from .wire.recordlog import RecordWriter
    from .ground.station import ROVER_TOPICS
    import time as _time

    host, port = _parse_addr(args.rover)

    async def record() -> int:
        reader, writer = await asyncio.open_connection(host, port)
        writer.write(encode_message(WireMessage(MsgType.HELLO, 0,
                                                _time.time_ns(), Hello(Role.GROUND))))
        writer.write(encode_message(WireMessage(MsgType.SUBSCRIBE, 0,
                                                _time.time_ns(), ROVER_TOPICS)))
        await writer.drain()
        decoder = StreamDecoder()
        deadline = _time.monotonic() + args.duration if args.duration > 0 else None
        with RecordWriter(args.out) as rec:
            while deadline is None or _time.monotonic() < deadline:
                try:
                    data = await asyncio.wait_for(reader.read(1 << 20), timeout=0.5)
                except asyncio.TimeoutError:
                    continue
                if not data:
                    break
                for msg in decoder.feed(data):
                    rec.write(msg)
            count = rec.count
        writer.close()
        logger.info("recorded %d messages to %s", count, args.out)
        print(json.dumps({"messages": count, "path": args.out}))
        return 0

    try:
        return asyncio.run(record())
    except KeyboardInterrupt:
        return 0


def cmd_replay(args) -> int:
    from .ground.scenario import pipeline_config_for, replay_through_pipeline

    cfg = pipeline_config_for(args.seed, args.safety == "on")
    pubs = replay_through_pipeline(args.log, cfg, pub_log_path=args.out)
    by_type: dict[str, int] = {}
    for m in pubs:
        by_type[m.msg_type.name.lower()] = by_type.get(m.msg_type.name.lower(), 0) + 1
    print(json.dumps({"publications": len(pubs), "by_type": by_type},
                     sort_keys=True))
    return 0


def cmd_gen_scene(args) -> int:
    from .simkit import SceneParams, generate_scene, scene_to_dict

    params = SceneParams(arena_size=args.arena, rock_count=args.rocks,
                         radius_min=args.radius_min, radius_max=args.radius_max,
                         roughness=args.roughness)
    scene = generate_scene(args.seed, params)
    text = json.dumps(scene_to_dict(scene), sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_selftest(args) -> int:
    from .selftest import CHECKS, run_selftest

    if args.list:
        print("\n".join(CHECKS))
        return 0
    if args.only:
        unknown = set(args.only) - set(CHECKS)
        if unknown:
            raise UsageError(f"unknown checks: {sorted(unknown)}")
    failures = 0
    for res in run_selftest(args.only):
        print(res.line(), flush=True)
        failures += 0 if res.passed else 1
    print(f"{'OK' if failures == 0 else 'FAILED'}: "
          f"{len(CHECKS) if not args.only else len(args.only)} checks, "
          f"{failures} failures")
    return 0 if failures == 0 else 2


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            if getattr(args, "command", None) == "scenario":
                raise UsageError("scenario requires an action (run)")
            raise UsageError("a subcommand is required")
        logging.basicConfig(
            level=getattr(logging, args.log_level.upper()),
            format="%(asctime)s %(name)s %(levelname)s %(message)s")
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"rvops: error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # runtime failure -> exit 2, diagnostics on stderr
        logger.error("%s", e, exc_info=logger.isEnabledFor(logging.DEBUG))
        print(f"rvops: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
