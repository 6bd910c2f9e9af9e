"""Command line entry points: serve, calibrate, simulate."""
from __future__ import annotations

import argparse
import socket
import sys
import threading
import time
from pathlib import Path

from .clock import VirtualClock, parse_clock
from .errors import EmgRehabError, StartupError, TransportClosed
from .features import FeatureConfig, StreamWindower, featurize
from .gestures import TEMPLATE_LABELS, GestureLabel, parse_label
from .protocol import ATTR_EMG, SAMPLE_PERIOD_US, FrameReader, decode_emg_packet
from .simulator import (
    RAMP_MS,
    REACT_MS,
    EmgSynthModel,
    Simulator,
    build_calibration_script,
    load_script,
)
from .store import CalibrationBuffers, TemplateDatabase, load_db, save_db
from .transport import TcpTransport, make_pipe, parse_address


def _build_clock(spec: str):
    return parse_clock(spec)


# -- serve --

def _cmd_serve(args) -> int:
    from .service import Service, ServiceConfig

    config = ServiceConfig(
        transport=args.transport,
        db_path=args.db,
        plan_path=args.plan,
        listen=args.listen,
        seed=args.seed,
        clock=args.clock,
    )
    try:
        service = Service(config)
    except StartupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    service.start()
    host, port = service.http_address
    print(f"listening on http://{host}:{port}  (transport: {config.transport})")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        print("shutting down")
    finally:
        service.stop()
    return 0


# -- calibrate --

def _collect_stream_vectors(ep, config: FeatureConfig, keep) -> list:
    """Drain a framed EMG stream until it closes; keep(window) filters."""
    reader = FrameReader()
    windower = StreamWindower(config)
    counter = 0
    vectors = []
    while True:
        try:
            data = ep.recv(timeout=1.0)
        except TransportClosed:
            break
        if not data:
            continue
        for msg in reader.feed(data):
            if msg.attribute_id != ATTR_EMG:
                continue
            frames = decode_emg_packet(
                msg.payload, first_timestamp_us=counter * SAMPLE_PERIOD_US
            )
            counter += 2
            for frame in frames:
                for window in windower.feed(frame):
                    if keep(window):
                        vectors.append(featurize(window, config))
    return vectors


def _calibrate_one_sim(label: GestureLabel, config: FeatureConfig,
                       seconds: float, seed: int) -> list:
    script = build_calibration_script([label], seconds)
    sim = Simulator(script, EmgSynthModel(seed=seed))
    svc_end, dev_end = make_pipe()

    def run():
        try:
            sim.run(dev_end, VirtualClock(0))
        except TransportClosed:
            pass

    threading.Thread(target=run, daemon=True).start()
    entry = script.entries[0]
    lo_us = (entry.start_ms + RAMP_MS) * 1000
    hi_us = entry.end_ms * 1000
    return _collect_stream_vectors(
        svc_end, config,
        keep=lambda w: w.start_us >= lo_us and w.end_us <= hi_us,
    )


def _calibrate_one_tcp(label: GestureLabel, config: FeatureConfig,
                       seconds: float, addr: tuple) -> list:
    print(f"hold {label} now ({seconds:g} s)...")
    ep = TcpTransport.connect(*addr)
    guard_us = (REACT_MS + RAMP_MS) * 1000
    deadline = time.monotonic() + seconds + guard_us / 1e6

    vectors = []
    reader = FrameReader()
    windower = StreamWindower(config)
    counter = 0
    while time.monotonic() < deadline:
        try:
            data = ep.recv(timeout=0.2)
        except TransportClosed:
            break
        if not data:
            continue
        for msg in reader.feed(data):
            if msg.attribute_id != ATTR_EMG:
                continue
            frames = decode_emg_packet(
                msg.payload, first_timestamp_us=counter * SAMPLE_PERIOD_US
            )
            counter += 2
            for frame in frames:
                for window in windower.feed(frame):
                    if window.start_us >= guard_us:
                        vectors.append(featurize(window, config))
    ep.close()
    return vectors


def _cmd_calibrate(args) -> int:
    labels: list[GestureLabel] = []
    for name in args.label:
        if name == "all":
            labels.extend(TEMPLATE_LABELS)
        else:
            labels.append(parse_label(name))
    seen = set()
    labels = [l for l in labels if not (l in seen or seen.add(l))]

    config = FeatureConfig()
    db_path = Path(args.db)
    if db_path.exists():
        db = load_db(db_path)
        config = db.feature_config
    else:
        db = TemplateDatabase(feature_config=config, templates={})

    tcp_addr = None
    if args.transport != "sim":
        kind, _, addr = args.transport.partition(":")
        if kind != "tcp" or not addr:
            print(f"error: unknown transport {args.transport!r}", file=sys.stderr)
            return 1
        tcp_addr = parse_address(addr)

    for i, label in enumerate(labels):
        if tcp_addr is None:
            vectors = _calibrate_one_sim(label, config, args.seconds, args.seed + i + 1)
        else:
            vectors = _calibrate_one_tcp(label, config, args.seconds, tcp_addr)
        if len(vectors) < args.min_windows:
            print(
                f"error: {label}: only {len(vectors)} usable windows, "
                f"need {args.min_windows}",
                file=sys.stderr,
            )
            return 2
        buf = CalibrationBuffers(config)
        for fv in vectors:
            buf.record_vector(label, fv)
        part = buf.finalize(args.min_windows)
        db.templates[label] = part.templates[label]
        print(f"{label}: template from {len(vectors)} windows")

    save_db(db, db_path)
    ready = "ready" if db.ready_for_session() else "not ready (rest + one gesture needed)"
    print(f"wrote {db_path} ({len(db.templates)} templates, {ready})")
    return 0


# -- simulate --

def _cmd_simulate(args) -> int:
    script = load_script(args.script)
    host, port = parse_address(args.listen)
    server = socket.create_server((host, port))
    actual = server.getsockname()
    print(f"armband simulator on tcp:{actual[0]}:{actual[1]}, "
          f"script {args.script} ({script.total_ms} ms)")
    try:
        conn, peer = server.accept()
    except KeyboardInterrupt:
        server.close()
        return 0
    print(f"client connected from {peer[0]}:{peer[1]}")
    sim = Simulator(script, EmgSynthModel(seed=args.seed))
    try:
        status = sim.run(TcpTransport(conn), _build_clock(args.clock))
    except TransportClosed:
        print("client disconnected before the script finished", file=sys.stderr)
        server.close()
        return 1
    finally:
        server.close()
    print(f"script finished: {status.emg_packets} EMG packets, "
          f"{status.imu_packets} IMU packets, {len(status.vibrations)} vibrations")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="emgrehab",
        description="EMG hand rehabilitation: gesture recognition service, "
                    "calibration, and armband simulator.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("serve", help="run the recognition + session service")
    sp.add_argument("--transport", default="sim",
                    help="'sim' for the built-in armband, or tcp:<host>:<port>")
    sp.add_argument("--db", default="templates.json",
                    help="gesture template database (must exist; see 'calibrate')")
    sp.add_argument("--plan", default=None, help="exercise plan JSON file")
    sp.add_argument("--listen", default="127.0.0.1:8417", help="HTTP bind address")
    sp.add_argument("--seed", type=int, default=0, help="simulator noise seed")
    sp.add_argument("--clock", default="real",
                    help="'real', or x<factor> (x0 = as fast as possible)")

    cp = sub.add_parser("calibrate", help="record gesture templates into a database")
    cp.add_argument("--label", action="append", required=True,
                    help="gesture to record (repeatable), or 'all'")
    cp.add_argument("--db", default="templates.json", help="database file to create/update")
    cp.add_argument("--transport", default="sim",
                    help="'sim' or tcp:<host>:<port> of a live armband stream")
    cp.add_argument("--seconds", type=float, default=3.0,
                    help="hold duration recorded per gesture")
    cp.add_argument("--seed", type=int, default=0)
    cp.add_argument("--min-windows", type=int, default=20)

    mp = sub.add_parser("simulate", help="serve a scripted armband over TCP")
    mp.add_argument("--script", required=True, help="gesture timeline JSON file")
    mp.add_argument("--seed", type=int, default=0)
    mp.add_argument("--listen", default="127.0.0.1:9400")
    mp.add_argument("--clock", default="real",
                    help="'real', or x<factor> (x0 = as fast as possible)")

    args = parser.parse_args(argv)
    try:
        if args.cmd == "serve":
            return _cmd_serve(args)
        if args.cmd == "calibrate":
            return _cmd_calibrate(args)
        if args.cmd == "simulate":
            return _cmd_simulate(args)
    except EmgRehabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
