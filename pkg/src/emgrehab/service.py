"""HTTP service around the recognition pipeline and session engine.

Three cooperating threads own all the moving parts:

- the reader thread owns the device connection and frame reassembly,
  stamps frames from a global 200 Hz sample counter and forwards them;
- the engine loop thread is the only writer of session state: it
  windows frames, classifies, drives the state machine, persists the
  session log, and publishes wire events;
- HTTP handler threads (one per request) only post control closures to
  the engine loop and read the event bus.

Time inside a session is derived purely from received samples, so a
dead transport freezes the session in place until the stream resumes.
"""
from __future__ import annotations

import json
import logging
import queue
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .clock import parse_clock
from .engine import (
    EngineParams,
    ExercisePlan,
    SessionEngine,
    default_plan,
    load_plan,
    new_session,
)
from .errors import (
    BadLabel,
    EmgRehabError,
    EmptyPlan,
    ProtocolError,
    StartupError,
    TransportClosed,
)
from .features import FeatureConfig, StreamWindower, classify, featurize
from .gestures import GestureLabel, parse_label
from .protocol import (
    ATTR_COMMAND,
    ATTR_EMG,
    SAMPLE_PERIOD_US,
    FrameReader,
    Vibrate,
    decode_emg_packet,
    encode_command,
    frame_write,
)
from .simulator import (
    EmgSynthModel,
    Simulator,
    build_calibration_script,
    build_session_script,
)
from .store import (
    CalibrationBuffers,
    LogEvent,
    SessionLog,
    append_log,
    load_db,
    save_db,
    save_log,
)
from .transport import TcpTransport, make_pipe, parse_address

log = logging.getLogger(__name__)

#: Audio cue names attached to events for the UI; playback is the UI's job.
CUE_NAMES = {
    "correct_movement": "correct",
    "incorrect_movement": "incorrect",
    "session_completed": "complete",
}

#: Windows starting earlier than this after a calibration start are
#: discarded: they span the pre-gesture rest and the amplitude ramp.
CALIB_GUARD_US = 600_000


@dataclass
class ServiceConfig:
    transport: str = "sim"
    db_path: str = "templates.json"
    plan_path: str | None = None
    listen: str = "127.0.0.1:8417"
    seed: int = 0
    clock: str = "real"
    log_dir: str | None = None
    calib_seconds: float = 3.0
    min_windows: int = 20
    reject_threshold: float = 3.0


class EventBus:
    """Append-only wire-event history; seq == position, so replay from
    any sequence number is exact and gap-free."""

    def __init__(self):
        self._history: list[dict] = []
        self._cond = threading.Condition()
        self._closed = False

    def publish(self, kind: str, t_us: int, detail: dict) -> int:
        with self._cond:
            seq = len(self._history) + 1
            self._history.append(
                {"seq": seq, "t_us": t_us, "kind": kind, "detail": detail}
            )
            self._cond.notify_all()
            return seq

    def events_after(self, seq: int, timeout: float | None = None) -> list[dict]:
        """Events with sequence numbers greater than seq; blocks up to
        timeout when none are available yet."""
        with self._cond:
            if len(self._history) <= seq and timeout and not self._closed:
                self._cond.wait(timeout)
            return self._history[seq:]

    def last_seq(self) -> int:
        with self._cond:
            return len(self._history)

    @property
    def closed(self) -> bool:
        return self._closed

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class ConnectionHolder:
    """Hands the single live device endpoint between threads."""

    def __init__(self):
        self._ep = None
        self._cond = threading.Condition()

    def set(self, ep) -> None:
        with self._cond:
            self._ep = ep
            self._cond.notify_all()

    def clear(self, ep) -> None:
        with self._cond:
            if self._ep is ep:
                self._ep = None

    def get(self):
        with self._cond:
            return self._ep

    def wait_endpoint(self, timeout: float):
        with self._cond:
            if self._ep is None:
                self._cond.wait(timeout)
            return self._ep

    def send(self, data: bytes) -> bool:
        """Best-effort write to the device; False when disconnected."""
        ep = self.get()
        if ep is None:
            return False
        try:
            ep.send(data)
            return True
        except TransportClosed:
            return False

    def close_current(self) -> None:
        ep = self.get()
        if ep is not None:
            ep.close()


class Service:
    """Owns configuration, the template database, and all threads."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        try:
            self.db = load_db(config.db_path)
        except FileNotFoundError:
            raise StartupError(f"template database not found: {config.db_path}")
        except EmgRehabError as exc:
            raise StartupError(f"cannot load template database: {exc}")
        # the stream is fixed at 200 Hz; the stored config rules the rest
        self.feature_config: FeatureConfig = self.db.feature_config
        if self.feature_config.sample_rate_hz != 200:
            raise StartupError(
                "template database was built for "
                f"{self.feature_config.sample_rate_hz} Hz, the stream is 200 Hz"
            )
        try:
            self.plan = load_plan(config.plan_path) if config.plan_path else default_plan()
        except (OSError, ValueError, KeyError, EmgRehabError) as exc:
            raise StartupError(f"cannot load exercise plan: {exc}")
        self.params = EngineParams()
        try:
            parse_clock(config.clock)  # fail fast on a bad spec
        except ValueError as exc:
            raise StartupError(str(exc))
        self.bus = EventBus()
        self.holder = ConnectionHolder()
        self.last_sim: Simulator | None = None

        self._sim_mode = config.transport == "sim"
        self._tcp_addr = None
        if not self._sim_mode:
            kind, _, addr = config.transport.partition(":")
            if kind != "tcp" or not addr:
                raise StartupError(f"unknown transport {config.transport!r}")
            self._tcp_addr = parse_address(addr)

        log_dir = config.log_dir or str(Path(config.db_path).parent / "sessions")
        self._log_dir = Path(log_dir)

        self._q: queue.Queue = queue.Queue()
        self._stopping = threading.Event()
        self._threads: list[threading.Thread] = []
        self._httpd: ThreadingHTTPServer | None = None

        # engine-loop-owned state
        self._engine: SessionEngine | None = None
        self._active_plan: ExercisePlan = self.plan
        self._session_id: str | None = None
        self._session_counter = 0
        self._log: SessionLog | None = None
        self._log_path: Path | None = None
        self.last_log_path: Path | None = None
        self._windower = StreamWindower(self.feature_config)
        self._calibrating: GestureLabel | None = None
        self._calib_vectors: list = []
        self._calib_from_us = 0
        self._last_stream_us = 0
        self._sample_counter = 0  # frames ever received, across reconnects
        self._sim_index = 0
        self._last_pub_state: tuple | None = None

    # -- lifecycle --

    def start(self) -> None:
        host, port = parse_address(self.config.listen)
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._httpd.daemon_threads = True

        for name, target in [
            ("engine-loop", self._engine_loop),
            ("device-reader", self._reader_loop),
            ("http", self._httpd.serve_forever),
        ]:
            t = threading.Thread(target=target, name=name, daemon=True)
            t.start()
            self._threads.append(t)
        if self._tcp_addr is not None:
            t = threading.Thread(target=self._connector_loop, name="connector", daemon=True)
            t.start()
            self._threads.append(t)

    @property
    def http_address(self) -> tuple[str, int]:
        assert self._httpd is not None
        return self._httpd.server_address[:2]

    def stop(self) -> None:
        self._stopping.set()
        self._q.put(None)
        self.holder.close_current()
        self.bus.close()
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
        for t in self._threads:
            if t is not threading.current_thread():
                t.join(timeout=5.0)

    def running(self) -> bool:
        return not self._stopping.is_set()

    def _make_clock(self):
        return parse_clock(self.config.clock)

    # -- reader thread --

    def _reader_loop(self) -> None:
        while not self._stopping.is_set():
            ep = self.holder.wait_endpoint(timeout=0.2)
            if ep is None:
                continue
            self._q.put(("status", "device_connected", {}))
            reader = FrameReader()
            try:
                while not self._stopping.is_set():
                    data = ep.recv(timeout=0.05)
                    if not data:
                        continue
                    frames = []
                    for msg in reader.feed(data):
                        if msg.attribute_id != ATTR_EMG:
                            continue
                        pair = decode_emg_packet(
                            msg.payload,
                            first_timestamp_us=self._sample_counter * SAMPLE_PERIOD_US,
                        )
                        self._sample_counter += 2
                        frames.extend(pair)
                    if frames:
                        self._q.put(("frames", frames))
            except (TransportClosed, ProtocolError):
                pass
            self.holder.clear(ep)
            try:
                ep.close()
            except Exception:
                pass
            if not self._stopping.is_set():
                self._q.put(("status", "device_disconnected", {}))

    def _connector_loop(self) -> None:
        host, port = self._tcp_addr
        backoff = 0.2
        while not self._stopping.is_set():
            if self.holder.get() is None:
                try:
                    ep = TcpTransport.connect(host, port)
                except OSError:
                    time.sleep(backoff)
                    backoff = min(backoff * 2, 3.0)
                    continue
                backoff = 0.2
                self.holder.set(ep)
            else:
                time.sleep(0.1)

    # -- engine loop thread --

    def _engine_loop(self) -> None:
        while True:
            item = self._q.get()
            if item is None:
                break
            try:
                if item[0] == "frames":
                    self._on_frames(item[1])
                elif item[0] == "status":
                    self._emit(LogEvent(self._now_us(), item[1], item[2]))
                elif item[0] == "control":
                    _, fn, reply = item
                    try:
                        reply.put(fn())
                    except Exception as exc:  # handler turns this into a 500
                        reply.put(exc)
            except Exception:
                log.exception("engine loop error")
            self._publish_snapshot_if_changed()

    def _now_us(self) -> int:
        return self._last_stream_us

    def _on_frames(self, frames) -> None:
        if self._calibrating is None and self._log is None:
            self._last_stream_us = frames[-1].timestamp_us
            return
        for frame in frames:
            self._last_stream_us = frame.timestamp_us
            for window in self._windower.feed(frame):
                if self._calibrating is not None:
                    if window.start_us >= self._calib_from_us:
                        self._calib_vectors.append(
                            featurize(window, self.feature_config)
                        )
                    continue
                if self._engine is None:
                    continue
                fv = featurize(window, self.feature_config)
                c = classify(
                    fv,
                    self.db,
                    reject_threshold=self.config.reject_threshold,
                    timestamp_us=window.end_us,
                )
                for ev in self._engine.on_classification(c):
                    self._emit(ev)

    def _emit(self, ev: LogEvent) -> None:
        detail = dict(ev.detail)
        cue = CUE_NAMES.get(ev.kind)
        if cue is not None:
            detail["cue"] = cue
        ev = LogEvent(ev.t_us, ev.kind, detail)
        if self._log is not None:
            self._log = append_log(self._log, ev)
        self.bus.publish(ev.kind, ev.t_us, detail)
        if ev.kind == "vibrate_requested":
            self.holder.send(
                frame_write(ATTR_COMMAND, encode_command(Vibrate(kind=detail["kind"])))
            )
        elif ev.kind == "session_completed":
            self._close_log()

    def _close_log(self) -> None:
        if self._log is None:
            return
        assert self._log_path is not None
        save_log(self._log, self._log_path)
        self.last_log_path = self._log_path
        self._log = None
        self._log_path = None

    def _publish_snapshot_if_changed(self) -> None:
        snap = self._state_dict()
        # quantize the steadily moving fields so progress still streams
        # without publishing one snapshot per frame
        key = tuple(
            sorted(
                (k, v) for k, v in snap.items()
                if k not in ("t_us", "last_seq", "held_ms", "held_fraction",
                             "rest_remaining_ms")
            )
        ) + (snap["held_ms"] // 500, snap["rest_remaining_ms"] // 1000)
        if key != self._last_pub_state:
            self._last_pub_state = key
            self.bus.publish("snapshot", snap["t_us"], snap)

    # -- state assembly (engine loop thread only) --

    def _state_dict(self) -> dict:
        if self._engine is not None:
            snap = self._engine.snapshot()
        else:
            snap = {
                "phase": "idle",
                "exercise_index": 0,
                "exercise_count": 0,
                "target": None,
                "set_index": 0,
                "sets": 0,
                "rep_index": 0,
                "reps_per_set": 0,
                "held_ms": 0,
                "hold_ms": 0,
                "held_fraction": 0.0,
                "rest_remaining_ms": 0,
                "total_reps": 0,
                "synced": False,
                "t_us": self._now_us(),
            }
        snap.update({
            "connected": self.holder.get() is not None,
            "db_ready": self.db.ready_for_session(),
            # explicit None test: Rest is label 0 and must not read as falsy
            "calibrating": None if self._calibrating is None else str(self._calibrating),
            "session_id": self._session_id,
            "session_active": self._log is not None,
            "last_seq": self.bus.last_seq(),
        })
        return snap

    # -- control operations (engine loop thread only) --

    def _spawn_sim(self, script) -> None:
        self.holder.close_current()
        self._sim_index += 1
        model = EmgSynthModel(seed=self.config.seed + self._sim_index)
        sim = Simulator(script, model)
        clk = self._make_clock()

        def run():
            try:
                sim.run(dev_end, clk)
            except TransportClosed:
                pass

        svc_end, dev_end = make_pipe()
        self.last_sim = sim
        threading.Thread(target=run, name="armband-sim", daemon=True).start()
        self.holder.set(svc_end)

    def _ctl_start_session(self, plan_items):
        if self._calibrating is not None:
            return 409, {"error": "calibration in progress"}
        if self._log is not None:
            return 409, {"error": "a session is already running"}
        if not self.db.ready_for_session():
            return 409, {"error": "template database is not ready; calibrate first"}
        if plan_items is not None:
            if not isinstance(plan_items, list):
                return 400, {"error": "malformed plan: expected a JSON list"}
            try:
                plan = ExercisePlan.from_list(plan_items)
            except (EmptyPlan, BadLabel, ValueError, KeyError, TypeError) as exc:
                return 400, {"error": f"malformed plan: {exc}"}
        else:
            plan = self.plan
        self._engine = new_session(plan, self.params)
        self._active_plan = plan
        self._session_counter += 1
        self._session_id = (
            f"session-{time.strftime('%Y%m%d-%H%M%S')}-{self._session_counter:03d}"
        )
        self._windower = StreamWindower(self.feature_config)
        self._log = SessionLog(
            session_id=self._session_id,
            started_at=time.strftime("%Y-%m-%dT%H:%M:%S"),
            plan=plan.to_list(),
            events=[],
        )
        self._log_path = self._log_dir / f"{self._session_id}.json"
        self._emit(LogEvent(self._now_us(), "session_started",
                            {"session_id": self._session_id}))
        if self._sim_mode:
            self._spawn_sim(build_session_script(plan.exercises, self.params))
        return 200, {"ok": True, "session_id": self._session_id,
                     "state": self._state_dict()}

    def _ctl_abort(self):
        if self._log is None:
            return 409, {"error": "no active session"}
        self._emit(LogEvent(self._now_us(), "session_aborted", {}))
        self._close_log()
        self._engine = None
        if self._sim_mode:
            self.holder.close_current()
        return 200, {"ok": True}

    def _ctl_calibration_start(self, label: GestureLabel):
        if self._log is not None:
            return 409, {"error": "a session is running"}
        if self._calibrating is not None:
            return 409, {"error": f"already calibrating {self._calibrating}"}
        self._calibrating = label
        self._calib_vectors = []
        self._windower = StreamWindower(self.feature_config)
        self._calib_from_us = self._now_us() + CALIB_GUARD_US
        if self._sim_mode:
            self._spawn_sim(
                build_calibration_script([label], self.config.calib_seconds)
            )
        return 200, {"ok": True, "label": str(label)}

    def _ctl_calibration_stop(self, label: GestureLabel):
        if self._calibrating is not label:
            return 409, {"error": f"not calibrating {label}"}
        vectors = self._calib_vectors
        self._calibrating = None
        self._calib_vectors = []
        saved = False
        if len(vectors) >= self.config.min_windows:
            buf = CalibrationBuffers(self.feature_config)
            for fv in vectors:
                buf.record_vector(label, fv)
            part = buf.finalize(self.config.min_windows)
            self.db.templates[label] = part.templates[label]
            save_db(self.db, self.config.db_path)
            saved = True
            self._emit(LogEvent(self._now_us(), "db_updated",
                                {"label": str(label), "windows": len(vectors)}))
        if self._sim_mode:
            self.holder.close_current()
        return 200, {
            "ok": True,
            "label": str(label),
            "windows": len(vectors),
            "min_windows": self.config.min_windows,
            "template_saved": saved,
            "db_ready": self.db.ready_for_session(),
        }

    def _ctl_state(self):
        return 200, self._state_dict()

    def _ctl_plan(self):
        plan = self._active_plan if self._engine is not None else self.plan
        return 200, plan.to_list()

    def control(self, fn, timeout: float = 30.0):
        """Run fn on the engine loop thread and return its (code, body)."""
        reply: queue.Queue = queue.Queue(1)
        self._q.put(("control", fn, reply))
        result = reply.get(timeout=timeout)
        if isinstance(result, Exception):
            raise result
        return result


# -- HTTP layer --

def _make_handler(service: Service):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("http: " + fmt, *args)

        def _cors(self):
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers",
                             "Content-Type, Last-Event-ID")

        def _json(self, code: int, body) -> None:
            payload = json.dumps(body).encode()
            self.send_response(code)
            self._cors()
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def _read_body(self):
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return None
            raw = self.rfile.read(length)
            if not raw.strip():
                return None
            return json.loads(raw)

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            url = urlparse(self.path)
            if url.path == "/api/state":
                code, body = service.control(service._ctl_state)
                self._json(code, body)
            elif url.path == "/api/plan":
                code, body = service.control(service._ctl_plan)
                self._json(code, body)
            elif url.path == "/api/events":
                self._stream_events(url)
            else:
                self._json(404, {"error": f"no such route: {url.path}"})

        def do_POST(self):
            url = urlparse(self.path)
            try:
                body = self._read_body()
            except (ValueError, UnicodeDecodeError):
                self._json(400, {"error": "request body is not valid JSON"})
                return
            if url.path == "/api/session/start":
                code, out = service.control(
                    lambda: service._ctl_start_session(body)
                )
                self._json(code, out)
            elif url.path == "/api/session/abort":
                code, out = service.control(service._ctl_abort)
                self._json(code, out)
            elif url.path.startswith("/api/calibration/"):
                self._calibration(url.path)
            else:
                self._json(404, {"error": f"no such route: {url.path}"})

        def _calibration(self, path: str) -> None:
            parts = path.strip("/").split("/")
            # api / calibration / <label> / start|stop
            if len(parts) != 4 or parts[3] not in ("start", "stop"):
                self._json(404, {"error": f"no such route: {path}"})
                return
            try:
                label = parse_label(parts[2])
            except BadLabel as exc:
                self._json(400, {"error": str(exc)})
                return
            if label is GestureLabel.UNKNOWN:
                self._json(400, {"error": "cannot calibrate the rejection label"})
                return
            if parts[3] == "start":
                code, out = service.control(
                    lambda: service._ctl_calibration_start(label)
                )
            else:
                code, out = service.control(
                    lambda: service._ctl_calibration_stop(label)
                )
            self._json(code, out)

        def _stream_events(self, url) -> None:
            last_seq = 0
            header = self.headers.get("Last-Event-ID")
            query = parse_qs(url.query).get("last_seq", [None])[0]
            for candidate in (header, query):
                if candidate:
                    try:
                        last_seq = max(last_seq, int(candidate))
                    except ValueError:
                        pass
            self.send_response(200)
            self._cors()
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Connection", "close")
            self.end_headers()
            try:
                while service.running() and not service.bus.closed:
                    batch = service.bus.events_after(last_seq, timeout=1.0)
                    if not batch:
                        self.wfile.write(b": keep-alive\n\n")
                        self.wfile.flush()
                        continue
                    for ev in batch:
                        data = json.dumps(ev, separators=(",", ":"))
                        self.wfile.write(
                            f"id: {ev['seq']}\ndata: {data}\n\n".encode()
                        )
                        last_seq = ev["seq"]
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError, OSError):
                pass

    return Handler


def run_service(config: ServiceConfig) -> None:
    """Start the service and block until interrupted."""
    service = Service(config)
    service.start()
    host, port = service.http_address
    print(f"listening on http://{host}:{port}  (transport: {config.transport})")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
