"""The package's shipped guarantees, one test each, end to end.

The terminal summary prints one PASS/FAIL line per test here (see
conftest). Scales and tolerances in this module are contractual; do
not shrink them to make a failure go away.
"""
import random
import struct
import time

import numpy as np
import pytest

import oracles
from conftest import FRESH_SEED, label_rng
from support import bus_kinds, get_json, post_json, wait_for

from emgrehab import (
    DeepSleep,
    EmgFrame,
    EmgSynthModel,
    FeatureConfig,
    FrameReader,
    GestureLabel,
    GestureScript,
    GestureTemplate,
    ScriptEntry,
    SetMode,
    TemplateDatabase,
    Vibrate,
    classify,
    decode_classifier_event,
    decode_command,
    decode_emg_packet,
    decode_imu_packet,
    encode_command,
    encode_emg_packet,
    encode_imu_packet,
    featurize,
    frame_write,
    load_db,
    load_log,
    save_db,
    save_log,
    slide_windows,
    synth_frames,
)
from emgrehab.errors import ProtocolError
from emgrehab.features import (
    FeatureVector,
    mav_values,
    rms_values,
    waveform_length_values,
    zero_crossings_values,
)
from emgrehab.gestures import TEMPLATE_LABELS
from emgrehab.service import Service, ServiceConfig
import emgrehab.service as service_module
from emgrehab.store import LogEvent, SessionLog

pytestmark = pytest.mark.filterwarnings("ignore::ResourceWarning")


def start_service(db_file, log_dir):
    svc = Service(ServiceConfig(
        transport="sim", db_path=str(db_file), listen="127.0.0.1:0",
        clock="x0", log_dir=str(log_dir),
    ))
    svc.start()
    return svc


def engine_events(events):
    return [e for e in events if e["kind"] != "snapshot"]


@pytest.fixture(scope="module")
def clean_run(db_file, tmp_path_factory):
    """One perfect run of the default plan, shared by several checks."""
    svc = start_service(db_file, tmp_path_factory.mktemp("clean-run"))
    try:
        started = time.monotonic()
        code, body = post_json(svc, "/api/session/start")
        assert code == 200, body
        wait_for(lambda: "session_completed" in bus_kinds(svc),
                 timeout=60, message="session completion")
        elapsed = time.monotonic() - started
        wait_for(lambda: svc.last_log_path is not None, message="saved log")
        data = {
            "events": svc.bus.events_after(0),
            "elapsed": elapsed,
            "log": load_log(svc.last_log_path),
            "sim_status": svc.last_sim.status,
        }
    finally:
        svc.stop()
    return data


def test_codec_round_trips_and_fuzzing_never_crash():
    started = time.monotonic()
    rng = np.random.default_rng(2001)

    # 105_000 valid round-trips across every message type
    count = 0
    emg_modes = rng.choice([0, 2, 3], size=40_000)
    imu_modes = rng.choice([0, 1, 3, 4, 5], size=40_000)
    cls_modes = rng.choice([0, 1], size=40_000)
    for e, i, c in zip(emg_modes, imu_modes, cls_modes):
        cmd = SetMode(int(e), int(i), int(c))
        assert decode_command(encode_command(cmd)) == cmd
        count += 1
    for k in rng.choice([1, 2, 3], size=20_000):
        cmd = Vibrate(int(k))
        assert decode_command(encode_command(cmd)) == cmd
        count += 1
    for _ in range(5_000):
        assert decode_command(encode_command(DeepSleep())) == DeepSleep()
        count += 1

    samples = rng.integers(-128, 128, size=(20_000, 16))
    for row in samples:
        first = EmgFrame(timestamp_us=0, channels=tuple(int(v) for v in row[:8]))
        second = EmgFrame(timestamp_us=5000,
                          channels=tuple(int(v) for v in row[8:]))
        packet = encode_emg_packet(first, second)
        assert decode_emg_packet(packet) == (first, second)
        count += 1

    words = rng.integers(-32768, 32768, size=(20_000, 10))
    for row in words:
        packet = struct.pack("<10h", *(int(v) for v in row))
        reading = decode_imu_packet(packet)
        assert encode_imu_packet(reading) == packet
        assert decode_imu_packet(encode_imu_packet(reading)) == reading
        count += 1
    assert count >= 100_000

    # 10**6 arbitrary byte strings: typed errors allowed, crashes not
    decoders = (
        decode_command,
        decode_emg_packet,
        decode_imu_packet,
        decode_classifier_event,
        lambda data: FrameReader().feed(data),
    )
    per_decoder = 200_000
    lengths = rng.integers(0, 65, size=per_decoder * len(decoders))
    blob = rng.integers(0, 256, size=int(lengths.sum()), dtype=np.uint8).tobytes()
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    fuzzed = 0
    for i, decoder in enumerate(decoders):
        for j in range(per_decoder):
            k = i * per_decoder + j
            data = blob[offsets[k]:offsets[k + 1]]
            try:
                decoder(data)
            except ProtocolError:
                pass
            fuzzed += 1
    assert fuzzed == 1_000_000

    assert time.monotonic() - started < 30.0


def test_frame_reassembly_is_chunking_invariant():
    rng = np.random.default_rng(2002)

    def parse(chunks):
        reader = FrameReader()
        out = []
        for chunk in chunks:
            out.extend((m.attribute_id, m.payload) for m in reader.feed(chunk))
        return out, reader.pending()

    for _ in range(100):
        stream = b""
        for _ in range(int(rng.integers(3, 8))):
            attr = int(rng.integers(1, 5))
            payload = rng.integers(
                0, 256, size=int(rng.integers(0, 31)), dtype=np.uint8
            ).tobytes()
            stream += frame_write(attr, payload)
        # a trailing fragment must survive any chunking as pending bytes
        stream += frame_write(3, b"tail")[: int(rng.integers(0, 6))]

        reference = parse([stream])
        assert parse([stream[i:i + 1] for i in range(len(stream))]) == reference
        for split in range(1, len(stream)):
            assert parse([stream[:split], stream[split:]]) == reference


def test_feature_scale_equivariance_and_zc_monotonicity():
    rng = np.random.default_rng(2003)
    for _ in range(1000):
        x = rng.normal(scale=float(rng.uniform(0.5, 30)),
                       size=int(rng.integers(2, 300)))
        alpha = float(rng.choice([-1, 1]) * 10 ** rng.uniform(-2, 2))
        scaled = [alpha * v for v in x]
        plain = list(x)
        for fn in (mav_values, rms_values, waveform_length_values):
            expected = abs(alpha) * fn(plain)
            got = fn(scaled)
            assert abs(got - expected) <= 1e-9 * max(abs(expected), 1e-30)

    for _ in range(1000):
        x = [float(v) for v in rng.integers(-60, 61, size=int(rng.integers(2, 120)))]
        deadbands = sorted(float(d) for d in rng.uniform(0, 40, size=6))
        counts = [zero_crossings_values(x, deadband=d) for d in [0.0] + deadbands]
        assert counts == sorted(counts, reverse=True)


def test_classifier_matches_exhaustive_scan():
    rng = np.random.default_rng(2004)
    config = FeatureConfig()
    cases = tie_cases = 0
    while cases < 1000:
        labels = [TEMPLATE_LABELS[int(i)] for i in rng.choice(
            len(TEMPLATE_LABELS), size=int(rng.integers(1, 6)), replace=False,
        )]
        templates = {}
        oracle_db = {}
        shared = None
        for label in labels:
            if shared is not None and rng.random() < 0.3:
                centroid, sigma = shared  # exact duplicate forces a tie
                tie_cases += 1
            else:
                centroid = tuple(float(v) for v in rng.normal(scale=50, size=config.dim))
                sigma = tuple(float(abs(v)) + 1e-6 for v in rng.normal(scale=3, size=config.dim))
                shared = (centroid, sigma)
            templates[label] = GestureTemplate(
                label=label, centroid=np.asarray(centroid),
                sigma=np.asarray(sigma), sample_count=10,
            )
            oracle_db[int(label)] = (list(centroid), list(sigma))
        db = TemplateDatabase(feature_config=config, templates=templates)

        anchor = templates[labels[int(rng.integers(0, len(labels)))]]
        values = tuple(
            c + float(rng.normal(scale=s * rng.uniform(0, 3)))
            for c, s in zip(anchor.centroid, anchor.sigma)
        )
        threshold = float(rng.uniform(0.3, 6.0))

        fv = FeatureVector(
            values=np.asarray(values), feature_config_id=config.config_id(),
        )
        got = classify(fv, db, reject_threshold=threshold)
        want_label, want_distance = oracles.classify(
            list(values), oracle_db, threshold
        )
        if want_label is None:
            assert got.label is GestureLabel.UNKNOWN
        else:
            assert int(got.label) == want_label
        assert abs(got.distance - want_distance) <= 1e-12 * max(1.0, want_distance)
        cases += 1
    assert tie_cases > 50  # the tie-break path was genuinely exercised


def test_perfect_default_session_counts(clean_run):
    kinds = [e["kind"] for e in engine_events(clean_run["events"])]
    assert kinds.count("rep_counted") == 30
    assert kinds.count("set_completed") == 6
    assert kinds.count("exercise_completed") == 2
    assert kinds.count("session_completed") == 1
    assert kinds.count("incorrect_movement") == 0
    assert clean_run["elapsed"] < 10.0


def test_wrong_gesture_injections_are_caught_and_recovered(
        db_file, tmp_path_factory):
    real = service_module.build_session_script
    service_module.build_session_script = (
        lambda plan, params: real(plan, params, inject_wrong_first_rep=True)
    )
    try:
        svc = start_service(db_file, tmp_path_factory.mktemp("injected"))
        try:
            code, body = post_json(svc, "/api/session/start")
            assert code == 200, body
            wait_for(lambda: "session_completed" in bus_kinds(svc),
                     timeout=60, message="session completion")
            events = engine_events(svc.bus.events_after(0))
        finally:
            svc.stop()
    finally:
        service_module.build_session_script = real

    kinds = [e["kind"] for e in events]
    assert kinds.count("session_completed") == 1
    assert kinds.count("rep_counted") == 30

    # at least one complaint for each of the six injected wrong gestures,
    # attributed to the (exercise, set) whose first rep was sabotaged
    complaints = {}
    exercise = 0
    current = None
    for i, e in enumerate(events):
        if e["kind"] == "prompt":
            current = (exercise, e["detail"]["set"])
        elif e["kind"] == "exercise_completed":
            exercise += 1
        elif e["kind"] == "incorrect_movement":
            complaints[current] = complaints.get(current, 0) + 1
            follow = events[i + 1]
            assert follow["kind"] == "prompt"
            assert follow["detail"]["set"] == current[1]
    assert set(complaints) == {(ex, s) for ex in range(2) for s in range(3)}
    assert all(n >= 1 for n in complaints.values())


def test_sync_gating_and_single_vibration(db_file, tmp_path_factory, clean_run):
    # without a sustained wave-out the session never arms: short bursts,
    # separated by clear rests, plus every other gesture at length
    def no_sync_script(plan, params):
        entries = [
            ScriptEntry(GestureLabel.FIST, 400, 1500),
            ScriptEntry(GestureLabel.WAVE_IN, 2300, 1500),
            ScriptEntry(GestureLabel.WAVE_OUT, 4200, 600),
            ScriptEntry(GestureLabel.WAVE_OUT, 5400, 600),
            ScriptEntry(GestureLabel.FINGERS_SPREAD, 6400, 1200),
        ]
        return GestureScript(entries, total_ms=8000)

    real = service_module.build_session_script
    service_module.build_session_script = no_sync_script
    try:
        svc = start_service(db_file, tmp_path_factory.mktemp("no-sync"))
        try:
            code, body = post_json(svc, "/api/session/start")
            assert code == 200, body
            wait_for(lambda: "device_disconnected" in bus_kinds(svc),
                     timeout=60, message="script end")
            code, state = get_json(svc, "/api/state")
            assert state["phase"] == "awaiting_sync"
            assert state["synced"] is False
            kinds = bus_kinds(svc)
            for forbidden in ("sync_detected", "vibrate_requested", "prompt",
                              "rep_counted", "incorrect_movement"):
                assert kinds.count(forbidden) == 0
            assert svc.last_sim.status.vibrations == []
            assert svc.last_sim.status.synced is False
        finally:
            svc.stop()
    finally:
        service_module.build_session_script = real

    # with the sync gesture: exactly one vibration, seen at the device
    kinds = [e["kind"] for e in engine_events(clean_run["events"])]
    assert kinds.count("sync_detected") == 1
    assert kinds.count("vibrate_requested") == 1
    vibrations = clean_run["sim_status"].vibrations
    assert len(vibrations) == 1
    assert vibrations[0][1] == 2
    assert clean_run["sim_status"].synced is True


def test_recognition_self_consistency_after_calibration(
        calibrated_db, feature_config):
    model = EmgSynthModel()
    for label in TEMPLATE_LABELS:
        frames = synth_frames(model, label, 800, label_rng(FRESH_SEED, label))
        windows = slide_windows(
            frames, feature_config.window_ms, feature_config.step_ms
        )
        assert len(windows) >= 50
        hits = sum(
            classify(featurize(w, feature_config), calibrated_db).label is label
            for w in windows
        )
        accuracy = hits / len(windows)
        assert accuracy >= 0.95, f"{label}: {accuracy:.3f}"


def test_persistence_round_trips_and_log_equals_stream(tmp_path, clean_run):
    rng = np.random.default_rng(2009)

    for i in range(100):
        config = FeatureConfig(
            window_ms=int(rng.choice([100, 150, 200])),
            step_ms=int(rng.choice([25, 50])),
            zc_deadband=float(rng.uniform(0, 10)),
        )
        picks = rng.choice(len(TEMPLATE_LABELS),
                           size=int(rng.integers(1, 6)), replace=False)
        templates = {}
        for p in picks:
            label = TEMPLATE_LABELS[int(p)]
            templates[label] = GestureTemplate(
                label=label,
                centroid=rng.normal(scale=200, size=config.dim),
                sigma=np.abs(rng.normal(scale=8, size=config.dim)) + 1e-9,
                sample_count=int(rng.integers(1, 1000)),
            )
        db = TemplateDatabase(feature_config=config, templates=templates)
        path = tmp_path / f"db{i}.json"
        save_db(db, path)
        assert load_db(path) == db

    for i in range(100):
        t = 0
        events = []
        for _ in range(int(rng.integers(0, 50))):
            t += int(rng.integers(0, 400_000))
            events.append(LogEvent(
                t, f"kind_{int(rng.integers(0, 7))}",
                {"value": int(rng.integers(-5, 6)), "cue": "correct"},
            ))
        log = SessionLog(
            session_id=f"roundtrip-{i:03d}",
            started_at="2026-02-01T09:30:00",
            plan=[{"target": "wave_in", "hold_s": float(rng.uniform(0.5, 8))}],
            events=events,
        )
        path = tmp_path / f"log{i}.json"
        save_log(log, path)
        assert load_log(path) == log

    # the live event stream and the file on disk tell the same story
    streamed = engine_events(clean_run["events"])
    start = next(i for i, e in enumerate(streamed)
                 if e["kind"] == "session_started")
    end = next(i for i, e in enumerate(streamed)
               if e["kind"] == "session_completed")
    wire = [(e["t_us"], e["kind"], e["detail"]) for e in streamed[start:end + 1]]
    persisted = [(e.t_us, e.kind, e.detail) for e in clean_run["log"].events]
    assert wire == persisted
    assert clean_run["log"].completed is True
