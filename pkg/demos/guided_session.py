"""
A guided exercise session, end to end in one process
====================================================

Wires the whole loop together without any networking: a scripted
"patient" streams EMG through the simulated armband, the host decodes
and classifies it, and the session engine turns classifications into
prompts, rep counts and the sync vibration.

The same loop runs behind the HTTP service; here every piece is visible.
"""

import threading

import numpy as np

from emgrehab import (
    ATTR_COMMAND,
    ATTR_EMG,
    CalibrationBuffers,
    EngineParams,
    ExercisePlan,
    ExerciseSpec,
    FeatureConfig,
    FrameReader,
    GestureLabel,
    SAMPLE_PERIOD_US,
    Simulator,
    TEMPLATE_LABELS,
    TransportClosed,
    Vibrate,
    build_session_script,
    classify,
    decode_emg_packet,
    encode_command,
    featurize,
    frame_write,
    new_session,
    slide_windows,
)
from emgrehab.clock import VirtualClock
from emgrehab.features import StreamWindower
from emgrehab.simulator import EmgSynthModel, synth_frames
from emgrehab.transport import make_pipe

config = FeatureConfig()
model = EmgSynthModel(seed=5)

# Calibrate once from steady recordings (see calibrate_then_classify.py).
buffers = CalibrationBuffers(config)
for label in TEMPLATE_LABELS:
    rng = np.random.default_rng([5, int(label)])
    buffers.record(label, slide_windows(synth_frames(model, label, 800, rng), config.window_ms, config.step_ms))
db = buffers.finalize()

# A short plan: two exercises, one set of two reps each.
plan = ExercisePlan((
    ExerciseSpec(target=GestureLabel.FIST, hold_s=1.0, reps_per_set=2, sets=1,
                 rest_between_reps_s=0.5, rest_between_sets_s=1.0),
    ExerciseSpec(target=GestureLabel.FINGERS_SPREAD, hold_s=1.0, reps_per_set=2,
                 sets=1, rest_between_reps_s=0.5, rest_between_sets_s=1.0),
))
params = EngineParams()
engine = new_session(plan, params)

# The script is a compliant patient: wave-out to sync, then each prompted
# hold with margins for reaction time and windowing lag.
script = build_session_script(plan, params)
print(f"scripted patient: {len(script.entries)} gestures over {script.total_ms} ms")

# The simulator owns one end of an in-process pipe and paces itself with a
# virtual clock (rate 0 = as fast as the host drains it; the bounded pipe
# provides the backpressure).
host_end, device_end = make_pipe(maxsize=4096)
sim = Simulator(script, model)
sim_thread = threading.Thread(
    target=sim.run, args=(device_end, VirtualClock(0)), daemon=True
)
sim_thread.start()

# Host side: reassemble frames, stamp sample times, window, classify, feed
# the engine. When the engine asks for the sync vibration, send the real
# command back down the pipe so the device side sees it too.
reader = FrameReader()
windower = StreamWindower(config)
sample_i = 0
events = []

try:
    while True:
        chunk = host_end.recv(timeout=1.0)
        for msg in reader.feed(chunk):
            if msg.attribute_id != ATTR_EMG:
                continue
            pair = decode_emg_packet(msg.payload, sample_i * SAMPLE_PERIOD_US)
            sample_i += 2
            for frame in pair:
                for window in windower.feed(frame):
                    c = classify(featurize(window, config), db,
                                 timestamp_us=window.end_us)
                    for ev in engine.on_classification(c):
                        events.append(ev)
                        print(f"{ev.t_us / 1e6:7.3f}s  {ev.kind:<20} {ev.detail}")
                        if ev.kind == "vibrate_requested":
                            host_end.send(frame_write(
                                ATTR_COMMAND, encode_command(Vibrate(kind=2))))
except TransportClosed:
    pass  # script finished, device hung up
sim_thread.join()

snap = engine.snapshot()
print(f"\nfinal phase: {snap['phase']}, total reps: {snap['total_reps']}")
print("device saw the sync vibration:", sim.status.synced)
counts = {}
for ev in events:
    counts[ev.kind] = counts.get(ev.kind, 0) + 1
print("event counts:", counts)
