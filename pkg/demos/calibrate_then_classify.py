"""Per-user calibration and nearest-centroid recognition.

Records synthetic EMG for each gesture, builds templates (per-dimension
mean and standard deviation), then classifies a fresh stream against them.
"""

import numpy as np

from emgrehab import (
    CalibrationBuffers,
    FeatureConfig,
    GestureLabel,
    TEMPLATE_LABELS,
    classify,
    featurize,
    load_db,
    save_db,
    slide_windows,
)
from emgrehab.simulator import EmgSynthModel, synth_frames

config = FeatureConfig()
model = EmgSynthModel(seed=3)

# --- calibration ---
# 4 seconds per gesture; every window of each recording is buffered under
# its label. finalize() refuses labels with too few windows.
buffers = CalibrationBuffers(config)
for label in TEMPLATE_LABELS:
    rng = np.random.default_rng([3, int(label)])
    frames = synth_frames(model, label, 800, rng)
    n = buffers.record(label, slide_windows(frames, config.window_ms, config.step_ms))
    print(f"calibrated {label.name:<14} {n} windows")

db = buffers.finalize(min_windows=20)
print("\ntemplates:", [t.name for t in sorted(db.templates)])
print("ready for a session:", db.ready_for_session())

# Templates survive a save/load round trip bit for bit.
save_db(db, "/tmp/demo_templates.json")
assert load_db("/tmp/demo_templates.json") == db

# --- recognition on unseen data ---
# New seeds, same gestures. Each window classifies independently.
print("\nlabel            windows  correct")
for label in TEMPLATE_LABELS:
    rng = np.random.default_rng([99, int(label)])
    frames = synth_frames(model, label, 400, rng)
    windows = slide_windows(frames, config.window_ms, config.step_ms)
    hits = 0
    for w in windows:
        c = classify(featurize(w, config), db)
        hits += c.label == label
    print(f"{label.name:<16} {len(windows):>7}  {hits}/{len(windows)}")

# --- rejection ---
# A vector far from every template is labeled UNKNOWN rather than being
# forced onto the nearest gesture. Distance is the RMS of per-dimension
# z-scores, so "3" means three standard deviations out on average.
rng = np.random.default_rng(0)
frames = synth_frames(model, GestureLabel.FIST, 100, rng)
w = slide_windows(frames, config.window_ms, config.step_ms)[0]
fv = featurize(w, config)
far = type(fv)(values=fv.values * 50.0, feature_config_id=fv.feature_config_id)
c = classify(far, db, reject_threshold=3.0)
print(f"\nimplausible input -> {c.label.name} at distance {c.distance:.1f}")
