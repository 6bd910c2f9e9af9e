"""
Time-domain EMG features, step by step
======================================

Builds a tiny synthetic recording (rest, a fist burst, rest again),
slices it into overlapping windows and shows what the four features
see on each channel.
"""

import numpy as np

from emgrehab import (
    EmgFrame,
    FeatureConfig,
    GestureLabel,
    featurize,
    mav,
    rms,
    slide_windows,
    waveform_length,
    zero_crossings,
)
from emgrehab.simulator import EmgSynthModel, synth_frames

# 200 Hz sampling, 200 ms windows sliding by 50 ms. These defaults match
# what the calibration and session pipeline use.
config = FeatureConfig()
print("config:", config.to_dict())
print("one vector has", config.dim, "values (8 channels x 4 features)")

# Synthesize 0.5 s of rest, 1 s of fist, 0.5 s of rest. The synth model is
# seeded, so this script prints the same numbers every run.
model = EmgSynthModel(seed=42)
rng = np.random.default_rng(7)
frames = []
frames += synth_frames(model, GestureLabel.REST, 100, rng, start_us=0)
frames += synth_frames(model, GestureLabel.FIST, 200, rng, start_us=500_000)
frames += synth_frames(model, GestureLabel.REST, 100, rng, start_us=1_500_000)

windows = slide_windows(frames, config.window_ms, config.step_ms)
print(f"\n{len(frames)} frames -> {len(windows)} windows")

# Channel 0 carries most of the fist energy in the synth model, so the
# burst is easy to see in any amplitude feature. Print every fourth
# window: they start 50 ms apart, so this steps 200 ms at a time.
print("\nwindow  start_ms  mav(ch0)  rms(ch0)   wl(ch0)  zc(ch0)")
for i, w in list(enumerate(windows))[::4]:
    print(
        f"{i:>6}  {w.start_us // 1000:>8}"
        f"  {mav(w, 0):>8.2f}  {rms(w, 0):>8.2f}"
        f"  {waveform_length(w, 0):>8.1f}  {zero_crossings(w, 0, 2.0):>7}"
    )

# The full vector is channel-major: all features for channel 0, then all
# for channel 1, and so on.
quiet = featurize(windows[0], config)
busy = featurize(windows[12], config)
print("\nrest window, channel 0 block:   ", np.round(quiet.values[:4], 2))
print("fist window, channel 0 block:   ", np.round(busy.values[:4], 2))

# Amplitude features are scale equivariant: doubling the signal doubles
# MAV, RMS and waveform length exactly. Zero crossings only care about
# sign changes, so they are scale invariant (with a scaled deadband).
# Double the rest segment; frame values are signed 8-bit, so the quiet
# channels have room to spare.
doubled = [
    EmgFrame(timestamp_us=f.timestamp_us, channels=tuple(2 * v for v in f.channels))
    for f in frames[:100]
]
w2 = slide_windows(doubled, config.window_ms, config.step_ms)[0]
print("\nmav doubles:", mav(windows[0], 0), "->", mav(w2, 0))
print("zc with doubled deadband:", zero_crossings(windows[0], 0, 2.0),
      "->", zero_crossings(w2, 0, 4.0))

# The deadband exists because an idle channel still dithers around zero.
# Raising it suppresses those micro-crossings; the count can only fall.
print("\ndeadband sweep on a rest window, channel 3:")
for db in (0.0, 0.5, 1.0, 2.0, 5.0, 10.0):
    print(f"  deadband {db:>4}: {zero_crossings(windows[0], 3, db)} crossings")
