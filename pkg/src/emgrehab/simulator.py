"""Deterministic synthetic armband.

Plays a scripted gesture timeline over the framed transport: EMG
notifications at 100 packets/s (two 200 Hz frames each), IMU at 50 Hz
(identity orientation plus gravity), and honors inbound commands
(records vibrations, applies modes, sleeps on deep_sleep).

The signal model is amplitude-modulated zero-mean Gaussian noise: each
gesture is a fixed per-channel gain profile scaling a contraction
amplitude, plus a small baseline jitter. Identical (script, model, seed,
clock schedule) produce byte-identical output.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ProtocolError, TransportClosed
from .gestures import GestureLabel, parse_label
from .protocol import (
    ATTR_COMMAND,
    ATTR_EMG,
    ATTR_IMU,
    DeepSleep,
    FrameReader,
    ImuReading,
    SetMode,
    Vibrate,
    decode_command,
    encode_imu_packet,
    frame_write,
)

EMG_PACKET_INTERVAL_MS = 10   # 2 frames per packet -> 200 Hz sample rate
IMU_INTERVAL_MS = 20          # 50 Hz

#: Linear crossfade between gesture gain profiles, avoids step edges.
RAMP_MS = 100

DEFAULT_GAINS: dict[GestureLabel, tuple[float, ...]] = {
    GestureLabel.REST: (0.0,) * 8,
    # flexor-side channels
    GestureLabel.FIST: (0.90, 0.85, 0.80, 0.75, 0.10, 0.05, 0.10, 0.05),
    # extensor-side channels
    GestureLabel.FINGERS_SPREAD: (0.05, 0.10, 0.05, 0.10, 0.75, 0.80, 0.85, 0.90),
    GestureLabel.WAVE_OUT: (0.05, 0.10, 0.10, 0.05, 0.20, 0.80, 0.90, 0.85),
    GestureLabel.WAVE_IN: (0.15, 0.70, 0.95, 0.85, 0.05, 0.10, 0.05, 0.10),
}


@dataclass(frozen=True)
class ScriptEntry:
    label: GestureLabel
    start_ms: int
    duration_ms: int

    @property
    def end_ms(self) -> int:
        return self.start_ms + self.duration_ms


class GestureScript:
    """Ordered, non-overlapping gesture segments; gaps imply rest."""

    def __init__(self, entries: Sequence[ScriptEntry], total_ms: int | None = None):
        entries = sorted(entries, key=lambda e: e.start_ms)
        for e in entries:
            if e.duration_ms <= 0 or e.start_ms < 0:
                raise ValueError(f"bad script entry {e}")
        for prev, cur in zip(entries, entries[1:]):
            if cur.start_ms < prev.end_ms:
                raise ValueError(f"script entries overlap at {cur.start_ms} ms")
        self.entries = tuple(entries)
        last_end = self.entries[-1].end_ms if self.entries else 0
        self.total_ms = total_ms if total_ms is not None else last_end
        if self.total_ms < last_end:
            raise ValueError("total_ms shorter than the last entry")

    def segments(self) -> list[tuple[int, GestureLabel]]:
        """(start_ms, label) boundaries covering [0, total_ms), rest in gaps."""
        out: list[tuple[int, GestureLabel]] = []
        cursor = 0
        for e in self.entries:
            if e.start_ms > cursor:
                out.append((cursor, GestureLabel.REST))
            out.append((e.start_ms, e.label))
            cursor = e.end_ms
        if cursor < self.total_ms or not out:
            out.append((cursor, GestureLabel.REST))
        return out


def save_script(script: GestureScript, path: str | Path) -> None:
    doc = [
        {"label": str(e.label), "start_ms": e.start_ms, "duration_ms": e.duration_ms}
        for e in script.entries
    ]
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_script(path: str | Path) -> GestureScript:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = [
        ScriptEntry(
            label=parse_label(d["label"]),
            start_ms=int(d["start_ms"]),
            duration_ms=int(d["duration_ms"]),
        )
        for d in doc
    ]
    return GestureScript(entries)


@dataclass
class EmgSynthModel:
    baseline_amp: float = 2.0
    amp: float = 40.0
    noise_std: float = 1.0
    seed: int = 0
    gains: dict[GestureLabel, tuple[float, ...]] = field(
        default_factory=lambda: dict(DEFAULT_GAINS)
    )

    def gain_vector(self, label: GestureLabel) -> np.ndarray:
        return np.asarray(self.gains[label], dtype=np.float64)


def synth_sample(
    model: EmgSynthModel, label: GestureLabel, channel: int, rng: np.random.Generator
) -> int:
    """One signed 8-bit sample: gain * amplitude * noise plus baseline jitter."""
    g = model.gains[label][channel]
    v = g * model.amp * model.noise_std * rng.standard_normal()
    v += model.baseline_amp * rng.standard_normal()
    return int(np.clip(np.rint(v), -128, 127))


def synth_frame_values(
    model: EmgSynthModel, gains: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """All 8 channels of one frame; two draws of 8, same math as synth_sample."""
    v = gains * model.amp * model.noise_std * rng.standard_normal(8)
    v += model.baseline_amp * rng.standard_normal(8)
    return np.clip(np.rint(v), -128, 127).astype(np.int64)


def synth_frames(
    model: EmgSynthModel,
    label: GestureLabel,
    n_frames: int,
    rng: np.random.Generator,
    start_us: int = 0,
    sample_period_us: int = 5000,
):
    """Steady-state frames of one gesture (no ramp), for direct calibration."""
    from .features import EmgFrame

    gains = model.gain_vector(label)
    frames = []
    for i in range(n_frames):
        values = synth_frame_values(model, gains, rng)
        frames.append(
            EmgFrame(
                timestamp_us=start_us + i * sample_period_us,
                channels=tuple(int(v) for v in values),
            )
        )
    return frames


@dataclass
class SimStatus:
    connected: bool = False
    synced: bool = False
    vibrations: list[tuple[float, int]] = field(default_factory=list)
    mode: SetMode | None = None
    emg_packets: int = 0
    imu_packets: int = 0


class Simulator:
    """One simulator per transport connection; run() drives the whole script."""

    def __init__(
        self,
        script: GestureScript,
        model: EmgSynthModel | None = None,
        initial_emg_mode: int = 2,
        initial_imu_mode: int = 1,
    ):
        self.script = script
        self.model = model or EmgSynthModel()
        self.status = SimStatus()
        self._emg_mode = initial_emg_mode
        self._imu_mode = initial_imu_mode

    def _gains_at(self, t_ms: float, segments, seg_idx: int) -> tuple[np.ndarray, int]:
        while seg_idx + 1 < len(segments) and t_ms >= segments[seg_idx + 1][0]:
            seg_idx += 1
        start_ms, label = segments[seg_idx]
        cur = self.model.gain_vector(label)
        if RAMP_MS <= 0 or seg_idx == 0:
            return cur, seg_idx
        alpha = min(1.0, (t_ms - start_ms) / RAMP_MS)
        if alpha >= 1.0:
            return cur, seg_idx
        prev = self.model.gain_vector(segments[seg_idx - 1][1])
        return (1.0 - alpha) * prev + alpha * cur, seg_idx

    def _handle_inbound(self, data: bytes, reader: FrameReader, t_ms: float) -> bool:
        """Apply inbound command frames; returns False once told to sleep."""
        for msg in reader.feed(data):
            if msg.attribute_id != ATTR_COMMAND:
                continue
            try:
                cmd = decode_command(msg.payload)
            except ProtocolError:
                continue  # a real device ignores garbage writes
            if isinstance(cmd, SetMode):
                self.status.mode = cmd
                self._emg_mode = cmd.emg_mode
                self._imu_mode = cmd.imu_mode
            elif isinstance(cmd, Vibrate):
                self.status.vibrations.append((t_ms, cmd.kind))
                self.status.synced = True
            elif isinstance(cmd, DeepSleep):
                return False
        return True

    def run(self, transport, clock) -> SimStatus:
        """Emit the scripted stream; raises TransportClosed on a dead peer,
        leaving the partial status on self.status."""
        rng = np.random.default_rng(self.model.seed)
        segments = self.script.segments()
        seg_idx = 0
        reader = FrameReader()
        imu_payload = encode_imu_packet(
            ImuReading(quat=(1.0, 0, 0, 0), accel_g=(0, 0, 1.0), gyro_dps=(0, 0, 0))
        )
        self.status.connected = True
        try:
            t_ms = 0
            while t_ms < self.script.total_ms:
                clock.sleep_until_ms(t_ms)
                awake = self._handle_inbound(transport.recv(), reader, t_ms)
                if not awake:
                    break
                if self._emg_mode != 0:
                    g0, seg_idx = self._gains_at(t_ms, segments, seg_idx)
                    g1, seg_idx = self._gains_at(t_ms + 5, segments, seg_idx)
                    f0 = synth_frame_values(self.model, g0, rng)
                    f1 = synth_frame_values(self.model, g1, rng)
                    payload = bytes(
                        int(v) & 0xFF for v in np.concatenate([f0, f1])
                    )
                    transport.send(frame_write(ATTR_EMG, payload))
                    self.status.emg_packets += 1
                if self._imu_mode != 0 and t_ms % IMU_INTERVAL_MS == 0:
                    transport.send(frame_write(ATTR_IMU, imu_payload))
                    self.status.imu_packets += 1
                t_ms += EMG_PACKET_INTERVAL_MS
        except TransportClosed:
            self.status.connected = False
            raise
        self.status.connected = False
        transport.close()
        return self.status


# --- script construction helpers ---

#: Rest inserted before and between scripted activities.
REACT_MS = 400
#: Extra hold beyond the required duration, absorbing ramp and window lag.
HOLD_EXTRA_MS = 800
#: Extra rest beyond the engine's rest timers.
REST_EXTRA_MS = 600
#: Extra wave-out beyond the sync hold requirement. Covers detection lag
#: (windows classify the gesture ~150 ms after onset) plus a short stop
#: reaction, but must stay well under the engine's wrong-gesture
#: threshold: once the first prompt lands, leftover wave-out is just
#: another non-target gesture.
SYNC_EXTRA_MS = 300


def wrong_label_for(target: GestureLabel) -> GestureLabel:
    return GestureLabel.WAVE_IN if target != GestureLabel.WAVE_IN else GestureLabel.FIST


def build_session_script(plan, params, inject_wrong_first_rep: bool = False) -> GestureScript:
    """A patient timeline that satisfies (or, with injection, first violates)
    an exercise plan, with margins generous enough for windowing lag.

    plan is a sequence of exercise specs (target, hold_s, reps_per_set,
    sets, rest_between_reps_s, rest_between_sets_s); params carries the
    engine's sync_hold_ms and wrong_ms.
    """
    entries: list[ScriptEntry] = []
    t = REACT_MS
    entries.append(
        ScriptEntry(GestureLabel.WAVE_OUT, t, params.sync_hold_ms + SYNC_EXTRA_MS)
    )
    t += params.sync_hold_ms + SYNC_EXTRA_MS + REACT_MS

    for ex_idx, ex in enumerate(plan):
        hold_ms = int(ex.hold_s * 1000) + HOLD_EXTRA_MS
        for s in range(ex.sets):
            for r in range(ex.reps_per_set):
                if inject_wrong_first_rep and r == 0:
                    wrong_ms = params.wrong_ms + 400
                    entries.append(
                        ScriptEntry(wrong_label_for(ex.target), t, wrong_ms)
                    )
                    t += wrong_ms + REACT_MS
                entries.append(ScriptEntry(ex.target, t, hold_ms))
                t += hold_ms
                if r < ex.reps_per_set - 1:
                    t += int(ex.rest_between_reps_s * 1000) + REST_EXTRA_MS
            last_set = s == ex.sets - 1
            last_ex = ex_idx == len(plan) - 1
            if not (last_set and last_ex):
                t += int(ex.rest_between_sets_s * 1000) + REST_EXTRA_MS
    return GestureScript(entries, total_ms=t + 1000)


def build_calibration_script(
    labels: Sequence[GestureLabel], seconds_each: float = 3.0
) -> GestureScript:
    """Each label held steadily with rest gaps between; the stream stops
    at the last label's end so no transition tail leaks into templates."""
    entries = []
    t = REACT_MS
    for label in labels:
        dur = int(seconds_each * 1000)
        entries.append(ScriptEntry(label, t, dur))
        t += dur + REACT_MS
    return GestureScript(entries, total_ms=entries[-1].end_ms if entries else 0)
