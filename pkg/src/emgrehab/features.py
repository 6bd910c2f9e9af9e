"""Windowed time-domain feature extraction over 8-channel sEMG and
nearest-centroid gesture classification with rejection.

Features per channel (all standard time-domain measures):

    mav  mean absolute value        (1/W) * sum |x_i|
    rms  root mean square           sqrt((1/W) * sum x_i^2)
    wl   waveform length            sum |x_{i+1} - x_i|
    zc   zero crossings             pairs with a sign change whose step
                                    exceeds the deadband

Feature vectors are laid out channel-major: all features of channel 0,
then channel 1, and so on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadChannel,
    BadWindow,
    ConfigMismatch,
    EmptyDatabase,
    MalformedStream,
)
from .gestures import GestureLabel

NUM_CHANNELS = 8

#: Spread floor applied per dimension so degenerate (zero-variance)
#: calibration data never divides by zero.
SIGMA_FLOOR = 1e-6

#: Standardized-distance gate beyond which a window is labeled unknown.
DEFAULT_REJECT_THRESHOLD = 3.0


@dataclass(frozen=True)
class EmgFrame:
    """One 8-channel sample; values are signed 8-bit activations."""

    timestamp_us: int
    channels: tuple[int, ...]

    def __post_init__(self):
        if len(self.channels) != NUM_CHANNELS:
            raise MalformedStream(
                f"frame has {len(self.channels)} channels, expected {NUM_CHANNELS}"
            )
        for v in self.channels:
            if not -128 <= v <= 127:
                raise MalformedStream(f"channel value {v} outside signed 8-bit range")


class EmgWindow:
    """A fixed-length run of contiguous frames, at least two samples long."""

    __slots__ = ("frames", "window_len_ms", "step_ms", "_data")

    def __init__(self, frames: Sequence[EmgFrame], window_len_ms: int, step_ms: int):
        if len(frames) < 2:
            raise BadWindow(f"window needs >= 2 frames, got {len(frames)}")
        for prev, cur in zip(frames, frames[1:]):
            if cur.timestamp_us <= prev.timestamp_us:
                raise MalformedStream("window frames not strictly increasing in time")
        self.frames = tuple(frames)
        self.window_len_ms = window_len_ms
        self.step_ms = step_ms
        # (W, 8) float array; features are defined on real-valued signals.
        self._data = np.array([f.channels for f in self.frames], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def start_us(self) -> int:
        return self.frames[0].timestamp_us

    @property
    def end_us(self) -> int:
        return self.frames[-1].timestamp_us

    def channel(self, channel: int) -> np.ndarray:
        if not 0 <= channel < NUM_CHANNELS:
            raise BadChannel(f"channel {channel} outside 0..{NUM_CHANNELS - 1}")
        return self._data[:, channel]

    def data(self) -> np.ndarray:
        """(W, 8) view of the window samples."""
        return self._data


@dataclass(frozen=True)
class FeatureConfig:
    """Extraction settings; every vector and template carries their identity."""

    sample_rate_hz: int = 200
    window_ms: int = 200
    step_ms: int = 50
    features: tuple[str, ...] = ("mav", "rms", "wl", "zc")
    zc_deadband: float = 2.0

    def __post_init__(self):
        for name in self.features:
            if name not in _FEATURE_FUNCS:
                raise ValueError(f"unknown feature {name!r}")
        if self.zc_deadband < 0:
            raise ValueError("zc_deadband must be >= 0")

    @property
    def window_frames(self) -> int:
        return self.window_ms * self.sample_rate_hz // 1000

    @property
    def step_frames(self) -> int:
        return self.step_ms * self.sample_rate_hz // 1000

    @property
    def dim(self) -> int:
        return NUM_CHANNELS * len(self.features)

    def config_id(self) -> str:
        feats = ".".join(self.features)
        return (
            f"{self.sample_rate_hz}hz-w{self.window_ms}-s{self.step_ms}"
            f"-{feats}-db{self.zc_deadband:g}"
        )

    def to_dict(self) -> dict:
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "window_ms": self.window_ms,
            "step_ms": self.step_ms,
            "features": list(self.features),
            "zc_deadband": self.zc_deadband,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        return cls(
            sample_rate_hz=int(d["sample_rate_hz"]),
            window_ms=int(d["window_ms"]),
            step_ms=int(d["step_ms"]),
            features=tuple(d["features"]),
            zc_deadband=float(d["zc_deadband"]),
        )


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    feature_config_id: str


@dataclass(frozen=True)
class Classification:
    """Result of matching one window against the template database."""

    label: GestureLabel
    distance: float
    timestamp_us: int


# --- windowing ---


def slide_windows(
    stream: Sequence[EmgFrame],
    window_len_ms: int,
    step_ms: int,
    sample_rate_hz: int = 200,
) -> list[EmgWindow]:
    """Cut a frame stream into overlapping fixed-length windows.

    Window starts are step_ms apart; a trailing run shorter than the window
    is discarded.
    """
    if step_ms < 1:
        raise ValueError("step_ms must be >= 1")
    if window_len_ms < step_ms:
        raise ValueError("window_len_ms must be >= step_ms")
    for prev, cur in zip(stream, stream[1:]):
        if cur.timestamp_us <= prev.timestamp_us:
            raise MalformedStream("stream timestamps not strictly increasing")

    w = window_len_ms * sample_rate_hz // 1000
    step = step_ms * sample_rate_hz // 1000
    if w < 2 or step < 1:
        raise BadWindow(f"window of {w} frames / step of {step} frames too small")

    windows = []
    for start in range(0, len(stream) - w + 1, step):
        windows.append(EmgWindow(stream[start:start + w], window_len_ms, step_ms))
    return windows


class StreamWindower:
    """Incremental counterpart of slide_windows for live frame streams."""

    def __init__(self, config: FeatureConfig):
        self.config = config
        self._frames: list[EmgFrame] = []
        self._last_us: int | None = None

    def feed(self, frame: EmgFrame) -> list[EmgWindow]:
        if self._last_us is not None and frame.timestamp_us <= self._last_us:
            raise MalformedStream("stream timestamps not strictly increasing")
        self._last_us = frame.timestamp_us
        self._frames.append(frame)

        w = self.config.window_frames
        step = self.config.step_frames
        out = []
        while len(self._frames) >= w:
            out.append(EmgWindow(self._frames[:w], self.config.window_ms, self.config.step_ms))
            del self._frames[:step]
        return out


# --- per-channel features ---


def mav_values(x: Iterable[float]) -> float:
    """Mean absolute value of a raw sample sequence."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(np.abs(x)))


def rms_values(x: Iterable[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(x * x)))


def waveform_length_values(x: Iterable[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(np.abs(np.diff(x))))


def zero_crossings_values(x: Iterable[float], deadband: float = 0.0) -> int:
    """Sign changes between adjacent samples whose step exceeds the deadband.

    Zero-valued samples carry no sign, so a pair touching zero never counts.
    """
    if deadband < 0:
        raise ValueError("deadband must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    a, b = x[:-1], x[1:]
    return int(np.sum((a * b < 0) & (np.abs(a - b) > deadband)))


def mav(window: EmgWindow, channel: int) -> float:
    return mav_values(window.channel(channel))


def rms(window: EmgWindow, channel: int) -> float:
    return rms_values(window.channel(channel))


def waveform_length(window: EmgWindow, channel: int) -> float:
    return waveform_length_values(window.channel(channel))


def zero_crossings(window: EmgWindow, channel: int, deadband: float = 0.0) -> int:
    return zero_crossings_values(window.channel(channel), deadband)


_FEATURE_FUNCS = {
    "mav": lambda x, cfg: np.mean(np.abs(x), axis=0),
    "rms": lambda x, cfg: np.sqrt(np.mean(x * x, axis=0)),
    "wl": lambda x, cfg: np.sum(np.abs(np.diff(x, axis=0)), axis=0),
    "zc": lambda x, cfg: np.sum(
        (x[:-1] * x[1:] < 0) & (np.abs(x[:-1] - x[1:]) > cfg.zc_deadband), axis=0
    ).astype(np.float64),
}


def featurize(window: EmgWindow, config: FeatureConfig) -> FeatureVector:
    """Extract the configured features from every channel, channel-major."""
    x = window.data()
    per_feature = [_FEATURE_FUNCS[name](x, config) for name in config.features]
    # stack to (n_features, 8), transpose so channel varies slowest
    values = np.stack(per_feature, axis=0).T.reshape(-1)
    return FeatureVector(values=values, feature_config_id=config.config_id())


# --- classification ---


def standardized_distance(
    values: np.ndarray, centroid: np.ndarray, sigma: np.ndarray
) -> float:
    """Root mean square of per-dimension z-scores against one template."""
    z = (values - centroid) / sigma
    return float(np.sqrt(np.mean(z * z)))


def classify(
    fv: FeatureVector,
    db,
    reject_threshold: float = DEFAULT_REJECT_THRESHOLD,
    timestamp_us: int = 0,
) -> Classification:
    """Nearest-centroid match with rejection.

    Templates are scanned in GestureLabel order so exact distance ties
    resolve to the lowest label. If even the best template is farther than
    reject_threshold the window is labeled unknown, with that distance.

    `db` is any template database exposing `feature_config` and a
    `templates` mapping of label -> template with centroid/sigma arrays.
    """
    if reject_threshold <= 0:
        raise ValueError("reject_threshold must be > 0")
    if not db.templates:
        raise EmptyDatabase("template database has no templates")
    if fv.feature_config_id != db.feature_config.config_id():
        raise ConfigMismatch(
            f"vector built with {fv.feature_config_id!r}, "
            f"database with {db.feature_config.config_id()!r}"
        )

    best_label = None
    best_d = None
    for label in sorted(db.templates):
        t = db.templates[label]
        d = standardized_distance(fv.values, t.centroid, t.sigma)
        if best_d is None or d < best_d:
            best_label, best_d = label, d

    if best_d <= reject_threshold:
        return Classification(label=best_label, distance=best_d, timestamp_us=timestamp_us)
    return Classification(label=GestureLabel.UNKNOWN, distance=best_d, timestamp_us=timestamp_us)
