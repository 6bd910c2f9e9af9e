"""Persistence and calibration of the gesture-template database and of
per-session performance logs.

Both stores are single human-readable JSON files so a therapist (or a
test) can inspect them directly. Key names are fixed:

    templates.json      schema_version, feature_config{sample_rate_hz,
                        window_ms, step_ms, features[], zc_deadband},
                        templates{label: {centroid[], sigma[], sample_count}}
    sessions/<id>.json  session_id, started_at, plan[], completed,
                        events[{t_us, kind, detail}]
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BadLabel,
    CorruptDatabase,
    CorruptLog,
    InsufficientCalibration,
    NonMonotonicLog,
    UnsupportedSchema,
)
from .features import (
    SIGMA_FLOOR,
    EmgWindow,
    FeatureConfig,
    FeatureVector,
    featurize,
)
from .gestures import GestureLabel, parse_label

SCHEMA_VERSION = 1

#: Minimum calibration windows per label (~1 s of new signal at 50 ms step).
DEFAULT_MIN_WINDOWS = 20


@dataclass(eq=False)
class GestureTemplate:
    label: GestureLabel
    centroid: np.ndarray
    sigma: np.ndarray
    sample_count: int

    def __post_init__(self):
        if self.label == GestureLabel.UNKNOWN:
            raise BadLabel("unknown is a rejection outcome, not a template")
        if self.centroid.shape != self.sigma.shape:
            raise CorruptDatabase("centroid and sigma dimensions differ")
        if self.sample_count < 1:
            raise CorruptDatabase("sample_count must be >= 1")

    def __eq__(self, other):
        if not isinstance(other, GestureTemplate):
            return NotImplemented
        return (
            self.label == other.label
            and self.sample_count == other.sample_count
            and np.array_equal(self.centroid, other.centroid)
            and np.array_equal(self.sigma, other.sigma)
        )


@dataclass(eq=False)
class TemplateDatabase:
    feature_config: FeatureConfig
    templates: dict[GestureLabel, GestureTemplate] = dc_field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __eq__(self, other):
        if not isinstance(other, TemplateDatabase):
            return NotImplemented
        return (
            self.schema_version == other.schema_version
            and self.feature_config == other.feature_config
            and self.templates == other.templates
        )

    def ready_for_session(self) -> bool:
        """Rest plus at least one active gesture must be present."""
        labels = set(self.templates)
        return GestureLabel.REST in labels and len(labels - {GestureLabel.REST}) >= 1


class CalibrationBuffers:
    """Accumulates feature vectors per label until finalized into templates."""

    def __init__(self, config: FeatureConfig):
        self.config = config
        self._vectors: dict[GestureLabel, list[np.ndarray]] = {}

    def record(self, label: GestureLabel, windows: Sequence[EmgWindow]) -> int:
        """Featurize and buffer windows under a label; returns the buffer size."""
        if label == GestureLabel.UNKNOWN:
            raise BadLabel("cannot calibrate the rejection label")
        bucket = self._vectors.setdefault(label, [])
        for w in windows:
            bucket.append(featurize(w, self.config).values)
        return len(bucket)

    def record_vector(self, label: GestureLabel, fv: FeatureVector) -> int:
        if label == GestureLabel.UNKNOWN:
            raise BadLabel("cannot calibrate the rejection label")
        bucket = self._vectors.setdefault(label, [])
        bucket.append(fv.values)
        return len(bucket)

    def counts(self) -> dict[GestureLabel, int]:
        return {label: len(vs) for label, vs in self._vectors.items()}

    def finalize(self, min_windows: int = DEFAULT_MIN_WINDOWS) -> TemplateDatabase:
        """Build templates: per-dimension mean and population standard deviation.

        Reductions use math.fsum, so the result is independent of buffer order.
        """
        templates = {}
        for label in sorted(self._vectors):
            vectors = self._vectors[label]
            if len(vectors) < min_windows:
                raise InsufficientCalibration(str(label), len(vectors), min_windows)
            stacked = np.stack(vectors, axis=0)
            n, dim = stacked.shape
            centroid = np.empty(dim)
            sigma = np.empty(dim)
            for j in range(dim):
                col = stacked[:, j]
                mean = math.fsum(col) / n
                var = math.fsum((v - mean) ** 2 for v in col) / n
                centroid[j] = mean
                sigma[j] = max(math.sqrt(var), SIGMA_FLOOR)
            templates[label] = GestureTemplate(
                label=label, centroid=centroid, sigma=sigma, sample_count=n
            )
        return TemplateDatabase(feature_config=self.config, templates=templates)


def calibration_record(
    buffers: CalibrationBuffers, label: GestureLabel, windows: Sequence[EmgWindow]
) -> int:
    return buffers.record(label, windows)


def calibration_finalize(
    buffers: CalibrationBuffers, min_windows: int = DEFAULT_MIN_WINDOWS
) -> TemplateDatabase:
    return buffers.finalize(min_windows)


# --- database persistence ---


def save_db(db: TemplateDatabase, path: str | Path) -> None:
    doc = {
        "schema_version": db.schema_version,
        "feature_config": db.feature_config.to_dict(),
        "templates": {
            str(label): {
                "centroid": list(t.centroid),
                "sigma": list(t.sigma),
                "sample_count": t.sample_count,
            }
            for label, t in sorted(db.templates.items())
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_db(path: str | Path) -> TemplateDatabase:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptDatabase(f"{path}: {exc}") from exc

    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise CorruptDatabase(f"{path}: missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise UnsupportedSchema(
            f"{path}: schema_version {doc['schema_version']}, expected {SCHEMA_VERSION}"
        )
    try:
        config = FeatureConfig.from_dict(doc["feature_config"])
        templates = {}
        for name, t in doc["templates"].items():
            label = parse_label(name)
            templates[label] = GestureTemplate(
                label=label,
                centroid=np.array(t["centroid"], dtype=np.float64),
                sigma=np.array(t["sigma"], dtype=np.float64),
                sample_count=int(t["sample_count"]),
            )
    except (KeyError, TypeError, ValueError, BadLabel) as exc:
        raise CorruptDatabase(f"{path}: {exc}") from exc
    return TemplateDatabase(
        feature_config=config, templates=templates, schema_version=doc["schema_version"]
    )


# --- session logs ---


@dataclass(frozen=True)
class LogEvent:
    t_us: int
    kind: str
    detail: dict

    def to_dict(self) -> dict:
        return {"t_us": self.t_us, "kind": self.kind, "detail": self.detail}


@dataclass
class SessionLog:
    session_id: str
    started_at: str
    plan: list[dict]
    events: list[LogEvent] = dc_field(default_factory=list)

    @property
    def completed(self) -> bool:
        return bool(self.events) and self.events[-1].kind == "session_completed"

    def __eq__(self, other):
        if not isinstance(other, SessionLog):
            return NotImplemented
        return (
            self.session_id == other.session_id
            and self.started_at == other.started_at
            and self.plan == other.plan
            and self.events == other.events
        )


def append_log(log: SessionLog, event: LogEvent) -> SessionLog:
    if log.events and event.t_us < log.events[-1].t_us:
        raise NonMonotonicLog(
            f"event at {event.t_us} us before last at {log.events[-1].t_us} us"
        )
    log.events.append(event)
    return log


def save_log(log: SessionLog, path: str | Path) -> None:
    doc = {
        "session_id": log.session_id,
        "started_at": log.started_at,
        "plan": log.plan,
        "completed": log.completed,
        "events": [e.to_dict() for e in log.events],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_log(path: str | Path) -> SessionLog:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        log = SessionLog(
            session_id=doc["session_id"],
            started_at=doc["started_at"],
            plan=doc["plan"],
            events=[
                LogEvent(t_us=int(e["t_us"]), kind=e["kind"], detail=e["detail"])
                for e in doc["events"]
            ],
        )
    except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CorruptLog(f"{path}: {exc}") from exc
    for prev, cur in zip(log.events, log.events[1:]):
        if cur.t_us < prev.t_us:
            raise CorruptLog(f"{path}: event timestamps regress at {cur.t_us} us")
    return log
