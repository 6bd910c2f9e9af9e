"""Rehabilitation session state machine.

Consumes a stream of gesture classifications and walks a patient through
an exercise plan: wave-out sync, prompt, judge the timed hold, count
reps and sets, advance exercises, emit feedback events.

Time is whatever the classification timestamps say. The engine never
consults a wall clock, so a paused input stream pauses the session in
place and identical input sequences yield identical event traces.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import EmptyPlan, NonMonotonicInput
from .features import Classification
from .gestures import GestureLabel, parse_label
from .protocol import VIBRATE_MEDIUM
from .store import LogEvent

IDLE_LABELS = frozenset({GestureLabel.REST, GestureLabel.UNKNOWN})


@dataclass(frozen=True)
class ExerciseSpec:
    target: GestureLabel
    hold_s: float = 5.0
    reps_per_set: int = 5
    sets: int = 3
    rest_between_reps_s: float = 3.0
    rest_between_sets_s: float = 30.0

    def __post_init__(self):
        if self.target in IDLE_LABELS:
            raise ValueError(f"{self.target} cannot be an exercise target")
        if not self.hold_s > 0:
            raise ValueError("hold_s must be positive")
        if self.reps_per_set < 1:
            raise ValueError("reps_per_set must be at least 1")
        if self.sets < 1:
            raise ValueError("sets must be at least 1")
        if self.rest_between_reps_s < 0 or self.rest_between_sets_s < 0:
            raise ValueError("rest durations cannot be negative")

    def to_dict(self) -> dict:
        return {
            "target": str(self.target),
            "hold_s": self.hold_s,
            "reps_per_set": self.reps_per_set,
            "sets": self.sets,
            "rest_between_reps_s": self.rest_between_reps_s,
            "rest_between_sets_s": self.rest_between_sets_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExerciseSpec":
        kwargs = {k: d[k] for k in (
            "hold_s", "reps_per_set", "sets",
            "rest_between_reps_s", "rest_between_sets_s",
        ) if k in d}
        return cls(target=parse_label(d["target"]), **kwargs)


@dataclass(frozen=True)
class ExercisePlan:
    exercises: tuple[ExerciseSpec, ...]

    def __post_init__(self):
        if not self.exercises:
            raise EmptyPlan("an exercise plan needs at least one exercise")

    def __len__(self) -> int:
        return len(self.exercises)

    def __getitem__(self, i: int) -> ExerciseSpec:
        return self.exercises[i]

    def to_list(self) -> list[dict]:
        return [ex.to_dict() for ex in self.exercises]

    @classmethod
    def from_list(cls, items: Sequence[dict]) -> "ExercisePlan":
        return cls(tuple(ExerciseSpec.from_dict(d) for d in items))


def default_plan() -> ExercisePlan:
    return ExercisePlan((
        ExerciseSpec(target=GestureLabel.FIST),
        ExerciseSpec(target=GestureLabel.FINGERS_SPREAD),
    ))


def save_plan(plan: ExercisePlan, path: str | Path) -> None:
    Path(path).write_text(json.dumps(plan.to_list(), indent=2) + "\n", encoding="utf-8")


def load_plan(path: str | Path) -> ExercisePlan:
    return ExercisePlan.from_list(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class EngineParams:
    #: Continuous wave-out needed to arm the session.
    sync_hold_ms: int = 1000
    #: Sustained non-target active gesture before it counts as an error.
    wrong_ms: int = 500
    #: Longest tolerated gap inside any sustained-gesture run.
    dropout_ms: int = 200

    def __post_init__(self):
        if min(self.sync_hold_ms, self.wrong_ms, self.dropout_ms) <= 0:
            raise ValueError("engine timing parameters must be positive")


class Phase(enum.Enum):
    AWAITING_SYNC = "awaiting_sync"
    PROMPTING = "prompting"
    HOLDING = "holding"
    REP_REST = "rep_rest"
    SET_REST = "set_rest"
    COMPLETED = "completed"


class SessionEngine:
    """Single-writer state machine; snapshots are plain dicts, safe to share.

    Every call validates that time never regresses. Feedback events are
    returned to the caller (and not buffered) so the caller owns
    persistence and broadcast.
    """

    def __init__(self, plan: ExercisePlan, params: EngineParams | None = None):
        if isinstance(plan, (list, tuple)):
            plan = ExercisePlan(tuple(plan))
        if not len(plan):
            raise EmptyPlan("an exercise plan needs at least one exercise")
        self.plan = plan
        self.params = params or EngineParams()
        self.phase = Phase.AWAITING_SYNC
        self.exercise_index = 0
        self.set_index = 0
        self.rep_index = 0
        self.total_reps = 0
        self._last_ts_us = -1
        self._held_us = 0
        self._last_target_us = 0
        self._sync_run_start_us: int | None = None
        self._last_sync_us = 0
        self._wrong_run_start_us: int | None = None
        self._last_wrong_us = 0
        self._rest_until_us = 0

    # -- public API --

    def on_classification(self, c: Classification) -> list[LogEvent]:
        ts = self._check_time(c.timestamp_us)
        events: list[LogEvent] = []
        self._advance_time(ts, events)
        if self.phase is Phase.COMPLETED:
            return events
        label = c.label
        if self.phase is Phase.AWAITING_SYNC:
            self._on_awaiting_sync(label, ts, events)
        elif self.phase is Phase.PROMPTING:
            self._on_prompting(label, ts, events)
        elif self.phase is Phase.HOLDING:
            self._on_holding(label, ts, events)
        # classifications during rest phases are not judged
        return events

    def tick(self, now_us: int) -> list[LogEvent]:
        now = self._check_time(now_us)
        events: list[LogEvent] = []
        self._advance_time(now, events)
        return events

    def snapshot(self) -> dict:
        ex = self._current_exercise()
        hold_ms = int(ex.hold_s * 1000) if ex else 0
        held_ms = min(self._held_us // 1000, hold_ms) if self.phase in (
            Phase.HOLDING, Phase.COMPLETED) else 0
        if self.phase is Phase.COMPLETED:
            held_ms = hold_ms
        rest_remaining_ms = 0
        if self.phase in (Phase.REP_REST, Phase.SET_REST):
            rest_remaining_ms = max(0, (self._rest_until_us - self._last_ts_us) // 1000)
        return {
            "phase": self.phase.value,
            "exercise_index": self.exercise_index,
            "exercise_count": len(self.plan),
            "target": str(ex.target) if ex else None,
            "set_index": self.set_index,
            "sets": ex.sets if ex else 0,
            "rep_index": self.rep_index,
            "reps_per_set": ex.reps_per_set if ex else 0,
            "held_ms": held_ms,
            "hold_ms": hold_ms,
            "held_fraction": (held_ms / hold_ms) if hold_ms else 0.0,
            "rest_remaining_ms": rest_remaining_ms,
            "total_reps": self.total_reps,
            "synced": self.phase is not Phase.AWAITING_SYNC,
            "t_us": max(self._last_ts_us, 0),
        }

    # -- internals --

    def _current_exercise(self) -> ExerciseSpec | None:
        if self.phase is Phase.COMPLETED:
            return self.plan[len(self.plan) - 1]
        return self.plan[self.exercise_index]

    def _check_time(self, ts_us: int) -> int:
        if ts_us < self._last_ts_us:
            raise NonMonotonicInput(
                f"timestamp {ts_us} is before {self._last_ts_us}"
            )
        self._last_ts_us = ts_us
        return ts_us

    def _advance_time(self, now: int, events: list[LogEvent]) -> None:
        """Apply timer expiries and run decays before judging any label."""
        p = self.params
        if self.phase in (Phase.REP_REST, Phase.SET_REST):
            if now >= self._rest_until_us:
                self.phase = Phase.PROMPTING
                self._prompt(now, events)
        elif self.phase is Phase.HOLDING:
            if now - self._last_target_us > p.dropout_ms * 1000:
                # relaxation or rejection broke the hold: silent retry
                self.phase = Phase.PROMPTING
                self._held_us = 0
        elif self.phase is Phase.AWAITING_SYNC:
            if (
                self._sync_run_start_us is not None
                and now - self._last_sync_us > p.dropout_ms * 1000
            ):
                self._sync_run_start_us = None
        if (
            self._wrong_run_start_us is not None
            and now - self._last_wrong_us > p.dropout_ms * 1000
        ):
            self._wrong_run_start_us = None

    def _prompt(self, ts: int, events: list[LogEvent]) -> None:
        ex = self.plan[self.exercise_index]
        self._held_us = 0
        events.append(LogEvent(ts, "prompt", {
            "target": str(ex.target),
            "set": self.set_index,
            "rep": self.rep_index,
        }))

    def _on_awaiting_sync(self, label, ts: int, events: list[LogEvent]) -> None:
        if label is not GestureLabel.WAVE_OUT:
            return
        if self._sync_run_start_us is None:
            self._sync_run_start_us = ts
        self._last_sync_us = ts
        if ts - self._sync_run_start_us >= self.params.sync_hold_ms * 1000:
            self._sync_run_start_us = None
            events.append(LogEvent(ts, "sync_detected", {}))
            events.append(LogEvent(ts, "vibrate_requested", {"kind": VIBRATE_MEDIUM}))
            self.phase = Phase.PROMPTING
            self._prompt(ts, events)

    def _on_prompting(self, label, ts: int, events: list[LogEvent]) -> None:
        target = self.plan[self.exercise_index].target
        if label is target:
            self.phase = Phase.HOLDING
            self._held_us = 0
            self._last_target_us = ts
        elif label not in IDLE_LABELS:
            self._note_wrong(label, ts, events)

    def _on_holding(self, label, ts: int, events: list[LogEvent]) -> None:
        ex = self.plan[self.exercise_index]
        if label is ex.target:
            # gaps survived the dropout check in _advance_time, so the
            # whole interval since the last target sighting counts
            self._held_us += ts - self._last_target_us
            self._last_target_us = ts
            if self._held_us >= int(ex.hold_s * 1_000_000):
                self._complete_rep(ts, events)
        elif label not in IDLE_LABELS:
            self._note_wrong(label, ts, events)

    def _note_wrong(self, label, ts: int, events: list[LogEvent]) -> None:
        if self._wrong_run_start_us is None:
            self._wrong_run_start_us = ts
        self._last_wrong_us = ts
        if ts - self._wrong_run_start_us >= self.params.wrong_ms * 1000:
            self._wrong_run_start_us = None
            events.append(LogEvent(ts, "incorrect_movement", {"observed": str(label)}))
            if self.phase is Phase.HOLDING:
                self.phase = Phase.PROMPTING
            self._prompt(ts, events)

    def _complete_rep(self, ts: int, events: list[LogEvent]) -> None:
        ex = self.plan[self.exercise_index]
        self.total_reps += 1
        events.append(LogEvent(ts, "correct_movement", {}))
        events.append(LogEvent(ts, "rep_counted", {"rep": self.rep_index + 1}))
        self.rep_index += 1
        self._held_us = 0
        if self.rep_index < ex.reps_per_set:
            self.phase = Phase.REP_REST
            self._rest_until_us = ts + int(ex.rest_between_reps_s * 1_000_000)
            return
        events.append(LogEvent(ts, "set_completed", {"set": self.set_index + 1}))
        self.rep_index = 0
        self.set_index += 1
        if self.set_index < ex.sets:
            self.phase = Phase.SET_REST
            self._rest_until_us = ts + int(ex.rest_between_sets_s * 1_000_000)
            return
        events.append(LogEvent(ts, "exercise_completed", {"ex": self.exercise_index}))
        self.set_index = 0
        self.exercise_index += 1
        if self.exercise_index < len(self.plan):
            # the completed exercise's set rest separates exercises too
            self.phase = Phase.SET_REST
            self._rest_until_us = ts + int(ex.rest_between_sets_s * 1_000_000)
            return
        events.append(LogEvent(ts, "session_completed", {}))
        self.phase = Phase.COMPLETED
        # terminal snapshot reports every counter at its maximum
        self.exercise_index = len(self.plan)
        self.set_index = ex.sets
        self.rep_index = ex.reps_per_set


def new_session(plan: ExercisePlan, params: EngineParams | None = None) -> SessionEngine:
    return SessionEngine(plan, params)
