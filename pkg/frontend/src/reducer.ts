// Single reducer: every change to what the patient sees flows through
// reduce(). The view holds no session logic of its own; it only mirrors
// events, so it can be driven identically by a live stream or a recording.

import { KNOWN_KINDS, type ServiceState, type WireEvent } from "./events.js";

export type ConnectionStatus = "connecting" | "live" | "offline";
export type Feedback = "none" | "correct" | "incorrect";

export interface Counters {
  reps: number;
  sets: number;
  exercises: number;
  incorrect: number;
}

export interface ViewState {
  connection: ConnectionStatus;
  deviceConnected: boolean;
  dbReady: boolean;
  calibrating: string | null;
  sessionId: string | null;
  sessionActive: boolean;
  phase: string;
  synced: boolean;
  target: string | null;
  exerciseIndex: number;
  exerciseCount: number;
  setIndex: number;
  sets: number;
  repIndex: number;
  repsPerSet: number;
  heldFraction: number;
  holdMs: number;
  restRemainingMs: number;
  feedback: Feedback;
  lastCue: string | null;
  counters: Counters;
  lastSeq: number;
}

export const initialView: ViewState = {
  connection: "connecting",
  deviceConnected: false,
  dbReady: false,
  calibrating: null,
  sessionId: null,
  sessionActive: false,
  phase: "idle",
  synced: false,
  target: null,
  exerciseIndex: 0,
  exerciseCount: 0,
  setIndex: 0,
  sets: 0,
  repIndex: 0,
  repsPerSet: 0,
  heldFraction: 0,
  holdMs: 0,
  restRemainingMs: 0,
  feedback: "none",
  lastCue: null,
  counters: { reps: 0, sets: 0, exercises: 0, incorrect: 0 },
  lastSeq: 0,
};

export type Action =
  | { type: "server_event"; event: WireEvent }
  | { type: "state_fetched"; state: ServiceState }
  | { type: "connection"; status: ConnectionStatus };

function applySnapshot(view: ViewState, s: ServiceState): ViewState {
  return {
    ...view,
    phase: s.phase,
    synced: s.synced,
    target: s.target,
    exerciseIndex: s.exercise_index,
    exerciseCount: s.exercise_count,
    setIndex: s.set_index,
    sets: s.sets,
    repIndex: s.rep_index,
    repsPerSet: s.reps_per_set,
    heldFraction: s.held_fraction,
    holdMs: s.hold_ms,
    restRemainingMs: s.rest_remaining_ms,
    deviceConnected: s.connected,
    dbReady: s.db_ready,
    calibrating: s.calibrating,
    sessionId: s.session_id,
    sessionActive: s.session_active,
    // feedback lingers through the re-prompt and the rest screens; once the
    // patient is holding again the slate is clean
    feedback: s.phase === "holding" ? "none" : view.feedback,
  };
}

export function reduce(view: ViewState, action: Action): ViewState {
  switch (action.type) {
    case "connection":
      return { ...view, connection: action.status };

    case "state_fetched":
      return applySnapshot(view, action.state);

    case "server_event": {
      const ev = action.event;
      if (!KNOWN_KINDS.has(ev.kind)) {
        console.warn(`ignoring unknown event kind ${JSON.stringify(ev.kind)}`);
        return view;
      }
      const next = { ...view, counters: { ...view.counters }, lastSeq: ev.seq };
      if (ev.cue) next.lastCue = ev.cue;
      switch (ev.kind) {
        case "snapshot":
          return applySnapshot(next, ev.detail as unknown as ServiceState);
        case "session_started":
          return {
            ...next,
            sessionId: String(ev.detail.session_id ?? ""),
            sessionActive: true,
            phase: "awaiting_sync",
            synced: false,
            feedback: "none",
            counters: { reps: 0, sets: 0, exercises: 0, incorrect: 0 },
          };
        case "session_aborted":
          return { ...next, sessionActive: false, phase: "idle", feedback: "none" };
        case "session_completed":
          return { ...next, sessionActive: false, phase: "completed", feedback: "none" };
        case "device_connected":
          return { ...next, deviceConnected: true };
        case "device_disconnected":
          return { ...next, deviceConnected: false };
        case "sync_detected":
          return { ...next, synced: true };
        case "vibrate_requested":
          return next; // the armband buzzes; nothing to show
        case "prompt":
          return {
            ...next,
            phase: "prompting",
            target: String(ev.detail.target ?? ""),
            setIndex: Number(ev.detail.set ?? 0),
            repIndex: Number(ev.detail.rep ?? 0),
            heldFraction: 0,
            // an incorrect-movement prompt is a retry: keep the sad face and
            // the retry text on screen; a routine prompt clears praise
            feedback: view.feedback === "incorrect" ? "incorrect" : "none",
          };
        case "correct_movement":
          return { ...next, feedback: "correct" };
        case "incorrect_movement":
          next.counters.incorrect += 1;
          return { ...next, feedback: "incorrect" };
        case "rep_counted":
          next.counters.reps += 1;
          return next;
        case "set_completed":
          next.counters.sets += 1;
          return next;
        case "exercise_completed":
          next.counters.exercises += 1;
          return next;
        case "db_updated":
          return { ...next, dbReady: true };
        default:
          return next;
      }
    }
  }
}
