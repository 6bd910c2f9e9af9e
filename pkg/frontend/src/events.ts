// Wire shapes the service emits. Everything arrives as one SSE stream of
// JSON objects; the UI derives all of its state from these and nothing else.

export interface WireEvent {
  seq: number;
  t_us: number;
  kind: string;
  detail: Record<string, unknown>;
  cue?: string;
}

// Mirror of GET /api/state and of every `snapshot` event's detail.
export interface ServiceState {
  phase: string;
  exercise_index: number;
  exercise_count: number;
  target: string | null;
  set_index: number;
  sets: number;
  rep_index: number;
  reps_per_set: number;
  held_ms: number;
  hold_ms: number;
  held_fraction: number;
  rest_remaining_ms: number;
  total_reps: number;
  synced: boolean;
  t_us: number;
  connected: boolean;
  db_ready: boolean;
  calibrating: string | null;
  session_id: string | null;
  session_active: boolean;
  last_seq: number;
}

// Kinds this UI reacts to. Anything else is ignored with a console warning
// so an older bundle keeps working against a newer service.
export const KNOWN_KINDS = new Set([
  "session_started",
  "session_aborted",
  "session_completed",
  "device_connected",
  "device_disconnected",
  "sync_detected",
  "vibrate_requested",
  "prompt",
  "correct_movement",
  "incorrect_movement",
  "rep_counted",
  "set_completed",
  "exercise_completed",
  "db_updated",
  "snapshot",
]);

/** Parse one SSE data payload; null for anything that is not a well-formed
 * event (the caller skips those without touching view state). */
export function parseWireEvent(data: string): WireEvent | null {
  let raw: unknown;
  try {
    raw = JSON.parse(data);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const ev = raw as Record<string, unknown>;
  if (typeof ev.seq !== "number" || typeof ev.kind !== "string") return null;
  if (typeof ev.t_us !== "number") return null;
  if (typeof ev.detail !== "object" || ev.detail === null) return null;
  return {
    seq: ev.seq,
    t_us: ev.t_us,
    kind: ev.kind,
    detail: ev.detail as Record<string, unknown>,
    cue: typeof ev.cue === "string" ? ev.cue : undefined,
  };
}
