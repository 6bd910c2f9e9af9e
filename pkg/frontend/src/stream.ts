// Live subscription to the service with resume: fetch the current state
// first, then follow /api/events. On any failure the client backs off,
// reconnects, and asks only for what it has not yet seen (?last_seq=), so
// a flaky connection neither drops nor duplicates events in the view.

import { parseWireEvent, type ServiceState } from "./events.js";
import type { Action } from "./reducer.js";

export interface EventSourceLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export interface StreamOptions {
  fetchFn?: (url: string) => Promise<{ ok: boolean; json(): Promise<unknown> }>;
  sourceFactory?: (url: string) => EventSourceLike;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
  baseDelayMs?: number;
  maxDelayMs?: number;
}

export interface StreamHandle {
  close(): void;
  /** Highest event sequence number dispatched so far. */
  lastSeq(): number;
}

export function connectStream(
  baseUrl: string,
  dispatch: (action: Action) => void,
  opts: StreamOptions = {},
): StreamHandle {
  const fetchFn = opts.fetchFn ?? ((url: string) => fetch(url));
  const sourceFactory =
    opts.sourceFactory ??
    ((url: string) => new EventSource(url) as unknown as EventSourceLike);
  const setTimer = opts.setTimer ?? ((fn: () => void, ms: number) => setTimeout(fn, ms));
  const clearTimer = opts.clearTimer ?? ((h: unknown) => clearTimeout(h as number));
  const baseDelay = opts.baseDelayMs ?? 1000;
  const maxDelay = opts.maxDelayMs ?? 30000;

  let lastSeq = 0;
  let attempt = 0;
  let source: EventSourceLike | null = null;
  let timer: unknown = null;
  let closed = false;

  function openStream(): void {
    if (closed) return;
    const query = lastSeq > 0 ? `?last_seq=${lastSeq}` : "";
    const src = sourceFactory(`${baseUrl}/api/events${query}`);
    source = src;
    src.onopen = () => {
      attempt = 0;
      dispatch({ type: "connection", status: "live" });
    };
    src.onmessage = (msg) => {
      const ev = parseWireEvent(msg.data);
      if (ev === null) return; // malformed payload: skip, view unchanged
      if (ev.seq <= lastSeq) return; // replay overlap after a resume
      lastSeq = ev.seq;
      dispatch({ type: "server_event", event: ev });
    };
    src.onerror = () => {
      src.close();
      if (source === src) source = null;
      if (closed) return;
      dispatch({ type: "connection", status: "offline" });
      scheduleReconnect();
    };
  }

  function scheduleReconnect(): void {
    const delay = Math.min(baseDelay * 2 ** attempt, maxDelay);
    attempt += 1;
    timer = setTimer(() => {
      timer = null;
      start();
    }, delay);
  }

  function start(): void {
    if (closed) return;
    dispatch({ type: "connection", status: "connecting" });
    fetchFn(`${baseUrl}/api/state`)
      .then((res) => {
        if (!res.ok) throw new Error("state fetch failed");
        return res.json();
      })
      .then((state) => {
        if (closed) return;
        dispatch({ type: "state_fetched", state: state as ServiceState });
        openStream();
      })
      .catch(() => {
        if (closed) return;
        dispatch({ type: "connection", status: "offline" });
        scheduleReconnect();
      });
  }

  start();

  return {
    close() {
      closed = true;
      if (timer !== null) clearTimer(timer);
      source?.close();
      source = null;
    },
    lastSeq: () => lastSeq,
  };
}
