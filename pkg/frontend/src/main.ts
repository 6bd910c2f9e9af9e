// Browser entry point: one reducer, one render target, one stream.

import { CuePlayer } from "./audio.js";
import { initialView, reduce, type Action, type ViewState } from "./reducer.js";
import { renderHtml } from "./render.js";
import { connectStream, type StreamHandle } from "./stream.js";

export interface App {
  view(): ViewState;
  dispatch(action: Action): void;
  close(): void;
}

export function createApp(root: HTMLElement, baseUrl: string): App {
  let view = initialView;
  const cues = new CuePlayer();

  const screenEl = root.querySelector<HTMLElement>(".screen-host") ?? root;

  function paint(): void {
    screenEl.innerHTML = renderHtml(view);
  }

  function dispatch(action: Action): void {
    const before = view;
    view = reduce(view, action);
    if (action.type === "server_event" && action.event.cue) {
      cues.play(action.event.cue);
    }
    if (view !== before) paint();
  }

  const stream: StreamHandle = connectStream(baseUrl, dispatch);

  async function post(path: string, body?: unknown): Promise<void> {
    try {
      await fetch(baseUrl + path, {
        method: "POST",
        body: body === undefined ? null : JSON.stringify(body),
      });
    } catch {
      // the state/event stream will surface any consequence
    }
  }

  root.querySelector("#start")?.addEventListener("click", () => post("/api/session/start"));
  root.querySelector("#abort")?.addEventListener("click", () => post("/api/session/abort"));
  root.querySelector("#mute")?.addEventListener("click", (e) => {
    const muted = cues.toggle();
    (e.target as HTMLElement).textContent = muted ? "\u{1F507} Sound off" : "\u{1F50A} Sound on";
  });

  paint();
  return { view: () => view, dispatch, close: () => stream.close() };
}

// Auto-mount in a browser; imported as a module in tests this is inert.
if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    // same-origin by default; ?api=http://host:port points elsewhere
    const override = new URLSearchParams(location.search).get("api");
    createApp(root, override ?? "");
  }
}
