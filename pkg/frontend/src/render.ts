// Pure rendering: ViewState in, HTML string out. No timers, no randomness,
// no reads of anything but the argument, so a replayed event trace always
// produces the same screen sequence.

import { EMOJI, GESTURE_NAMES, ILLUSTRATIONS, STRINGS } from "./assets.js";
import type { ViewState } from "./reducer.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function gestureName(label: string | null): string {
  if (!label) return "";
  return GESTURE_NAMES[label] ?? label.replace(/_/g, " ");
}

function art(label: string | null): string {
  if (!label) return "";
  return ILLUSTRATIONS[label] ?? "";
}

function banner(view: ViewState): string {
  if (view.connection === "offline") {
    return `<div class="banner banner-offline">${STRINGS.offline}</div>`;
  }
  if (view.connection === "connecting") {
    return `<div class="banner banner-connecting">${STRINGS.connecting}</div>`;
  }
  if (view.sessionActive && !view.deviceConnected) {
    return `<div class="banner banner-device">${STRINGS.noDevice}</div>`;
  }
  return "";
}

function progressHeader(view: ViewState): string {
  if (!view.sessionActive && view.phase !== "completed") return "";
  const ex = `Exercise ${Math.min(view.exerciseIndex + 1, view.exerciseCount)}/${view.exerciseCount}`;
  const set = `Set ${view.setIndex + 1}/${view.sets}`;
  const rep = `Rep ${Math.min(view.repIndex + 1, view.repsPerSet)}/${view.repsPerSet}`;
  return `<header class="progress">${ex} &middot; ${set} &middot; ${rep}</header>`;
}

function feedbackBlock(view: ViewState): string {
  if (view.feedback === "correct") {
    return (
      `<div class="feedback feedback-correct">` +
      `<span class="emoji">${EMOJI.happy}</span>` +
      `<p class="big">${STRINGS.praise}</p></div>`
    );
  }
  if (view.feedback === "incorrect") {
    return (
      `<div class="feedback feedback-incorrect retry">` +
      `<span class="emoji">${EMOJI.sad}</span>` +
      `<p class="big">${STRINGS.retry}</p>` +
      `<p>${esc(gestureName(view.target))}</p>` +
      art(view.target) +
      `</div>`
    );
  }
  return "";
}

function screen(view: ViewState): string {
  switch (view.phase) {
    case "idle": {
      const status = view.calibrating
        ? `<p>${STRINGS.calibrating}: ${esc(gestureName(view.calibrating))}</p>`
        : `<p>${STRINGS.startHint}</p>`;
      return (
        `<section class="screen screen-idle">` +
        `<h1>${STRINGS.ready}</h1>${status}</section>`
      );
    }
    case "awaiting_sync":
      return (
        `<section class="screen screen-sync">` +
        `<h1>${STRINGS.waveToBegin} <span class="emoji">${EMOJI.wave}</span></h1>` +
        art("wave_out") +
        `<p>${STRINGS.waveHold}</p></section>`
      );
    case "prompting":
      return (
        `<section class="screen screen-prompt">` +
        progressHeader(view) +
        feedbackBlock(view) +
        (view.feedback === "incorrect"
          ? ""
          : `<p class="kicker">${STRINGS.startOfExercise}</p>` +
            `<h1>${esc(gestureName(view.target))}</h1>` +
            art(view.target)) +
        `</section>`
      );
    case "holding": {
      // A hold verdict can land before the snapshot that moves the phase on,
      // so show the verdict as soon as it exists instead of a stale bar.
      if (view.feedback !== "none") {
        return (
          `<section class="screen screen-hold">` +
          progressHeader(view) +
          feedbackBlock(view) +
          `</section>`
        );
      }
      const pct = Math.round(view.heldFraction * 100);
      const leftS = Math.ceil((view.holdMs * (1 - view.heldFraction)) / 1000);
      return (
        `<section class="screen screen-hold">` +
        progressHeader(view) +
        `<h1>${STRINGS.holdIt}</h1>` +
        `<div class="holdbar"><div class="holdbar-fill" style="width:${pct}%"></div></div>` +
        `<p class="countdown">${leftS}s</p></section>`
      );
    }
    case "rep_rest":
    case "set_rest": {
      const s = Math.ceil(view.restRemainingMs / 1000);
      return (
        `<section class="screen screen-rest">` +
        progressHeader(view) +
        feedbackBlock(view) +
        `<h1>${STRINGS.rest}</h1><p class="countdown">${s}s</p>` +
        `<p class="kicker">${STRINGS.nextUp}: ${esc(gestureName(view.target))}</p>` +
        `</section>`
      );
    }
    case "completed":
      return (
        `<section class="screen screen-completed">` +
        `<span class="emoji">${EMOJI.party}</span>` +
        `<h1>${STRINGS.completedTitle}</h1>` +
        `<p class="big">${STRINGS.completedBody}</p>` +
        `<p>${view.counters.reps} reps &middot; ${view.counters.sets} sets &middot; ` +
        `${view.counters.exercises} exercises</p></section>`
      );
    default:
      return `<section class="screen"><h1>${esc(view.phase)}</h1></section>`;
  }
}

export function renderHtml(view: ViewState): string {
  return banner(view) + screen(view);
}
