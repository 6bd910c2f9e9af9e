// Static presentation assets: display names, simple line-drawing hand
// illustrations (inline SVG keyed by gesture label), and the string table.

export const GESTURE_NAMES: Record<string, string> = {
  rest: "Relax",
  fist: "Make a fist",
  fingers_spread: "Spread your fingers",
  wave_out: "Wave out",
  wave_in: "Wave in",
};

const SVG_OPEN =
  '<svg class="gesture-art" viewBox="0 0 120 120" role="img" ' +
  'stroke="currentColor" stroke-width="5" fill="none" stroke-linecap="round" ' +
  'stroke-linejoin="round"';

// One pictogram per gesture: a forearm with a stylized hand pose.
export const ILLUSTRATIONS: Record<string, string> = {
  rest:
    `${SVG_OPEN} aria-label="relaxed hand">` +
    '<path d="M20 95 Q20 75 35 72 L80 70 Q100 70 100 85 Q100 98 82 98 L20 98 Z"/>' +
    '<path d="M40 72 Q46 64 56 66 M56 66 Q64 60 72 64 M72 64 Q82 60 88 68"/>' +
    "</svg>",
  fist:
    `${SVG_OPEN} aria-label="closed fist">` +
    '<path d="M20 95 L20 75 Q20 68 30 68 L60 68"/>' +
    '<rect x="55" y="52" width="42" height="44" rx="12"/>' +
    '<path d="M66 52 L66 96 M80 52 L80 96"/>' +
    "</svg>",
  fingers_spread:
    `${SVG_OPEN} aria-label="hand with fingers spread">` +
    '<path d="M20 98 L44 90"/>' +
    '<path d="M52 86 L30 56 M60 80 L50 42 M68 78 L72 40 M76 82 L92 50 M82 90 L104 74"/>' +
    '<circle cx="66" cy="90" r="16"/>' +
    "</svg>",
  wave_out:
    `${SVG_OPEN} aria-label="hand bent outward">` +
    '<path d="M16 80 L58 80"/>' +
    '<path d="M58 80 Q70 80 78 68 L94 42"/>' +
    '<path d="M78 68 L96 60 M76 74 L98 72"/>' +
    '<path d="M100 30 Q108 40 106 52" stroke-dasharray="3 7"/>' +
    "</svg>",
  wave_in:
    `${SVG_OPEN} aria-label="hand bent inward">` +
    '<path d="M16 60 L58 60"/>' +
    '<path d="M58 60 Q70 60 78 72 L94 98"/>' +
    '<path d="M78 72 L96 80 M76 66 L98 68"/>' +
    '<path d="M100 110 Q108 100 106 88" stroke-dasharray="3 7"/>' +
    "</svg>",
};

export const EMOJI = {
  happy: "\u{1F604}", // grinning face, shown on every correct movement
  sad: "\u{1F615}", // confused face for the retry screen
  party: "\u{1F389}", // session completion
  wave: "\u{1F44B}",
};

export const STRINGS = {
  ready: "Ready when you are",
  startHint: "Press Start to begin your exercises",
  waveToBegin: "Wave out to begin",
  waveHold: "Hold it until the armband buzzes",
  startOfExercise: "Start of exercise",
  holdIt: "Hold it!",
  praise: "Great job!",
  retry: "Let's try that again",
  rest: "Rest",
  nextUp: "Next up",
  completedTitle: "Session complete!",
  completedBody: "Wonderful work today.",
  offline: "Connection lost. Reconnecting…",
  connecting: "Connecting…",
  noDevice: "Waiting for the armband…",
  calibrating: "Recording",
};
