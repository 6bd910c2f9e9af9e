// Audio cues named by the server (`cue` on feedback events). Muted by
// default: sound is an opt-in, and tests stay silent. Tones are
// synthesized so the bundle ships no media files.

const CUE_TONES: Record<string, Array<[number, number]>> = {
  // [frequency Hz, duration ms] per note
  correct: [[660, 120], [880, 160]],
  incorrect: [[330, 220]],
  complete: [[523, 120], [659, 120], [784, 240]],
};

export class CuePlayer {
  muted = true;
  private ctx: AudioContext | null = null;

  toggle(): boolean {
    this.muted = !this.muted;
    return this.muted;
  }

  play(cue: string): void {
    if (this.muted) return;
    const notes = CUE_TONES[cue];
    if (!notes || typeof AudioContext === "undefined") return;
    this.ctx = this.ctx ?? new AudioContext();
    let at = this.ctx.currentTime;
    for (const [freq, ms] of notes) {
      const osc = this.ctx.createOscillator();
      const gain = this.ctx.createGain();
      osc.frequency.value = freq;
      gain.gain.setValueAtTime(0.15, at);
      gain.gain.linearRampToValueAtTime(0.0001, at + ms / 1000);
      osc.connect(gain).connect(this.ctx.destination);
      osc.start(at);
      osc.stop(at + ms / 1000);
      at += ms / 1000;
    }
  }
}
