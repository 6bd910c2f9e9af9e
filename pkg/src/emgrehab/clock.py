"""Injectable clocks so full sessions can run in milliseconds in tests."""
from __future__ import annotations

import time


class RealClock:
    """Wall-clock pacing."""

    def __init__(self):
        self._t0 = time.monotonic()

    def now_ms(self) -> float:
        return (time.monotonic() - self._t0) * 1000.0

    def sleep_until_ms(self, t_ms: float) -> None:
        delay = t_ms - self.now_ms()
        if delay > 0:
            time.sleep(delay / 1000.0)


class VirtualClock:
    """Simulated time advanced by sleepers, optionally scaled to wall time.

    rate > 0 sleeps wall time / rate (e.g. rate=10 runs 10x fast);
    rate = 0 never sleeps, making runs as fast as the CPU allows.
    """

    def __init__(self, rate: float = 0.0):
        if rate < 0:
            raise ValueError("rate must be >= 0")
        self.rate = rate
        self._now_ms = 0.0

    def now_ms(self) -> float:
        return self._now_ms

    def sleep_until_ms(self, t_ms: float) -> None:
        if t_ms <= self._now_ms:
            return
        if self.rate > 0:
            time.sleep((t_ms - self._now_ms) / 1000.0 / self.rate)
        self._now_ms = t_ms


def parse_clock(spec: str):
    """Build a clock from a CLI spec: 'real' or 'x<rate>' ('x0' = unbounded)."""
    if spec == "real":
        return RealClock()
    if spec.startswith("x"):
        return VirtualClock(rate=float(spec[1:]))
    raise ValueError(f"clock spec must be 'real' or 'x<rate>', got {spec!r}")
