"""Gesture labels and their fixed ordering.

The enumeration order (rest < fist < fingers_spread < wave_out < wave_in)
is load-bearing: classification tie-breaks resolve to the lowest value.
"""
from __future__ import annotations

import enum

from .errors import BadLabel


class GestureLabel(enum.IntEnum):
    REST = 0
    FIST = 1
    FINGERS_SPREAD = 2
    WAVE_OUT = 3
    WAVE_IN = 4
    # Produced only by classification rejection; never stored as a template.
    UNKNOWN = 5

    def __str__(self) -> str:
        return self.name.lower()


# Labels that may carry a template / appear in scripts and plans.
TEMPLATE_LABELS = (
    GestureLabel.REST,
    GestureLabel.FIST,
    GestureLabel.FINGERS_SPREAD,
    GestureLabel.WAVE_OUT,
    GestureLabel.WAVE_IN,
)

_BY_NAME = {str(label): label for label in GestureLabel}


def parse_label(name: str) -> GestureLabel:
    """Map a lowercase label string (as used in files and JSON) to its enum."""
    try:
        return _BY_NAME[name]
    except KeyError:
        raise BadLabel(f"unknown gesture label {name!r}") from None
