"""Exception types shared across the package."""


class EmgRehabError(Exception):
    """Base class for all errors raised by this package."""


# --- signal / feature layer ---

class MalformedStream(EmgRehabError):
    """Frame stream violates its invariants (channel count, monotonic time)."""


class BadChannel(EmgRehabError):
    """Channel index outside 0..7."""


class BadWindow(EmgRehabError):
    """Window too short or otherwise unusable."""


class ConfigMismatch(EmgRehabError):
    """Feature vector and template database were produced with different settings."""


class EmptyDatabase(EmgRehabError):
    """Classification attempted against a database with no templates."""


# --- template store ---

class BadLabel(EmgRehabError):
    """Gesture label not allowed in this context (e.g. calibrating 'unknown')."""


class InsufficientCalibration(EmgRehabError):
    """A label's calibration buffer has fewer windows than required."""

    def __init__(self, label, have, need):
        super().__init__(f"label {label}: {have} windows buffered, {need} required")
        self.label = label
        self.have = have
        self.need = need


class UnsupportedSchema(EmgRehabError):
    """Persisted file declares a schema version this build does not read."""


class CorruptDatabase(EmgRehabError):
    """Template database file cannot be parsed or fails structural checks."""


class CorruptLog(EmgRehabError):
    """Session log file cannot be parsed or fails structural checks."""


class NonMonotonicLog(EmgRehabError):
    """Event appended to a session log with a timestamp earlier than the last."""


# --- wire protocol ---

class ProtocolError(EmgRehabError):
    """Base class for codec errors."""


class InvalidCommand(ProtocolError):
    """Command field outside its enumerated range."""


class UnknownCommand(ProtocolError):
    """Command opcode not recognized."""


class MalformedPacket(ProtocolError):
    """Packet bytes have the wrong length or internal structure."""


class MalformedFrame(ProtocolError):
    """Stream framing header is invalid (declared length below minimum)."""


# --- transport / simulator ---

class TransportClosed(EmgRehabError):
    """Operation attempted on a transport whose peer has gone away."""


# --- session engine ---

class EmptyPlan(EmgRehabError):
    """Exercise plan contains no exercises."""


class NonMonotonicInput(EmgRehabError):
    """Engine fed a classification or tick older than the last processed time."""


# --- service ---

class StartupError(EmgRehabError):
    """Service configuration cannot be brought up (missing database, bad address)."""
