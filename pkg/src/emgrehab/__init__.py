"""EMG hand rehabilitation: gesture recognition, guided exercise
sessions, armband wire protocol, deterministic simulator, HTTP service.
"""
from .engine import (
    EngineParams,
    ExercisePlan,
    ExerciseSpec,
    Phase,
    SessionEngine,
    default_plan,
    load_plan,
    new_session,
    save_plan,
)
from .errors import (
    BadChannel,
    BadLabel,
    BadWindow,
    ConfigMismatch,
    CorruptDatabase,
    CorruptLog,
    EmgRehabError,
    EmptyDatabase,
    EmptyPlan,
    InsufficientCalibration,
    InvalidCommand,
    MalformedFrame,
    MalformedPacket,
    MalformedStream,
    NonMonotonicInput,
    NonMonotonicLog,
    ProtocolError,
    StartupError,
    TransportClosed,
    UnknownCommand,
    UnsupportedSchema,
)
from .features import (
    Classification,
    EmgFrame,
    EmgWindow,
    FeatureConfig,
    FeatureVector,
    StreamWindower,
    classify,
    featurize,
    mav,
    rms,
    slide_windows,
    standardized_distance,
    waveform_length,
    zero_crossings,
)
from .gestures import TEMPLATE_LABELS, GestureLabel, parse_label
from .protocol import (
    ATTR_COMMAND,
    ATTR_EMG,
    ATTR_EVENT,
    ATTR_IMU,
    SAMPLE_PERIOD_US,
    ClassifierEvent,
    DeepSleep,
    FramedMessage,
    FrameReader,
    ImuReading,
    SetMode,
    Vibrate,
    decode_classifier_event,
    decode_command,
    decode_emg_packet,
    decode_imu_packet,
    encode_command,
    encode_emg_packet,
    encode_imu_packet,
    frame_read,
    frame_write,
)
from .simulator import (
    EmgSynthModel,
    GestureScript,
    ScriptEntry,
    SimStatus,
    Simulator,
    build_calibration_script,
    build_session_script,
    load_script,
    save_script,
    synth_frames,
    synth_sample,
)
from .store import (
    CalibrationBuffers,
    GestureTemplate,
    LogEvent,
    SessionLog,
    TemplateDatabase,
    append_log,
    load_db,
    load_log,
    save_db,
    save_log,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
