"""Bit-exact codec for the armband wire protocol plus length-prefixed
stream framing.

Command characteristic (little-endian throughout):

    set_mode    01 03 <emg> <imu> <classifier>   emg in {0,2,3}, imu in
                                                 {0,1,3,4,5}, classifier in {0,1}
    vibrate     03 01 <kind>                     kind in {1,2,3} (short/medium/long)
    deep_sleep  04 00

Notification payloads:

    emg   16 bytes: two consecutive 8-channel frames of signed bytes
    imu   20 bytes: quaternion w,x,y,z (i16, 1/16384), accel x,y,z
          (i16, 1/2048 g), gyro x,y,z (i16, 1/16 deg/s)
    event 1+ bytes: event type then opaque payload (decoded, unused)

Stream framing substitutes for BLE notifications over sockets or pipes:

    [len: u16 LE][attribute_id: u16 LE][payload]    len = 2 + payload length

Logical attribute ids: 1 command, 2 emg, 3 imu, 4 classifier event.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import InvalidCommand, MalformedFrame, MalformedPacket, UnknownCommand
from .features import EmgFrame

ATTR_COMMAND = 1
ATTR_EMG = 2
ATTR_IMU = 3
ATTR_EVENT = 4

VIBRATE_SHORT = 1
VIBRATE_MEDIUM = 2
VIBRATE_LONG = 3

EMG_MODES = (0, 2, 3)
IMU_MODES = (0, 1, 3, 4, 5)
CLASSIFIER_MODES = (0, 1)

_OP_SET_MODE = 0x01
_OP_VIBRATE = 0x03
_OP_DEEP_SLEEP = 0x04

#: Microseconds between consecutive samples at the fixed 200 Hz stream rate.
SAMPLE_PERIOD_US = 5000

MAX_FRAME_PAYLOAD = 65533


# --- commands ---


@dataclass(frozen=True)
class SetMode:
    emg_mode: int
    imu_mode: int
    classifier_mode: int


@dataclass(frozen=True)
class Vibrate:
    kind: int


@dataclass(frozen=True)
class DeepSleep:
    pass


Command = SetMode | Vibrate | DeepSleep


def encode_command(cmd: Command) -> bytes:
    if isinstance(cmd, SetMode):
        if cmd.emg_mode not in EMG_MODES:
            raise InvalidCommand(f"emg_mode {cmd.emg_mode} not in {EMG_MODES}")
        if cmd.imu_mode not in IMU_MODES:
            raise InvalidCommand(f"imu_mode {cmd.imu_mode} not in {IMU_MODES}")
        if cmd.classifier_mode not in CLASSIFIER_MODES:
            raise InvalidCommand(
                f"classifier_mode {cmd.classifier_mode} not in {CLASSIFIER_MODES}"
            )
        return bytes([_OP_SET_MODE, 0x03, cmd.emg_mode, cmd.imu_mode, cmd.classifier_mode])
    if isinstance(cmd, Vibrate):
        if cmd.kind not in (VIBRATE_SHORT, VIBRATE_MEDIUM, VIBRATE_LONG):
            raise InvalidCommand(f"vibrate kind {cmd.kind} not in 1..3")
        return bytes([_OP_VIBRATE, 0x01, cmd.kind])
    if isinstance(cmd, DeepSleep):
        return bytes([_OP_DEEP_SLEEP, 0x00])
    raise InvalidCommand(f"not a command: {cmd!r}")


def decode_command(data: bytes) -> Command:
    """Inverse of encode_command on its image; total on arbitrary bytes."""
    if len(data) < 2:
        raise MalformedPacket(f"command needs >= 2 bytes, got {len(data)}")
    opcode, declared = data[0], data[1]
    payload = data[2:]
    if opcode == _OP_SET_MODE:
        if declared != 3 or len(payload) != 3:
            raise MalformedPacket(
                f"set_mode declares {declared} payload bytes, carries {len(payload)}"
            )
        cmd = SetMode(emg_mode=payload[0], imu_mode=payload[1], classifier_mode=payload[2])
        try:
            encode_command(cmd)  # range check
        except InvalidCommand as exc:
            raise MalformedPacket(str(exc)) from None
        return cmd
    if opcode == _OP_VIBRATE:
        if declared != 1 or len(payload) != 1:
            raise MalformedPacket(
                f"vibrate declares {declared} payload bytes, carries {len(payload)}"
            )
        cmd = Vibrate(kind=payload[0])
        try:
            encode_command(cmd)
        except InvalidCommand as exc:
            raise MalformedPacket(str(exc)) from None
        return cmd
    if opcode == _OP_DEEP_SLEEP:
        if declared != 0 or payload:
            raise MalformedPacket(
                f"deep_sleep declares {declared} payload bytes, carries {len(payload)}"
            )
        return DeepSleep()
    raise UnknownCommand(f"opcode 0x{opcode:02x}")


# --- notification packets ---


def encode_emg_packet(first: EmgFrame, second: EmgFrame) -> bytes:
    return struct.pack("<16b", *first.channels, *second.channels)


def decode_emg_packet(
    data: bytes, first_timestamp_us: int = 0, sample_period_us: int = SAMPLE_PERIOD_US
) -> tuple[EmgFrame, EmgFrame]:
    """Split a 16-byte notification into its two 8-channel frames.

    The wire carries no timestamps; the caller supplies the first frame's
    time and the stream's sample period.
    """
    if len(data) != 16:
        raise MalformedPacket(f"emg packet must be 16 bytes, got {len(data)}")
    values = struct.unpack("<16b", data)
    return (
        EmgFrame(timestamp_us=first_timestamp_us, channels=values[:8]),
        EmgFrame(timestamp_us=first_timestamp_us + sample_period_us, channels=values[8:]),
    )


@dataclass(frozen=True)
class ImuReading:
    quat: tuple[float, float, float, float]
    accel_g: tuple[float, float, float]
    gyro_dps: tuple[float, float, float]


QUAT_SCALE = 16384.0
ACCEL_SCALE = 2048.0
GYRO_SCALE = 16.0


def encode_imu_packet(reading: ImuReading) -> bytes:
    words = (
        [int(round(v * QUAT_SCALE)) for v in reading.quat]
        + [int(round(v * ACCEL_SCALE)) for v in reading.accel_g]
        + [int(round(v * GYRO_SCALE)) for v in reading.gyro_dps]
    )
    return struct.pack("<10h", *words)


def decode_imu_packet(data: bytes) -> ImuReading:
    if len(data) != 20:
        raise MalformedPacket(f"imu packet must be 20 bytes, got {len(data)}")
    w = struct.unpack("<10h", data)
    return ImuReading(
        quat=tuple(v / QUAT_SCALE for v in w[0:4]),
        accel_g=tuple(v / ACCEL_SCALE for v in w[4:7]),
        gyro_dps=tuple(v / GYRO_SCALE for v in w[7:10]),
    )


@dataclass(frozen=True)
class ClassifierEvent:
    """On-device classifier notification; decoded for compatibility, unused."""

    event_type: int
    payload: bytes


def decode_classifier_event(data: bytes) -> ClassifierEvent:
    if len(data) < 1:
        raise MalformedPacket("classifier event needs >= 1 byte")
    return ClassifierEvent(event_type=data[0], payload=bytes(data[1:]))


# --- stream framing ---


@dataclass(frozen=True)
class FramedMessage:
    attribute_id: int
    payload: bytes


def frame_write(attribute_id: int, payload: bytes) -> bytes:
    if not 0 <= attribute_id <= 0xFFFF:
        raise MalformedFrame(f"attribute_id {attribute_id} outside u16 range")
    if len(payload) > MAX_FRAME_PAYLOAD:
        raise MalformedFrame(f"payload of {len(payload)} bytes exceeds {MAX_FRAME_PAYLOAD}")
    return struct.pack("<HH", 2 + len(payload), attribute_id) + payload


class FrameReader:
    """Reassembles framed messages from a byte stream, one owner per connection.

    An incomplete trailing frame is not an error: its bytes stay buffered
    until the next feed supplies the rest.
    """

    def __init__(self):
        self._buf = bytearray()

    def pending(self) -> int:
        return len(self._buf)

    def reset(self) -> None:
        self._buf.clear()

    def feed(self, data: bytes) -> list[FramedMessage]:
        self._buf.extend(data)
        out = []
        while True:
            if len(self._buf) < 2:
                break
            declared = struct.unpack_from("<H", self._buf, 0)[0]
            if declared < 2:
                raise MalformedFrame(f"frame declares length {declared}, minimum is 2")
            if len(self._buf) < 2 + declared:
                break  # wait state: need more data
            attribute_id = struct.unpack_from("<H", self._buf, 2)[0]
            payload = bytes(self._buf[4:2 + declared])
            del self._buf[:2 + declared]
            out.append(FramedMessage(attribute_id=attribute_id, payload=payload))
        return out


def frame_read(reader: FrameReader, data: bytes) -> list[FramedMessage]:
    return reader.feed(data)
