"""Armband wire protocol: commands, data packets and framing.

Everything on the wire is little endian. Host-to-device commands share one
attribute; device-to-host data uses one attribute per stream.
"""

import struct

from emgrehab import (
    ATTR_COMMAND,
    ATTR_EMG,
    ATTR_IMU,
    DeepSleep,
    FrameReader,
    ImuReading,
    MalformedPacket,
    SetMode,
    Vibrate,
    decode_command,
    decode_emg_packet,
    decode_imu_packet,
    encode_command,
    encode_emg_packet,
    encode_imu_packet,
    frame_write,
)

# --- commands ---

cmd = SetMode(emg_mode=2, imu_mode=1, classifier_mode=0)
wire = encode_command(cmd)
print("SetMode bytes:", wire.hex(" "))
print("decodes back:", decode_command(wire))

for c in (Vibrate(kind=2), DeepSleep()):
    assert decode_command(encode_command(c)) == c
print("Vibrate bytes:", encode_command(Vibrate(kind=2)).hex(" "))
print("DeepSleep bytes:", encode_command(DeepSleep()).hex(" "))

# --- EMG data packets ---

# One packet carries two consecutive 8-channel frames as 16 signed bytes.
# Timestamps are not on the wire; the decoder stamps them from arguments.
payload = struct.pack("<16b", *range(-8, 8))
first, second = decode_emg_packet(payload, first_timestamp_us=1_000_000)
print("\nfirst frame: ", first.timestamp_us, first.channels)
print("second frame:", second.timestamp_us, second.channels)
assert encode_emg_packet(first, second) == payload

# --- IMU data packets ---

# Ten int16s: quaternion/16384, acceleration/2048, gyro/16.
reading = ImuReading(quat=(1.0, 0.0, 0.0, 0.0), accel_g=(0.0, 0.0, 1.0),
                     gyro_dps=(0.0, 0.0, 90.0))
wire = encode_imu_packet(reading)
print("\nIMU bytes:", wire.hex(" "))
print("decodes back:", decode_imu_packet(wire))

# --- framing and reassembly ---

# Each frame is [length u16][attribute u16][payload]. The reader buffers
# arbitrary chunks, so packets split anywhere reassemble identically.
stream = (
    frame_write(ATTR_COMMAND, encode_command(Vibrate(kind=1)))
    + frame_write(ATTR_EMG, payload)
    + frame_write(ATTR_IMU, wire)
)
reader = FrameReader()
messages = []
for i in range(0, len(stream), 3):  # dribble three bytes at a time
    messages += reader.feed(stream[i : i + 3])
print("\nreassembled", len(messages), "frames from 3-byte chunks:")
for m in messages:
    print(f"  attr=0x{m.attribute_id:04x} payload={len(m.payload)} bytes")

# Malformed input raises typed errors instead of crashing or guessing.
try:
    decode_emg_packet(b"\x00" * 15)
except MalformedPacket as e:
    print("\nshort EMG packet rejected:", e)
