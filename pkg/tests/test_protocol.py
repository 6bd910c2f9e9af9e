"""Wire codec: commands, EMG/IMU notifications, stream framing."""
import json
import random
from pathlib import Path

import pytest

import oracles
from emgrehab import (
    ATTR_EMG,
    SAMPLE_PERIOD_US,
    DeepSleep,
    EmgFrame,
    FrameReader,
    ImuReading,
    InvalidCommand,
    MalformedFrame,
    MalformedPacket,
    ProtocolError,
    SetMode,
    UnknownCommand,
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
from emgrehab.protocol import (
    CLASSIFIER_MODES,
    EMG_MODES,
    IMU_MODES,
    MAX_FRAME_PAYLOAD,
)

GOLDEN = json.loads(
    (Path(__file__).parent / "fixtures" / "protocol_golden.json").read_text()
)


def parse_all(data):
    """Fresh-reader whole-buffer reference parse."""
    return FrameReader().feed(data)


# --- golden bytes ---

@pytest.mark.parametrize("case", GOLDEN["commands"], ids=lambda c: c["hex"])
def test_golden_command_bytes(case):
    data = bytes.fromhex(case["hex"])
    cmd = decode_command(data)
    if case["type"] == "set_mode":
        assert cmd == SetMode(case["emg_mode"], case["imu_mode"],
                              case["classifier_mode"])
    elif case["type"] == "vibrate":
        assert cmd == Vibrate(case["kind"])
    else:
        assert cmd == DeepSleep()
    assert encode_command(cmd) == data


@pytest.mark.parametrize("case", GOLDEN["command_errors"],
                         ids=lambda c: c["hex"] or "empty")
def test_golden_command_errors(case):
    wanted = {"malformed": MalformedPacket, "unknown": UnknownCommand}
    with pytest.raises(wanted[case["error"]]):
        decode_command(bytes.fromhex(case["hex"]))


@pytest.mark.parametrize("case", GOLDEN["emg_packets"], ids=lambda c: c["hex"][:8])
def test_golden_emg_packets(case):
    data = bytes.fromhex(case["hex"])
    first, second = decode_emg_packet(data, first_timestamp_us=1000)
    assert list(first.channels) == case["first"]
    assert list(second.channels) == case["second"]
    assert first.timestamp_us == 1000
    assert second.timestamp_us == 1000 + SAMPLE_PERIOD_US
    assert encode_emg_packet(first, second) == data


@pytest.mark.parametrize("case", GOLDEN["imu_packets"], ids=lambda c: c["hex"][:8])
def test_golden_imu_packets(case):
    data = bytes.fromhex(case["hex"])
    reading = decode_imu_packet(data)
    assert list(reading.quat) == case["quat"]
    assert list(reading.accel_g) == case["accel_g"]
    assert list(reading.gyro_dps) == case["gyro_dps"]
    assert encode_imu_packet(reading) == data


@pytest.mark.parametrize("case", GOLDEN["classifier_events"], ids=lambda c: c["hex"])
def test_golden_classifier_events(case):
    ev = decode_classifier_event(bytes.fromhex(case["hex"]))
    assert ev.event_type == case["event_type"]
    assert ev.payload == bytes.fromhex(case["payload_hex"])


@pytest.mark.parametrize("case", GOLDEN["frames"], ids=lambda c: c["hex"][:10])
def test_golden_frames(case):
    data = bytes.fromhex(case["hex"])
    reader = FrameReader()
    messages = reader.feed(data)
    assert [(m.attribute_id, m.payload) for m in messages] == [
        (m["attribute_id"], bytes.fromhex(m["payload_hex"]))
        for m in case["messages"]
    ]
    assert reader.pending() == case["leftover"]


@pytest.mark.parametrize("case", GOLDEN["frame_errors"], ids=lambda c: c["hex"])
def test_golden_frame_errors(case):
    with pytest.raises(MalformedFrame):
        FrameReader().feed(bytes.fromhex(case["hex"]))


def test_golden_fixture_agrees_with_hand_oracle():
    # the fixture itself is cross-checked against the by-hand decoders
    for case in GOLDEN["commands"]:
        got = oracles.decode_command(bytes.fromhex(case["hex"]))
        assert got[0] == case["type"]
    for case in GOLDEN["command_errors"]:
        assert oracles.decode_command(bytes.fromhex(case["hex"])) == (
            "error", case["error"]
        )
    for case in GOLDEN["emg_packets"]:
        first, second = oracles.decode_emg(bytes.fromhex(case["hex"]))
        assert list(first) == case["first"]
        assert list(second) == case["second"]
    for case in GOLDEN["imu_packets"]:
        quat, accel, gyro = oracles.decode_imu(bytes.fromhex(case["hex"]))
        assert list(quat) == case["quat"]
        assert list(accel) == case["accel_g"]
        assert list(gyro) == case["gyro_dps"]
    for case in GOLDEN["frames"]:
        msgs, leftover = oracles.parse_frames(bytes.fromhex(case["hex"]))
        assert msgs == [
            (m["attribute_id"], bytes.fromhex(m["payload_hex"]))
            for m in case["messages"]
        ]
        assert leftover == case["leftover"]


# --- encode-side validation ---

def test_encode_command_rejects_out_of_range_fields():
    with pytest.raises(InvalidCommand):
        encode_command(SetMode(1, 0, 0))
    with pytest.raises(InvalidCommand):
        encode_command(SetMode(2, 2, 0))
    with pytest.raises(InvalidCommand):
        encode_command(SetMode(2, 1, 2))
    with pytest.raises(InvalidCommand):
        encode_command(Vibrate(0))
    with pytest.raises(InvalidCommand):
        encode_command(Vibrate(4))
    with pytest.raises(InvalidCommand):
        encode_command("vibrate please")


def test_emg_packet_length_check():
    with pytest.raises(MalformedPacket):
        decode_emg_packet(b"\x00" * 15)
    with pytest.raises(MalformedPacket):
        decode_emg_packet(b"\x00" * 17)


def test_imu_packet_length_check():
    with pytest.raises(MalformedPacket):
        decode_imu_packet(b"\x00" * 19)
    with pytest.raises(MalformedPacket):
        decode_imu_packet(b"\x00" * 21)


def test_classifier_event_needs_a_byte():
    with pytest.raises(MalformedPacket):
        decode_classifier_event(b"")


def test_frame_write_validation():
    with pytest.raises(MalformedFrame):
        frame_write(0x10000, b"")
    with pytest.raises(MalformedFrame):
        frame_write(-1, b"")
    with pytest.raises(MalformedFrame):
        frame_write(1, b"\x00" * (MAX_FRAME_PAYLOAD + 1))
    # the maximum payload itself is legal
    frame = frame_write(1, b"\x00" * MAX_FRAME_PAYLOAD)
    assert len(frame) == 4 + MAX_FRAME_PAYLOAD


def test_imu_encode_rounds_to_nearest_step():
    # 0.4 g is not representable; nearest 1/2048 step survives a round trip
    reading = ImuReading(quat=(0, 0, 0, 0), accel_g=(0.4, 0, 0), gyro_dps=(0, 0, 0))
    again = decode_imu_packet(encode_imu_packet(reading))
    assert again.accel_g[0] == pytest.approx(0.4, abs=1 / 4096)
    assert again == decode_imu_packet(encode_imu_packet(again))  # fixed point


# --- incremental frame reassembly ---

def random_frame_sequence(rng, n_messages):
    msgs = []
    buf = bytearray()
    for _ in range(n_messages):
        attr = rng.randrange(0, 0x10000)
        payload = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 60)))
        msgs.append((attr, payload))
        buf += frame_write(attr, payload)
    return msgs, bytes(buf)


def test_incomplete_frame_waits_for_more_bytes():
    reader = FrameReader()
    whole = frame_write(ATTR_EMG, bytes(range(16)))
    assert reader.feed(whole[:9]) == []
    assert reader.pending() == 9
    out = reader.feed(whole[9:])
    assert len(out) == 1
    assert out[0].payload == bytes(range(16))
    assert reader.pending() == 0


def test_split_invariance_on_random_sequences():
    rng = random.Random(301)
    for _ in range(20):
        msgs, buf = random_frame_sequence(rng, rng.randrange(1, 8))
        reference = parse_all(buf)
        assert [(m.attribute_id, m.payload) for m in reference] == msgs

        one_at_a_time = FrameReader()
        trickled = []
        for i in range(len(buf)):
            trickled.extend(one_at_a_time.feed(buf[i:i + 1]))
        assert trickled == reference

        for split in range(1, len(buf)):
            reader = FrameReader()
            got = reader.feed(buf[:split]) + reader.feed(buf[split:])
            assert got == reference


def test_frame_read_helper_delegates_to_reader():
    reader = FrameReader()
    out = frame_read(reader, frame_write(3, b"xy"))
    assert out == [parse_all(frame_write(3, b"xy"))[0]]


def test_reader_reset_clears_partial_state():
    reader = FrameReader()
    reader.feed(b"\x10\x00\x01")
    assert reader.pending() == 3
    reader.reset()
    assert reader.pending() == 0
    assert reader.feed(frame_write(2, b"ok"))[0].payload == b"ok"


# --- randomized round-trips and fuzzing (module-scale; the acceptance
# suite reruns these at full volume) ---

def random_command(rng):
    pick = rng.randrange(3)
    if pick == 0:
        return SetMode(rng.choice(EMG_MODES), rng.choice(IMU_MODES),
                       rng.choice(CLASSIFIER_MODES))
    if pick == 1:
        return Vibrate(rng.choice((1, 2, 3)))
    return DeepSleep()


def test_command_round_trip_randomized():
    rng = random.Random(302)
    for _ in range(2000):
        cmd = random_command(rng)
        assert decode_command(encode_command(cmd)) == cmd


def test_emg_round_trip_randomized():
    rng = random.Random(303)
    for _ in range(2000):
        raw = bytes(rng.randrange(256) for _ in range(16))
        first, second = decode_emg_packet(raw)
        assert encode_emg_packet(first, second) == raw
        want_first, want_second = oracles.decode_emg(raw)
        assert first.channels == want_first
        assert second.channels == want_second


def test_imu_round_trip_randomized():
    rng = random.Random(304)
    for _ in range(2000):
        raw = bytes(rng.randrange(256) for _ in range(20))
        reading = decode_imu_packet(raw)
        assert encode_imu_packet(reading) == raw
        quat, accel, gyro = oracles.decode_imu(raw)
        assert reading.quat == quat
        assert reading.accel_g == accel
        assert reading.gyro_dps == gyro


def test_five_random_bytes_never_crash_the_command_decoder():
    rng = random.Random(305)
    for _ in range(5000):
        data = bytes(rng.randrange(256) for _ in range(5))
        try:
            decode_command(data)
        except (UnknownCommand, MalformedPacket):
            pass  # the only acceptable outcomes


def test_decoders_are_total_on_arbitrary_bytes():
    rng = random.Random(306)
    decoders = [decode_command, decode_emg_packet, decode_imu_packet,
                decode_classifier_event]
    for i in range(4000):
        data = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 25)))
        try:
            decoders[i % len(decoders)](data)
        except ProtocolError:
            pass
