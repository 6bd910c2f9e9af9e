import numpy as np
import pytest

from emgrehab import (
    CalibrationBuffers,
    EmgSynthModel,
    FeatureConfig,
    save_db,
    slide_windows,
    synth_frames,
)
from emgrehab.gestures import TEMPLATE_LABELS
from emgrehab.service import Service, ServiceConfig

# Seed roots: calibration streams and "fresh day" evaluation streams must
# never share a generator state.
CAL_SEED = 7
FRESH_SEED = 11

CAL_FRAMES = 800  # 4 s per gesture at 200 Hz -> 77 windows each


def label_rng(root, label):
    return np.random.default_rng([root, int(label), 1])


@pytest.fixture(scope="session")
def feature_config():
    return FeatureConfig()


@pytest.fixture(scope="session")
def calibrated_db(feature_config):
    """Templates for all five gestures, built from simulator output."""
    model = EmgSynthModel()
    buffers = CalibrationBuffers(feature_config)
    for label in TEMPLATE_LABELS:
        frames = synth_frames(model, label, CAL_FRAMES, label_rng(CAL_SEED, label))
        windows = slide_windows(
            frames, feature_config.window_ms, feature_config.step_ms
        )
        buffers.record(label, windows)
    return buffers.finalize()


@pytest.fixture(scope="session")
def db_file(calibrated_db, tmp_path_factory):
    path = tmp_path_factory.mktemp("db") / "templates.json"
    save_db(calibrated_db, path)
    return path


@pytest.fixture
def service_factory(db_file, tmp_path):
    """Builds started services on ephemeral ports; stops them on teardown."""
    services = []

    def make(db_path=None, **overrides):
        settings = dict(
            transport="sim",
            db_path=str(db_path or db_file),
            listen="127.0.0.1:0",
            clock="x0",
            log_dir=str(tmp_path / "sessions"),
        )
        settings.update(overrides)
        svc = Service(ServiceConfig(**settings))
        svc.start()
        services.append(svc)
        return svc

    yield make
    for svc in services:
        svc.stop()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    rows = []
    for key, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(key, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if key == "passed" and getattr(rep, "when", "call") != "call":
                continue
            name = nodeid.split("::")[-1]
            if name.startswith("test_"):
                name = name[5:]
            rows.append((name, verdict))
    if not rows:
        return
    seen = {}
    for name, verdict in rows:  # a FAIL in any stage wins over PASS
        if seen.get(name) != "FAIL":
            seen[name] = verdict
    terminalreporter.write_line("")
    for name, verdict in seen.items():
        terminalreporter.write_line(f"[acceptance] {name}: {verdict}")
