import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from radiomaps.antenna import AntennaPattern, Orientation, TxConfig
from radiomaps.grids import HeightGrid, Scene


def make_scene(buildings, vegetation=None, resolution=1.0, scene_id="test"):
    b = np.asarray(buildings, dtype=np.float32)
    v = np.zeros_like(b) if vegetation is None else np.asarray(vegetation, dtype=np.float32)
    rows, cols = b.shape
    return Scene(
        buildings=HeightGrid(cols, rows, resolution, b),
        vegetation=HeightGrid(cols, rows, resolution, v),
        scene_id=scene_id,
    )


def flat_scene(size=16, resolution=1.0):
    return make_scene(np.zeros((size, size), dtype=np.float32), resolution=resolution)


def random_towers(rng, rows=32, cols=32, count=6, h_max=28.0):
    """Random axis-aligned blocks, the standard fuzz scene."""
    values = np.zeros((rows, cols), dtype=np.float32)
    for _ in range(count):
        w = int(rng.integers(2, 8))
        h = int(rng.integers(2, 8))
        c0 = int(rng.integers(0, cols - w))
        r0 = int(rng.integers(0, rows - h))
        values[r0 : r0 + h, c0 : c0 + w] = rng.uniform(3.0, h_max)
    return values


def omni_tx(x, y, z, azimuth=0.0, tilt=0.0, peak_db=0.0, scene_id="test"):
    """A pattern whose cone covers every azimuth (fnbw >= 360)."""
    pattern = AntennaPattern(hpbw_deg=90.0, fnbw_deg=360.0, peak_db=peak_db)
    return TxConfig((x, y, z), Orientation(azimuth, tilt), pattern, scene_id)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --- acceptance reporting -------------------------------------------------
# test_acceptance.py tags each criterion with @criterion; the terminal summary
# then prints one PASS/FAIL line per criterion.

CRITERIA_ORDER: list = []
CRITERIA_DESC: dict = {}
CRITERIA_OUTCOME: dict = {}


def criterion(num, desc):
    def deco(fn):
        CRITERIA_ORDER.append(fn.__name__)
        CRITERIA_DESC[fn.__name__] = (num, desc)
        return fn

    return deco


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1].split("[")[0]
    if name not in CRITERIA_DESC:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        CRITERIA_OUTCOME[name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    seen = [n for n in CRITERIA_ORDER if n in CRITERIA_OUTCOME]
    if not seen:
        return
    terminalreporter.section("acceptance criteria")
    for name in seen:
        num, desc = CRITERIA_DESC[name]
        tag = "PASS" if CRITERIA_OUTCOME[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{tag}  criterion {num:>2}: {desc}")
