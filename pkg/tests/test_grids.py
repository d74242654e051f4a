import json

import numpy as np
import pytest

from radiomaps.errors import (
    DimensionMismatch,
    MalformedRaster,
    MissingFile,
    NegativeHeight,
    OutOfBounds,
)
from radiomaps.grids import (
    HeightGrid,
    Scene,
    extract_wall_faces,
    load_scene,
    read_raster,
    save_scene,
    write_raster,
    zero_grid,
)

from conftest import make_scene


def test_raster_round_trip_bits(tmp_path, rng):
    values = rng.uniform(-5, 40, size=(7, 11)).astype(np.float32)
    path = write_raster(tmp_path / "a.f32", values, 2.5)
    back, res = read_raster(path)
    assert res == 2.5
    assert back.dtype == np.float32
    assert back.tobytes() == values.tobytes()


def test_raster_sidecar_contents(tmp_path):
    write_raster(tmp_path / "g.f32", np.zeros((3, 4), np.float32), 1.0)
    meta = json.loads((tmp_path / "g.json").read_text())
    assert meta == {"width": 4, "height": 3, "resolution_m": 1.0, "dtype": "f32le"}


def test_read_raster_missing_payload(tmp_path):
    (tmp_path / "x.json").write_text(
        json.dumps({"width": 2, "height": 2, "resolution_m": 1.0, "dtype": "f32le"})
    )
    with pytest.raises(MissingFile):
        read_raster(tmp_path / "x.f32")


def test_read_raster_truncated_payload(tmp_path):
    path = write_raster(tmp_path / "t.f32", np.zeros((4, 4), np.float32), 1.0)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(MalformedRaster):
        read_raster(path)


def test_read_raster_wrong_dtype_tag(tmp_path):
    path = write_raster(tmp_path / "d.f32", np.zeros((2, 2), np.float32), 1.0)
    side = json.loads((tmp_path / "d.json").read_text())
    side["dtype"] = "f64le"
    (tmp_path / "d.json").write_text(json.dumps(side))
    with pytest.raises(MalformedRaster):
        read_raster(path)


def test_height_grid_validation():
    with pytest.raises(DimensionMismatch):
        HeightGrid(4, 3, 1.0, np.zeros((4, 4), np.float32))
    with pytest.raises(NegativeHeight):
        HeightGrid(2, 2, 1.0, np.array([[0, 0], [0, -1]], dtype=np.float32))
    with pytest.raises(NegativeHeight):
        HeightGrid(2, 2, 1.0, np.array([[0, 0], [0, np.nan]], dtype=np.float32))


def test_cell_lookup_and_bounds():
    g = zero_grid(4, 3, 2.0)
    assert g.extent_x == 8.0 and g.extent_y == 6.0
    assert g.cell_at(0.0, 0.0) == (0, 0)
    assert g.cell_at(7.999, 5.999) == (2, 3)
    assert g.cell_at(2.0, 2.0) == (1, 1)  # boundary belongs to the upper cell
    with pytest.raises(OutOfBounds):
        g.cell_at(8.0, 0.0)
    with pytest.raises(OutOfBounds):
        g.cell_at(-0.001, 0.0)


def test_grid_values_locked():
    g = zero_grid(2, 2)
    with pytest.raises(ValueError):
        g.values[0, 0] = 1.0


def test_scene_requires_matching_grids():
    with pytest.raises(DimensionMismatch):
        Scene(zero_grid(4, 4), zero_grid(5, 4))


def test_scene_save_load_round_trip(tmp_path, rng):
    b = rng.uniform(0, 20, (8, 8)).astype(np.float32)
    v = rng.uniform(0, 5, (8, 8)).astype(np.float32)
    aerial = rng.integers(0, 255, (8, 8, 4), dtype=np.uint8)
    scene = Scene(HeightGrid(8, 8, 1.0, b), HeightGrid(8, 8, 1.0, v), aerial, "sc")
    save_scene(scene, tmp_path / "sc")
    back = load_scene(tmp_path / "sc", scene_id="sc")
    assert back.buildings.values.tobytes() == b.tobytes()
    assert back.vegetation.values.tobytes() == v.tobytes()
    assert np.array_equal(back.aerial, aerial)
    assert back.scene_id == "sc"


class TestWallFaces:
    def test_single_cell_tower_has_four_faces(self):
        b = np.zeros((3, 3), np.float32)
        b[1, 1] = 10.0
        faces = extract_wall_faces(make_scene(b))
        assert len(faces) == 4
        for f in faces:
            assert (f.z_lo, f.z_hi) == (0.0, 10.0)
            assert f.area == 10.0
        # one face per side of cell (1,1): x-planes at 1 and 2, y-planes at 1 and 2
        planes = sorted((f.axis, f.offset) for f in faces)
        assert planes == [("x", 1.0), ("x", 2.0), ("y", 1.0), ("y", 2.0)]

    def test_normals_point_at_lower_side(self):
        b = np.zeros((1, 2), np.float32)
        b[0, 1] = 5.0  # tall cell on the right
        faces = [
            f for f in extract_wall_faces(make_scene(b)) if f.axis == "x" and f.offset == 1.0
        ]
        assert len(faces) == 1
        # open side is at smaller x, so the normal points along -x
        assert faces[0].normal == -1

    def test_border_towers_emit_border_faces(self):
        b = np.full((2, 2), 7.0, dtype=np.float32)
        faces = extract_wall_faces(make_scene(b))
        # grid fully built: only the 8 outer boundary segments differ from the pad
        assert len(faces) == 8
        assert all(f.z_hi == 7.0 for f in faces)

    def test_step_between_towers(self):
        b = np.array([[4.0, 9.0]], dtype=np.float32)
        inner = [f for f in extract_wall_faces(make_scene(b)) if f.offset == 1.0 and f.axis == "x"]
        assert len(inner) == 1
        assert inner[0].z_lo == 4.0 and inner[0].z_hi == 9.0
        assert inner[0].normal == -1
