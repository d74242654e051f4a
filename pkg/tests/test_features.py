import math

import numpy as np
import pytest

from radiomaps.antenna import AntennaPattern, Orientation, TxConfig, gain_grid
from radiomaps.errors import NormalizationRange
from radiomaps.features import (
    Channel,
    FeatureBounds,
    FeatureStack,
    basic_features,
    cylindrical_features,
    default_bounds,
    euclidean_features,
    fspl_features,
    gain_slice_features,
    grid_anchor_features,
    los_features,
    spherical_features,
    synthesize,
    transform_stack,
)
from radiomaps.transforms import AUG_OPS, transform_scene, transform_tx
from radiomaps.visibility import compute_los_maps

from conftest import make_scene, random_towers


@pytest.fixture
def scene(rng):
    b = random_towers(rng, rows=12, cols=12, count=5)
    v = np.zeros_like(b)
    v[1:4, 8:11] = 4.0
    return make_scene(b, v)


@pytest.fixture
def tx():
    pat = AntennaPattern(45.0, 120.0, 8.0)
    return TxConfig((3.5, 6.5, 21.0), Orientation(30.0, -10.0), pat, "s")


def test_bounds_geometry():
    fb = FeatureBounds(extent_m=64.0, height_m=32.0)
    assert fb.dist2d_max == pytest.approx(64.0 * math.sqrt(2.0))
    assert fb.dist3d_max == pytest.approx(math.hypot(64.0 * math.sqrt(2.0), 32.0))


class TestNormalization:
    def test_round_trip(self, scene, tx):
        raw = synthesize(scene, tx, ["basic", "cylindrical"])
        norm = raw.normalize()
        assert norm.normalized
        for c in norm.channels:
            assert c.values.min() >= -1.0 and c.values.max() <= 1.0
        back = norm.denormalize()
        for c0, c1 in zip(raw.channels, back.channels):
            assert c0.name == c1.name
            assert np.allclose(c0.values, c1.values, atol=1e-9)

    def test_idempotent(self, scene, tx):
        norm = basic_features(scene, tx).normalize()
        assert norm.normalize() is norm

    def test_out_of_bounds_raises(self):
        ch = Channel("bad", np.array([[2.0]]), 0.0, 1.0)
        with pytest.raises(NormalizationRange, match="bad"):
            FeatureStack((ch,)).normalize()

    def test_empty_interval_raises(self):
        ch = Channel("flat", np.array([[0.5]]), 1.0, 1.0)
        with pytest.raises(NormalizationRange):
            FeatureStack((ch,)).normalize()

    def test_mixed_concat_rejected(self, scene, tx):
        raw = basic_features(scene, tx)
        with pytest.raises(ValueError):
            raw.concat(raw.normalize())


class TestBasic:
    def test_channel_names(self, scene, tx):
        st = basic_features(scene, tx)
        assert st.names == ["tx_onehot", "build_ndsm", "veg_ndsm", "gain_floor", "gain_top"]

    def test_tx_onehot(self, scene, tx):
        st = basic_features(scene, tx)
        oh = st.get("tx_onehot").values
        r, c = scene.buildings.cell_at(tx.x, tx.y)
        assert oh[r, c] == tx.z
        assert np.count_nonzero(oh) == 1

    def test_height_channels_copy_rasters(self, scene, tx):
        st = basic_features(scene, tx)
        assert np.array_equal(st.get("build_ndsm").values, scene.buildings.values)
        assert np.array_equal(st.get("veg_ndsm").values, scene.vegetation.values)

    def test_gain_channels(self, scene, tx):
        st = basic_features(scene, tx)
        X, Y = scene.buildings.cell_centers()
        dx, dy = X - tx.x, Y - tx.y
        g = gain_grid(tx.pattern, tx.orientation, dx, dy, np.zeros_like(dx) - tx.z)
        assert np.array_equal(st.get("gain_floor").values, g)
        gt = gain_grid(
            tx.pattern, tx.orientation, dx, dy, scene.buildings.values - tx.z
        )
        assert np.array_equal(st.get("gain_top").values, gt)
        ch = st.get("gain_floor")
        assert (ch.lo, ch.hi) == (tx.pattern.floor_db, tx.pattern.peak_db)


class TestGridAnchor:
    def test_values_and_kinds(self, scene, tx):
        st = grid_anchor_features(scene, tx)
        assert np.all(st.get("tx_x").values == tx.x)
        assert np.all(st.get("tx_y").values == tx.y)
        assert np.all(st.get("tx_z").values == tx.z)
        X, Y = scene.buildings.cell_centers()
        assert np.array_equal(st.get("pixel_x").values, X)
        assert np.array_equal(st.get("pixel_y").values, Y)
        kinds = {c.name: c.kind for c in st.channels}
        assert kinds["tx_x"] == "const_x" and kinds["pixel_y"] == "coord_y"


class TestTxFrames:
    def test_cylindrical_distance_and_azimuth(self, scene, tx):
        st = cylindrical_features(scene, tx)
        d = st.get("dist2d").values
        assert d[6, 3] == 0.0  # the tx cell
        assert d[6, 5] == pytest.approx(2.0)
        az = st.get("azimuth").values
        assert az[6, 3] == 0.0
        # pixel due +x of tx: absolute azimuth 0, relative -30
        assert az[6, 5] == pytest.approx(-30.0)
        assert st.get("azimuth").kind == "azimuth"

    def test_euclidean_rotation(self, scene, tx):
        st = euclidean_features(scene, tx)
        X, Y = scene.buildings.cell_centers()
        dx, dy = X - tx.x, Y - tx.y
        a = math.radians(30.0)
        assert np.allclose(
            st.get("dx").values, math.cos(a) * dx + math.sin(a) * dy, atol=1e-12
        )
        assert np.allclose(
            st.get("dy").values, -math.sin(a) * dx + math.cos(a) * dy, atol=1e-12
        )
        assert st.get("dy").kind == "perp"

    def test_relative_heights(self, scene, tx):
        st = cylindrical_features(scene, tx)
        assert np.array_equal(
            st.get("build_rel").values, scene.buildings.values - tx.z
        )
        assert np.all(st.get("floor_rel").values == -tx.z)


class TestSpherical:
    def test_sentinels_where_undefined(self, scene, tx):
        st = spherical_features(scene, tx)
        empty = scene.buildings.values == 0
        assert np.all(st.get("elev_build").values[empty] == -90.0)
        assert np.all(st.get("dist3d_build").values[empty] == 0.0)

    def test_ground_triplet(self, scene, tx):
        st = spherical_features(scene, tx)
        X, Y = scene.buildings.cell_centers()
        d2 = np.hypot(X - tx.x, Y - tx.y)
        assert np.allclose(
            st.get("dist3d_ground").values, np.hypot(d2, tx.z), atol=1e-12
        )
        assert np.all(st.get("elev_ground").values < 0.0)  # tx above ground


class TestGainSlices:
    def test_channel_per_height(self, scene, tx):
        st = gain_slice_features(scene, tx, heights=(0.0, 8.0))
        assert st.names == ["gain_h0", "gain_h8"]
        X, Y = scene.buildings.cell_centers()
        dx, dy = X - tx.x, Y - tx.y
        g8 = gain_grid(tx.pattern, tx.orientation, dx, dy, np.full_like(dx, 8.0 - tx.z))
        assert np.array_equal(st.get("gain_h8").values, g8)

    def test_empty_heights_rejected(self, scene, tx):
        with pytest.raises(ValueError):
            gain_slice_features(scene, tx, heights=())


class TestFsplFeatures:
    def test_floor_formula(self, scene, tx):
        st = fspl_features(scene, tx, variant="floor")
        assert st.names == ["fspl_floor"]
        X, Y = scene.buildings.cell_centers()
        dx, dy = X - tx.x, Y - tx.y
        g = gain_grid(tx.pattern, tx.orientation, dx, dy, np.zeros_like(dx) - tx.z)
        d3 = np.sqrt(dx**2 + dy**2 + tx.z**2)
        want = g - 20.0 * np.log10(np.maximum(d3, 1.0))
        assert np.allclose(st.get("fspl_floor").values, want, atol=1e-12)

    def test_variants(self, scene, tx):
        assert fspl_features(scene, tx, variant="floor_top").names == [
            "fspl_floor",
            "fspl_top",
        ]
        st = fspl_features(scene, tx, variant="slices", heights=(0.0, 16.0))
        assert st.names == ["fspl_h0", "fspl_h16"]
        with pytest.raises(ValueError, match="variant"):
            fspl_features(scene, tx, variant="nope")

    def test_bounds_contain_values(self, scene, tx):
        st = fspl_features(scene, tx, variant="floor_top")
        st.normalize()  # would raise if any value escaped the bounds


class TestLosFeatures:
    def test_binary_matches_visibility(self, scene, tx):
        st = los_features(scene, tx, variant="binary")
        maps = compute_los_maps(scene, tx, rx_height=1.5, ceiling=32.0)
        assert np.array_equal(st.get("los_ground").values, maps.ground.astype(float))
        assert np.array_equal(st.get("los_top").values, maps.top.astype(float))

    def test_min_visible_frames(self, scene, tx):
        maps = compute_los_maps(scene, tx, rx_height=1.5, ceiling=32.0)
        mv = maps.min_visible.astype(np.float64)
        st = los_features(scene, tx, variant="min_visible", frame="absolute")
        assert np.array_equal(st.get("los_min_abs").values, mv)
        st = los_features(scene, tx, variant="min_visible", frame="relative")
        assert np.array_equal(st.get("los_min_rel").values, mv - tx.z)
        st = los_features(scene, tx, variant="min_visible", frame="spherical")
        X, Y = scene.buildings.cell_centers()
        d2 = np.hypot(X - tx.x, Y - tx.y)
        want = np.degrees(np.arctan2(mv - tx.z, d2))
        assert np.allclose(st.get("los_min_sph").values, want, atol=1e-12)

    def test_unknown_variant_and_frame(self, scene, tx):
        with pytest.raises(ValueError):
            los_features(scene, tx, variant="nope")
        with pytest.raises(ValueError):
            los_features(scene, tx, variant="min_visible", frame="nope")


class TestSynthesize:
    def test_overlapping_variants_dedupe(self, scene, tx):
        st = synthesize(scene, tx, ["cylindrical", "spherical"])
        # both define "azimuth"; the first definition wins and is kept once
        assert st.names.count("azimuth") == 1
        cyl = cylindrical_features(scene, tx)
        sph = spherical_features(scene, tx)
        assert set(st.names) == set(cyl.names) | set(sph.names)

    def test_dict_specs(self, scene, tx):
        st = synthesize(
            scene,
            tx,
            ["basic", {"type": "los", "variant": "min_visible", "frame": "absolute"}],
        )
        assert "los_min_abs" in st.names

    def test_unknown_variant(self, scene, tx):
        with pytest.raises(ValueError, match="unknown feature variant"):
            synthesize(scene, tx, ["wavelets"])


ALL_VARIANTS = [
    "basic",
    "grid_anchor",
    "cylindrical",
    "euclidean",
    "spherical",
    "gain_slices",
    {"type": "fspl", "variant": "floor_top"},
    {"type": "los", "variant": "binary"},
    {"type": "los", "variant": "min_visible", "frame": "relative"},
]


class TestTransformStack:
    def test_matches_resynthesis(self, scene, tx):
        bounds = default_bounds(scene)
        base = synthesize(scene, tx, ALL_VARIANTS, bounds)
        for op in AUG_OPS:
            moved, moved_tx = transform_stack(base, op, tx, scene.buildings.resolution)
            scene2 = transform_scene(scene, op)
            tx2 = transform_tx(tx, op, scene.extent)
            assert moved_tx.position == pytest.approx(tx2.position)
            fresh = synthesize(scene2, tx2, ALL_VARIANTS, bounds)
            assert moved.names == fresh.names
            for name in fresh.names:
                a = moved.get(name).values
                b = fresh.get(name).values
                assert np.allclose(a, b, atol=1e-9), (op, name)

    def test_normalized_round_trip(self, scene, tx):
        base = synthesize(scene, tx, ["basic", "cylindrical"]).normalize()
        moved, _ = transform_stack(base, "rot90", tx, scene.buildings.resolution)
        assert moved.normalized
        back, _ = transform_stack(
            moved, "rot270", transform_tx(tx, "rot90", scene.extent), 1.0
        )
        for c0, c1 in zip(base.channels, back.channels):
            assert np.allclose(c0.values, c1.values, atol=1e-9), c0.name

    def test_errors(self, scene, tx):
        with pytest.raises(ValueError, match="empty"):
            transform_stack(FeatureStack(()), "rot90", tx, 1.0)
        rect = FeatureStack((Channel("c", np.zeros((2, 3)), 0.0, 1.0),))
        with pytest.raises(ValueError, match="square"):
            transform_stack(rect, "rot90", tx, 1.0)
