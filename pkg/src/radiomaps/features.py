"""CNN input feature synthesis for a placed transmitter.

Every synthesizer returns a FeatureStack of named channels with global affine
normalization bounds attached (configured constants, never per-sample min/max,
so values are comparable across a dataset and exactly invertible). normalize()
maps raw values into [-1, 1]; values outside the configured bounds raise.

Channel kinds drive dataset augmentation: "scalar" channels transform as plain
images, "azimuth"/"perp" flip sign under mirror ops, coordinate ramps and
tx-coordinate constants are re-derived from the transformed geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .antenna import TxConfig, gain_grid
from .errors import NormalizationRange
from .grids import Scene
from .transforms import is_flip, transform_grid, transform_tx
from .visibility import (
    DEFAULT_RX_HEIGHT,
    compute_los_maps,
    wrap_angle_deg,
)

KIND_SCALAR = "scalar"
KIND_AZIMUTH = "azimuth"
KIND_PERP = "perp"
KIND_COORD_X = "coord_x"
KIND_COORD_Y = "coord_y"
KIND_CONST_X = "const_x"
KIND_CONST_Y = "const_y"

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class FeatureBounds:
    """Global normalization bounds, shared across a dataset.

    height_m also serves as the visibility ceiling. The 3D distance bound
    includes the vertical span so corner pixels stay inside [-1, 1].
    """

    extent_m: float
    height_m: float = 32.0

    @property
    def dist2d_max(self) -> float:
        return math.sqrt(2.0) * self.extent_m

    @property
    def dist3d_max(self) -> float:
        return math.hypot(self.dist2d_max, self.height_m)


@dataclass(frozen=True)
class Channel:
    name: str
    values: np.ndarray
    lo: float
    hi: float
    kind: str = KIND_SCALAR


@dataclass(frozen=True)
class FeatureStack:
    channels: tuple[Channel, ...]
    normalized: bool = False

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.channels]

    def get(self, name: str) -> Channel:
        for c in self.channels:
            if c.name == name:
                return c
        raise KeyError(name)

    def concat(self, other: "FeatureStack") -> "FeatureStack":
        """Append channels from other, skipping names already present
        (overlapping variants define identical channels)."""
        if self.normalized != other.normalized:
            raise ValueError("cannot concat normalized with raw stacks")
        have = set(self.names)
        extra = tuple(c for c in other.channels if c.name not in have)
        return FeatureStack(self.channels + extra, self.normalized)

    def normalize(self) -> "FeatureStack":
        if self.normalized:
            return self
        out = []
        for c in self.channels:
            span = c.hi - c.lo
            if span <= 0:
                raise NormalizationRange(f"{c.name}: empty bound interval")
            v = np.asarray(c.values, dtype=np.float64)
            if v.min() < c.lo - _NORM_TOL or v.max() > c.hi + _NORM_TOL:
                raise NormalizationRange(
                    f"{c.name}: values [{v.min():.6g}, {v.max():.6g}] "
                    f"outside bounds [{c.lo:.6g}, {c.hi:.6g}]"
                )
            v = np.clip(v, c.lo, c.hi)
            out.append(replace(c, values=(v - c.lo) / span * 2.0 - 1.0))
        return FeatureStack(tuple(out), normalized=True)

    def denormalize(self) -> "FeatureStack":
        if not self.normalized:
            return self
        out = []
        for c in self.channels:
            v = (np.asarray(c.values, dtype=np.float64) + 1.0) / 2.0 * (c.hi - c.lo) + c.lo
            out.append(replace(c, values=v))
        return FeatureStack(tuple(out), normalized=False)


def default_bounds(scene: Scene, height_m: float = 32.0) -> FeatureBounds:
    return FeatureBounds(extent_m=scene.extent, height_m=height_m)


def _geometry(scene: Scene, tx: TxConfig):
    X, Y = scene.buildings.cell_centers()
    dx = X - tx.x
    dy = Y - tx.y
    dist2d = np.hypot(dx, dy)
    return X, Y, dx, dy, dist2d


def _relative_azimuth(dx, dy, tx: TxConfig) -> np.ndarray:
    az = np.degrees(np.arctan2(dy, dx))
    rel = wrap_angle_deg(az - tx.orientation.azimuth_deg)
    return np.where((dx == 0) & (dy == 0), 0.0, rel)


def basic_features(scene: Scene, tx: TxConfig, bounds: Optional[FeatureBounds] = None) -> FeatureStack:
    """tx marker, the two nDSMs and the pattern projected on floor and rooftops."""
    bounds = bounds or default_bounds(scene)
    grid = scene.buildings
    X, Y, dx, dy, _ = _geometry(scene, tx)
    onehot = np.zeros((grid.height, grid.width), dtype=np.float64)
    row, col = grid.cell_at(tx.x, tx.y)
    onehot[row, col] = tx.z
    b = grid.values.astype(np.float64)
    v = scene.vegetation.values.astype(np.float64)
    g_floor = gain_grid(tx.pattern, tx.orientation, dx, dy, np.zeros_like(dx) - tx.z)
    g_top = gain_grid(tx.pattern, tx.orientation, dx, dy, b - tx.z)
    H = bounds.height_m
    pat = tx.pattern
    return FeatureStack(
        (
            Channel("tx_onehot", onehot, 0.0, H),
            Channel("build_ndsm", b, 0.0, H),
            Channel("veg_ndsm", v, 0.0, H),
            Channel("gain_floor", g_floor, pat.floor_db, pat.peak_db),
            Channel("gain_top", g_top, pat.floor_db, pat.peak_db),
        )
    )


def grid_anchor_features(scene: Scene, tx: TxConfig, bounds: Optional[FeatureBounds] = None) -> FeatureStack:
    """Absolute-frame anchors: constant tx coordinates plus coordinate ramps."""
    bounds = bounds or default_bounds(scene)
    grid = scene.buildings
    X, Y = grid.cell_centers()
    shape = (grid.height, grid.width)
    E = bounds.extent_m
    H = bounds.height_m
    return FeatureStack(
        (
            Channel("tx_x", np.full(shape, tx.x), 0.0, E, KIND_CONST_X),
            Channel("tx_y", np.full(shape, tx.y), 0.0, E, KIND_CONST_Y),
            Channel("tx_z", np.full(shape, tx.z), 0.0, H),
            Channel("pixel_x", X.copy(), 0.0, E, KIND_COORD_X),
            Channel("pixel_y", Y.copy(), 0.0, E, KIND_COORD_Y),
        )
    )


def _relative_height_channels(scene: Scene, tx: TxConfig, bounds: FeatureBounds) -> tuple[Channel, ...]:
    H = bounds.height_m
    b = scene.buildings.values.astype(np.float64)
    v = scene.vegetation.values.astype(np.float64)
    return (
        Channel("build_rel", b - tx.z, -H, H),
        Channel("veg_rel", v - tx.z, -H, H),
        Channel("floor_rel", np.full(b.shape, 0.0 - tx.z), -H, H),
    )


def cylindrical_features(scene: Scene, tx: TxConfig, bounds: Optional[FeatureBounds] = None) -> FeatureStack:
    """Distance/azimuth in the tx frame plus tx-relative heights."""
    bounds = bounds or default_bounds(scene)
    _, _, dx, dy, dist2d = _geometry(scene, tx)
    rel_az = _relative_azimuth(dx, dy, tx)
    return FeatureStack(
        (
            Channel("dist2d", dist2d, 0.0, bounds.dist2d_max),
            Channel("azimuth", rel_az, -180.0, 180.0, KIND_AZIMUTH),
        )
        + _relative_height_channels(scene, tx, bounds)
    )


def euclidean_features(scene: Scene, tx: TxConfig, bounds: Optional[FeatureBounds] = None) -> FeatureStack:
    """Boresight-aligned planar offsets plus the same relative heights."""
    bounds = bounds or default_bounds(scene)
    _, _, dx, dy, _ = _geometry(scene, tx)
    az = math.radians(tx.orientation.azimuth_deg)
    ca, sa = math.cos(az), math.sin(az)
    along = ca * dx + sa * dy
    perp = -sa * dx + ca * dy
    m = bounds.dist2d_max
    return FeatureStack(
        (
            Channel("dx", along, -m, m),
            Channel("dy", perp, -m, m, KIND_PERP),
        )
        + _relative_height_channels(scene, tx, bounds)
    )


def spherical_features(scene: Scene, tx: TxConfig, bounds: Optional[FeatureBounds] = None) -> FeatureStack:
    """Azimuth/elevation/3D-distance triplets for ground, rooftops, canopy.

    Rooftop/canopy channels are undefined where the height raster is 0; those
    pixels hold the channel's lower bound (the -1 sentinel after scaling).
    """
    bounds = bounds or default_bounds(scene)
    _, _, dx, dy, dist2d = _geometry(scene, tx)
    b = scene.buildings.values.astype(np.float64)
    v = scene.vegetation.values.astype(np.float64)
    rel_az = _relative_azimuth(dx, dy, tx)
    elev_ground = np.degrees(np.arctan2(0.0 - tx.z, dist2d))
    d3_max = bounds.dist3d_max
    channels = [
        Channel("azimuth", rel_az, -180.0, 180.0, KIND_AZIMUTH),
        Channel("elev_ground", elev_ground, -90.0, 90.0),
        Channel("dist3d_ground", np.hypot(dist2d, tx.z), 0.0, d3_max),
    ]
    for name, hmap in (("build", b), ("veg", v)):
        defined = hmap > 0
        elev = np.where(defined, np.degrees(np.arctan2(hmap - tx.z, dist2d)), -90.0)
        d3 = np.where(defined, np.sqrt(dist2d**2 + (hmap - tx.z) ** 2), 0.0)
        channels.append(Channel(f"elev_{name}", elev, -90.0, 90.0))
        channels.append(Channel(f"dist3d_{name}", d3, 0.0, d3_max))
    return FeatureStack(tuple(channels))


DEFAULT_SLICE_HEIGHTS = tuple(float(h) for h in range(0, 32, 4))


def gain_slice_features(
    scene: Scene,
    tx: TxConfig,
    heights: Sequence[float] = DEFAULT_SLICE_HEIGHTS,
    bounds: Optional[FeatureBounds] = None,
) -> FeatureStack:
    """Pattern gain projected onto horizontal planes at the given heights."""
    if len(heights) == 0:
        raise ValueError("need at least one slice height")
    bounds = bounds or default_bounds(scene)
    _, _, dx, dy, _ = _geometry(scene, tx)
    pat = tx.pattern
    channels = []
    for h in heights:
        g = gain_grid(pat, tx.orientation, dx, dy, np.full_like(dx, float(h) - tx.z))
        channels.append(Channel(f"gain_h{float(h):g}", g, pat.floor_db, pat.peak_db))
    return FeatureStack(tuple(channels))


def fspl_features(
    scene: Scene,
    tx: TxConfig,
    variant: str = "floor",
    heights: Sequence[float] = DEFAULT_SLICE_HEIGHTS,
    bounds: Optional[FeatureBounds] = None,
) -> FeatureStack:
    """Gain minus 20*log10(3D distance), the distance floored at 1 m.

    variant: "floor" (ground plane), "floor_top" (plus rooftop surface) or
    "slices" (one channel per height, like gain slices).
    """
    bounds = bounds or default_bounds(scene)
    _, _, dx, dy, dist2d = _geometry(scene, tx)
    pat = tx.pattern
    lo = pat.floor_db - 20.0 * math.log10(max(bounds.dist3d_max, 1.0))
    hi = pat.peak_db

    def fspl_chan(name: str, dz: np.ndarray) -> Channel:
        g = gain_grid(pat, tx.orientation, dx, dy, dz)
        d3 = np.sqrt(dist2d**2 + dz**2)
        vals = g - 20.0 * np.log10(np.maximum(d3, 1.0))
        return Channel(name, vals, lo, hi)

    if variant == "floor":
        chans = [fspl_chan("fspl_floor", np.zeros_like(dx) - tx.z)]
    elif variant == "floor_top":
        b = scene.buildings.values.astype(np.float64)
        chans = [
            fspl_chan("fspl_floor", np.zeros_like(dx) - tx.z),
            fspl_chan("fspl_top", b - tx.z),
        ]
    elif variant == "slices":
        chans = [fspl_chan(f"fspl_h{float(h):g}", np.full_like(dx, float(h) - tx.z)) for h in heights]
    else:
        raise ValueError(f"unknown fspl variant {variant!r}")
    return FeatureStack(tuple(chans))


def los_features(
    scene: Scene,
    tx: TxConfig,
    variant: str = "binary",
    frame: str = "relative",
    rx_height: float = DEFAULT_RX_HEIGHT,
    bounds: Optional[FeatureBounds] = None,
) -> FeatureStack:
    """Visibility encodings.

    variant "binary": ground and rooftop LoS flags ({-1, +1} after scaling).
    variant "min_visible": the minimum-visible-height map, expressed per
    ``frame`` as "absolute" (meters), "relative" (minus tx height) or
    "spherical" (elevation angle of the minimum visible point).
    """
    bounds = bounds or default_bounds(scene)
    maps = compute_los_maps(scene, tx, rx_height=rx_height, ceiling=bounds.height_m)
    H = bounds.height_m
    if variant == "binary":
        return FeatureStack(
            (
                Channel("los_ground", maps.ground.astype(np.float64), 0.0, 1.0),
                Channel("los_top", maps.top.astype(np.float64), 0.0, 1.0),
            )
        )
    if variant != "min_visible":
        raise ValueError(f"unknown los variant {variant!r}")
    mv = maps.min_visible.astype(np.float64)
    if frame == "absolute":
        return FeatureStack((Channel("los_min_abs", mv, 0.0, H),))
    if frame == "relative":
        return FeatureStack((Channel("los_min_rel", mv - tx.z, -H, H),))
    if frame == "spherical":
        _, _, dx, dy, dist2d = _geometry(scene, tx)
        elev = np.degrees(np.arctan2(mv - tx.z, dist2d))
        return FeatureStack((Channel("los_min_sph", elev, -90.0, 90.0),))
    raise ValueError(f"unknown los frame {frame!r}")


def transform_stack(
    stack: FeatureStack, op: str, tx: TxConfig, resolution: float
) -> "tuple[FeatureStack, TxConfig]":
    """Apply a dihedral op to a stack so the result matches re-synthesis on the
    transformed scene/tx.

    Most channels are plain images and move with the pixels.  The exceptions
    are encoded in ``Channel.kind``: boresight-relative azimuth and the
    cross-boresight offset flip sign under mirror ops, and coordinate ramps /
    tx-coordinate constants are regenerated from the transformed geometry
    rather than shuffled as pixels.
    """
    if not stack.channels:
        raise ValueError("cannot transform an empty feature stack")
    raw = stack.denormalize() if stack.normalized else stack
    rows, cols = raw.channels[0].values.shape
    if rows != cols:
        raise ValueError("stack transforms require a square grid")
    extent = cols * resolution
    new_tx = transform_tx(tx, op, extent)
    flip = is_flip(op)

    xs = (np.arange(cols, dtype=np.float64) + 0.5) * resolution
    ys = (np.arange(rows, dtype=np.float64) + 0.5) * resolution
    ramp_x, ramp_y = np.meshgrid(xs, ys)

    out = []
    for ch in raw.channels:
        if ch.kind == KIND_COORD_X:
            vals = ramp_x
        elif ch.kind == KIND_COORD_Y:
            vals = ramp_y
        elif ch.kind == KIND_CONST_X:
            vals = np.full((rows, cols), new_tx.x, dtype=np.float64)
        elif ch.kind == KIND_CONST_Y:
            vals = np.full((rows, cols), new_tx.y, dtype=np.float64)
        else:
            vals = transform_grid(ch.values, op)
            if flip and ch.kind == KIND_AZIMUTH:
                vals = -vals
                vals[vals == -180.0] = 180.0
            elif flip and ch.kind == KIND_PERP:
                vals = -vals
        out.append(replace(ch, values=vals))
    moved = FeatureStack(tuple(out), normalized=False)
    if stack.normalized:
        moved = moved.normalize()
    return moved, new_tx


def synthesize(
    scene: Scene,
    tx: TxConfig,
    variants: Sequence[Union[str, dict]],
    bounds: Optional[FeatureBounds] = None,
    rx_height: float = DEFAULT_RX_HEIGHT,
) -> FeatureStack:
    """Build one raw stack from variant specs (strings or {"type": ...} dicts)."""
    bounds = bounds or default_bounds(scene)
    stack = FeatureStack(())
    for spec in variants:
        if isinstance(spec, str):
            spec = {"type": spec}
        kind = spec["type"]
        if kind == "basic":
            part = basic_features(scene, tx, bounds)
        elif kind == "grid_anchor":
            part = grid_anchor_features(scene, tx, bounds)
        elif kind == "cylindrical":
            part = cylindrical_features(scene, tx, bounds)
        elif kind == "euclidean":
            part = euclidean_features(scene, tx, bounds)
        elif kind == "spherical":
            part = spherical_features(scene, tx, bounds)
        elif kind == "gain_slices":
            part = gain_slice_features(scene, tx, spec.get("heights", DEFAULT_SLICE_HEIGHTS), bounds)
        elif kind == "fspl":
            part = fspl_features(
                scene, tx, spec.get("variant", "floor"), spec.get("heights", DEFAULT_SLICE_HEIGHTS), bounds
            )
        elif kind == "los":
            part = los_features(
                scene,
                tx,
                spec.get("variant", "binary"),
                spec.get("frame", "relative"),
                rx_height,
                bounds,
            )
        else:
            raise ValueError(f"unknown feature variant {kind!r}")
        stack = stack.concat(part)
    return stack
