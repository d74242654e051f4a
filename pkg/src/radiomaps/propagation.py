"""Ray-traced path loss: direct, specular reflections, knife-edge diffraction.

The world model is the building column set of the scene plus the ground plane
z = 0. Specular reflections use the image method over wall rectangles and the
ground (up to two bounces, flat per-bounce loss); diffraction uses a single
dominant knife edge in the vertical plane through tx and rx, scored with the
ITU-style approximation

    J(nu) = 6.9 + 20*log10(sqrt((nu - 0.1)^2 + 1) + nu - 0.1)   for nu > -0.78

Received powers are path-loss values in dB relative to the transmit power;
multiple paths combine non-coherently (watt-domain sum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .antenna import TxConfig, gain_at
from .errors import EmptyPathSet, TxOutOfBounds
from .grids import Scene, VerticalFace, extract_wall_faces
from .visibility import ray_intervals

RX_HEIGHT = 1.5

Point3 = tuple[float, float, float]


@dataclass(frozen=True)
class SimParams:
    """Propagation knobs. Transmission through walls is not modeled."""

    frequency_hz: float = 3.7e9
    max_reflections: int = 2
    max_diffractions: int = 1
    max_transmissions: int = 0
    noise_floor_db: float = -127.0
    max_pl_db: float = -50.0
    vegetation_alpha_db_per_m: float = 1.0
    reflection_loss_db: float = 6.0

    def __post_init__(self):
        if self.frequency_hz <= 0:
            raise ValueError("frequency must be positive")
        if self.max_reflections not in (0, 1, 2):
            raise ValueError("max_reflections must be 0, 1 or 2")
        if self.max_diffractions not in (0, 1):
            raise ValueError("max_diffractions must be 0 or 1")
        if self.max_transmissions != 0:
            raise ValueError("transmission through walls is not modeled")
        if not (self.noise_floor_db < self.max_pl_db < 0):
            raise ValueError("need noise_floor < max_pl < 0")
        if self.vegetation_alpha_db_per_m < 0 or self.reflection_loss_db < 0:
            raise ValueError("losses must be non-negative")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    def to_dict(self) -> dict:
        return {
            "frequency_hz": self.frequency_hz,
            "max_reflections": self.max_reflections,
            "max_diffractions": self.max_diffractions,
            "max_transmissions": self.max_transmissions,
            "noise_floor_db": self.noise_floor_db,
            "max_pl_db": self.max_pl_db,
            "vegetation_alpha_db_per_m": self.vegetation_alpha_db_per_m,
            "reflection_loss_db": self.reflection_loss_db,
        }


def params_from_dict(d: dict) -> SimParams:
    defaults = SimParams()
    return SimParams(
        frequency_hz=float(d.get("frequency_hz", defaults.frequency_hz)),
        max_reflections=int(d.get("max_reflections", defaults.max_reflections)),
        max_diffractions=int(d.get("max_diffractions", defaults.max_diffractions)),
        max_transmissions=int(d.get("max_transmissions", defaults.max_transmissions)),
        noise_floor_db=float(d.get("noise_floor_db", defaults.noise_floor_db)),
        max_pl_db=float(d.get("max_pl_db", defaults.max_pl_db)),
        vegetation_alpha_db_per_m=float(
            d.get("vegetation_alpha_db_per_m", defaults.vegetation_alpha_db_per_m)
        ),
        reflection_loss_db=float(d.get("reflection_loss_db", defaults.reflection_loss_db)),
    )


def fspl_db(distance_m: float, wavelength_m: float) -> float:
    d = max(float(distance_m), 1e-9)
    return 20.0 * math.log10(4.0 * math.pi * d / wavelength_m)


def knife_edge_loss_db(nu) -> Union[float, np.ndarray]:
    """Single knife-edge loss for Fresnel parameter nu; 0 below nu = -0.78."""
    nu_arr = np.asarray(nu, dtype=np.float64)
    shifted = nu_arr - 0.1
    loss = 6.9 + 20.0 * np.log10(np.sqrt(shifted * shifted + 1.0) + shifted)
    out = np.where(nu_arr > -0.78, loss, 0.0)
    if np.isscalar(nu):
        return float(out)
    return out


@dataclass(frozen=True)
class RayPath:
    """One propagation path tx -> ... -> rx with its dB budget."""

    kind: str  # "direct" | "reflection" | "diffraction"
    vertices: tuple[Point3, ...]
    path_length_m: float
    tx_gain_db: float
    # fspl is stored at build time (it depends on the traced wavelength) so the
    # path is self-contained.
    fspl_db: float = 0.0
    reflection_loss_db: float = 0.0
    diffraction_loss_db: float = 0.0
    vegetation_loss_db: float = 0.0

    @property
    def power_db(self) -> float:
        return (
            self.tx_gain_db
            - self.fspl_db
            - self.reflection_loss_db
            - self.diffraction_loss_db
            - self.vegetation_loss_db
        )


@dataclass(frozen=True)
class GroundPlane:
    """The z = 0 reflector, valid over building-free cells of the scene."""

    extent_x: float
    extent_y: float


Face = Union[VerticalFace, GroundPlane]


def merge_wall_faces(faces: Sequence[VerticalFace]) -> list[VerticalFace]:
    """Merge contiguous coplanar strips with equal z-range into rectangles.

    Pure speed-up for the image method: merged rectangles tile exactly the
    same wall area, so the reflected path set is unchanged.
    """
    groups: dict[tuple, list[VerticalFace]] = {}
    order: list[tuple] = []
    for f in faces:
        key = (f.axis, f.offset, f.z_lo, f.z_hi, f.normal)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(f)
    merged: list[VerticalFace] = []
    for key in order:
        strips = sorted(groups[key], key=lambda f: f.span[0])
        cur_lo, cur_hi = strips[0].span
        proto = strips[0]
        for f in strips[1:]:
            if abs(f.span[0] - cur_hi) < 1e-9:
                cur_hi = f.span[1]
            else:
                merged.append(
                    VerticalFace(proto.axis, proto.offset, (cur_lo, cur_hi), proto.z_lo, proto.z_hi, proto.normal)
                )
                cur_lo, cur_hi = f.span
        merged.append(
            VerticalFace(proto.axis, proto.offset, (cur_lo, cur_hi), proto.z_lo, proto.z_hi, proto.normal)
        )
    return merged


def build_faces(scene: Scene) -> list[Face]:
    """Reflector set for the image method: merged walls plus the ground."""
    walls: list[Face] = list(merge_wall_faces(extract_wall_faces(scene)))
    walls.append(GroundPlane(scene.buildings.extent_x, scene.buildings.extent_y))
    return walls


def mirror_point(p: Point3, face: Face) -> Point3:
    if isinstance(face, GroundPlane):
        return (p[0], p[1], -p[2])
    if face.axis == "x":
        return (2.0 * face.offset - p[0], p[1], p[2])
    return (p[0], 2.0 * face.offset - p[1], p[2])


def signed_side(p: Point3, face: Face) -> float:
    """Positive on the open (reflecting) side of the face."""
    if isinstance(face, GroundPlane):
        return p[2]
    if face.axis == "x":
        return (p[0] - face.offset) * face.normal
    return (p[1] - face.offset) * face.normal


def _intersect_face(src: Point3, dst: Point3, face: Face, scene: Scene) -> Optional[Point3]:
    """Intersection of segment src->dst with the face rectangle, or None.

    The crossing parameter must lie strictly inside (0, 1); rectangle bounds
    are inclusive. Ground hits additionally require a building-free cell.
    """
    if isinstance(face, GroundPlane):
        denom = dst[2] - src[2]
        if denom == 0.0:
            return None
        t = (0.0 - src[2]) / denom
    else:
        comp = 0 if face.axis == "x" else 1
        denom = dst[comp] - src[comp]
        if denom == 0.0:
            return None
        t = (face.offset - src[comp]) / denom
    if not (0.0 < t < 1.0):
        return None
    p = (
        src[0] + t * (dst[0] - src[0]),
        src[1] + t * (dst[1] - src[1]),
        src[2] + t * (dst[2] - src[2]),
    )
    if isinstance(face, GroundPlane):
        if not (0.0 <= p[0] < face.extent_x and 0.0 <= p[1] < face.extent_y):
            return None
        grid = scene.buildings
        col = min(int(p[0] / grid.resolution), grid.width - 1)
        row = min(int(p[1] / grid.resolution), grid.height - 1)
        if grid.values[row, col] > 0.0:
            return None
        return (p[0], p[1], 0.0)
    along = p[1] if face.axis == "x" else p[0]
    if not (face.span[0] <= along <= face.span[1]):
        return None
    if not (face.z_lo <= p[2] <= face.z_hi):
        return None
    return p


def _dist3(a: Point3, b: Point3) -> float:
    return math.sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (b[2] - a[2]) ** 2)


class _SceneContext:
    """Cached per-scene arrays shared by the per-path helpers."""

    def __init__(self, scene: Scene, params: SimParams):
        self.scene = scene
        self.params = params
        grid = scene.buildings
        self.res = grid.resolution
        self.width = grid.width
        self.height = grid.height
        self.bvals = np.asarray(grid.values, dtype=np.float64)
        self.vvals = np.asarray(scene.vegetation.values, dtype=np.float64)
        self.wavelength = params.wavelength_m

    def intervals(self, a: Point3, b: Point3):
        return ray_intervals(self.res, self.width, self.height, a[0], a[1], b[0], b[1])

    def segment_blocked(self, a: Point3, b: Point3) -> bool:
        t_edges, rows, cols = self.intervals(a, b)
        h = self.bvals[rows, cols]
        z = a[2] + t_edges * (b[2] - a[2])
        z_low = np.minimum(z[:-1], z[1:])
        return bool(np.any(h > z_low))

    def vegetation_loss(self, a: Point3, b: Point3) -> float:
        alpha = self.params.vegetation_alpha_db_per_m
        if alpha == 0.0:
            return 0.0
        t_edges, rows, cols = self.intervals(a, b)
        vh = self.vvals[rows, cols]
        if not np.any(vh > 0.0):
            return 0.0
        t_in = t_edges[:-1]
        t_out = t_edges[1:]
        dz = b[2] - a[2]
        if dz == 0.0:
            inside = np.where(a[2] < vh, t_out - t_in, 0.0)
        else:
            t_cross = (vh - a[2]) / dz
            if dz > 0.0:
                hi = np.clip(t_cross, t_in, t_out)
                inside = hi - t_in
            else:
                lo = np.clip(t_cross, t_in, t_out)
                inside = t_out - lo
        total_t = float(np.sum(inside))
        return alpha * total_t * _dist3(a, b)


def _direct_from_intervals(ctx: _SceneContext, tx: TxConfig, rx: Point3, t_edges, rows, cols) -> Optional[RayPath]:
    a = tx.position
    h = ctx.bvals[rows, cols]
    z = a[2] + t_edges * (rx[2] - a[2])
    z_low = np.minimum(z[:-1], z[1:])
    if np.any(h > z_low):
        return None
    d = _dist3(a, rx)
    gain = gain_at(tx.pattern, tx.orientation, (rx[0] - a[0], rx[1] - a[1], rx[2] - a[2]))
    veg = ctx.vegetation_loss(a, rx)
    return RayPath(
        kind="direct",
        vertices=(a, rx),
        path_length_m=d,
        tx_gain_db=gain,
        vegetation_loss_db=veg,
        fspl_db=fspl_db(d, ctx.wavelength),
    )


def trace_direct(scene: Scene, tx: TxConfig, rx: Point3, params: SimParams) -> Optional[RayPath]:
    """The unobstructed tx->rx path, or None when a building column blocks it."""
    ctx = _SceneContext(scene, params)
    t_edges, rows, cols = ctx.intervals(tx.position, rx)
    return _direct_from_intervals(ctx, tx, rx, t_edges, rows, cols)


def _diffraction_from_intervals(
    ctx: _SceneContext, tx: TxConfig, rx: Point3, t_edges, rows, cols
) -> Optional[RayPath]:
    a = tx.position
    h = ctx.bvals[rows, cols]
    k = h.shape[0]
    if k < 1:
        return None
    lam = ctx.wavelength
    # Candidate edges: every internal gridline crossing, sampled with the cell
    # height on both sides; the endpoints themselves are excluded (d1, d2 > 0).
    if k == 1:
        return None
    te = t_edges[1:-1]
    ts = np.concatenate([te, te])
    hs = np.concatenate([h[:-1], h[1:]])
    z_line = a[2] + ts * (rx[2] - a[2])
    clearance = hs - z_line
    mask = clearance > 0.0
    if not np.any(mask):
        return None
    ts = ts[mask]
    hs = hs[mask]
    clearance = clearance[mask]
    ex = a[0] + ts * (rx[0] - a[0])
    ey = a[1] + ts * (rx[1] - a[1])
    d1 = np.sqrt((ex - a[0]) ** 2 + (ey - a[1]) ** 2 + (hs - a[2]) ** 2)
    d2 = np.sqrt((rx[0] - ex) ** 2 + (rx[1] - ey) ** 2 + (rx[2] - hs) ** 2)
    d1 = np.maximum(d1, 1e-9)
    d2 = np.maximum(d2, 1e-9)
    nu = clearance * np.sqrt(2.0 * (d1 + d2) / (lam * d1 * d2))
    idx = int(np.argmax(nu))
    apex = (float(ex[idx]), float(ey[idx]), float(hs[idx]))
    loss = float(knife_edge_loss_db(float(nu[idx])))
    leg1 = _dist3(a, apex)
    leg2 = _dist3(apex, rx)
    gain = gain_at(tx.pattern, tx.orientation, (apex[0] - a[0], apex[1] - a[1], apex[2] - a[2]))
    veg = ctx.vegetation_loss(a, apex) + ctx.vegetation_loss(apex, rx)
    plen = leg1 + leg2
    return RayPath(
        kind="diffraction",
        vertices=(a, apex, rx),
        path_length_m=plen,
        tx_gain_db=gain,
        diffraction_loss_db=loss,
        vegetation_loss_db=veg,
        fspl_db=fspl_db(plen, lam),
    )


def trace_diffraction(scene: Scene, tx: TxConfig, rx: Point3, params: SimParams) -> Optional[RayPath]:
    """Single dominant knife edge in the tx-rx vertical plane.

    Intended for pixels whose direct path is blocked; legs of the bent path are
    not re-checked against other obstructions (dominant-edge approximation).
    """
    ctx = _SceneContext(scene, params)
    t_edges, rows, cols = ctx.intervals(tx.position, rx)
    return _diffraction_from_intervals(ctx, tx, rx, t_edges, rows, cols)


def _reflection_path(
    ctx: _SceneContext, tx: TxConfig, rx: Point3, points: list[Point3], bounces: int
) -> RayPath:
    verts = [tx.position] + points + [rx]
    plen = sum(_dist3(verts[i], verts[i + 1]) for i in range(len(verts) - 1))
    first = points[0]
    gain = gain_at(
        tx.pattern,
        tx.orientation,
        (first[0] - tx.x, first[1] - tx.y, first[2] - tx.z),
    )
    veg = sum(ctx.vegetation_loss(verts[i], verts[i + 1]) for i in range(len(verts) - 1))
    return RayPath(
        kind="reflection",
        vertices=tuple(verts),
        path_length_m=plen,
        tx_gain_db=gain,
        reflection_loss_db=bounces * ctx.params.reflection_loss_db,
        vegetation_loss_db=veg,
        fspl_db=fspl_db(plen, ctx.wavelength),
    )


def _bounce1(ctx: _SceneContext, face: Face, tx: TxConfig, rx: Point3) -> Optional[RayPath]:
    if signed_side(tx.position, face) <= 0.0 or signed_side(rx, face) <= 0.0:
        return None
    img = mirror_point(tx.position, face)
    p = _intersect_face(img, rx, face, ctx.scene)
    if p is None:
        return None
    if ctx.segment_blocked(tx.position, p) or ctx.segment_blocked(p, rx):
        return None
    return _reflection_path(ctx, tx, rx, [p], bounces=1)


def _bounce2(ctx: _SceneContext, f1: Face, f2: Face, tx: TxConfig, rx: Point3) -> Optional[RayPath]:
    if f1 is f2:
        return None
    if signed_side(tx.position, f1) <= 0.0 or signed_side(rx, f2) <= 0.0:
        return None
    t1 = mirror_point(tx.position, f1)
    t2 = mirror_point(t1, f2)
    p2 = _intersect_face(t2, rx, f2, ctx.scene)
    if p2 is None:
        return None
    if signed_side(p2, f1) <= 0.0:
        return None
    p1 = _intersect_face(t1, p2, f1, ctx.scene)
    if p1 is None:
        return None
    if signed_side(p1, f2) <= 0.0:
        return None
    if (
        ctx.segment_blocked(tx.position, p1)
        or ctx.segment_blocked(p1, p2)
        or ctx.segment_blocked(p2, rx)
    ):
        return None
    return _reflection_path(ctx, tx, rx, [p1, p2], bounces=2)


def trace_reflections(
    scene: Scene,
    tx: TxConfig,
    rx: Point3,
    faces: Optional[Sequence[Face]],
    params: SimParams,
) -> list[RayPath]:
    """All valid 1- and 2-bounce specular paths (image method).

    ``faces`` defaults to the scene's merged walls plus the ground plane. The
    bounce count honors params.max_reflections.
    """
    if params.max_reflections == 0:
        return []
    ctx = _SceneContext(scene, params)
    if faces is None:
        faces = build_faces(scene)
    paths: list[RayPath] = []
    for face in faces:
        p = _bounce1(ctx, face, tx, rx)
        if p is not None:
            paths.append(p)
    if params.max_reflections >= 2:
        for f1 in faces:
            for f2 in faces:
                p = _bounce2(ctx, f1, f2, tx, rx)
                if p is not None:
                    paths.append(p)
    return paths


def combine_power_db(powers: Sequence[float]) -> float:
    """Non-coherent combination: watt-domain sum of dB power values.

    Factoring out the strongest term keeps the sum >= 1, so the combined
    power can never round below the strongest path.
    """
    if len(powers) == 0:
        raise EmptyPathSet("no paths to combine")
    arr = np.asarray(powers, dtype=np.float64)
    peak = float(arr.max())
    return peak + float(10.0 * np.log10(np.sum(np.power(10.0, (arr - peak) / 10.0))))


def combine_paths(paths: Sequence[RayPath]) -> float:
    if len(paths) == 0:
        raise EmptyPathSet("no paths to combine")
    return combine_power_db([p.power_db for p in paths])


@dataclass(frozen=True)
class RadioMap:
    """Per-pixel combined path loss for one transmitter."""

    pl_db: np.ndarray  # float32, -inf where no path is received
    gray: np.ndarray  # float32 in [0, 1]
    tx: TxConfig
    params: SimParams


def gray_from_pl(pl_db: np.ndarray, params: SimParams) -> np.ndarray:
    """Affine dB -> [0, 1] scaling: noise floor maps to 0, max path loss to 1."""
    span = params.max_pl_db - params.noise_floor_db
    with np.errstate(invalid="ignore"):
        g = (np.asarray(pl_db, dtype=np.float64) - params.noise_floor_db) / span
    return np.clip(g, 0.0, 1.0)


def pl_from_gray(gray: np.ndarray, params: SimParams) -> np.ndarray:
    span = params.max_pl_db - params.noise_floor_db
    return np.asarray(gray, dtype=np.float64) * span + params.noise_floor_db


def _candidate_pixels_bounce1(
    ctx: _SceneContext, face: Face, tx: TxConfig, X: np.ndarray, Y: np.ndarray, rz: float
) -> np.ndarray:
    """Pixels whose unfolded single-bounce ray can hit the face (superset).

    Bounds are widened by 1e-9 so no true hit is lost; the scalar validator
    makes the final call.
    """
    eps = 1e-9
    if signed_side(tx.position, face) <= 0.0:
        return np.empty(0, dtype=np.int64)
    img = mirror_point(tx.position, face)
    flat_x = X.ravel()
    flat_y = Y.ravel()
    if isinstance(face, GroundPlane):
        denom = rz - img[2]
        if denom == 0.0:
            return np.empty(0, dtype=np.int64)
        t = (0.0 - img[2]) / denom
        if not (0.0 < t < 1.0):
            return np.empty(0, dtype=np.int64)
        px = img[0] + t * (flat_x - img[0])
        py = img[1] + t * (flat_y - img[1])
        ok = (px >= -eps) & (px <= face.extent_x + eps)
        ok &= (py >= -eps) & (py <= face.extent_y + eps)
        return np.nonzero(ok)[0]
    if face.axis == "x":
        comp_src, comp_rx = img[0], flat_x
        along_src, along_rx = img[1], flat_y
    else:
        comp_src, comp_rx = img[1], flat_y
        along_src, along_rx = img[0], flat_x
    denom = comp_rx - comp_src
    side_rx = (comp_rx - face.offset) * face.normal
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (face.offset - comp_src) / np.where(denom == 0.0, np.nan, denom)
    ok = np.isfinite(t) & (t > 0.0) & (t < 1.0) & (side_rx > 0.0)
    along = along_src + t * (along_rx - along_src)
    pz = img[2] + t * (rz - img[2])
    ok &= (along >= face.span[0] - eps) & (along <= face.span[1] + eps)
    ok &= (pz >= face.z_lo - eps) & (pz <= face.z_hi + eps)
    return np.nonzero(ok)[0]


def _candidate_pixels_bounce2(
    ctx: _SceneContext,
    f1: Face,
    f2: Face,
    tx: TxConfig,
    X: np.ndarray,
    Y: np.ndarray,
    rz: float,
) -> np.ndarray:
    eps = 1e-9
    if f1 is f2 or signed_side(tx.position, f1) <= 0.0:
        return np.empty(0, dtype=np.int64)
    t1 = mirror_point(tx.position, f1)
    t2 = mirror_point(t1, f2)
    flat_x = X.ravel()
    flat_y = Y.ravel()
    n = flat_x.shape[0]

    def plane_cross(src, dx_arr, dy_arr, dz_arr, face):
        """t of plane crossing for segments src -> src + (dx, dy, dz)."""
        if isinstance(face, GroundPlane):
            denom = dz_arr
            num = 0.0 - src[2]
        elif face.axis == "x":
            denom = dx_arr
            num = face.offset - src[0]
        else:
            denom = dy_arr
            num = face.offset - src[1]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(denom != 0.0, num / np.where(denom == 0.0, 1.0, denom), np.nan)
        return t

    dx = flat_x - t2[0]
    dy = flat_y - t2[1]
    dz = np.full(n, rz - t2[2])
    t = plane_cross(t2, dx, dy, dz, f2)
    ok = np.isfinite(t) & (t > 0.0) & (t < 1.0)
    p2x = t2[0] + t * dx
    p2y = t2[1] + t * dy
    p2z = t2[2] + t * dz
    if isinstance(f2, GroundPlane):
        ok &= (p2x >= -eps) & (p2x <= f2.extent_x + eps)
        ok &= (p2y >= -eps) & (p2y <= f2.extent_y + eps)
        side_rx = rz
        if side_rx <= 0.0:
            return np.empty(0, dtype=np.int64)
    else:
        along = p2y if f2.axis == "x" else p2x
        ok &= (along >= f2.span[0] - eps) & (along <= f2.span[1] + eps)
        ok &= (p2z >= f2.z_lo - eps) & (p2z <= f2.z_hi + eps)
        targ = flat_x if f2.axis == "x" else flat_y
        ok &= (targ - f2.offset) * f2.normal > 0.0
    # Second unfold: t1 -> p2 across f1.
    d1x = p2x - t1[0]
    d1y = p2y - t1[1]
    d1z = p2z - t1[2]
    tt = plane_cross(t1, d1x, d1y, d1z, f1)
    ok &= np.isfinite(tt) & (tt > 0.0) & (tt < 1.0)
    p1x = t1[0] + tt * d1x
    p1y = t1[1] + tt * d1y
    p1z = t1[2] + tt * d1z
    if isinstance(f1, GroundPlane):
        ok &= (p1x >= -eps) & (p1x <= f1.extent_x + eps)
        ok &= (p1y >= -eps) & (p1y <= f1.extent_y + eps)
        ok &= p2z > 0.0
    else:
        along1 = p1y if f1.axis == "x" else p1x
        ok &= (along1 >= f1.span[0] - eps) & (along1 <= f1.span[1] + eps)
        ok &= (p1z >= f1.z_lo - eps) & (p1z <= f1.z_hi + eps)
        side_p2 = ((p2x if f1.axis == "x" else p2y) - f1.offset) * f1.normal
        ok &= side_p2 > 0.0
    if isinstance(f2, GroundPlane):
        side_p1 = p1z
    else:
        side_p1 = ((p1x if f2.axis == "x" else p1y) - f2.offset) * f2.normal
    ok &= side_p1 > 0.0
    return np.nonzero(ok)[0]


def simulate_radio_map(
    scene: Scene, tx: TxConfig, params: SimParams, rx_height: float = RX_HEIGHT
) -> RadioMap:
    """Combined path loss at rx_height over every pixel center.

    Deterministic: fixed traversal order, no RNG. Pixels with no received path
    hold -inf dB (gray 0).
    """
    grid = scene.buildings
    if not (0.0 <= tx.x < grid.extent_x and 0.0 <= tx.y < grid.extent_y):
        raise TxOutOfBounds(f"tx at ({tx.x}, {tx.y}) outside scene extent")
    ctx = _SceneContext(scene, params)
    X, Y = grid.cell_centers()
    n_pix = grid.width * grid.height
    powers: list[list[float]] = [[] for _ in range(n_pix)]

    if params.max_reflections >= 1:
        faces = build_faces(scene)
        flat_x = X.ravel()
        flat_y = Y.ravel()
        for face in faces:
            for idx in _candidate_pixels_bounce1(ctx, face, tx, X, Y, rx_height):
                rx = (float(flat_x[idx]), float(flat_y[idx]), rx_height)
                path = _bounce1(ctx, face, tx, rx)
                if path is not None:
                    powers[idx].append(path.power_db)
        if params.max_reflections >= 2:
            for f1 in faces:
                for f2 in faces:
                    cand = _candidate_pixels_bounce2(ctx, f1, f2, tx, X, Y, rx_height)
                    for idx in cand:
                        rx = (float(flat_x[idx]), float(flat_y[idx]), rx_height)
                        path = _bounce2(ctx, f1, f2, tx, rx)
                        if path is not None:
                            powers[idx].append(path.power_db)

    pl = np.full(n_pix, -np.inf, dtype=np.float64)
    flat_x = X.ravel()
    flat_y = Y.ravel()
    for idx in range(n_pix):
        rx = (float(flat_x[idx]), float(flat_y[idx]), rx_height)
        t_edges, rows, cols = ctx.intervals(tx.position, rx)
        path = _direct_from_intervals(ctx, tx, rx, t_edges, rows, cols)
        if path is None and params.max_diffractions >= 1:
            path = _diffraction_from_intervals(ctx, tx, rx, t_edges, rows, cols)
        vals = list(powers[idx])
        if path is not None:
            vals.append(path.power_db)
        if vals:
            pl[idx] = combine_power_db(vals)
    pl = pl.reshape(grid.height, grid.width)
    gray = gray_from_pl(pl, params).astype(np.float32)
    return RadioMap(pl.astype(np.float32), gray, tx, params)
