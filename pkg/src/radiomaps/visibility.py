"""Line-of-sight maps over building rasters.

All per-pixel rays share one traversal scheme: the 2D segment from the tx to
the pixel center is cut at every gridline crossing, and each crossed cell's
building top is sampled at the interval entry and exit. A segment touching a
column top exactly counts as unobstructed; only strict penetration blocks.

The per-pixel minimum visible height is

    min_visible(p) = clip(tx.z + d_p * s_max, 0, ceiling)

with s_max the running maximum of (h_cell - tx.z) / d_sample over the visited
cells (the classic viewshed max-slope march). Ground and rooftop LoS fall out
of the same quantity: a target at height z is visible iff z >= tx.z + d*s_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .antenna import TxConfig
from .errors import TxOutOfBounds
from .grids import Scene

DEFAULT_RX_HEIGHT = 1.5
DEFAULT_CEILING = 32.0

# Crossings closer along the ray than this parameter gap are merged; they come
# from the ray passing (numerically) through a cell corner.
_T_DEDUPE = 1e-12


def ray_intervals(
    resolution: float,
    width: int,
    height: int,
    ax: float,
    ay: float,
    bx: float,
    by: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cut segment (ax,ay)->(bx,by) at gridline crossings.

    Returns (t_edges, rows, cols): t_edges is increasing from 0 to 1 and
    interval i spans [t_edges[i], t_edges[i+1]] inside cell (rows[i], cols[i]).
    """
    dx = bx - ax
    dy = by - ay
    parts = [np.array([0.0, 1.0])]
    if dx != 0.0:
        lo, hi = (ax, bx) if ax < bx else (bx, ax)
        m0 = math.floor(lo / resolution) + 1
        m1 = math.ceil(hi / resolution) - 1
        if m1 >= m0:
            ms = np.arange(m0, m1 + 1, dtype=np.float64)
            parts.append((ms * resolution - ax) / dx)
    if dy != 0.0:
        lo, hi = (ay, by) if ay < by else (by, ay)
        m0 = math.floor(lo / resolution) + 1
        m1 = math.ceil(hi / resolution) - 1
        if m1 >= m0:
            ms = np.arange(m0, m1 + 1, dtype=np.float64)
            parts.append((ms * resolution - ay) / dy)
    ts = np.concatenate(parts)
    ts = ts[(ts >= 0.0) & (ts <= 1.0)]
    ts.sort()
    if ts.shape[0] > 2:
        keep = np.empty(ts.shape[0], dtype=bool)
        keep[0] = True
        np.greater(np.diff(ts), _T_DEDUPE, out=keep[1:])
        ts = ts[keep]
    ts = ts.copy()
    ts[0] = 0.0
    ts[-1] = 1.0
    mids = 0.5 * (ts[:-1] + ts[1:])
    cols = np.clip(
        np.floor((ax + mids * dx) / resolution).astype(np.int64), 0, width - 1
    )
    rows = np.clip(
        np.floor((ay + mids * dy) / resolution).astype(np.int64), 0, height - 1
    )
    return ts, rows, cols


def max_blocking_slope(
    bvals: np.ndarray,
    resolution: float,
    tx_x: float,
    tx_y: float,
    tx_z: float,
    px: float,
    py: float,
) -> float:
    """Max of (h - tx.z)/d over entry/exit samples along the 2D ray to (px, py).

    Returns -inf for a degenerate zero-length ray; +inf when the tx itself sits
    inside a column.
    """
    h_grid, w_grid = bvals.shape
    t_edges, rows, cols = ray_intervals(resolution, w_grid, h_grid, tx_x, tx_y, px, py)
    length = math.hypot(px - tx_x, py - tx_y)
    if length == 0.0:
        return math.inf if bvals[rows[0], cols[0]] > tx_z else -math.inf
    h_rel = bvals[rows, cols].astype(np.float64) - tx_z
    d = t_edges * length
    s_max = float(np.max(h_rel / d[1:]))  # exit samples, d > 0 throughout
    if h_rel.shape[0] > 1:
        s_max = max(s_max, float(np.max(h_rel[1:] / d[1:-1])))  # entry samples
    if h_rel[0] > 0.0:
        s_max = math.inf  # tx embedded in a column blocks everything
    return s_max


def segment_clear(
    bvals: np.ndarray,
    resolution: float,
    a: tuple[float, float, float],
    b: tuple[float, float, float],
) -> bool:
    """True iff the 3D segment a->b strictly clears every building column."""
    h_grid, w_grid = bvals.shape
    t_edges, rows, cols = ray_intervals(resolution, w_grid, h_grid, a[0], a[1], b[0], b[1])
    h = bvals[rows, cols].astype(np.float64)
    z = a[2] + t_edges * (b[2] - a[2])
    z_low = np.minimum(z[:-1], z[1:])
    return not bool(np.any(h > z_low))


def wrap_angle_deg(angle) -> np.ndarray:
    """Wrap degrees into (-180, 180]."""
    a = np.asarray(angle, dtype=np.float64) % 360.0
    return np.where(a > 180.0, a - 360.0, a)


def cone_mask(scene: Scene, tx: TxConfig) -> np.ndarray:
    """Pixels inside the horizontal FNBW sector around the boresight azimuth.

    The sector is purely azimuthal (tilt plays no role); the tx's own pixel is
    inside. FNBW >= 360 degrees means every pixel qualifies.
    """
    half = tx.pattern.fnbw_deg / 2.0
    grid = scene.buildings
    if tx.pattern.fnbw_deg >= 360.0:
        return np.ones((grid.height, grid.width), dtype=bool)
    X, Y = grid.cell_centers()
    dx = X - tx.x
    dy = Y - tx.y
    az = np.degrees(np.arctan2(dy, dx))
    rel = wrap_angle_deg(az - tx.orientation.azimuth_deg)
    mask = np.abs(rel) <= half
    mask |= (dx == 0) & (dy == 0)
    return mask


@dataclass(frozen=True)
class LosMaps:
    """Per-pixel visibility products from one traversal."""

    ground: np.ndarray  # uint8, 1 = receiver height visible inside the cone
    top: np.ndarray  # uint8, 1 = building-top point visible inside the cone
    min_visible: np.ndarray  # float32, smallest visible z, clipped to [0, ceiling]
    cone: np.ndarray  # bool sector mask
    rx_height: float
    ceiling: float


def compute_los_maps(
    scene: Scene,
    tx: TxConfig,
    rx_height: float = DEFAULT_RX_HEIGHT,
    ceiling: float = DEFAULT_CEILING,
) -> LosMaps:
    grid = scene.buildings
    if not (0.0 <= tx.x < grid.extent_x and 0.0 <= tx.y < grid.extent_y):
        raise TxOutOfBounds(f"tx at ({tx.x}, {tx.y}) outside scene extent")
    if not (0.0 < rx_height < ceiling):
        raise ValueError("need 0 < rx_height < ceiling")
    bvals = np.asarray(grid.values, dtype=np.float64)
    res = grid.resolution
    cone = cone_mask(scene, tx)
    X, Y = grid.cell_centers()
    raw = np.full((grid.height, grid.width), np.inf, dtype=np.float64)
    top_ok = np.zeros((grid.height, grid.width), dtype=bool)
    for r in range(grid.height):
        crow = cone[r]
        for c in range(grid.width):
            if not crow[c]:
                continue
            px, py = X[r, c], Y[r, c]
            length = math.hypot(px - tx.x, py - tx.y)
            if length == 0.0:
                raw[r, c] = bvals[r, c]
                top_ok[r, c] = True
                continue
            s_max = max_blocking_slope(bvals, res, tx.x, tx.y, tx.z, px, py)
            if math.isfinite(s_max):
                raw[r, c] = tx.z + length * s_max
                # roof visibility in slope space: the pixel's own roof sample is
                # part of s_max, so raw >= h with equality exactly when nothing
                # else blocks; comparing slopes avoids the *length round trip
                # spuriously hiding visible roofs by one ulp
                top_ok[r, c] = s_max <= (bvals[r, c] - tx.z) / length
    ground = (cone & (raw <= rx_height)).astype(np.uint8)
    top = (cone & (bvals > 0.0) & top_ok).astype(np.uint8)
    min_visible = np.clip(raw, 0.0, ceiling).astype(np.float32)
    min_visible[~cone] = ceiling
    return LosMaps(ground, top, min_visible, cone, rx_height, ceiling)


def min_visible_raw(scene: Scene, x: float, y: float, z: float) -> np.ndarray:
    """Unclipped minimum visible height for every pixel, ignoring any cone.

    Orientation-independent: placement reuses one of these maps across all
    candidate azimuths. +inf marks pixels nothing can see (tx inside a column).
    """
    grid = scene.buildings
    bvals = np.asarray(grid.values, dtype=np.float64)
    res = grid.resolution
    X, Y = grid.cell_centers()
    raw = np.empty((grid.height, grid.width), dtype=np.float64)
    for r in range(grid.height):
        for c in range(grid.width):
            px, py = X[r, c], Y[r, c]
            length = math.hypot(px - x, py - y)
            if length == 0.0:
                raw[r, c] = bvals[r, c]
                continue
            s_max = max_blocking_slope(bvals, res, x, y, z, px, py)
            raw[r, c] = z + length * s_max if math.isfinite(s_max) else math.inf
    return raw


def los_ground(scene: Scene, tx: TxConfig, rx_height: float = DEFAULT_RX_HEIGHT) -> np.ndarray:
    return compute_los_maps(scene, tx, rx_height=rx_height).ground


def los_top(scene: Scene, tx: TxConfig) -> np.ndarray:
    return compute_los_maps(scene, tx).top


def min_visible_height(
    scene: Scene, tx: TxConfig, ceiling: float = DEFAULT_CEILING
) -> np.ndarray:
    return compute_los_maps(scene, tx, ceiling=ceiling).min_visible
