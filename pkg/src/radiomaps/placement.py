"""Transmitter placement on rooftop edges with orientation search.

Candidates are building cells with at least one non-building 4-neighbor (the
area beyond the grid border counts as non-building). The antenna mounts 2 m
above the roof and must end up between 6 m and 30 m above ground. Orientation
search scans azimuths on a fixed step within +/-90 degrees of the cell's mean
outward normal and a discrete downtilt set, keeping orientations whose
within-cone ground LoS coverage reaches a threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .antenna import AntennaPattern, Orientation, TxConfig
from .grids import Scene
from .visibility import DEFAULT_RX_HEIGHT, min_visible_raw, wrap_angle_deg

MOUNT_HEIGHT = 2.0
Z_MIN = 6.0
Z_MAX = 30.0
DEFAULT_TILTS = (0.0, -5.0, -10.0, -15.0, -20.0)


def candidate_positions(
    scene: Scene,
    mount_height: float = MOUNT_HEIGHT,
    z_min: float = Z_MIN,
    z_max: float = Z_MAX,
) -> list[tuple[float, float, float]]:
    """Roof-edge cell centers as (x, y, z) with z = roof + mount height,
    filtered to z_min <= z <= z_max. Row-major cell order."""
    grid = scene.buildings
    b = grid.values
    padded = np.pad(b, 1, constant_values=0.0)
    building = b > 0
    open_neighbor = (
        (padded[:-2, 1:-1] == 0)
        | (padded[2:, 1:-1] == 0)
        | (padded[1:-1, :-2] == 0)
        | (padded[1:-1, 2:] == 0)
    )
    rows, cols = np.nonzero(building & open_neighbor)
    res = grid.resolution
    out = []
    for r, c in zip(rows.tolist(), cols.tolist()):
        z = float(b[r, c]) + mount_height
        if z_min <= z <= z_max:
            out.append(((c + 0.5) * res, (r + 0.5) * res, z))
    return out


def _mean_outward_normal_azimuth(scene: Scene, x: float, y: float) -> Optional[float]:
    """Azimuth (deg) of the mean outward normal over the cell's open sides.

    None when the mean vanishes (e.g. opposite sides both open), which lifts
    the facing constraint.
    """
    grid = scene.buildings
    row, col = grid.cell_at(x, y)
    b = grid.values
    vx = vy = 0.0
    # (drow, dcol, normal x, normal y); y grows with row index.
    for drow, dcol, nx, ny in ((0, 1, 1.0, 0.0), (0, -1, -1.0, 0.0), (1, 0, 0.0, 1.0), (-1, 0, 0.0, -1.0)):
        rr, cc = row + drow, col + dcol
        open_side = not (0 <= rr < grid.height and 0 <= cc < grid.width) or b[rr, cc] == 0
        if open_side:
            vx += nx
            vy += ny
    if math.hypot(vx, vy) < 1e-9:
        return None
    return math.degrees(math.atan2(vy, vx))


def search_orientations(
    scene: Scene,
    position: tuple[float, float, float],
    pattern: AntennaPattern,
    azimuth_step_deg: float = 15.0,
    tilt_set_deg: Sequence[float] = DEFAULT_TILTS,
    min_coverage: float = 0.05,
    rx_height: float = DEFAULT_RX_HEIGHT,
) -> list[Orientation]:
    """Orientations whose in-cone ground-LoS fraction reaches min_coverage.

    Coverage counts pixels inside the horizontal FNBW sector; the LoS test is
    the standard max-slope march, so it is shared across all azimuths/tilts.
    Azimuths outside +/-90 degrees of the mean outward normal are skipped.
    """
    if not (0.0 < min_coverage <= 1.0):
        raise ValueError("min_coverage must lie in (0, 1]")
    if azimuth_step_deg <= 0 or (360.0 / azimuth_step_deg) % 1.0 != 0.0:
        raise ValueError("azimuth_step must evenly divide 360")
    if len(tilt_set_deg) == 0:
        raise ValueError("tilt_set must be non-empty")
    x, y, z = position
    raw = min_visible_raw(scene, x, y, z)
    visible_ground = raw <= rx_height
    normal_az = _mean_outward_normal_azimuth(scene, x, y)
    grid = scene.buildings
    X, Y = grid.cell_centers()
    dx = X - x
    dy = Y - y
    pixel_az = np.degrees(np.arctan2(dy, dx))
    at_tx = (dx == 0) & (dy == 0)
    half = pattern.fnbw_deg / 2.0
    out: list[Orientation] = []
    n_steps = int(round(360.0 / azimuth_step_deg))
    for k in range(n_steps):
        az = k * azimuth_step_deg
        if normal_az is not None and abs(float(wrap_angle_deg(az - normal_az))) > 90.0:
            continue
        if pattern.fnbw_deg >= 360.0:
            cone = np.ones_like(at_tx)
        else:
            cone = (np.abs(wrap_angle_deg(pixel_az - az)) <= half) | at_tx
        denom = int(np.count_nonzero(cone))
        if denom == 0:
            continue
        coverage = float(np.count_nonzero(visible_ground & cone)) / denom
        if coverage >= min_coverage:
            for tilt in tilt_set_deg:
                out.append(Orientation(az, tilt))
    return out


@dataclass(frozen=True)
class PlacementConfig:
    azimuth_step_deg: float = 15.0
    tilt_set_deg: tuple[float, ...] = DEFAULT_TILTS
    min_coverage: float = 0.05
    max_tx_per_scene: int = 2
    mount_height: float = MOUNT_HEIGHT
    z_min: float = Z_MIN
    z_max: float = Z_MAX
    rx_height: float = DEFAULT_RX_HEIGHT


def place_transmitters(
    scene: Scene,
    patterns: Sequence[AntennaPattern],
    config: PlacementConfig = PlacementConfig(),
) -> list[TxConfig]:
    """Deterministic tx selection: spaced roof-edge candidates, first admissible
    orientation per (position, pattern), capped at max_tx_per_scene samples."""
    cands = candidate_positions(scene, config.mount_height, config.z_min, config.z_max)
    if not cands or not patterns:
        return []
    needed_positions = max(1, math.ceil(config.max_tx_per_scene / len(patterns)))
    stride = max(1, len(cands) // needed_positions)
    picked: list[TxConfig] = []
    for pos in cands[::stride]:
        for pattern in patterns:
            orients = search_orientations(
                scene,
                pos,
                pattern,
                config.azimuth_step_deg,
                config.tilt_set_deg,
                config.min_coverage,
                config.rx_height,
            )
            if not orients:
                continue
            picked.append(TxConfig(pos, orients[0], pattern, scene.scene_id))
            if len(picked) >= config.max_tx_per_scene:
                return picked
    return picked
