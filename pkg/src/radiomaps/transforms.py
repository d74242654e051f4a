"""Dihedral spatial ops shared by feature synthesis and dataset augmentation.

Coordinates: x grows with columns, y with rows, extent E = size * resolution.
rot90 is the +90 degree rotation (x, y) -> (E - y, x); flips mirror one axis.
Rotations require square grids.
"""

from __future__ import annotations

import numpy as np

from .antenna import Orientation, TxConfig
from .grids import HeightGrid, Scene

AUG_OPS = ("flip_h", "flip_v", "rot90", "rot180", "rot270")


def _check_op(op: str) -> None:
    if op not in AUG_OPS:
        raise ValueError(f"unknown augmentation op {op!r}")


def transform_grid(values: np.ndarray, op: str) -> np.ndarray:
    """Apply the op to a (H, W) array laid out in this package's coordinates."""
    _check_op(op)
    a = np.asarray(values)
    if op in ("rot90", "rot270") and a.shape[0] != a.shape[1]:
        raise ValueError("rotations require square grids")
    if op == "flip_h":
        return a[:, ::-1].copy()
    if op == "flip_v":
        return a[::-1, :].copy()
    if op == "rot90":
        return a[::-1, :].T.copy()
    if op == "rot180":
        return a[::-1, ::-1].copy()
    return a.T[::-1, :].copy()  # rot270


def transform_point(x: float, y: float, op: str, extent: float) -> tuple[float, float]:
    _check_op(op)
    if op == "flip_h":
        return extent - x, y
    if op == "flip_v":
        return x, extent - y
    if op == "rot90":
        return extent - y, x
    if op == "rot180":
        return extent - x, extent - y
    return y, extent - x  # rot270


def transform_azimuth(az_deg: float, op: str) -> float:
    _check_op(op)
    if op == "flip_h":
        return (180.0 - az_deg) % 360.0
    if op == "flip_v":
        return (-az_deg) % 360.0
    if op == "rot90":
        return (az_deg + 90.0) % 360.0
    if op == "rot180":
        return (az_deg + 180.0) % 360.0
    return (az_deg - 90.0) % 360.0  # rot270


def is_flip(op: str) -> bool:
    _check_op(op)
    return op in ("flip_h", "flip_v")


def transform_scene(scene: Scene, op: str) -> Scene:
    b = scene.buildings
    new_b = transform_grid(b.values, op)
    new_v = transform_grid(scene.vegetation.values, op)
    aerial = None
    if scene.aerial is not None:
        aerial = np.stack(
            [transform_grid(scene.aerial[..., i], op) for i in range(4)], axis=-1
        )
    return Scene(
        HeightGrid(new_b.shape[1], new_b.shape[0], b.resolution, new_b),
        HeightGrid(new_v.shape[1], new_v.shape[0], b.resolution, new_v),
        aerial,
        scene.scene_id,
    )


def transform_tx(tx: TxConfig, op: str, extent: float) -> TxConfig:
    x, y = transform_point(tx.x, tx.y, op, extent)
    az = transform_azimuth(tx.orientation.azimuth_deg, op)
    return TxConfig(
        (x, y, tx.z),
        Orientation(az, tx.orientation.tilt_deg),
        tx.pattern,
        tx.scene_id,
    )
