"""Height rasters, scene container and wall-face extraction.

A scene is a pair of nDSM-style height grids (buildings, vegetation) over a
uniform cell grid, plus an optional 4-channel aerial image. Cell (row, col)
covers x in [col*res, (col+1)*res) and y in [row*res, (row+1)*res); heights
are meters above ground (z = 0).

Raster file format: a raw little-endian float32 row-major payload ``<name>.f32``
with a JSON sidecar ``<name>.json`` holding
``{"width": int, "height": int, "resolution_m": float, "dtype": "f32le"}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from .errors import (
    DimensionMismatch,
    MalformedRaster,
    MissingFile,
    NegativeHeight,
    OutOfBounds,
)

RASTER_DTYPE = np.dtype("<f4")


def sidecar_path(payload_path: Union[str, Path]) -> Path:
    return Path(payload_path).with_suffix(".json")


def write_raster(path: Union[str, Path], values: np.ndarray, resolution: float) -> Path:
    """Write a 2D float array as payload + sidecar. Returns the payload path."""
    path = Path(path)
    arr = np.ascontiguousarray(np.asarray(values, dtype=RASTER_DTYPE))
    if arr.ndim != 2:
        raise MalformedRaster(f"expected 2D raster, got shape {arr.shape}")
    header = {
        "width": int(arr.shape[1]),
        "height": int(arr.shape[0]),
        "resolution_m": float(resolution),
        "dtype": "f32le",
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(arr.tobytes(order="C"))
    sidecar_path(path).write_text(json.dumps(header, sort_keys=True))
    return path


def read_raster(path: Union[str, Path]) -> tuple[np.ndarray, float]:
    """Read payload + sidecar, returning (values (H, W) float32, resolution)."""
    path = Path(path)
    side = sidecar_path(path)
    if not path.exists():
        raise MissingFile(str(path))
    if not side.exists():
        raise MissingFile(str(side))
    try:
        header = json.loads(side.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedRaster(f"unreadable sidecar {side}: {exc}") from exc
    for key in ("width", "height", "resolution_m", "dtype"):
        if key not in header:
            raise MalformedRaster(f"sidecar {side} lacks '{key}'")
    if header["dtype"] != "f32le":
        raise MalformedRaster(f"unsupported dtype {header['dtype']!r}")
    w, h = int(header["width"]), int(header["height"])
    if w < 1 or h < 1 or float(header["resolution_m"]) <= 0:
        raise MalformedRaster(f"sidecar {side} has non-positive dimensions")
    payload = path.read_bytes()
    if len(payload) != w * h * 4:
        raise MalformedRaster(
            f"{path}: payload is {len(payload)} bytes, expected {w * h * 4}"
        )
    values = np.frombuffer(payload, dtype=RASTER_DTYPE).reshape(h, w)
    return values.copy(), float(header["resolution_m"])


@dataclass(frozen=True)
class HeightGrid:
    """Uniform-resolution raster of heights (meters above ground).

    values[row, col] is the height over the cell whose center sits at
    ((col + 0.5) * resolution, (row + 0.5) * resolution).
    """

    width: int
    height: int
    resolution: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise MalformedRaster("grid dimensions must be >= 1")
        if not (self.resolution > 0):
            raise MalformedRaster("resolution must be positive")
        vals = np.array(self.values, dtype=np.float32, copy=True)
        if vals.shape != (self.height, self.width):
            raise DimensionMismatch(
                f"values shape {vals.shape} != (height={self.height}, width={self.width})"
            )
        if not np.all(np.isfinite(vals)):
            raise NegativeHeight("heights must be finite")
        if np.any(vals < 0):
            raise NegativeHeight("heights must be >= 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def extent_x(self) -> float:
        return self.width * self.resolution

    @property
    def extent_y(self) -> float:
        return self.height * self.resolution

    @property
    def extent(self) -> float:
        """Largest horizontal extent, meters."""
        return max(self.extent_x, self.extent_y)

    def cell_at(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the cell containing (x, y); raises OutOfBounds outside."""
        if not (0.0 <= x < self.extent_x) or not (0.0 <= y < self.extent_y):
            raise OutOfBounds(f"({x}, {y}) outside [0,{self.extent_x})x[0,{self.extent_y})")
        col = min(int(x / self.resolution), self.width - 1)
        row = min(int(y / self.resolution), self.height - 1)
        return row, col

    def sample(self, x: float, y: float) -> float:
        row, col = self.cell_at(x, y)
        return float(self.values[row, col])

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrids (X, Y) of cell-center coordinates, each (H, W)."""
        xs = (np.arange(self.width, dtype=np.float64) + 0.5) * self.resolution
        ys = (np.arange(self.height, dtype=np.float64) + 0.5) * self.resolution
        return np.meshgrid(xs, ys)


def zero_grid(width: int, height: int, resolution: float = 1.0) -> HeightGrid:
    return HeightGrid(width, height, resolution, np.zeros((height, width), np.float32))


@dataclass(frozen=True)
class Scene:
    """Building + vegetation height grids sharing one cell lattice."""

    buildings: HeightGrid
    vegetation: HeightGrid
    aerial: Optional[np.ndarray] = None  # (H, W, 4) uint8, channels R,G,B,IR
    scene_id: str = ""

    def __post_init__(self):
        b, v = self.buildings, self.vegetation
        if (b.width, b.height) != (v.width, v.height) or b.resolution != v.resolution:
            raise DimensionMismatch("building and vegetation grids must match")
        if self.aerial is not None:
            a = np.asarray(self.aerial)
            if a.shape != (b.height, b.width, 4) or a.dtype != np.uint8:
                raise DimensionMismatch(
                    f"aerial must be uint8 (H, W, 4); got {a.dtype} {a.shape}"
                )
            object.__setattr__(self, "aerial", a)

    @property
    def grid(self) -> HeightGrid:
        return self.buildings

    @property
    def extent(self) -> float:
        return self.buildings.extent

    @property
    def resolution(self) -> float:
        return self.buildings.resolution


BUILDINGS_RASTER = "buildings.f32"
VEGETATION_RASTER = "vegetation.f32"
AERIAL_IMAGE = "aerial.png"


def save_scene(scene: Scene, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_raster(out_dir / BUILDINGS_RASTER, scene.buildings.values, scene.resolution)
    write_raster(out_dir / VEGETATION_RASTER, scene.vegetation.values, scene.resolution)
    if scene.aerial is not None:
        Image.fromarray(scene.aerial, mode="RGBA").save(out_dir / AERIAL_IMAGE)
    return out_dir


def load_scene(scene_dir: Union[str, Path], scene_id: str = "") -> Scene:
    """Load a scene directory written by save_scene (aerial optional)."""
    scene_dir = Path(scene_dir)
    bvals, bres = read_raster(scene_dir / BUILDINGS_RASTER)
    vvals, vres = read_raster(scene_dir / VEGETATION_RASTER)
    if bvals.shape != vvals.shape or bres != vres:
        raise DimensionMismatch(
            f"{scene_dir}: building and vegetation rasters disagree"
        )
    buildings = HeightGrid(bvals.shape[1], bvals.shape[0], bres, bvals)
    vegetation = HeightGrid(vvals.shape[1], vvals.shape[0], vres, vvals)
    aerial = None
    aerial_path = scene_dir / AERIAL_IMAGE
    if aerial_path.exists():
        img = Image.open(aerial_path).convert("RGBA")
        aerial = np.asarray(img, dtype=np.uint8)
    return Scene(buildings, vegetation, aerial, scene_id or scene_dir.name)


@dataclass(frozen=True)
class VerticalFace:
    """Axis-aligned vertical wall rectangle.

    The plane is {axis == offset}; ``span`` bounds the other horizontal axis,
    [z_lo, z_hi] the vertical extent. ``normal`` is +1/-1 along ``axis`` and
    points toward the lower (open) side.
    """

    axis: str  # "x" or "y"
    offset: float
    span: tuple[float, float]
    z_lo: float
    z_hi: float
    normal: int

    @property
    def area(self) -> float:
        return (self.span[1] - self.span[0]) * (self.z_hi - self.z_lo)


def extract_wall_faces(scene: Scene) -> list[VerticalFace]:
    """Wall rectangles at every boundary where adjacent building heights differ.

    Cells beyond the grid border count as height 0, so buildings touching the
    border contribute border faces. Faces span from the lower to the higher of
    the two heights and are one cell wide.
    """
    g = scene.buildings
    res = g.resolution
    h = g.values.astype(np.float64)
    padded = np.pad(h, 1, constant_values=0.0)
    faces: list[VerticalFace] = []
    # Constant-x planes: boundaries between horizontally adjacent cells.
    for row in range(g.height):
        prow = padded[row + 1]
        for b in range(g.width + 1):  # boundary b sits at x = b * res
            h_left, h_right = prow[b], prow[b + 1]
            if h_left == h_right:
                continue
            faces.append(
                VerticalFace(
                    axis="x",
                    offset=b * res,
                    span=(row * res, (row + 1) * res),
                    z_lo=float(min(h_left, h_right)),
                    z_hi=float(max(h_left, h_right)),
                    normal=-1 if h_left < h_right else 1,
                )
            )
    # Constant-y planes: boundaries between vertically adjacent cells.
    for col in range(g.width):
        pcol = padded[:, col + 1]
        for b in range(g.height + 1):
            h_low, h_high = pcol[b], pcol[b + 1]
            if h_low == h_high:
                continue
            faces.append(
                VerticalFace(
                    axis="y",
                    offset=b * res,
                    span=(col * res, (col + 1) * res),
                    z_lo=float(min(h_low, h_high)),
                    z_hi=float(max(h_low, h_high)),
                    normal=-1 if h_low < h_high else 1,
                )
            )
    return faces
