"""Directional antenna patterns, orientations and transmitter configs.

Pattern model: a single rotationally symmetric main lobe. The gain relative to
peak at off-boresight angle psi (degrees) is

    shape(psi) = max(-3 * (psi / (hpbw/2))**2, floor_rel)   for psi < fnbw/2
    shape(psi) = floor_rel                                  for psi >= fnbw/2

so gain(hpbw/2) = peak - 3 dB exactly and everything at or beyond the first
null is a flat side/back floor (default 30 dB below peak).

Azimuth convention: degrees counterclockwise from the +x axis in the ground
plane. Tilt is the boresight elevation; negative values point below the
horizon (downtilt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy import integrate

from .errors import QuadratureNonConvergence, ZeroDirection

DEFAULT_FLOOR_REL_DB = -30.0

# (hpbw, fnbw) pairs: four narrow-null patterns, then four wide-null ones.
BUILTIN_LOBES: tuple[tuple[float, float], ...] = (
    (15.0, 30.0),
    (15.0, 60.0),
    (30.0, 60.0),
    (45.0, 60.0),
    (15.0, 90.0),
    (30.0, 90.0),
    (45.0, 90.0),
    (90.0, 120.0),
)


def relative_shape_db(
    psi_deg: Union[float, np.ndarray],
    hpbw_deg: float,
    fnbw_deg: float,
    floor_rel_db: float = DEFAULT_FLOOR_REL_DB,
) -> Union[float, np.ndarray]:
    """Gain relative to peak (dB) at off-boresight angle psi."""
    psi = np.abs(np.asarray(psi_deg, dtype=np.float64))
    quad = -3.0 * (psi / (hpbw_deg / 2.0)) ** 2
    out = np.where(psi < fnbw_deg / 2.0, np.maximum(quad, floor_rel_db), floor_rel_db)
    if np.isscalar(psi_deg):
        return float(out)
    return out


def directivity_db(
    hpbw_deg: float,
    fnbw_deg: float,
    floor_rel_db: float = DEFAULT_FLOOR_REL_DB,
    tol_db: float = 0.01,
) -> float:
    """Directivity of the lobe shape via numerical quadrature.

    D = 4*pi / integral of the linear shape over the sphere; the shape is
    axisymmetric so the integral reduces to 2*pi * int g(psi) sin(psi) dpsi.
    Raises QuadratureNonConvergence if the estimated error exceeds tol_db.
    """

    def integrand(psi_rad: float) -> float:
        rel = relative_shape_db(math.degrees(psi_rad), hpbw_deg, fnbw_deg, floor_rel_db)
        return 10.0 ** (rel / 10.0) * math.sin(psi_rad)

    # Integrand kinks: where the quadratic hits the floor, and the null edge.
    pts = [math.radians(fnbw_deg / 2.0)]
    if floor_rel_db < 0:
        cross = (hpbw_deg / 2.0) * math.sqrt(-floor_rel_db / 3.0)
        if cross < fnbw_deg / 2.0:
            pts.append(math.radians(cross))
    pts = sorted(p for p in pts if 0.0 < p < math.pi)
    total, err = integrate.quad(integrand, 0.0, math.pi, points=pts, limit=200)
    total *= 2.0 * math.pi
    err *= 2.0 * math.pi
    if total <= 0:
        raise QuadratureNonConvergence("non-positive beam integral")
    err_db = 10.0 / math.log(10.0) * (err / total)
    if err_db > tol_db:
        raise QuadratureNonConvergence(
            f"directivity error estimate {err_db:.3g} dB exceeds {tol_db} dB"
        )
    return 10.0 * math.log10(4.0 * math.pi / total)


@dataclass(frozen=True)
class AntennaPattern:
    """Single-lobe directional pattern, rotationally symmetric about boresight."""

    hpbw_deg: float
    fnbw_deg: float
    peak_db: float
    floor_rel_db: float = DEFAULT_FLOOR_REL_DB

    def __post_init__(self):
        if not (0.0 < self.hpbw_deg < self.fnbw_deg):
            raise ValueError("need 0 < hpbw < fnbw")
        if self.floor_rel_db >= -3.0:
            raise ValueError("floor must sit below the -3 dB level")

    @property
    def floor_db(self) -> float:
        """Absolute side/back gain level."""
        return self.peak_db + self.floor_rel_db

    def gain_db(self, psi_deg):
        """Absolute gain (dB) at off-boresight angle psi (degrees)."""
        rel = relative_shape_db(psi_deg, self.hpbw_deg, self.fnbw_deg, self.floor_rel_db)
        return self.peak_db + rel

    def to_dict(self) -> dict:
        return {
            "hpbw_deg": self.hpbw_deg,
            "fnbw_deg": self.fnbw_deg,
            "peak_db": self.peak_db,
            "floor_db": self.floor_rel_db,
        }


def make_pattern(
    hpbw_deg: float,
    fnbw_deg: float,
    peak_db: Union[float, str] = "auto",
    floor_rel_db: float = DEFAULT_FLOOR_REL_DB,
) -> AntennaPattern:
    """Build a pattern; peak_db="auto" sets peak to the shape's directivity,
    which keeps total radiated power comparable across lobe widths."""
    if peak_db == "auto":
        peak_db = directivity_db(hpbw_deg, fnbw_deg, floor_rel_db)
    return AntennaPattern(hpbw_deg, fnbw_deg, float(peak_db), floor_rel_db)


def pattern_from_config(cfg: dict) -> AntennaPattern:
    return make_pattern(
        float(cfg["hpbw_deg"]),
        float(cfg["fnbw_deg"]),
        cfg.get("peak_db", "auto"),
        float(cfg.get("floor_db", DEFAULT_FLOOR_REL_DB)),
    )


def builtin_patterns(
    floor_rel_db: float = DEFAULT_FLOOR_REL_DB,
    peak_db: Union[float, str] = "auto",
) -> list[AntennaPattern]:
    """The eight built-in lobes (four narrow-null, four wide-null)."""
    return [make_pattern(h, f, peak_db, floor_rel_db) for h, f in BUILTIN_LOBES]


@dataclass(frozen=True)
class Orientation:
    """Boresight direction: azimuth deg CCW from +x, tilt deg above horizon."""

    azimuth_deg: float
    tilt_deg: float = 0.0

    def __post_init__(self):
        if not (-90.0 <= self.tilt_deg <= 90.0):
            raise ValueError("tilt must lie in [-90, 90] degrees")
        object.__setattr__(self, "azimuth_deg", float(self.azimuth_deg) % 360.0)

    def boresight(self) -> np.ndarray:
        az = math.radians(self.azimuth_deg)
        tilt = math.radians(self.tilt_deg)
        ct = math.cos(tilt)
        return np.array([ct * math.cos(az), ct * math.sin(az), math.sin(tilt)])


def angle_between_deg(a: np.ndarray, b: np.ndarray) -> float:
    """Angle between 3D vectors, degrees, robust near 0 and 180."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cross = np.linalg.norm(np.cross(a, b))
    dot = float(np.dot(a, b))
    return math.degrees(math.atan2(cross, dot))


def gain_at(pattern: AntennaPattern, orientation: Orientation, direction) -> float:
    """Pattern gain (dB) toward ``direction`` (any nonzero 3D vector)."""
    d = np.asarray(direction, dtype=np.float64)
    if not np.all(np.isfinite(d)) or np.linalg.norm(d) < 1e-12:
        raise ZeroDirection(f"cannot evaluate gain toward {direction!r}")
    psi = angle_between_deg(orientation.boresight(), d)
    return float(pattern.gain_db(psi))


def gain_grid(
    pattern: AntennaPattern,
    orientation: Orientation,
    dx: np.ndarray,
    dy: np.ndarray,
    dz: np.ndarray,
) -> np.ndarray:
    """Vectorized gain toward per-pixel offsets; zero offsets get peak gain."""
    b = orientation.boresight()
    dot = b[0] * dx + b[1] * dy + b[2] * dz
    cx = b[1] * dz - b[2] * dy
    cy = b[2] * dx - b[0] * dz
    cz = b[0] * dy - b[1] * dx
    cross = np.sqrt(cx * cx + cy * cy + cz * cz)
    psi = np.degrees(np.arctan2(cross, dot))
    out = np.asarray(pattern.gain_db(psi), dtype=np.float64)
    zero = (dx == 0) & (dy == 0) & (dz == 0)
    if np.any(zero):
        out = np.where(zero, pattern.peak_db, out)
    return out


@dataclass(frozen=True)
class TxConfig:
    """A placed transmitter: position (x, y, z) meters, orientation, pattern."""

    position: tuple[float, float, float]
    orientation: Orientation
    pattern: AntennaPattern
    scene_id: str = ""

    @property
    def x(self) -> float:
        return self.position[0]

    @property
    def y(self) -> float:
        return self.position[1]

    @property
    def z(self) -> float:
        return self.position[2]

    def to_dict(self) -> dict:
        return {
            "position": [self.position[0], self.position[1], self.position[2]],
            "azimuth_deg": self.orientation.azimuth_deg,
            "tilt_deg": self.orientation.tilt_deg,
            "pattern": self.pattern.to_dict(),
            "scene_id": self.scene_id,
        }


def tx_from_dict(d: dict) -> TxConfig:
    pat = d["pattern"]
    pattern = AntennaPattern(
        float(pat["hpbw_deg"]),
        float(pat["fnbw_deg"]),
        float(pat["peak_db"]),
        float(pat.get("floor_db", DEFAULT_FLOOR_REL_DB)),
    )
    x, y, z = (float(v) for v in d["position"])
    return TxConfig(
        (x, y, z),
        Orientation(float(d["azimuth_deg"]), float(d["tilt_deg"])),
        pattern,
        d.get("scene_id", ""),
    )
