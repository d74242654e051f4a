"""Dataset export/import, train/val/test splits, metrics, and augmentation.

On-disk layout (all rasters little-endian float32 with a JSON sidecar):

    <dataset>/manifest.json
    <dataset>/samples/<sample_id>/target.f32          path-loss gray map in [0, 1]
    <dataset>/samples/<sample_id>/channels.json       ordered channel registry
    <dataset>/samples/<sample_id>/features/<name>.f32 normalized inputs in [-1, 1]
    <dataset>/samples/<sample_id>/los/*.f32           visibility maps
    <dataset>/samples/<sample_id>/aerial.png          optional RGBA overlay
    <dataset>/samples/<sample_id>/tx.json             written last (completion marker)

Everything written here is deterministic: JSON is dumped with sorted keys and
no timestamps, samples are listed in sorted order, and splits are a seeded
shuffle of scene ids so a given (ids, seed) always yields the same partition.
"""

from __future__ import annotations

import json
import math
import random
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .antenna import TxConfig, tx_from_dict
from .errors import (
    DimensionMismatch,
    DuplicateSampleId,
    ManifestVersionMismatch,
    MissingFile,
)
from .features import Channel, FeatureStack, transform_stack
from .grids import read_raster, write_raster
from .transforms import transform_grid
from .visibility import LosMaps

MANIFEST_VERSION = "1"
MANIFEST_JSON = "manifest.json"
SAMPLES_DIR = "samples"
TARGET_RASTER = "target.f32"
CHANNELS_JSON = "channels.json"
TX_JSON = "tx.json"
FEATURES_DIR = "features"
LOS_DIR = "los"
AERIAL_PNG = "aerial.png"

NOISE_FLOOR_DB = -127.0
MAX_PL_DB = -50.0


# ---------------------------------------------------------------------------
# metrics


def _check_shapes(pred: np.ndarray, truth: np.ndarray) -> None:
    if pred.shape != truth.shape:
        raise DimensionMismatch(f"prediction {pred.shape} vs truth {truth.shape}")


def rmse_gray(pred: np.ndarray, truth: np.ndarray) -> float:
    """Root mean squared error between two gray maps in [0, 1]."""
    _check_shapes(pred, truth)
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(truth, dtype=np.float64)
    return float(np.sqrt(np.mean(diff * diff)))


def rmse_db(
    pred: np.ndarray,
    truth: np.ndarray,
    noise_floor_db: float = NOISE_FLOOR_DB,
    max_pl_db: float = MAX_PL_DB,
) -> float:
    """Gray RMSE rescaled to dB: the gray encoding is affine, so the RMSE in
    dB is exactly the gray RMSE times the encoded span."""
    return (max_pl_db - noise_floor_db) * rmse_gray(pred, truth)


def gray_to_db(
    gray: np.ndarray,
    noise_floor_db: float = NOISE_FLOOR_DB,
    max_pl_db: float = MAX_PL_DB,
) -> np.ndarray:
    """Invert the gray encoding back to clamped path loss in dB."""
    g = np.clip(np.asarray(gray, dtype=np.float64), 0.0, 1.0)
    return g * (max_pl_db - noise_floor_db) + noise_floor_db


def nmse(
    pred: np.ndarray,
    truth: np.ndarray,
    noise_floor_db: float = NOISE_FLOOR_DB,
    max_pl_db: float = MAX_PL_DB,
) -> float:
    """Normalized MSE of the decoded dB maps: ||err||^2 / ||truth||^2.

    Dimensionless, and invariant to expressing both maps in dB versus
    scaled dB, but not to the affine gray offset — hence the decode.
    """
    _check_shapes(pred, truth)
    p = gray_to_db(pred, noise_floor_db, max_pl_db)
    t = gray_to_db(truth, noise_floor_db, max_pl_db)
    denom = float(np.sum(t * t))
    if denom == 0.0:
        raise ValueError("truth map is identically zero dB; NMSE undefined")
    return float(np.sum((p - t) ** 2)) / denom


# ---------------------------------------------------------------------------
# sample records and writing


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    scene_id: str
    pattern_id: str
    path: str  # relative to the dataset root

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "scene_id": self.scene_id,
            "pattern_id": self.pattern_id,
            "path": self.path,
        }


def sample_dir(dataset_dir: Union[str, Path], sample_id: str) -> Path:
    return Path(dataset_dir) / SAMPLES_DIR / sample_id


def sample_complete(dataset_dir: Union[str, Path], sample_id: str) -> bool:
    """tx.json is written last, so its presence marks a finished sample."""
    return (sample_dir(dataset_dir, sample_id) / TX_JSON).is_file()


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_sample(
    dataset_dir: Union[str, Path],
    sample_id: str,
    scene_id: str,
    pattern_id: str,
    stack: FeatureStack,
    target_gray: np.ndarray,
    tx: TxConfig,
    resolution: float,
    los: Optional[LosMaps] = None,
    aerial: Optional[np.ndarray] = None,
    overwrite: bool = False,
) -> SampleRecord:
    """Write one sample directory; tx.json goes last as the completion marker."""
    if not stack.normalized:
        raise ValueError("write_sample expects a normalized feature stack")
    out = sample_dir(dataset_dir, sample_id)
    if sample_complete(dataset_dir, sample_id) and not overwrite:
        raise DuplicateSampleId(sample_id)
    if out.exists():
        shutil.rmtree(out)  # clear stale partial output
    feat_dir = out / FEATURES_DIR
    feat_dir.mkdir(parents=True)

    write_raster(out / TARGET_RASTER, target_gray, resolution)
    registry = []
    for ch in stack.channels:
        fname = f"{ch.name}.f32"
        write_raster(feat_dir / fname, ch.values, resolution)
        registry.append(
            {
                "name": ch.name,
                "file": f"{FEATURES_DIR}/{fname}",
                "lo": ch.lo,
                "hi": ch.hi,
                "kind": ch.kind,
            }
        )
    _dump_json(out / CHANNELS_JSON, {"channels": registry})

    if los is not None:
        los_dir = out / LOS_DIR
        los_dir.mkdir()
        write_raster(los_dir / "ground.f32", los.ground.astype(np.float32), resolution)
        write_raster(los_dir / "top.f32", los.top.astype(np.float32), resolution)
        write_raster(los_dir / "min_visible.f32", los.min_visible, resolution)
    if aerial is not None:
        from PIL import Image

        Image.fromarray(aerial, mode="RGBA").save(out / AERIAL_PNG)

    _dump_json(out / TX_JSON, tx.to_dict())
    rel = f"{SAMPLES_DIR}/{sample_id}"
    return SampleRecord(sample_id, scene_id, pattern_id, rel)


# ---------------------------------------------------------------------------
# splits and manifest


def split_scenes(
    scene_ids: Sequence[str],
    seed: int,
    fractions: "tuple[float, float, float]" = (0.8, 0.1, 0.1),
) -> "dict[str, list[str]]":
    """Partition scene ids into train/val/test with a seeded shuffle.

    Split sizes use floor(n * fraction) for val and test; train takes the
    remainder, so every scene lands in exactly one split.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    ids = sorted(set(scene_ids))
    rng = random.Random(seed)
    shuffled = list(ids)
    rng.shuffle(shuffled)
    n = len(shuffled)
    n_test = int(math.floor(n * fractions[2] + 1e-9))
    n_val = int(math.floor(n * fractions[1] + 1e-9))
    test = shuffled[:n_test]
    val = shuffled[n_test : n_test + n_val]
    train = shuffled[n_test + n_val :]
    return {"train": sorted(train), "val": sorted(val), "test": sorted(test)}


def _split_of(scene_id: str, splits: "dict[str, list[str]]") -> str:
    for name in ("train", "val", "test"):
        if scene_id in splits[name]:
            return name
    raise ValueError(f"scene {scene_id!r} missing from splits")


def export_dataset(
    dataset_dir: Union[str, Path],
    records: Sequence[SampleRecord],
    split_seed: int,
    fractions: "tuple[float, float, float]" = (0.8, 0.1, 0.1),
    sim_params: Optional[dict] = None,
) -> dict:
    """Validate written samples and emit manifest.json; returns the manifest."""
    root = Path(dataset_dir)
    ids = [r.sample_id for r in records]
    for sid in ids:
        if ids.count(sid) > 1:
            raise DuplicateSampleId(sid)
    ordered = sorted(records, key=lambda r: r.sample_id)

    grid_info = None
    channel_registry = None
    for rec in ordered:
        sdir = root / rec.path
        for required in (TX_JSON, TARGET_RASTER, CHANNELS_JSON):
            if not (sdir / required).is_file():
                raise MissingFile(f"{rec.sample_id}: {required}")
        meta = json.loads((sdir / CHANNELS_JSON).read_text())
        names = [c["name"] for c in meta["channels"]]
        if channel_registry is None:
            channel_registry = meta["channels"]
            _, res = read_raster(sdir / TARGET_RASTER)
            side = json.loads((sdir / TARGET_RASTER).with_suffix(".json").read_text())
            grid_info = {
                "width": side["width"],
                "height": side["height"],
                "resolution_m": res,
            }
        elif names != [c["name"] for c in channel_registry]:
            raise ValueError(f"{rec.sample_id}: channel registry differs across samples")

    splits = split_scenes([r.scene_id for r in ordered], split_seed, fractions)
    manifest = {
        "version": MANIFEST_VERSION,
        "grid": grid_info,
        "channels": channel_registry,
        "sim_params": sim_params,
        "split_seed": split_seed,
        "splits": splits,
        "samples": [
            dict(rec.to_dict(), split=_split_of(rec.scene_id, splits)) for rec in ordered
        ],
    }
    _dump_json(root / MANIFEST_JSON, manifest)
    return manifest


def load_manifest(dataset_dir: Union[str, Path]) -> dict:
    path = Path(dataset_dir) / MANIFEST_JSON
    if not path.is_file():
        raise MissingFile(str(path))
    manifest = json.loads(path.read_text())
    version = manifest.get("version")
    if version != MANIFEST_VERSION:
        raise ManifestVersionMismatch(
            f"manifest version {version!r}, expected {MANIFEST_VERSION!r}"
        )
    return manifest


# ---------------------------------------------------------------------------
# loading and augmentation


@dataclass(frozen=True)
class LoadedSample:
    sample_id: str
    features: FeatureStack  # normalized
    target: np.ndarray  # gray map in [0, 1]
    tx: TxConfig
    resolution: float


def load_sample(dataset_dir: Union[str, Path], ref: Union[str, dict]) -> LoadedSample:
    root = Path(dataset_dir)
    if isinstance(ref, str):
        sample_id, rel = ref, f"{SAMPLES_DIR}/{ref}"
    else:
        sample_id, rel = ref["sample_id"], ref["path"]
    sdir = root / rel
    tx_path = sdir / TX_JSON
    if not tx_path.is_file():
        raise MissingFile(str(tx_path))
    tx = tx_from_dict(json.loads(tx_path.read_text()))

    target, resolution = read_raster(sdir / TARGET_RASTER)
    meta = json.loads((sdir / CHANNELS_JSON).read_text())
    channels = []
    for entry in meta["channels"]:
        values, res = read_raster(sdir / entry["file"])
        if res != resolution:
            raise DimensionMismatch(
                f"{sample_id}/{entry['name']}: resolution {res} != {resolution}"
            )
        channels.append(
            Channel(
                name=entry["name"],
                values=values.astype(np.float64),
                lo=float(entry["lo"]),
                hi=float(entry["hi"]),
                kind=entry["kind"],
            )
        )
    stack = FeatureStack(tuple(channels), normalized=True)
    return LoadedSample(sample_id, stack, target, tx, resolution)


def iter_samples(
    dataset_dir: Union[str, Path],
    split: Optional[str] = None,
    manifest: Optional[dict] = None,
) -> Iterator[LoadedSample]:
    manifest = manifest or load_manifest(dataset_dir)
    for entry in manifest["samples"]:
        if split is not None and entry["split"] != split:
            continue
        yield load_sample(dataset_dir, entry)


def augment_sample(sample: LoadedSample, op: str) -> LoadedSample:
    """Dihedral augmentation consistent with re-simulation on the moved scene."""
    stack, tx = transform_stack(sample.features, op, sample.tx, sample.resolution)
    target = np.ascontiguousarray(transform_grid(sample.target, op))
    return LoadedSample(f"{sample.sample_id}__{op}", stack, target, tx, sample.resolution)
