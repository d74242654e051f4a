"""End-to-end dataset generation: scenes -> tx placement -> ray tracing ->
feature synthesis -> sample export -> manifest.

The pipeline is deterministic for a fixed config+seed: scene synthesis is
seeded per scene, simulation and feature synthesis are pure functions, sample
ids sort lexicographically into the manifest, and the split shuffle is seeded.
Workers only parallelize across samples and each sample's files are written by
exactly one process, so output bytes do not depend on --jobs.

A sample directory counts as finished once its tx.json exists (it is written
last), which is what makes interrupted runs resumable.
"""

from __future__ import annotations

import copy
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Union

from .antenna import AntennaPattern, TxConfig, builtin_patterns, pattern_from_config
from .dataset import (
    SampleRecord,
    export_dataset,
    sample_complete,
    write_sample,
)
from .errors import PipelineError
from .features import FeatureBounds, synthesize
from .grids import Scene, save_scene
from .placement import PlacementConfig, place_transmitters
from .propagation import SimParams, params_from_dict, simulate_radio_map
from .synth import generate_synthetic_scene
from .visibility import compute_los_maps

DEFAULT_FEATURES = ["basic", {"type": "los", "variant": "binary"}]


def default_config() -> dict:
    return {
        "seed": 0,
        "scenes": {
            "count": 4,
            "width": 64,
            "height": 64,
            "resolution": 1.0,
        },
        "placement": {
            "azimuth_step_deg": 45.0,
            "tilt_set_deg": [0.0, -5.0, -10.0, -15.0, -20.0],
            "min_coverage": 0.05,
            "max_tx_per_scene": 2,
        },
        "patterns": "builtin",
        "sim": {},
        "features": copy.deepcopy(DEFAULT_FEATURES),
        "bounds": {"height_m": 32.0},
        "rx_height": 1.5,
        "split_fractions": [0.8, 0.1, 0.1],
        "include_los": True,
        "include_aerial": True,
        "save_scenes": True,
        "jobs": 1,
    }


def load_config(path: Optional[Union[str, Path]]) -> dict:
    """Defaults overlaid with the JSON file; nested dicts merge one level deep."""
    cfg = default_config()
    if path is None:
        return cfg
    user = json.loads(Path(path).read_text())
    for key, value in user.items():
        if key in cfg and isinstance(cfg[key], dict) and isinstance(value, dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    return cfg


def _patterns_from_config(spec) -> list[AntennaPattern]:
    if spec == "builtin":
        return list(builtin_patterns())
    return [pattern_from_config(entry) for entry in spec]


def _pattern_id(pattern: AntennaPattern) -> str:
    return f"h{pattern.hpbw_deg:g}f{pattern.fnbw_deg:g}"


def _build_scene(cfg: dict, seed: int, index: int) -> Scene:
    sc = cfg["scenes"]
    kwargs = {
        k: sc[k]
        for k in (
            "width",
            "height",
            "resolution",
            "n_buildings",
            "building_height",
            "n_vegetation",
            "vegetation_height",
        )
        if k in sc
    }
    if "building_height" in kwargs:
        kwargs["building_height"] = tuple(kwargs["building_height"])
    if "vegetation_height" in kwargs:
        kwargs["vegetation_height"] = tuple(kwargs["vegetation_height"])
    kwargs["with_aerial"] = bool(cfg.get("include_aerial", True))
    return generate_synthetic_scene(
        scene_id=f"scene{index:04d}", seed=seed * 100003 + index, **kwargs
    )


def _run_sample(task: dict) -> tuple:
    """Worker body: simulate one (scene, tx) pair and write its sample dir."""
    scene: Scene = task["scene"]
    tx: TxConfig = task["tx"]
    params: SimParams = task["params"]
    bounds = FeatureBounds(scene.extent, task["height_m"])
    rx_height = task["rx_height"]

    rm = simulate_radio_map(scene, tx, params, rx_height)
    stack = synthesize(scene, tx, task["features"], bounds, rx_height).normalize()
    los = None
    if task["include_los"]:
        los = compute_los_maps(scene, tx, rx_height, ceiling=bounds.height_m)
    record = write_sample(
        task["out_dir"],
        task["sample_id"],
        scene.scene_id,
        task["pattern_id"],
        stack,
        rm.gray,
        tx,
        scene.resolution,
        los=los,
        aerial=scene.aerial if task["include_aerial"] else None,
        overwrite=True,
    )
    return (record.sample_id, record.scene_id, record.pattern_id, record.path)


def run_pipeline(
    config: dict,
    out_dir: Union[str, Path],
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
) -> dict:
    """Run the full generation pipeline into out_dir and return the manifest."""
    cfg = config
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run_seed = cfg["seed"] if seed is None else seed
    n_jobs = cfg.get("jobs", 1) if jobs is None else jobs
    params = params_from_dict(cfg.get("sim", {}))
    patterns = _patterns_from_config(cfg.get("patterns", "builtin"))
    placement = PlacementConfig(
        azimuth_step_deg=cfg["placement"].get("azimuth_step_deg", 45.0),
        tilt_set_deg=tuple(cfg["placement"].get("tilt_set_deg", (0, -5, -10, -15, -20))),
        min_coverage=cfg["placement"].get("min_coverage", 0.05),
        max_tx_per_scene=cfg["placement"].get("max_tx_per_scene", 2),
        rx_height=cfg.get("rx_height", 1.5),
    )

    tasks: list[dict] = []
    records: list[SampleRecord] = []
    for i in range(cfg["scenes"]["count"]):
        scene = _build_scene(cfg, run_seed, i)
        if cfg.get("save_scenes", True):
            save_scene(scene, out / "scenes" / scene.scene_id)
        txs = place_transmitters(scene, patterns, placement)
        for j, tx in enumerate(txs):
            sample_id = f"{scene.scene_id}_tx{j:02d}"
            pattern_id = _pattern_id(tx.pattern)
            if sample_complete(out, sample_id):
                records.append(
                    SampleRecord(sample_id, scene.scene_id, pattern_id, f"samples/{sample_id}")
                )
                continue
            tasks.append(
                {
                    "out_dir": str(out),
                    "sample_id": sample_id,
                    "pattern_id": pattern_id,
                    "scene": scene,
                    "tx": tx,
                    "params": params,
                    "features": cfg.get("features", DEFAULT_FEATURES),
                    "height_m": cfg.get("bounds", {}).get("height_m", 32.0),
                    "rx_height": cfg.get("rx_height", 1.5),
                    "include_los": cfg.get("include_los", True),
                    "include_aerial": cfg.get("include_aerial", True),
                }
            )

    results = []
    if n_jobs and n_jobs > 1 and tasks:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [(pool.submit(_run_sample, t), t["sample_id"]) for t in tasks]
            for future, sid in futures:
                try:
                    results.append(future.result())
                except Exception as exc:
                    raise PipelineError(f"sample {sid}: {exc}") from exc
    else:
        for t in tasks:
            try:
                results.append(_run_sample(t))
            except Exception as exc:
                raise PipelineError(f"sample {t['sample_id']}: {exc}") from exc

    records.extend(SampleRecord(*r) for r in results)
    if not records:
        raise PipelineError("no transmitters admitted by placement; nothing to export")
    fractions = tuple(cfg.get("split_fractions", (0.8, 0.1, 0.1)))
    return export_dataset(out, records, run_seed, fractions, sim_params=params.to_dict())
