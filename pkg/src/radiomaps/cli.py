"""Command-line entry point.

Subcommands mirror the pipeline stages so each step can be run and inspected
on its own; `run` chains them all into an exported dataset.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .antenna import builtin_patterns, pattern_from_config, tx_from_dict
from .dataset import SampleRecord, export_dataset
from .errors import MissingFile, RadiomapsError
from .features import FeatureBounds, synthesize
from .grids import load_scene, save_scene, write_raster
from .pipeline import load_config, run_pipeline
from .placement import PlacementConfig, place_transmitters
from .propagation import SimParams, simulate_radio_map
from .report import evaluate
from .synth import generate_synthetic_scene
from .visibility import compute_los_maps


def _load_tx(path: str, index: int):
    data = json.loads(Path(path).read_text())
    if isinstance(data, list):
        try:
            data = data[index]
        except IndexError:
            raise ValueError(f"tx index {index} out of range ({len(data)} entries)") from None
    return tx_from_dict(data)


def _cmd_gen_scene(args) -> int:
    scene = generate_synthetic_scene(
        scene_id=args.scene_id,
        width=args.width,
        height=args.height,
        resolution=args.resolution,
        seed=args.seed,
        n_buildings=args.buildings,
        n_vegetation=args.vegetation,
        with_aerial=not args.no_aerial,
    )
    out = Path(args.out)
    save_scene(scene, out)
    print(f"wrote scene {args.scene_id} to {out}")
    return 0


def _cmd_place_tx(args) -> int:
    scene = load_scene(args.scene, scene_id=args.scene_id)
    if args.patterns == "builtin":
        patterns = list(builtin_patterns())
    else:
        specs = json.loads(Path(args.patterns).read_text())
        patterns = [pattern_from_config(s) for s in specs]
    config = PlacementConfig(
        azimuth_step_deg=args.azimuth_step,
        min_coverage=args.min_coverage,
        max_tx_per_scene=args.max_tx,
    )
    txs = place_transmitters(scene, patterns, config)
    Path(args.out).write_text(
        json.dumps([t.to_dict() for t in txs], indent=2, sort_keys=True) + "\n"
    )
    print(f"placed {len(txs)} transmitter(s) -> {args.out}")
    return 0


def _sim_params(args) -> SimParams:
    return SimParams(
        frequency_hz=args.frequency,
        max_reflections=args.max_reflections,
        max_diffractions=args.max_diffractions,
    )


def _cmd_simulate(args) -> int:
    scene = load_scene(args.scene)
    tx = _load_tx(args.tx, args.index)
    rm = simulate_radio_map(scene, tx, _sim_params(args), args.rx_height)
    out = Path(args.out)
    write_raster(out / "pl_db.f32", rm.pl_db, scene.resolution)
    write_raster(out / "gray.f32", rm.gray, scene.resolution)
    print(f"wrote pl_db.f32 and gray.f32 to {out}")
    return 0


def _cmd_los(args) -> int:
    scene = load_scene(args.scene)
    tx = _load_tx(args.tx, args.index)
    maps = compute_los_maps(scene, tx, rx_height=args.rx_height, ceiling=args.ceiling)
    out = Path(args.out)
    write_raster(out / "ground.f32", maps.ground.astype(np.float32), scene.resolution)
    write_raster(out / "top.f32", maps.top.astype(np.float32), scene.resolution)
    write_raster(out / "min_visible.f32", maps.min_visible, scene.resolution)
    print(f"wrote visibility maps to {out}")
    return 0


def _parse_variants(args) -> list:
    if args.spec:
        return json.loads(Path(args.spec).read_text())
    return [v.strip() for v in args.variants.split(",") if v.strip()]


def _cmd_features(args) -> int:
    scene = load_scene(args.scene)
    tx = _load_tx(args.tx, args.index)
    bounds = FeatureBounds(scene.extent, args.height_bound)
    stack = synthesize(scene, tx, _parse_variants(args), bounds, args.rx_height)
    if not args.raw:
        stack = stack.normalize()
    out = Path(args.out)
    registry = []
    for ch in stack.channels:
        fname = f"{ch.name}.f32"
        write_raster(out / fname, ch.values, scene.resolution)
        registry.append(
            {"name": ch.name, "file": fname, "lo": ch.lo, "hi": ch.hi, "kind": ch.kind}
        )
    (out / "channels.json").write_text(
        json.dumps({"channels": registry}, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {len(registry)} channel(s) to {out}")
    return 0


def _cmd_export_dataset(args) -> int:
    root = Path(args.data)
    samples_dir = root / "samples"
    if not samples_dir.is_dir():
        raise MissingFile(str(samples_dir))
    records = []
    for sdir in sorted(samples_dir.iterdir()):
        tx_path = sdir / "tx.json"
        if not tx_path.is_file():
            continue  # incomplete sample; not part of the export
        meta = json.loads(tx_path.read_text())
        pat = meta["pattern"]
        pattern_id = f"h{pat['hpbw_deg']:g}f{pat['fnbw_deg']:g}"
        records.append(
            SampleRecord(sdir.name, meta.get("scene_id", ""), pattern_id, f"samples/{sdir.name}")
        )
    fractions = tuple(float(x) for x in args.fractions.split(","))
    manifest = export_dataset(root, records, args.seed, fractions)
    print(f"manifest: {len(manifest['samples'])} sample(s), splits "
          + ", ".join(f"{k}={len(v)}" for k, v in manifest["splits"].items()))
    return 0


def _cmd_evaluate(args) -> int:
    rows = evaluate(args.data, args.out, split=args.split, pred_dir=args.pred,
                    max_figures=args.max_figures)
    mean_rmse = sum(r["rmse_db"] for r in rows) / len(rows)
    print(f"evaluated {len(rows)} sample(s); mean RMSE {mean_rmse:.3f} dB -> {args.out}")
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    manifest = run_pipeline(cfg, args.out, jobs=args.jobs, seed=args.seed)
    print(f"dataset ready: {len(manifest['samples'])} sample(s) in {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radiomaps", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="generate a synthetic scene directory")
    p.add_argument("--out", required=True)
    p.add_argument("--scene-id", default="scene0000")
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--buildings", type=int, default=None)
    p.add_argument("--vegetation", type=int, default=None)
    p.add_argument("--no-aerial", action="store_true")
    p.set_defaults(func=_cmd_gen_scene)

    p = sub.add_parser("place-tx", help="select rooftop transmitters for a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--scene-id", default="")
    p.add_argument("--out", required=True)
    p.add_argument("--patterns", default="builtin")
    p.add_argument("--azimuth-step", type=float, default=45.0)
    p.add_argument("--min-coverage", type=float, default=0.05)
    p.add_argument("--max-tx", type=int, default=2)
    p.set_defaults(func=_cmd_place_tx)

    p = sub.add_parser("simulate", help="trace a radio map for one transmitter")
    p.add_argument("--scene", required=True)
    p.add_argument("--tx", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--frequency", type=float, default=3.7e9)
    p.add_argument("--max-reflections", type=int, default=2)
    p.add_argument("--max-diffractions", type=int, default=1)
    p.add_argument("--rx-height", type=float, default=1.5)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("los", help="compute visibility maps for one transmitter")
    p.add_argument("--scene", required=True)
    p.add_argument("--tx", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--rx-height", type=float, default=1.5)
    p.add_argument("--ceiling", type=float, default=32.0)
    p.set_defaults(func=_cmd_los)

    p = sub.add_parser("features", help="synthesize input channels for one transmitter")
    p.add_argument("--scene", required=True)
    p.add_argument("--tx", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--variants", default="basic,los")
    p.add_argument("--spec", default=None, help="JSON file with full variant specs")
    p.add_argument("--height-bound", type=float, default=32.0)
    p.add_argument("--rx-height", type=float, default=1.5)
    p.add_argument("--raw", action="store_true", help="skip normalization")
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("export-dataset", help="(re)build manifest.json for written samples")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fractions", default="0.8,0.1,0.1")
    p.set_defaults(func=_cmd_export_dataset)

    p = sub.add_parser("evaluate", help="score predictions (or a baseline) on a split")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--pred", default=None)
    p.add_argument("--max-figures", type=int, default=4)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="generate a full dataset from a config")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_run)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RadiomapsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
