"""Evaluation reports: per-sample metrics as CSV plus rendered figure files.

Predictions are gray maps in [0, 1], one ``<sample_id>.f32`` raster per sample
in a predictions directory. Without predictions, a train-mean baseline (the
pixelwise mean of all train-split targets) is scored instead, which makes the
report path runnable straight off a freshly generated dataset.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import (
    LoadedSample,
    gray_to_db,
    iter_samples,
    load_manifest,
    nmse,
    rmse_db,
    rmse_gray,
)
from .errors import DimensionMismatch, MissingFile
from .grids import read_raster

METRICS_CSV = "metrics.csv"


def _train_mean_baseline(dataset_dir: Union[str, Path], manifest: dict) -> np.ndarray:
    total = None
    count = 0
    for sample in iter_samples(dataset_dir, split="train", manifest=manifest):
        total = sample.target.astype(np.float64) if total is None else total + sample.target
        count += 1
    if total is None:
        raise ValueError("dataset has no train split to build a baseline from")
    return (total / count).astype(np.float32)


def _prediction_for(
    sample: LoadedSample,
    pred_dir: Optional[Path],
    baseline: Optional[np.ndarray],
) -> np.ndarray:
    if pred_dir is None:
        assert baseline is not None
        return baseline
    path = pred_dir / f"{sample.sample_id}.f32"
    if not path.is_file():
        raise MissingFile(str(path))
    pred, _ = read_raster(path)
    if pred.shape != sample.target.shape:
        raise DimensionMismatch(
            f"{sample.sample_id}: prediction {pred.shape} vs target {sample.target.shape}"
        )
    return pred


def _sample_figure(sample: LoadedSample, pred: np.ndarray, path: Path) -> None:
    truth_db = gray_to_db(sample.target)
    pred_db = gray_to_db(pred)
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    im0 = axes[0].imshow(truth_db, origin="lower", cmap="viridis")
    axes[0].set_title(f"{sample.sample_id}\ntruth (dB)")
    fig.colorbar(im0, ax=axes[0], shrink=0.8)
    im1 = axes[1].imshow(
        pred_db, origin="lower", cmap="viridis", vmin=truth_db.min(), vmax=truth_db.max()
    )
    axes[1].set_title("prediction (dB)")
    fig.colorbar(im1, ax=axes[1], shrink=0.8)
    im2 = axes[2].imshow(np.abs(pred_db - truth_db), origin="lower", cmap="magma")
    axes[2].set_title("|error| (dB)")
    fig.colorbar(im2, ax=axes[2], shrink=0.8)
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _histogram_figure(rows: "list[dict]", path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist([row["rmse_db"] for row in rows], bins=20, color="#3a6ea5", edgecolor="black")
    ax.set_xlabel("RMSE (dB)")
    ax.set_ylabel("samples")
    ax.set_title("per-sample RMSE")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def evaluate(
    dataset_dir: Union[str, Path],
    out_dir: Union[str, Path],
    split: str = "test",
    pred_dir: Optional[Union[str, Path]] = None,
    max_figures: int = 4,
) -> "list[dict]":
    """Score a split, write metrics.csv and figures into out_dir, return rows."""
    manifest = load_manifest(dataset_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    preds = Path(pred_dir) if pred_dir is not None else None
    baseline = None if preds is not None else _train_mean_baseline(dataset_dir, manifest)

    rows = []
    figures = 0
    for sample in iter_samples(dataset_dir, split=split, manifest=manifest):
        pred = _prediction_for(sample, preds, baseline)
        rows.append(
            {
                "sample_id": sample.sample_id,
                "split": split,
                "rmse_gray": rmse_gray(pred, sample.target),
                "rmse_db": rmse_db(pred, sample.target),
                "nmse": nmse(pred, sample.target),
            }
        )
        if figures < max_figures:
            _sample_figure(sample, pred, out / f"{sample.sample_id}.png")
            figures += 1
    if not rows:
        raise ValueError(f"split {split!r} has no samples")

    with (out / METRICS_CSV).open("w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["sample_id", "split", "rmse_gray", "rmse_db", "nmse"]
        )
        writer.writeheader()
        for row in rows:
            writer.writerow({**row, "rmse_gray": f"{row['rmse_gray']:.9g}",
                             "rmse_db": f"{row['rmse_db']:.9g}", "nmse": f"{row['nmse']:.9g}"})
    _histogram_figure(rows, out / "rmse_hist.png")
    return rows
