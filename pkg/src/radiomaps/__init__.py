"""Deterministic radio-map generation for ML datasets.

Synthesizes urban height rasters, mounts directional transmitters on roof
edges, ray-traces per-pixel path loss (direct, reflected, knife-edge
diffracted, vegetation-attenuated), encodes CNN input features with global
normalization bounds, and exports reproducible train/val/test datasets.
"""

from .antenna import (
    AntennaPattern,
    Orientation,
    TxConfig,
    builtin_patterns,
    directivity_db,
    make_pattern,
)
from .dataset import (
    LoadedSample,
    SampleRecord,
    augment_sample,
    export_dataset,
    iter_samples,
    load_manifest,
    load_sample,
    nmse,
    rmse_db,
    rmse_gray,
    split_scenes,
    write_sample,
)
from .errors import RadiomapsError
from .features import Channel, FeatureBounds, FeatureStack, synthesize, transform_stack
from .grids import HeightGrid, Scene, load_scene, read_raster, save_scene, write_raster
from .pipeline import default_config, load_config, run_pipeline
from .placement import PlacementConfig, candidate_positions, place_transmitters
from .propagation import (
    RadioMap,
    RayPath,
    SimParams,
    combine_power_db,
    fspl_db,
    knife_edge_loss_db,
    simulate_radio_map,
    trace_diffraction,
    trace_direct,
    trace_reflections,
)
from .report import evaluate
from .synth import generate_synthetic_scene
from .transforms import transform_grid, transform_point, transform_scene, transform_tx
from .visibility import LosMaps, compute_los_maps, los_ground, los_top, min_visible_height

__version__ = "0.1.0"

__all__ = [
    "AntennaPattern",
    "Channel",
    "FeatureBounds",
    "FeatureStack",
    "HeightGrid",
    "LoadedSample",
    "LosMaps",
    "Orientation",
    "PlacementConfig",
    "RadioMap",
    "RadiomapsError",
    "RayPath",
    "SampleRecord",
    "Scene",
    "SimParams",
    "TxConfig",
    "augment_sample",
    "builtin_patterns",
    "candidate_positions",
    "combine_power_db",
    "compute_los_maps",
    "default_config",
    "directivity_db",
    "evaluate",
    "export_dataset",
    "fspl_db",
    "generate_synthetic_scene",
    "iter_samples",
    "knife_edge_loss_db",
    "load_config",
    "load_manifest",
    "load_sample",
    "load_scene",
    "los_ground",
    "los_top",
    "make_pattern",
    "min_visible_height",
    "nmse",
    "place_transmitters",
    "read_raster",
    "rmse_db",
    "rmse_gray",
    "run_pipeline",
    "save_scene",
    "simulate_radio_map",
    "split_scenes",
    "synthesize",
    "trace_diffraction",
    "trace_direct",
    "trace_reflections",
    "transform_grid",
    "transform_point",
    "transform_scene",
    "transform_stack",
    "transform_tx",
    "write_raster",
    "write_sample",
]
