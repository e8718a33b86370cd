"""Python bindings for the torch-free part of edei: synthesis, events, voxel grids, metrics and sample I/O."""

from ._edei import (
    ConfigError,
    DataError,
    DegradationParams,
    EventStream,
    ExposureTiming,
    Sample,
    SimulatorConfig,
    SynthesisRecipe,
    darken,
    dataset_stats,
    interpolate,
    make_sample,
    psnr,
    ratio_fusion_static,
    read_sample,
    simulate_events,
    ssim,
    synth_long,
    synth_short,
    voxelize,
    write_sample,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DegradationParams",
    "EventStream",
    "ExposureTiming",
    "Sample",
    "SimulatorConfig",
    "SynthesisRecipe",
    "darken",
    "dataset_stats",
    "interpolate",
    "make_sample",
    "psnr",
    "ratio_fusion_static",
    "read_sample",
    "simulate_events",
    "ssim",
    "synth_long",
    "synth_short",
    "voxelize",
    "write_sample",
]
