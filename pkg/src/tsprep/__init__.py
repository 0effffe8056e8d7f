"""tsprep: reproducible preparation of irregular time series benchmarks.

Ingests UEA/UCR ``.ts`` archives and PhysioNet 2012/2019 challenge records,
applies missing-data simulation, observational masks, time deltas,
imputation, standardisation and seeded stratified splits, and exports
framework-neutral padded tensors with checksummed caching.
"""

__version__ = "0.1.0"

from tsprep.pipeline import PipelineConfig, build
from tsprep.splits import SplitAssignment, SplitSpec, rng_from_seed, stratified_split
from tsprep.tensor_core import ChannelLayout, ChannelStats, Dataset

__all__ = [
    "PipelineConfig",
    "build",
    "Dataset",
    "ChannelLayout",
    "ChannelStats",
    "SplitSpec",
    "SplitAssignment",
    "stratified_split",
    "rng_from_seed",
    "__version__",
]
