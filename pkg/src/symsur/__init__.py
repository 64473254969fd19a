"""symsur: compact symbolic surrogate classifiers over frozen embeddings.

The pipeline: standardize embeddings, partition coordinates into disjoint
views, coevolve per-view arithmetic logit programs with a multi-population
GP, select a canonical model by a one-standard-error rule, temperature-scale
its probabilities, and audit its behavior (importance, PDP, ALE).
"""

from .exprcore import Program, parse, serialize, evaluate, evaluate_matrix, simplify, stats
from .dataio import EmbeddingDataset, load, save, synthetic_blobs
from .spfp import SpfpConfig, SpfpPartitioner, ViewPartition, partition
from .megp import GpConfig, MegpClassifier, RunRecord, SurrogateModel, run
from .modelselect import canonical, macro_f1, se_of_runs
from .calib import TemperatureScaler, apply_temperature, fit_temperature

__version__ = "0.1.0"

__all__ = [
    "Program",
    "parse",
    "serialize",
    "evaluate",
    "evaluate_matrix",
    "simplify",
    "stats",
    "EmbeddingDataset",
    "load",
    "save",
    "synthetic_blobs",
    "SpfpConfig",
    "SpfpPartitioner",
    "ViewPartition",
    "partition",
    "GpConfig",
    "MegpClassifier",
    "RunRecord",
    "SurrogateModel",
    "run",
    "canonical",
    "macro_f1",
    "se_of_runs",
    "TemperatureScaler",
    "apply_temperature",
    "fit_temperature",
    "__version__",
]
