"""Hyper-occurrence correlation discovery.

Quorum rules over binary(ized) variables are scored by how much more often
they fire on the real dataset than on a scrambled copy whose columns keep
their marginals but lose their mutual dependence. Rules are stacked into a
layered feature network and tuned by evolutionary search on a coverage
objective.
"""
from .errors import CapExceededError, DataError, HyperoccError
from .dataset import ColumnMarginal, Dataset, PlantSpec, generate_planted, load_csv, marginals, write_csv
from .scramble import ScrambleSource, SdsSample, enumerate_exact, sample_mc
from .network import ActivationTable, FeatureNetwork, ThresholdRule, eval_rule, propagate
from .metrics import (
    HocReport,
    hoc,
    mutual_information,
    pearson_binary,
    score_network,
    true_probability,
)
from .objective import CoverageConfig, CoverageReport, coverage
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ActivationTable",
    "CapExceededError",
    "ColumnMarginal",
    "CoverageConfig",
    "CoverageReport",
    "DataError",
    "Dataset",
    "FeatureNetwork",
    "HocReport",
    "HyperoccError",
    "PlantSpec",
    "ScrambleSource",
    "SdsSample",
    "ThresholdRule",
    "coverage",
    "enumerate_exact",
    "eval_rule",
    "generate_planted",
    "hoc",
    "load_csv",
    "marginals",
    "mutual_information",
    "pearson_binary",
    "propagate",
    "sample_mc",
    "score_network",
    "true_probability",
    "write_csv",
]
