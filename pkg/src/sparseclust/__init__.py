"""Distributed spectral graph clustering with communication-efficient sparsifiers."""

from .errors import (
    ChainError,
    ConfigError,
    ConvergenceError,
    DegenerateError,
    InputError,
    ParseError,
    SparseClustError,
)
from .graph import WeightedGraph, conductance, laplacian, ncut, normalized_laplacian
from .netsim import CommLedger, CostModel, partition_edges
from .protocols import gap_report, run_baseline, run_blackboard, run_msgpassing

__all__ = [
    "ChainError", "ConfigError", "ConvergenceError", "DegenerateError", "InputError", "ParseError",
    "SparseClustError", "WeightedGraph", "conductance", "laplacian", "ncut", "normalized_laplacian",
    "CommLedger", "CostModel", "partition_edges", "gap_report", "run_baseline", "run_blackboard",
    "run_msgpassing",
]
