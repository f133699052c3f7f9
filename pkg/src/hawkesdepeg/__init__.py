"""Mutually-exciting Hawkes models for stablecoin depegging and crypto price jumps."""

__version__ = "0.1.0"

from .model import (BranchingMatrix, DimensionError, EventSequence, HawkesModel, ParameterError,
                    branching_matrix, count_before, intensity)
from .likelihood import (compute_r_table, log_likelihood, naive_log_likelihood, pack_params,
                         unpack_params)
from .optimizer import FitResult, OptimizerConfig, fit, nelder_mead
from .simulate import SimulationConfig, compensator_transform, simulate
from .ingest import (JumpEvent, OhlcBar, PercentileBand, extract_events, jump_magnitudes,
                     parse_ohlc_csv, quantile)

__all__ = [
    "BranchingMatrix", "DimensionError", "EventSequence", "HawkesModel", "ParameterError",
    "branching_matrix", "count_before", "intensity",
    "compute_r_table", "log_likelihood", "naive_log_likelihood", "pack_params", "unpack_params",
    "FitResult", "OptimizerConfig", "fit", "nelder_mead",
    "SimulationConfig", "compensator_transform", "simulate",
    "JumpEvent", "OhlcBar", "PercentileBand", "extract_events", "jump_magnitudes",
    "parse_ohlc_csv", "quantile",
]
