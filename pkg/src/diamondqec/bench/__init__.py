"""End-to-end experiments and the layout comparisons built on them."""

from .analysis import (
    ASYMPTOTIC_RATIO,
    AnalysisError,
    CrossoverCurve,
    CrossoverRow,
    LerModel,
    ThresholdEstimate,
    crossover_analysis,
    distance_ratio,
    estimate_threshold,
    fit_ler_model,
    lines,
    max_distance,
)
from .outputs import KINDS, emit_outputs
from .sweep import (
    DECODER_MODES,
    LER_COLUMNS,
    LerPoint,
    SweepConfig,
    load_config,
    point_seed,
    read_ler_csv,
    run_point,
    run_sweep,
    wilson_interval,
    write_ler_csv,
)

__all__ = [
    "ASYMPTOTIC_RATIO",
    "AnalysisError",
    "CrossoverCurve",
    "CrossoverRow",
    "DECODER_MODES",
    "KINDS",
    "LER_COLUMNS",
    "LerModel",
    "LerPoint",
    "SweepConfig",
    "ThresholdEstimate",
    "crossover_analysis",
    "distance_ratio",
    "emit_outputs",
    "estimate_threshold",
    "fit_ler_model",
    "lines",
    "load_config",
    "max_distance",
    "point_seed",
    "read_ler_csv",
    "run_point",
    "run_sweep",
    "wilson_interval",
    "write_ler_csv",
]
