"""Toolkit for locating the plateau of repeated-inference scaling.

Models per-problem success under two test-time strategies (independent
sampling with majority voting, and round-by-round rethinking), computes the
closed-form budget past which marginal gains fall below a threshold,
estimates per-problem parameters from generation logs, calibrates the gain
threshold on a validation split, and verifies predictions against a Monte
Carlo simulator.
"""

from .estimate import (
    Calibration,
    Estimator,
    ObservedSaturation,
    ProblemEstimate,
    SplitSpec,
    UNSOLVED_FLOOR,
    calibrate,
    estimate_frame,
    estimate_parallel,
    estimate_sequential,
    fit_aggregate_curve,
    observed_saturation,
    observed_saturations,
    predict_n_star,
    split,
)
from .ingest import (
    AnalysisError,
    GenerationRecord,
    LogFormatError,
    LogFrame,
    Strategy,
    as_frame,
    emit_log,
    emit_log_bytes,
    parse_log,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .metrics import (
    CorrelationReport,
    ScalingCurve,
    accuracy_at_n,
    accuracy_curve,
    hit_at_n,
    hit_curve,
    pearson,
    saturation_histogram,
)
from .model import (
    GainThreshold,
    SaturationPoint,
    ScalingModel,
    all_fail_probability,
    first_success_pmf,
    hit_probability,
    marginal_gain,
    saturation_point,
)
from .simulate import GOLD_KEY, SimConfig, SimTrace, empirical_hit_curve, simulate

__version__ = "0.1.0"

__all__ = [
    "AnalysisError",
    "Calibration",
    "CorrelationReport",
    "Estimator",
    "GOLD_KEY",
    "GainThreshold",
    "GenerationRecord",
    "KERNEL_BACKEND",
    "LogFormatError",
    "LogFrame",
    "ObservedSaturation",
    "ProblemEstimate",
    "SaturationPoint",
    "ScalingCurve",
    "ScalingModel",
    "SimConfig",
    "SimTrace",
    "SplitSpec",
    "Strategy",
    "UNSOLVED_FLOOR",
    "accuracy_at_n",
    "accuracy_curve",
    "all_fail_probability",
    "as_frame",
    "calibrate",
    "emit_log",
    "emit_log_bytes",
    "empirical_hit_curve",
    "estimate_frame",
    "estimate_parallel",
    "estimate_sequential",
    "first_success_pmf",
    "fit_aggregate_curve",
    "hit_at_n",
    "hit_curve",
    "hit_probability",
    "marginal_gain",
    "observed_saturation",
    "observed_saturations",
    "parse_log",
    "pearson",
    "predict_n_star",
    "saturation_histogram",
    "saturation_point",
    "simulate",
    "split",
]
