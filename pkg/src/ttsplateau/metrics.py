"""Evaluation metrics over generation logs.

Hit@N counts a problem as solved when any of its first N units is correct.
Accuracy applies the paradigm's selection rule: majority vote over answer
keys for parallel logs (ties to the key of the lowest-index unit), the
literal round-N answer for sequential logs. Pearson correlation compares
predicted against observed saturation budgets.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .ingest import AnalysisError, GenerationRecord, LogFormatError, LogFrame, Strategy, as_frame

__all__ = [
    "ScalingCurve",
    "CorrelationReport",
    "hit_at_n",
    "accuracy_at_n",
    "hit_curve",
    "accuracy_curve",
    "pearson",
    "saturation_histogram",
    "curve_to_csv",
    "curve_to_json",
    "histogram_to_csv",
    "histogram_to_json",
]


@dataclass(frozen=True)
class ScalingCurve:
    """Metric values over budgets: ordered (n, value) points."""

    metric: str  # "hit" or "accuracy"
    points: list[tuple[int, float]]

    def __post_init__(self) -> None:
        if self.metric not in ("hit", "accuracy"):
            raise ValueError(f"metric must be 'hit' or 'accuracy', got {self.metric!r}")
        last_n = 0
        for n, value in self.points:
            if n <= last_n:
                raise ValueError("point budgets must be strictly increasing")
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"curve value {value} outside [0, 1]")
            last_n = n
        if self.metric == "hit":
            values = [v for _, v in self.points]
            if any(b < a for a, b in zip(values, values[1:])):
                raise ValueError("hit curves must be nondecreasing")

    def value_at(self, n: int) -> float:
        for point_n, value in self.points:
            if point_n == n:
                return value
        raise KeyError(f"no point at n={n}")


@dataclass(frozen=True)
class CorrelationReport:
    r: float
    n_points: int
    excluded_unsolved: int = 0

    def __post_init__(self) -> None:
        if not abs(self.r) <= 1.0:
            raise ValueError(f"|r| must be <= 1, got {self.r}")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")


def _require_complete(frame: LogFrame, n: int) -> None:
    if n < 1:
        raise ValueError("n must be >= 1")
    short = np.nonzero(frame.n_units < n)[0]
    if short.size:
        i = int(short[0])
        raise LogFormatError(
            f"log incomplete at n={n}: problem '{frame.problem_ids[i]}' has only "
            f"{int(frame.n_units[i])} units"
        )


def hit_at_n(log: LogFrame | Iterable[GenerationRecord], n: int) -> float:
    """Fraction of problems with at least one correct unit among the first n."""
    frame = as_frame(log)
    _require_complete(frame, n)
    first = kernels.first_correct_unit(frame.correct, frame.n_units)
    return float(np.count_nonzero((first > 0) & (first <= n)) / frame.n_problems)


def _gold_ids(frame: LogFrame) -> np.ndarray:
    """Per-problem gold key id (-1 when the problem has no correct record).

    Validates that answer keys are present and internally consistent: all
    correct records of a problem share one key and no incorrect record
    carries it.
    """
    gold = np.full(frame.n_problems, -1, dtype=np.int32)
    for i in range(frame.n_problems):
        limit = int(frame.n_units[i])
        keys = frame.key_ids[i, :limit]
        if (keys < 0).any():
            j = int((keys < 0).argmax())
            raise LogFormatError(
                f"problem '{frame.problem_ids[i]}': unit {j + 1} has no answer_key; "
                "parallel accuracy needs keys on every record"
            )
        flags = frame.correct[i, :limit].astype(bool)
        correct_keys = np.unique(keys[flags])
        if correct_keys.size > 1:
            names = [frame.key_vocab[int(k)] for k in correct_keys]
            raise LogFormatError(
                f"problem '{frame.problem_ids[i]}': correct records carry multiple keys {names}"
            )
        if correct_keys.size == 1:
            g = int(correct_keys[0])
            if (keys[~flags] == g).any():
                raise LogFormatError(
                    f"problem '{frame.problem_ids[i]}': key '{frame.key_vocab[g]}' appears "
                    "on both correct and incorrect records"
                )
            gold[i] = g
    return gold


def _majority_matrix(frame: LogFrame) -> np.ndarray:
    gold = _gold_ids(frame)
    n_keys = max(len(frame.key_vocab), 1)
    return kernels.prefix_gold_majority(frame.key_ids, frame.n_units, gold, n_keys)


def accuracy_at_n(
    log: LogFrame | Iterable[GenerationRecord], n: int, strategy: Strategy | str
) -> float:
    """Fraction of problems answered correctly with budget n under the
    strategy's selection rule."""
    frame = as_frame(log)
    strategy = Strategy(strategy)
    _require_complete(frame, n)
    mismatched = [s for s in frame.strategies if s is not strategy]
    if mismatched:
        raise LogFormatError(
            f"log contains {mismatched[0].value} records but accuracy was requested "
            f"for {strategy.value}"
        )
    if strategy is Strategy.PARALLEL:
        win = _majority_matrix(frame)
        return float(win[:, n - 1].sum() / frame.n_problems)
    return float(frame.correct[:, n - 1].sum() / frame.n_problems)


def hit_curve(log: LogFrame | Iterable[GenerationRecord], n_max: int) -> ScalingCurve:
    frame = as_frame(log)
    _require_complete(frame, n_max)
    first = kernels.first_correct_unit(frame.correct, frame.n_units)
    solved_at = np.bincount(first[first > 0], minlength=n_max + 1)[1 : n_max + 1]
    cum = np.cumsum(solved_at) / frame.n_problems
    return ScalingCurve("hit", [(n + 1, float(cum[n])) for n in range(n_max)])


def accuracy_curve(
    log: LogFrame | Iterable[GenerationRecord], n_max: int, strategy: Strategy | str
) -> ScalingCurve:
    frame = as_frame(log)
    strategy = Strategy(strategy)
    _require_complete(frame, n_max)
    if strategy is Strategy.PARALLEL:
        win = _majority_matrix(frame)
        values = win[:, :n_max].sum(axis=0) / frame.n_problems
    else:
        values = frame.correct[:, :n_max].sum(axis=0) / frame.n_problems
    return ScalingCurve("accuracy", [(n + 1, float(values[n])) for n in range(n_max)])


def pearson(
    predicted: Sequence[float],
    observed: Sequence[float],
    *,
    unsolved: Sequence[bool] | None = None,
    include_unsolved: bool = False,
) -> CorrelationReport:
    """Pearson correlation between predicted and observed saturation budgets.

    When ``unsolved`` flags are given and ``include_unsolved`` is False,
    flagged pairs are dropped and counted in the report.
    """
    a = np.asarray(predicted, dtype=np.float64)
    b = np.asarray(observed, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("predicted and observed must be 1-d sequences of equal length")
    excluded = 0
    if unsolved is not None:
        mask = np.asarray(unsolved, dtype=bool)
        if mask.shape != a.shape:
            raise ValueError("unsolved flags must match the data length")
        if not include_unsolved:
            excluded = int(mask.sum())
            a, b = a[~mask], b[~mask]
    if a.size < 2:
        raise AnalysisError(f"need at least 2 pairs for correlation, have {a.size}")
    da = a - a.mean()
    db = b - b.mean()
    var_a = float(da @ da)
    var_b = float(db @ db)
    if var_a == 0.0:
        raise AnalysisError("predicted values have zero variance")
    if var_b == 0.0:
        raise AnalysisError("observed values have zero variance")
    r = float(da @ db) / math.sqrt(var_a * var_b)
    r = max(-1.0, min(1.0, r))
    return CorrelationReport(r=r, n_points=int(a.size), excluded_unsolved=excluded)


def saturation_histogram(saturations: Sequence[int], n_max: int) -> list[int]:
    """Counts of observed saturation budgets per N in 1..n_max."""
    if len(saturations) == 0:
        raise ValueError("no saturation values given")
    values = np.asarray(saturations, dtype=np.int64)
    if values.min() < 1 or values.max() > n_max:
        raise ValueError(f"saturation values must lie in [1, {n_max}]")
    counts = np.bincount(values, minlength=n_max + 1)[1 : n_max + 1]
    return [int(c) for c in counts]


def curve_to_csv(curve: ScalingCurve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "value"])
    for n, value in curve.points:
        writer.writerow([n, repr(value)])
    return buf.getvalue()


def curve_to_json(curve: ScalingCurve) -> str:
    obj = {"metric": curve.metric, "points": [[n, v] for n, v in curve.points]}
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def histogram_to_csv(counts: Sequence[int]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "count"])
    for n, count in enumerate(counts, start=1):
        writer.writerow([n, count])
    return buf.getvalue()


def histogram_to_json(counts: Sequence[int]) -> str:
    obj = {"n_max": len(counts), "counts": list(counts)}
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"
