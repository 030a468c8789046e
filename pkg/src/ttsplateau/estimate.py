"""Per-problem parameter estimation and validation-split calibration.

Estimators (from n_used observed units per problem):
  parallel:   p_hat = correct_count / n_used
  sequential: p_hat = first_solve_round / n_used (the literal published rule;
              the standard geometric MLE 1 / first_solve_round is available
              as the 'inverse_first_solve' variant for sensitivity checks)
Problems never solved within n_used units are floored at 1e-5 so the
saturation formula's logarithms stay defined.

Calibration fits the single free quantity epsilon / f_max by minimizing mean
absolute error between predicted and observed saturation budgets over a
logarithmic grid, with one local refinement pass; ties prefer the larger
ratio (the cheaper budget).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .ingest import AnalysisError, GenerationRecord, LogFormatError, LogFrame, Strategy
from .metrics import ScalingCurve
from .model import GainThreshold, ScalingModel, saturation_point
from . import kernels

__all__ = [
    "UNSOLVED_FLOOR",
    "Estimator",
    "ProblemEstimate",
    "ObservedSaturation",
    "SplitSpec",
    "Calibration",
    "estimate_parallel",
    "estimate_sequential",
    "estimate_frame",
    "observed_saturation",
    "observed_saturations",
    "split",
    "predict_n_star",
    "calibrate",
    "fit_aggregate_curve",
    "DEFAULT_GRID_LO",
    "DEFAULT_GRID_HI",
    "DEFAULT_GRID_POINTS",
]

# Floor for problems never solved within the observed units; keeps the
# saturation formula's logarithms finite.
UNSOLVED_FLOOR = 1e-5

DEFAULT_GRID_LO = 1e-6
DEFAULT_GRID_HI = 1.0
DEFAULT_GRID_POINTS = 200


class Estimator(str, Enum):
    SAMPLE_FRACTION = "sample_fraction"
    FIRST_SOLVE_RATIO = "first_solve_ratio"
    INVERSE_FIRST_SOLVE = "inverse_first_solve"
    UNSOLVED_FLOOR = "unsolved_floor"


@dataclass(frozen=True, slots=True)
class ProblemEstimate:
    problem_id: str
    p_hat: float
    estimator: Estimator
    n_used: int

    def __post_init__(self) -> None:
        if not (0.0 < self.p_hat <= 1.0):
            raise ValueError(f"p_hat must be in (0, 1], got {self.p_hat}")
        if self.estimator is Estimator.UNSOLVED_FLOOR and self.p_hat != UNSOLVED_FLOOR:
            raise ValueError("unsolved_floor estimates must equal the floor exactly")
        if self.n_used < 1:
            raise ValueError("n_used must be >= 1")


@dataclass(frozen=True, slots=True)
class ObservedSaturation:
    """Smallest budget at which the problem was first solved.

    Unsolved problems report n_used with the flag set; correlation callers
    usually exclude them.
    """

    n: int
    unsolved: bool = False

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("observed saturation must be >= 1")


@dataclass(frozen=True, slots=True)
class SplitSpec:
    seed: int
    validation_fraction: float = 0.8

    def __post_init__(self) -> None:
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValueError("validation_fraction must be in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, slots=True)
class Calibration:
    """Fitted epsilon / f_max ratio and its validation loss (MAE in units)."""

    ratio: float
    loss: float
    grid: str

    def __post_init__(self) -> None:
        if not self.ratio > 0.0:
            raise ValueError("ratio must be > 0")
        if self.loss < 0.0:
            raise ValueError("loss must be >= 0")

    def to_json(self) -> str:
        obj = {"ratio": self.ratio, "loss": self.loss, "grid": self.grid}
        return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Calibration":
        obj = json.loads(text)
        return cls(ratio=float(obj["ratio"]), loss=float(obj["loss"]), grid=str(obj["grid"]))


def _one_problem(records: Sequence[GenerationRecord], n_used: int, strategy: Strategy) -> str:
    if n_used < 1:
        raise ValueError("n_used must be >= 1")
    if len(records) != n_used:
        raise LogFormatError(f"expected exactly {n_used} records, got {len(records)}")
    problem_ids = {rec.problem_id for rec in records}
    if len(problem_ids) != 1:
        raise LogFormatError(f"records span multiple problems: {sorted(problem_ids)}")
    wrong = [rec for rec in records if rec.strategy is not strategy]
    if wrong:
        raise LogFormatError(
            f"expected only {strategy.value} records, found {wrong[0].strategy.value} "
            f"at unit {wrong[0].unit}"
        )
    units = sorted(rec.unit for rec in records)
    if units != list(range(1, n_used + 1)):
        raise LogFormatError(f"units must be contiguous 1..{n_used}, got {units}")
    return problem_ids.pop()


def estimate_parallel(records: Sequence[GenerationRecord], n_used: int) -> ProblemEstimate:
    """Sample-fraction estimate: correct count / n_used, floored when zero."""
    problem_id = _one_problem(records, n_used, Strategy.PARALLEL)
    n_correct = sum(1 for rec in records if rec.correct)
    if n_correct == 0:
        return ProblemEstimate(problem_id, UNSOLVED_FLOOR, Estimator.UNSOLVED_FLOOR, n_used)
    return ProblemEstimate(problem_id, n_correct / n_used, Estimator.SAMPLE_FRACTION, n_used)


def estimate_sequential(
    records: Sequence[GenerationRecord],
    n_used: int,
    estimator: Estimator | str = Estimator.FIRST_SOLVE_RATIO,
) -> ProblemEstimate:
    """First-solve estimate for an absorbing round sequence.

    Rejects non-absorbing sequences (a wrong answer after a correct one),
    naming the violating round.
    """
    estimator = Estimator(estimator)
    if estimator not in (Estimator.FIRST_SOLVE_RATIO, Estimator.INVERSE_FIRST_SOLVE):
        raise ValueError(f"estimator must be a sequential variant, got {estimator.value}")
    problem_id = _one_problem(records, n_used, Strategy.SEQUENTIAL)
    by_round = sorted(records, key=lambda rec: rec.unit)
    first_solve = 0
    for rec in by_round:
        if rec.correct and first_solve == 0:
            first_solve = rec.unit
        elif not rec.correct and first_solve:
            raise LogFormatError(
                f"problem '{problem_id}': round {rec.unit} is incorrect after the answer "
                f"was first correct at round {first_solve}; sequence is not absorbing"
            )
    if first_solve == 0:
        return ProblemEstimate(problem_id, UNSOLVED_FLOOR, Estimator.UNSOLVED_FLOOR, n_used)
    if estimator is Estimator.FIRST_SOLVE_RATIO:
        return ProblemEstimate(problem_id, first_solve / n_used, estimator, n_used)
    return ProblemEstimate(problem_id, 1.0 / first_solve, estimator, n_used)


def estimate_frame(
    frame: LogFrame, estimator: Estimator | str | None = None
) -> list[ProblemEstimate]:
    """Batch estimates for every problem of a single-strategy frame."""
    strategy = frame.single_strategy()
    n_used = frame.uniform_units()
    first = kernels.first_correct_unit(frame.correct, frame.n_units)
    counts = frame.correct[:, :n_used].astype(np.int64).sum(axis=1)

    out: list[ProblemEstimate] = []
    if strategy is Strategy.PARALLEL:
        if estimator is not None and Estimator(estimator) is not Estimator.SAMPLE_FRACTION:
            raise ValueError("parallel logs use the sample_fraction estimator")
        for i, problem_id in enumerate(frame.problem_ids):
            if counts[i] == 0:
                out.append(
                    ProblemEstimate(problem_id, UNSOLVED_FLOOR, Estimator.UNSOLVED_FLOOR, n_used)
                )
            else:
                out.append(
                    ProblemEstimate(
                        problem_id, int(counts[i]) / n_used, Estimator.SAMPLE_FRACTION, n_used
                    )
                )
        return out

    chosen = Estimator(estimator) if estimator is not None else Estimator.FIRST_SOLVE_RATIO
    if chosen not in (Estimator.FIRST_SOLVE_RATIO, Estimator.INVERSE_FIRST_SOLVE):
        raise ValueError(f"estimator must be a sequential variant, got {chosen.value}")
    # absorbing check, vectorized: units at or after the first solve must all
    # be correct, so the correct count equals n_used - first + 1
    solved = first > 0
    bad = solved & (counts != n_used - first + 1)
    if bad.any():
        i = int(np.nonzero(bad)[0][0])
        row = frame.correct[i, :n_used].astype(bool)
        wrong_round = int(np.nonzero(~row[int(first[i]) - 1 :])[0][0]) + int(first[i])
        raise LogFormatError(
            f"problem '{frame.problem_ids[i]}': round {wrong_round} is incorrect after the "
            f"answer was first correct at round {int(first[i])}; sequence is not absorbing"
        )
    for i, problem_id in enumerate(frame.problem_ids):
        if first[i] == 0:
            out.append(
                ProblemEstimate(problem_id, UNSOLVED_FLOOR, Estimator.UNSOLVED_FLOOR, n_used)
            )
        elif chosen is Estimator.FIRST_SOLVE_RATIO:
            out.append(ProblemEstimate(problem_id, int(first[i]) / n_used, chosen, n_used))
        else:
            out.append(ProblemEstimate(problem_id, 1.0 / int(first[i]), chosen, n_used))
    return out


def observed_saturation(records: Sequence[GenerationRecord], n_used: int) -> ObservedSaturation:
    """First unit (canonical order) at which the problem is solved."""
    strategy = records[0].strategy if records else Strategy.PARALLEL
    _one_problem(records, n_used, strategy)
    solved = sorted((rec.unit for rec in records if rec.correct), key=int)
    if solved:
        return ObservedSaturation(n=solved[0], unsolved=False)
    return ObservedSaturation(n=n_used, unsolved=True)


def observed_saturations(frame: LogFrame) -> list[ObservedSaturation]:
    """Batch observed saturation, aligned with frame rows."""
    n_used = frame.uniform_units()
    first = kernels.first_correct_unit(frame.correct, frame.n_units)
    return [
        ObservedSaturation(n=int(f), unsolved=False) if f > 0
        else ObservedSaturation(n=n_used, unsolved=True)
        for f in first
    ]


def split(problem_ids: Iterable[str], spec: SplitSpec) -> tuple[list[str], list[str]]:
    """Deterministic validation/test partition of the problem ids.

    Sizes follow round(validation_fraction * n), clamped so neither side is
    empty; both halves are returned sorted.
    """
    ids = sorted(problem_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("problem ids must be unique")
    n = len(ids)
    if n < 2:
        raise ValueError(f"need at least 2 problems to split, got {n}")
    n_val = int(round(spec.validation_fraction * n))
    n_val = min(max(n_val, 1), n - 1)
    order = np.random.default_rng(spec.seed).permutation(n)
    chosen = set(order[:n_val].tolist())
    validation = [ids[i] for i in range(n) if i in chosen]
    test = [ids[i] for i in range(n) if i not in chosen]
    return validation, test


def predict_n_star(p_hat: float, ratio: float) -> tuple[int, bool]:
    """Saturation budget for an estimate, with epsilon / f_max folded into
    ``ratio`` (the budget depends on epsilon and f_max only through it)."""
    point = saturation_point(ScalingModel(p_x=p_hat, f_max=1.0), GainThreshold(ratio))
    return point.n_star, point.degenerate


def _grid_description(lo: float, hi: float, points: int) -> str:
    return f"log[{lo:g},{hi:g}]x{points}+refine{points}"


def _mae_for_ratio(
    ratio: float, unique_p: np.ndarray, inverse: np.ndarray, observed: np.ndarray
) -> float:
    predictions = np.array([predict_n_star(p, ratio)[0] for p in unique_p], dtype=np.float64)
    return float(np.abs(predictions[inverse] - observed).mean())


def calibrate(
    estimates: Sequence[ProblemEstimate],
    observations: Sequence[ObservedSaturation],
    *,
    grid_lo: float = DEFAULT_GRID_LO,
    grid_hi: float = DEFAULT_GRID_HI,
    grid_points: int = DEFAULT_GRID_POINTS,
    include_unsolved: bool = False,
) -> Calibration:
    """Fit the epsilon / f_max ratio on a validation set.

    Minimizes mean absolute error between predicted and observed saturation
    over a log grid, refines once around the winner, and breaks ties toward
    the larger ratio. Unsolved problems are excluded unless requested.
    """
    if len(estimates) != len(observations):
        raise ValueError("estimates and observations must be aligned")
    if not 0.0 < grid_lo < grid_hi:
        raise ValueError("grid bounds must satisfy 0 < lo < hi")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")

    p_hat = np.array([e.p_hat for e in estimates], dtype=np.float64)
    observed = np.array([o.n for o in observations], dtype=np.float64)
    if not include_unsolved:
        keep = ~np.array([o.unsolved for o in observations], dtype=bool)
        p_hat, observed = p_hat[keep], observed[keep]
    if p_hat.size == 0:
        raise AnalysisError("validation set is empty after exclusions; cannot calibrate")

    # estimates take few distinct values (k / n_used and the floor), so
    # predictions are memoized per unique estimate
    unique_p, inverse = np.unique(p_hat, return_inverse=True)

    def search(candidates: np.ndarray) -> tuple[float, float]:
        best_r, best_loss = None, math.inf
        for r in candidates:
            loss = _mae_for_ratio(float(r), unique_p, inverse, observed)
            if loss < best_loss or (loss == best_loss and r > best_r):
                best_r, best_loss = float(r), loss
        return best_r, best_loss

    coarse = np.logspace(math.log10(grid_lo), math.log10(grid_hi), grid_points)
    best_r, _ = search(coarse)
    idx = int(np.argmin(np.abs(coarse - best_r)))
    lo = coarse[max(idx - 1, 0)]
    hi = coarse[min(idx + 1, grid_points - 1)]
    refined = np.logspace(math.log10(lo), math.log10(hi), grid_points)
    best_r, best_loss = search(np.append(refined, best_r))

    return Calibration(
        ratio=best_r, loss=best_loss, grid=_grid_description(grid_lo, grid_hi, grid_points)
    )


def _fit_sse(p: float, budgets: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """Best f_max (clamped to (0, 1]) and SSE for a candidate p."""
    g = 1.0 - (1.0 - p) ** budgets
    denom = float(g @ g)
    if denom == 0.0:
        return 1.0, float(values @ values)
    f = float(g @ values) / denom
    f = min(max(f, 1e-12), 1.0)
    resid = values - f * g
    return f, float(resid @ resid)


def fit_aggregate_curve(curve: ScalingCurve) -> ScalingModel:
    """Least-squares (p_x, f_max) fit of a saturating hit curve.

    Grid search over p_x with the closed-form optimal f_max per candidate,
    then golden-section refinement on p_x.
    """
    if len(curve.points) < 3:
        raise ValueError("need at least 3 curve points to fit")
    budgets = np.array([n for n, _ in curve.points], dtype=np.float64)
    values = np.array([v for _, v in curve.points], dtype=np.float64)
    if np.any(np.diff(values) < -1e-12):
        raise ValueError("curve must be nondecreasing")
    if values.max() == 0.0:
        raise AnalysisError("flat-zero curve: success probability is unidentifiable")

    grid = np.linspace(1.0 / 512, 1.0, 512)
    sses = np.array([_fit_sse(p, budgets, values)[1] for p in grid])
    k = int(np.argmin(sses))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]

    # golden-section refinement on the bracketing interval
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = _fit_sse(c, budgets, values)[1]
    fd = _fit_sse(d, budgets, values)[1]
    for _ in range(80):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = _fit_sse(c, budgets, values)[1]
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = _fit_sse(d, budgets, values)[1]
    p_best = (a + b) / 2.0

    # keep the exact boundary solution when it is at least as good
    candidates = [p_best, float(grid[k]), 1.0]
    best_p, best_f, best_sse = None, None, math.inf
    for p in candidates:
        f, sse = _fit_sse(p, budgets, values)
        if sse < best_sse or (sse == best_sse and best_p is not None and p > best_p):
            best_p, best_f, best_sse = p, f, sse
    return ScalingModel(p_x=best_p, f_max=best_f)
