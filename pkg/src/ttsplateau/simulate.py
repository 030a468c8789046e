"""Monte Carlo oracle and synthetic-log generator.

Parallel traces draw each unit independently (Bernoulli p); sequential
traces follow a two-state absorbing chain, transitioning to correct with
probability p per round and staying correct afterwards. Wrong answers get a
key drawn uniformly from a distractor set so majority voting has something
to disagree about; correct answers carry the key "GOLD".

Reproducibility: draws come from counter-based Philox streams, one jumped
sub-stream per field (problem probability, solvability, unit outcomes,
distractor choice), with problem i owning a fixed counter block in each.
Every problem's randomness is therefore a pure function of (seed, problem
index): traces are bit-identical for a given config, and generating
problems in any order or in parallel cannot change them.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from .ingest import GenerationRecord, LogFrame, Strategy, emit_log
from .metrics import ScalingCurve, hit_curve

__all__ = ["SimConfig", "SimTrace", "simulate", "empirical_hit_curve", "GOLD_KEY"]

GOLD_KEY = "GOLD"


@dataclass(frozen=True, slots=True)
class SimConfig:
    """One simulation run.

    ``p_x`` is either a single per-unit success probability shared by all
    problems, or a (low, high) pair drawn uniformly per problem. ``f_max``
    below 1 marks each problem unsolvable with probability 1 - f_max, making
    f_max the asymptote of the fleet-level hit curve. ``distractors`` sets
    how many distinct wrong answer keys exist.
    """

    strategy: Strategy
    p_x: float | tuple[float, float]
    n_max: int = 32
    num_problems: int = 1000
    distractors: int = 4
    seed: int = 0
    f_max: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if isinstance(self.p_x, tuple):
            lo, hi = self.p_x
            if not (0.0 < lo <= hi <= 1.0):
                raise ValueError(f"p_x range must satisfy 0 < low <= high <= 1, got {self.p_x}")
        elif not (0.0 < self.p_x <= 1.0):
            raise ValueError(f"p_x must be in (0, 1], got {self.p_x}")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.num_problems < 1:
            raise ValueError("num_problems must be >= 1")
        if self.distractors < 1:
            raise ValueError("distractors must be >= 1")
        if not (0.0 < self.f_max <= 1.0):
            raise ValueError(f"f_max must be in (0, 1], got {self.f_max}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SimTrace:
    """Columnar simulation output.

    ``correct[i, j]`` is unit j+1 of problem i; ``key_ids`` indexes
    ``key_vocab`` (0 is GOLD). ``ground_truth_p`` is the per-problem success
    probability actually used; ``solvable`` is False for problems discarded
    by the f_max draw. ``records`` materializes GenerationRecord objects and
    costs O(num_problems * n_max).
    """

    config: SimConfig
    problem_ids: list[str]
    ground_truth_p: np.ndarray
    solvable: np.ndarray
    correct: np.ndarray
    key_ids: np.ndarray
    key_vocab: list[str]

    @property
    def n_max(self) -> int:
        return self.config.n_max

    @property
    def num_problems(self) -> int:
        return len(self.problem_ids)

    def iter_records(self) -> Iterator[GenerationRecord]:
        """Records in canonical order, one at a time."""
        for i, problem_id in enumerate(self.problem_ids):
            meta = {"true_p": repr(float(self.ground_truth_p[i]))}
            for j in range(self.n_max):
                yield GenerationRecord(
                    problem_id=problem_id,
                    strategy=self.config.strategy,
                    unit=j + 1,
                    correct=bool(self.correct[i, j]),
                    answer_key=self.key_vocab[int(self.key_ids[i, j])],
                    meta=meta,
                )

    @property
    def records(self) -> list[GenerationRecord]:
        return list(self.iter_records())

    def frame(self) -> LogFrame:
        return LogFrame(
            problem_ids=list(self.problem_ids),
            strategies=[self.config.strategy] * self.num_problems,
            n_units=np.full(self.num_problems, self.n_max, dtype=np.int64),
            correct=self.correct,
            key_ids=self.key_ids,
            key_vocab=list(self.key_vocab),
        )

    def to_jsonl(self, target: str | Path | IO[bytes]) -> None:
        """Emit the trace as a canonical JSONL log."""
        if isinstance(target, (str, Path)):
            with open(target, "wb") as fh:
                emit_log(self.iter_records(), fh, presorted=True)
        else:
            emit_log(self.iter_records(), target, presorted=True)

    def to_jsonl_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.to_jsonl(buf)
        return buf.getvalue()


# Jumped sub-stream index per field; problem i owns counter block i (of the
# field's draw width) inside each sub-stream.
_FIELD_P, _FIELD_SOLVABLE, _FIELD_UNITS, _FIELD_DISTRACTOR = 0, 1, 2, 3


def _field_rng(seed: int, field: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(field))


def simulate(config: SimConfig) -> SimTrace:
    """Generate a trace under ``config``; bit-identical for identical configs."""
    n, width = config.num_problems, config.n_max
    id_width = max(5, len(str(n - 1)))
    problem_ids = [f"p{i:0{id_width}d}" for i in range(n)]

    if isinstance(config.p_x, tuple):
        lo, hi = config.p_x
        if lo == hi:
            p_values = np.full(n, lo, dtype=np.float64)
        else:
            p_values = _field_rng(config.seed, _FIELD_P).uniform(lo, hi, size=n)
    else:
        p_values = np.full(n, float(config.p_x), dtype=np.float64)

    if config.f_max < 1.0:
        u_solvable = _field_rng(config.seed, _FIELD_SOLVABLE).random(n)
        solvable = u_solvable >= 1.0 - config.f_max
    else:
        solvable = np.ones(n, dtype=bool)

    u = _field_rng(config.seed, _FIELD_UNITS).random((n, width))
    distractor = _field_rng(config.seed, _FIELD_DISTRACTOR).integers(
        1, config.distractors + 1, size=(n, width), dtype=np.int32
    )

    hits = (u < p_values[:, None]) & solvable[:, None]
    if config.strategy is Strategy.SEQUENTIAL:
        # absorbing: correct from the first successful round onwards
        ever = hits.any(axis=1)
        first = hits.argmax(axis=1)
        hits = ever[:, None] & (np.arange(width)[None, :] >= first[:, None])

    correct = hits.astype(np.uint8)
    key_ids = np.where(hits, np.int32(0), distractor)
    vocab = [GOLD_KEY] + [f"W{i}" for i in range(1, config.distractors + 1)]
    return SimTrace(
        config=config,
        problem_ids=problem_ids,
        ground_truth_p=p_values,
        solvable=solvable,
        correct=correct,
        key_ids=key_ids,
        key_vocab=vocab,
    )


def empirical_hit_curve(trace: SimTrace, n_max: int | None = None) -> ScalingCurve:
    """Fraction of problems solved within the first N units, for N = 1..n_max."""
    if trace.num_problems == 0:
        raise ValueError("trace has no problems")
    if n_max is None:
        n_max = trace.n_max
    if not 1 <= n_max <= trace.n_max:
        raise ValueError(f"n_max must be in [1, {trace.n_max}], got {n_max}")
    return hit_curve(trace.frame(), n_max)
