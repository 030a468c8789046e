"""Canonical generation-log format: JSONL parsing, validation, and emission.

One line per generation event. Canonical field order is ``problem_id``,
``strategy``, ``unit``, ``correct``, ``answer_key``, ``meta``; optional
fields are omitted when absent, meta keys are sorted, and records are sorted
by (problem_id, strategy, unit). Emission is byte-stable: parse(emit(x)) == x
and emit is idempotent.
"""

from __future__ import annotations

import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "Strategy",
    "GenerationRecord",
    "LogFormatError",
    "AnalysisError",
    "LogFrame",
    "parse_log",
    "emit_log",
    "emit_log_bytes",
    "as_frame",
]


class LogFormatError(ValueError):
    """A log violates the format contract (bad JSON, bad fields, bad units)."""


class AnalysisError(RuntimeError):
    """A computation is statistically or numerically undefined for its input."""


class Strategy(str, Enum):
    PARALLEL = "parallel"
    SEQUENTIAL = "sequential"


@dataclass(frozen=True, slots=True)
class GenerationRecord:
    """One generation event: unit ``unit`` of ``problem_id`` under ``strategy``.

    ``unit`` is the 1-based sample index (parallel) or rethink round
    (sequential). ``answer_key`` identifies the produced answer for majority
    voting; ``meta`` carries opaque provenance strings (model, benchmark).
    """

    problem_id: str
    strategy: Strategy
    unit: int
    correct: bool
    answer_key: str | None = None
    meta: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.problem_id, str) or not self.problem_id:
            raise LogFormatError("problem_id must be a non-empty string")
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if not isinstance(self.unit, int) or isinstance(self.unit, bool) or self.unit < 1:
            raise LogFormatError(f"unit must be a positive integer, got {self.unit!r}")
        if not isinstance(self.correct, bool):
            raise LogFormatError(f"correct must be a boolean, got {self.correct!r}")
        if self.answer_key is not None and not isinstance(self.answer_key, str):
            raise LogFormatError("answer_key must be a string or omitted")
        if self.meta is not None:
            for k, v in self.meta.items():
                if not isinstance(k, str) or not isinstance(v, str):
                    raise LogFormatError("meta must map strings to strings")

    def sort_key(self) -> tuple[str, str, int]:
        return (self.problem_id, self.strategy.value, self.unit)


_FIELDS = {"problem_id", "strategy", "unit", "correct", "answer_key", "meta"}


def _record_from_obj(obj: object, line_no: int) -> GenerationRecord:
    if not isinstance(obj, dict):
        raise LogFormatError(f"line {line_no}: record must be a JSON object")
    unknown = set(obj) - _FIELDS
    if unknown:
        raise LogFormatError(f"line {line_no}: unknown fields {sorted(unknown)}")
    for name in ("problem_id", "strategy", "unit", "correct"):
        if name not in obj:
            raise LogFormatError(f"line {line_no}: missing required field '{name}'")
    strategy = obj["strategy"]
    if strategy not in (Strategy.PARALLEL.value, Strategy.SEQUENTIAL.value):
        raise LogFormatError(f"line {line_no}: invalid strategy {strategy!r}")
    try:
        return GenerationRecord(
            problem_id=obj["problem_id"],
            strategy=Strategy(strategy),
            unit=obj["unit"],
            correct=obj["correct"],
            answer_key=obj.get("answer_key"),
            meta=obj.get("meta"),
        )
    except LogFormatError as exc:
        raise LogFormatError(f"line {line_no}: {exc}") from None


def parse_log(source: str | bytes | Path | IO[bytes] | IO[str]) -> list[GenerationRecord]:
    """Parse and validate a JSONL log; returns records in canonical order.

    ``source`` is the log content (str/bytes), an open stream, or a
    ``pathlib.Path`` to read. Rejects malformed JSON, unknown or ill-typed
    fields, duplicate (problem_id, strategy, unit) triples, and gaps in unit
    numbering, always naming the offending line.
    """
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    records: list[GenerationRecord] = []
    seen: dict[tuple[str, str], dict[int, int]] = defaultdict(dict)
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"line {line_no}: malformed JSON ({exc.msg})") from None
        rec = _record_from_obj(obj, line_no)
        group = seen[(rec.problem_id, rec.strategy.value)]
        if rec.unit in group:
            raise LogFormatError(
                f"line {line_no}: duplicate unit {rec.unit} for problem "
                f"'{rec.problem_id}' ({rec.strategy.value}); first seen on line {group[rec.unit]}"
            )
        group[rec.unit] = line_no
        records.append(rec)

    for (problem_id, strategy), units in seen.items():
        expected = 1
        for unit in sorted(units):
            if unit != expected:
                raise LogFormatError(
                    f"line {units[unit]}: unit numbering gap for problem "
                    f"'{problem_id}' ({strategy}): expected unit {expected}, found {unit}"
                )
            expected += 1

    records.sort(key=GenerationRecord.sort_key)
    return records


def _record_line(rec: GenerationRecord) -> str:
    obj: dict[str, object] = {
        "problem_id": rec.problem_id,
        "strategy": rec.strategy.value,
        "unit": rec.unit,
        "correct": rec.correct,
    }
    if rec.answer_key is not None:
        obj["answer_key"] = rec.answer_key
    if rec.meta:
        obj["meta"] = {k: rec.meta[k] for k in sorted(rec.meta)}
    return json.dumps(obj, ensure_ascii=True, separators=(",", ":"))


def emit_log(
    records: Iterable[GenerationRecord],
    stream: IO[bytes],
    *,
    presorted: bool = False,
) -> None:
    """Write records as canonical JSONL bytes.

    With ``presorted`` the input is streamed without buffering (order is
    still verified); otherwise records are sorted first.
    """
    if not presorted:
        records = sorted(records, key=GenerationRecord.sort_key)
    last: tuple[str, str, int] | None = None
    for rec in records:
        key = rec.sort_key()
        if last is not None and key < last:
            raise LogFormatError(f"records not in canonical order near {key}")
        last = key
        stream.write(_record_line(rec).encode("ascii") + b"\n")


def emit_log_bytes(records: Iterable[GenerationRecord]) -> bytes:
    buf = io.BytesIO()
    emit_log(records, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class LogFrame:
    """Columnar view of a validated log, one row per (problem_id, strategy).

    ``correct`` and ``key_ids`` are padded to the widest row; only the first
    ``n_units[i]`` cells of row ``i`` are meaningful. ``key_ids`` holds -1
    where the record had no answer_key. Rows are in canonical problem order.
    """

    problem_ids: list[str]
    strategies: list[Strategy]
    n_units: np.ndarray
    correct: np.ndarray
    key_ids: np.ndarray
    key_vocab: list[str] = field(default_factory=list)

    @property
    def n_problems(self) -> int:
        return len(self.problem_ids)

    @property
    def max_units(self) -> int:
        return int(self.correct.shape[1])

    def single_strategy(self) -> Strategy:
        """The log's unique strategy; raises when strategies are mixed."""
        kinds = set(self.strategies)
        if len(kinds) != 1:
            raise LogFormatError(
                "log mixes parallel and sequential records; analyze one strategy at a time"
            )
        return next(iter(kinds))

    def uniform_units(self) -> int:
        """The shared per-problem unit count; raises when rows differ."""
        if self.n_problems == 0:
            raise LogFormatError("empty log")
        lo, hi = int(self.n_units.min()), int(self.n_units.max())
        if lo != hi:
            raise LogFormatError(f"per-problem unit counts differ (min {lo}, max {hi})")
        return hi

    def row_records(self, i: int) -> list[GenerationRecord]:
        recs = []
        for j in range(int(self.n_units[i])):
            kid = int(self.key_ids[i, j])
            recs.append(
                GenerationRecord(
                    problem_id=self.problem_ids[i],
                    strategy=self.strategies[i],
                    unit=j + 1,
                    correct=bool(self.correct[i, j]),
                    answer_key=self.key_vocab[kid] if kid >= 0 else None,
                )
            )
        return recs

    @classmethod
    def from_records(cls, records: Sequence[GenerationRecord]) -> "LogFrame":
        groups: dict[tuple[str, str], list[GenerationRecord]] = defaultdict(list)
        for rec in records:
            groups[(rec.problem_id, rec.strategy.value)].append(rec)

        keys = sorted(groups)
        n_units = np.zeros(len(keys), dtype=np.int64)
        for i, key in enumerate(keys):
            recs = sorted(groups[key], key=lambda r: r.unit)
            units = [r.unit for r in recs]
            if units != list(range(1, len(recs) + 1)):
                raise LogFormatError(
                    f"problem '{key[0]}' ({key[1]}): units must be contiguous from 1, got {units}"
                )
            groups[key] = recs
            n_units[i] = len(recs)

        width = int(n_units.max()) if len(keys) else 0
        correct = np.zeros((len(keys), width), dtype=np.uint8)
        key_ids = np.full((len(keys), width), -1, dtype=np.int32)
        vocab: list[str] = []
        vocab_index: dict[str, int] = {}
        for i, key in enumerate(keys):
            for j, rec in enumerate(groups[key]):
                correct[i, j] = 1 if rec.correct else 0
                if rec.answer_key is not None:
                    kid = vocab_index.get(rec.answer_key)
                    if kid is None:
                        kid = len(vocab)
                        vocab_index[rec.answer_key] = kid
                        vocab.append(rec.answer_key)
                    key_ids[i, j] = kid

        return cls(
            problem_ids=[k[0] for k in keys],
            strategies=[Strategy(k[1]) for k in keys],
            n_units=n_units,
            correct=correct,
            key_ids=key_ids,
            key_vocab=vocab,
        )

    def iter_rows(self) -> Iterator[tuple[str, Strategy, int]]:
        for i in range(self.n_problems):
            yield self.problem_ids[i], self.strategies[i], int(self.n_units[i])


def as_frame(log: "LogFrame | Iterable[GenerationRecord]") -> LogFrame:
    """Coerce records (or pass through a frame) into a LogFrame."""
    if isinstance(log, LogFrame):
        return log
    if hasattr(log, "frame"):
        return log.frame()  # SimTrace and friends
    return LogFrame.from_records(list(log))
