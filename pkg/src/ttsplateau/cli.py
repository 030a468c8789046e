"""Command-line pipeline: simulate, predict, evaluate.

Every subcommand is a pure function of its flags and input files; reruns
produce byte-identical outputs. Exit codes: 0 success, 1 usage error,
2 data validation error, 3 numeric or degenerate analysis error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .estimate import (
    Calibration,
    Estimator,
    SplitSpec,
    calibrate,
    estimate_frame,
    observed_saturations,
    predict_n_star,
    split,
    DEFAULT_GRID_LO,
    DEFAULT_GRID_HI,
    DEFAULT_GRID_POINTS,
)
from .ingest import AnalysisError, LogFormatError, LogFrame, Strategy, parse_log
from .metrics import (
    accuracy_curve,
    curve_to_csv,
    curve_to_json,
    histogram_to_csv,
    histogram_to_json,
    hit_curve,
    pearson,
    saturation_histogram,
)
from .model import GainThreshold, ScalingModel, saturation_point
from .simulate import SimConfig, simulate

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ANALYSIS = 3

_ESTIMATOR_FLAGS = {
    "first-solve-ratio": Estimator.FIRST_SOLVE_RATIO,
    "inverse-first-solve": Estimator.INVERSE_FIRST_SOLVE,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: D102 - argparse hook
        raise UsageError(f"{self.prog}: {message}")


def _parse_p(text: str) -> float | tuple[float, float]:
    try:
        if ":" in text:
            lo_s, hi_s = text.split(":", 1)
            lo, hi = float(lo_s), float(hi_s)
            if not (0.0 < lo <= hi <= 1.0):
                raise ValueError
            return (lo, hi)
        p = float(text)
        if not (0.0 < p <= 1.0):
            raise ValueError
        return p
    except ValueError:
        raise UsageError(
            f"--p must be a probability in (0, 1] or a 'low:high' range, got {text!r}"
        ) from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="ttsplateau", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic generation log")
    sim.add_argument("--strategy", required=True, choices=["parallel", "sequential"])
    sim.add_argument("--p", required=True, help="per-unit success probability or 'low:high'")
    sim.add_argument("--n-max", type=int, default=32)
    sim.add_argument("--problems", type=int, required=True)
    sim.add_argument("--distractors", type=int, default=4)
    sim.add_argument("--f-max", type=float, default=1.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--output", required=True, help="JSONL log path")

    pred = sub.add_parser("predict", help="per-problem saturation budgets from a log")
    pred.add_argument("--log", required=True)
    pred.add_argument("--calibration", help="calibration JSON ({ratio, loss, grid})")
    pred.add_argument("--epsilon", type=float)
    pred.add_argument("--f-max", type=float)
    pred.add_argument("--estimator", choices=sorted(_ESTIMATOR_FLAGS), default="first-solve-ratio")
    pred.add_argument("--output", help="output path (default: stdout)")
    pred.add_argument("--format", choices=["csv", "json"], default="csv")

    ev = sub.add_parser("evaluate", help="split, calibrate, predict, and correlate")
    ev.add_argument("--log", required=True)
    ev.add_argument("--split", type=float, default=0.8, help="validation fraction")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--estimator", choices=sorted(_ESTIMATOR_FLAGS), default="first-solve-ratio")
    ev.add_argument("--include-unsolved", action="store_true")
    ev.add_argument("--grid-lo", type=float, default=DEFAULT_GRID_LO)
    ev.add_argument("--grid-hi", type=float, default=DEFAULT_GRID_HI)
    ev.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    ev.add_argument("--output", required=True, help="output directory")
    ev.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    try:
        config = SimConfig(
            strategy=Strategy(args.strategy),
            p_x=_parse_p(args.p),
            n_max=args.n_max,
            num_problems=args.problems,
            distractors=args.distractors,
            seed=args.seed,
            f_max=args.f_max,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    trace = simulate(config)
    trace.to_jsonl(Path(args.output))
    return EXIT_OK


def _load_frame(path: str) -> LogFrame:
    try:
        records = parse_log(Path(path))
    except FileNotFoundError:
        raise LogFormatError(f"log file not found: {path}") from None
    if not records:
        raise LogFormatError(f"log file is empty: {path}")
    return LogFrame.from_records(records)


def _estimates_for(frame: LogFrame, estimator_flag: str):
    strategy = frame.single_strategy()
    if strategy is Strategy.PARALLEL:
        return estimate_frame(frame)
    return estimate_frame(frame, _ESTIMATOR_FLAGS[estimator_flag])


def _prediction_rows(frame: LogFrame, args: argparse.Namespace) -> list[dict[str, object]]:
    estimates = _estimates_for(frame, args.estimator)
    if args.calibration is not None:
        if args.epsilon is not None or args.f_max is not None:
            raise UsageError("pass either --calibration or --epsilon/--f-max, not both")
        try:
            calib = Calibration.from_json(Path(args.calibration).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise LogFormatError(f"calibration file not found: {args.calibration}") from None
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise LogFormatError(f"invalid calibration file: {exc}") from None

        def budget(p_hat: float) -> tuple[int, bool]:
            return predict_n_star(p_hat, calib.ratio)

    elif args.epsilon is not None and args.f_max is not None:
        if args.epsilon <= 0:
            raise UsageError("--epsilon must be > 0")
        if not (0 < args.f_max <= 1):
            raise UsageError("--f-max must be in (0, 1]")
        threshold = GainThreshold(args.epsilon)

        def budget(p_hat: float) -> tuple[int, bool]:
            point = saturation_point(ScalingModel(p_x=p_hat, f_max=args.f_max), threshold)
            return point.n_star, point.degenerate

    else:
        raise UsageError("predict needs --calibration or both --epsilon and --f-max")

    rows = []
    for est in estimates:
        n_star, degenerate = budget(est.p_hat)
        rows.append(
            {
                "problem_id": est.problem_id,
                "p_hat": est.p_hat,
                "n_star": n_star,
                "degenerate": degenerate,
            }
        )
    return rows


def _rows_to_csv(rows: list[dict[str, object]], columns: list[str]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row[c]) for c in columns])
    return buf.getvalue().encode("utf-8")


def _csv_cell(value: object) -> object:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return value


def _rows_to_json(rows: list[dict[str, object]]) -> bytes:
    return (json.dumps(rows, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def _cmd_predict(args: argparse.Namespace) -> int:
    frame = _load_frame(args.log)
    rows = _prediction_rows(frame, args)
    columns = ["problem_id", "p_hat", "n_star", "degenerate"]
    payload = _rows_to_csv(rows, columns) if args.format == "csv" else _rows_to_json(rows)
    if args.output:
        Path(args.output).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    if not (0.0 < args.split < 1.0):
        raise UsageError("--split must be in (0, 1)")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    if not (0.0 < args.grid_lo < args.grid_hi):
        raise UsageError("--grid-lo/--grid-hi must satisfy 0 < lo < hi")
    if args.grid_points < 2:
        raise UsageError("--grid-points must be >= 2")
    frame = _load_frame(args.log)
    strategy = frame.single_strategy()
    n_used = frame.uniform_units()
    if frame.n_problems < 2:
        raise LogFormatError(
            f"log has {frame.n_problems} problem(s); need at least 2 to split"
        )

    estimates = _estimates_for(frame, args.estimator)
    observations = observed_saturations(frame)
    by_id = {
        est.problem_id: (est, obs) for est, obs in zip(estimates, observations, strict=True)
    }

    validation_ids, test_ids = split(frame.problem_ids, SplitSpec(seed=args.seed,
                                                                  validation_fraction=args.split))
    calib = calibrate(
        [by_id[i][0] for i in validation_ids],
        [by_id[i][1] for i in validation_ids],
        grid_lo=args.grid_lo,
        grid_hi=args.grid_hi,
        grid_points=args.grid_points,
        include_unsolved=args.include_unsolved,
    )

    rows = []
    for problem_id in test_ids:
        est, obs = by_id[problem_id]
        n_star, degenerate = predict_n_star(est.p_hat, calib.ratio)
        rows.append(
            {
                "problem_id": problem_id,
                "p_hat": est.p_hat,
                "predicted": n_star,
                "degenerate": degenerate,
                "observed": obs.n,
                "unsolved": obs.unsolved,
            }
        )
    report_corr = pearson(
        [r["predicted"] for r in rows],
        [r["observed"] for r in rows],
        unsolved=[r["unsolved"] for r in rows],
        include_unsolved=args.include_unsolved,
    )

    curves = {"hit_curve": hit_curve(frame, n_used)}
    curves["accuracy_curve"] = accuracy_curve(frame, n_used, strategy)
    histogram = saturation_histogram([obs.n for obs in observations], n_used)

    report = {
        "strategy": strategy.value,
        "n_units": n_used,
        "n_problems": frame.n_problems,
        "n_validation": len(validation_ids),
        "n_test": len(test_ids),
        "estimator": _ESTIMATOR_FLAGS[args.estimator].value
        if strategy is Strategy.SEQUENTIAL
        else Estimator.SAMPLE_FRACTION.value,
        "include_unsolved": args.include_unsolved,
        "seed": args.seed,
        "split": args.split,
        "calibration": {"ratio": calib.ratio, "loss": calib.loss, "grid": calib.grid},
        "correlation": {
            "r": report_corr.r,
            "n_points": report_corr.n_points,
            "excluded_unsolved": report_corr.excluded_unsolved,
        },
    }

    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_bytes = (json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n").encode()
    (out_dir / "report.json").write_bytes(report_bytes)
    (out_dir / "calibration.json").write_bytes(calib.to_json().encode("utf-8"))

    columns = ["problem_id", "p_hat", "predicted", "degenerate", "observed", "unsolved"]
    if args.format == "csv":
        (out_dir / "predictions.csv").write_bytes(_rows_to_csv(rows, columns))
        (out_dir / "hit_curve.csv").write_bytes(curve_to_csv(curves["hit_curve"]).encode())
        (out_dir / "accuracy_curve.csv").write_bytes(
            curve_to_csv(curves["accuracy_curve"]).encode()
        )
        (out_dir / "saturation_histogram.csv").write_bytes(histogram_to_csv(histogram).encode())
    else:
        (out_dir / "predictions.json").write_bytes(_rows_to_json(rows))
        (out_dir / "hit_curve.json").write_bytes(curve_to_json(curves["hit_curve"]).encode())
        (out_dir / "accuracy_curve.json").write_bytes(
            curve_to_json(curves["accuracy_curve"]).encode()
        )
        (out_dir / "saturation_histogram.json").write_bytes(histogram_to_json(histogram).encode())
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "predict":
            return _cmd_predict(args)
        return _cmd_evaluate(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LogFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
