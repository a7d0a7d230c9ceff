"""Command-line front end.

Exit codes: 0 compliant (or success), 1 not compliant, 2 parse, validation
or usage error, 3 trace overflow.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import bench
from .compliance import (
    LogParseError,
    check_process,
    load_log,
    replay_log,
    report_to_json,
    report_to_text,
    trace_result_to_dict,
    trace_result_to_text,
)
from .fcl import RuleParseError, load_rules, ruleset_stats
from .lifecycle import LifecycleConfig
from .process_model import ModelError, TraceOverflow, enumerate_traces, load_model, validate_graph

EXIT_OK, EXIT_NONCOMPLIANT, EXIT_INPUT, EXIT_OVERFLOW = 0, 1, 2, 3


@dataclass(frozen=True)
class CliConfig:
    loop_bound: int = 2
    strict_compensation: bool = False
    trace_cap: int = 10**6
    format: str = "text"

    def __post_init__(self):
        if self.loop_bound < 0 or self.trace_cap < 0:
            raise ValueError("numeric options must be nonnegative")
        if self.format not in ("json", "text"):
            raise ValueError(f"unknown format {self.format!r}")

    def lifecycle(self) -> LifecycleConfig:
        return LifecycleConfig(
            loop_bound=self.loop_bound,
            strict_compensation=self.strict_compensation,
            trace_cap=self.trace_cap,
        )


class _InputError(Exception):
    pass


def _nonneg(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative: {value}")
    return value


def _config(args) -> CliConfig:
    return CliConfig(
        loop_bound=getattr(args, "loop_bound", 2),
        strict_compensation=getattr(args, "strict_compensation", False),
        trace_cap=getattr(args, "trace_cap", 10**6),
        format=getattr(args, "format", "text"),
    )


def _model(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise _InputError(f"{path}: {exc.strerror or exc}") from None
    except ModelError as exc:
        raise _InputError(f"{path}: {exc}") from None


def _rules(path):
    try:
        return load_rules(path)
    except OSError as exc:
        raise _InputError(f"{path}: {exc.strerror or exc}") from None
    except (RuleParseError, ValueError) as exc:
        raise _InputError(f"{path}: {exc}") from None


def _emit(text: str, report: str | None) -> None:
    if report:
        Path(report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# Commands


def cmd_validate(args) -> int:
    graph = _model(args.model)
    problems = validate_graph(graph)
    if problems:
        # load_model already validates; kept for graphs that bypass it
        for p in problems:
            print(p, file=sys.stderr)
        return EXIT_INPUT
    print(f"{args.model}: valid ({len(graph.tasks)} tasks)")
    return EXIT_OK


def cmd_traces(args) -> int:
    cfg = _config(args)
    graph = _model(args.model)
    for trace in enumerate_traces(graph, cfg.loop_bound, cfg.trace_cap):
        print(",".join(trace))
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _config(args)
    graph = _model(args.model)
    rs = _rules(args.rules)
    report = check_process(graph, rs, cfg.lifecycle(), jobs=args.jobs)
    text = report_to_json(report) if cfg.format == "json" else report_to_text(report)
    _emit(text, args.report)
    gate = "fully_strong" if args.accept == "strong" else "fully_weak"
    return EXIT_OK if report.verdicts[gate] else EXIT_NONCOMPLIANT


def cmd_replay(args) -> int:
    cfg = _config(args)
    rs = _rules(args.rules)
    try:
        events = load_log(args.log)
    except OSError as exc:
        raise _InputError(f"{args.log}: {exc.strerror or exc}") from None
    except LogParseError as exc:
        raise _InputError(f"{args.log}: {exc}") from None
    result = replay_log(events, rs, cfg.lifecycle())
    if cfg.format == "json":
        text = json.dumps(trace_result_to_dict(result), indent=2) + "\n"
    else:
        text = trace_result_to_text(result)
    _emit(text, args.report)
    ok = result.strongly_compliant if args.accept == "strong" else result.weakly_compliant
    return EXIT_OK if ok else EXIT_NONCOMPLIANT


def cmd_stats(args) -> int:
    rs = _rules(args.rules)
    stats = ruleset_stats(rs)
    rows = stats.table()
    if args.format == "json":
        data = {
            "rows": [{"type": name.strip(), "distinct": c.distinct, "total": c.total} for name, c in rows],
            "rules": stats.rule_kinds,
            "atoms": stats.atoms,
            "superiority": stats.superiority,
        }
        sys.stdout.write(json.dumps(data, indent=2) + "\n")
        return EXIT_OK
    width = max(len(name) for name, _ in rows)
    print(f"{'Type':<{width}}  Distinct  Total")
    for name, c in rows:
        print(f"{name:<{width}}  {c.distinct:>8}  {c.total:>5}")
    kinds = ", ".join(f"{k} {v}" for k, v in stats.rule_kinds.items())
    print(f"rules: {len(rs)} ({kinds}); atoms: {stats.atoms}; superiority pairs: {stats.superiority}")
    return EXIT_OK


_SHAPE_FLAGS = ("tasks", "xor", "ternary", "loops", "shortest", "longest")


def bench_shape(args) -> bench.Shape:
    """Industrial profile unless a shape flag is given; then unset counts are zero."""
    given = {k: getattr(args, k) for k in _SHAPE_FLAGS if getattr(args, k) is not None}
    if args.profile == "industrial" or not given:
        return bench.Shape(**{**bench.INDUSTRIAL_SHAPE.__dict__, **given})
    return bench.Shape(
        tasks=given.get("tasks", 1),
        xor=given.get("xor", 0),
        ternary=given.get("ternary", 0),
        loops=given.get("loops", 0),
        shortest=given.get("shortest"),
        longest=given.get("longest"),
    )


def cmd_bench(args) -> int:
    cfg = _config(args)
    shape = bench_shape(args)
    rshape = bench.RuleShape(args.rules, args.atoms, args.superiority, args.definitional)
    try:
        model_path, rules_path = bench.write_benchmark(args.out, shape, rshape, args.seed)
    except bench.InfeasibleShape as exc:
        raise _InputError(f"infeasible shape: {exc}") from None
    graph = _model(model_path)
    rs = _rules(rules_path)
    report, seconds = bench.timed(check_process, graph, rs, cfg.lifecycle(), jobs=args.jobs)
    summary = {
        "model": str(model_path),
        "rules": str(rules_path),
        "tasks": len(graph.tasks),
        "traces": report.trace_count,
        "seconds": round(seconds, 3),
        "fully_strong": report.verdicts["fully_strong"],
        "diagnoses": len(report.diagnoses),
    }
    if cfg.format == "json":
        sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    else:
        for k, v in summary.items():
            print(f"{k}: {v}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fclcheck", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, rules=False, fmt=True):
        p.add_argument("--loop-bound", type=_nonneg, default=2, help="extra loop iterations (default 2)")
        p.add_argument("--trace-cap", type=_nonneg, default=10**6, help="maximum number of traces")
        if rules:
            p.add_argument("--strict-compensation", action="store_true",
                           help="a compensated successor does not count as compensation")
        if fmt:
            p.add_argument("--format", choices=("json", "text"), default="text")

    p = sub.add_parser("validate", help="check that a model is well formed")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("traces", help="list the traces of a model")
    p.add_argument("model")
    common(p, fmt=False)
    p.set_defaults(func=cmd_traces)

    p = sub.add_parser("check", help="check a model against a rule set")
    p.add_argument("model")
    p.add_argument("rules")
    common(p, rules=True)
    p.add_argument("--accept", choices=("strong", "weak"), default="strong")
    p.add_argument("--report", metavar="FILE", help="write the report here instead of stdout")
    p.add_argument("--jobs", type=_nonneg, default=1)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("replay", help="check a recorded event log")
    p.add_argument("log")
    p.add_argument("rules")
    p.add_argument("--strict-compensation", action="store_true")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--accept", choices=("strong", "weak"), default="strong")
    p.add_argument("--report", metavar="FILE")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("stats", help="count the obligations of a rule set")
    p.add_argument("rules")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="generate a synthetic benchmark and time its check")
    common(p, rules=True)
    p.add_argument("--profile", choices=("industrial",), help="use the industrial-scale shape")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tasks", type=_nonneg)
    p.add_argument("--xor", type=_nonneg, help="XOR decision points, loop splits included")
    p.add_argument("--ternary", type=_nonneg)
    p.add_argument("--loops", type=_nonneg)
    p.add_argument("--shortest", type=_nonneg)
    p.add_argument("--longest", type=_nonneg)
    p.add_argument("--rules", type=_nonneg, default=bench.INDUSTRIAL_RULES.rules)
    p.add_argument("--atoms", type=_nonneg, default=bench.INDUSTRIAL_RULES.atoms)
    p.add_argument("--superiority", type=_nonneg, default=bench.INDUSTRIAL_RULES.superiority)
    p.add_argument("--definitional", type=_nonneg, default=bench.INDUSTRIAL_RULES.definitional)
    p.add_argument("--out", default="bench-out", help="directory for the generated files")
    p.add_argument("--jobs", type=_nonneg, default=1)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"fclcheck: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TraceOverflow as exc:
        print(f"fclcheck: error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except OSError as exc:
        print(f"fclcheck: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
