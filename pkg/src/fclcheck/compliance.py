"""Process-level verdicts, diagnoses and event-log replay."""

from __future__ import annotations

import json
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .fcl import RuleSet
from .lifecycle import (
    LifecycleConfig,
    TraceResult,
    evaluate_steps,
    evaluate_trace,
    failure_kind,
)
from .process_model import Literal, ProcessGraph, enumerate_traces, is_consistent

__all__ = [
    "Diagnosis",
    "ComplianceReport",
    "check_process",
    "verdicts",
    "diagnose",
    "LogParseError",
    "parse_log",
    "load_log",
    "replay_log",
    "report_to_dict",
    "report_to_json",
    "report_to_text",
    "trace_result_to_dict",
    "trace_result_to_text",
]

VERDICT_NAMES = ("fully_strong", "fully_weak", "partially_strong", "partially_weak")


@dataclass(frozen=True, order=True)
class Diagnosis:
    trace: tuple
    position: int
    rule: str
    task: str
    obligation: str
    kind: str

    def to_dict(self) -> dict:
        return {
            "trace": list(self.trace),
            "position": self.position,
            "task": self.task,
            "rule": self.rule,
            "obligation": self.obligation,
            "kind": self.kind,
        }


def diagnose(result: TraceResult) -> list[Diagnosis]:
    """One diagnosis per violated instance, at its earliest violation."""
    out = []
    for inst in result.instances:
        kind = failure_kind(inst)
        if kind is None:
            continue
        pos = min(inst.violation_positions)
        task = result.trace[pos - 1] if 1 <= pos <= len(result.trace) else ""
        out.append(Diagnosis(result.trace, pos, inst.source_rule, task, str(inst.content), kind))
    return sorted(out)


def verdicts(results: Sequence[TraceResult]) -> dict[str, bool]:
    strong = [r.strongly_compliant for r in results]
    weak = [r.weakly_compliant for r in results]
    return {
        "fully_strong": all(strong),
        "fully_weak": all(weak),
        "partially_strong": any(strong),
        "partially_weak": any(weak),
    }


def _check_lattice(v: dict, diagnoses) -> None:
    implications = [
        (v["fully_strong"], v["fully_weak"]),
        (v["fully_strong"], v["partially_strong"]),
        (v["fully_strong"], v["partially_weak"]),
        (v["fully_weak"], v["partially_weak"]),
        (v["partially_strong"], v["partially_weak"]),
    ]
    if any(a and not b for a, b in implications):
        raise RuntimeError(f"inconsistent verdicts {v}")
    if bool(diagnoses) == v["fully_strong"]:
        raise RuntimeError("diagnoses must be present exactly when not fully strongly compliant")


@dataclass(frozen=True)
class ComplianceReport:
    model: str
    ruleset: str
    trace_count: int
    results: tuple  # TraceResult, in trace order
    verdicts: dict
    diagnoses: tuple  # Diagnosis, sorted by trace, position, rule

    def __post_init__(self):
        _check_lattice(self.verdicts, self.diagnoses)

    @property
    def compliant(self) -> bool:
        return self.verdicts["fully_strong"]


def _evaluate_chunk(args):
    rs, graph, traces, cfg = args
    return [evaluate_trace(rs, graph, t, cfg) for t in traces]


def check_process(
    graph: ProcessGraph,
    rs: RuleSet,
    cfg: LifecycleConfig = LifecycleConfig(),
    jobs: int = 1,
) -> ComplianceReport:
    """Evaluate every trace of ``graph`` against ``rs``.

    Raises TraceOverflow when the model has more than ``cfg.trace_cap``
    traces.
    """
    traces = enumerate_traces(graph, cfg.loop_bound, cfg.trace_cap)
    if jobs > 1 and len(traces) > 1:
        size = -(-len(traces) // (jobs * 4))
        chunks = [traces[i:i + size] for i in range(0, len(traces), size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_evaluate_chunk, [(rs, graph, c, cfg) for c in chunks])
            results = [r for part in parts for r in part]
    else:
        results = [evaluate_trace(rs, graph, t, cfg) for t in traces]
    diagnoses = sorted(d for r in results for d in diagnose(r))
    return ComplianceReport(
        model=graph.name,
        ruleset=rs.name,
        trace_count=len(results),
        results=tuple(results),
        verdicts=verdicts(results),
        diagnoses=tuple(diagnoses),
    )


# --------------------------------------------------------------------------
# Event logs

_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*\Z")
_ATOM_RE = re.compile(r"~?[A-Za-z_][A-Za-z0-9_]*\Z")


class LogParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        self.detail = message
        super().__init__(f"line {line}, column {column}: {message}")

    @property
    def position(self) -> str:
        return f"line {self.line}, column {self.column}"


def parse_log(text: str | bytes) -> list[tuple[str, frozenset]]:
    """Parse ``event_id ; lit1, lit2, ...`` lines into (event id, annotations)."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            before = text[: exc.start]
            raise LogParseError(
                "invalid UTF-8", before.count(b"\n") + 1, exc.start - (before.rfind(b"\n") + 1) + 1
            ) from None
    events = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        head, sep, rest = line.partition(";")
        event_id = head.strip()
        if not _ID_RE.match(event_id):
            col = len(head) - len(head.lstrip()) + 1
            raise LogParseError(f"invalid event id {event_id!r}", lineno, col)
        lits = []
        if sep:
            offset = len(head) + 1
            for part in rest.split(","):
                token = part.strip()
                col = offset + len(part) - len(part.lstrip()) + 1
                offset += len(part) + 1
                if not token and len(rest.split(",")) == 1:
                    break
                if not _ATOM_RE.match(token):
                    raise LogParseError(f"malformed literal {token!r}", lineno, col)
                lit = Literal.parse(token)
                if lit.complement() in lits:
                    raise LogParseError(f"{token} contradicts an earlier annotation", lineno, col)
                lits.append(lit)
        events.append((event_id, frozenset(lits)))
    return events


def load_log(path) -> list[tuple[str, frozenset]]:
    with open(path, "rb") as fh:
        return parse_log(fh.read())


def replay_log(
    events: Iterable[tuple[str, Iterable[Literal]]],
    rs: RuleSet,
    cfg: LifecycleConfig = LifecycleConfig(),
) -> TraceResult:
    """Evaluate a recorded event sequence, each event acting as a task."""
    events = list(events)
    ids = tuple(e for e, _ in events)
    anns = [frozenset(a) for _, a in events]
    for e, a in zip(ids, anns):
        if not is_consistent(a):
            raise ValueError(f"event {e!r} has inconsistent annotations")
    return evaluate_steps(rs, ids, anns, cfg)


# --------------------------------------------------------------------------
# Rendering


def trace_result_to_dict(result: TraceResult) -> dict:
    return {
        "trace": list(result.trace),
        "strongly_compliant": result.strongly_compliant,
        "weakly_compliant": result.weakly_compliant,
        "obligations": [
            {
                "rule": i.source_rule,
                "obligation": f"[{i.modality.value}]{i.content}",
                "chain_index": i.chain_index,
                "start": i.start,
                "end": i.end,
                "status": i.status.value,
                "violations": list(i.violation_positions),
            }
            for i in result.instances
        ],
        "diagnoses": [d.to_dict() for d in diagnose(result)],
    }


def report_to_dict(report: ComplianceReport) -> dict:
    return {
        "model": report.model,
        "ruleset": report.ruleset,
        "traces": report.trace_count,
        "verdicts": {k: report.verdicts[k] for k in VERDICT_NAMES},
        "diagnoses": [d.to_dict() for d in report.diagnoses],
    }


def report_to_json(report: ComplianceReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def report_to_text(report: ComplianceReport) -> str:
    lines = [
        f"model: {report.model}",
        f"rules: {report.ruleset}",
        f"traces: {report.trace_count}",
    ]
    lines += [f"{k}: {'yes' if report.verdicts[k] else 'no'}" for k in VERDICT_NAMES]
    if report.diagnoses:
        lines.append("diagnoses:")
        for d in report.diagnoses:
            lines.append(
                f"  <{','.join(d.trace)}> @{d.position} ({d.task}) rule {d.rule}: "
                f"{d.obligation} {d.kind}"
            )
    return "\n".join(lines) + "\n"


def trace_result_to_text(result: TraceResult) -> str:
    lines = [
        f"trace: <{','.join(result.trace)}>",
        f"strongly compliant: {'yes' if result.strongly_compliant else 'no'}",
        f"weakly compliant: {'yes' if result.weakly_compliant else 'no'}",
    ]
    for i in result.instances:
        viol = f" violated at {','.join(map(str, i.violation_positions))}" if i.violated else ""
        lines.append(
            f"  {i.source_rule} [{i.modality.value}]{i.content} "
            f"from {i.start} to {i.end}: {i.status.value}{viol}"
        )
    return "\n".join(lines) + "\n"

