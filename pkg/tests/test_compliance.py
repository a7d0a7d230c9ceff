import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from fclcheck.compliance import (
    ComplianceReport,
    Diagnosis,
    LogParseError,
    check_process,
    diagnose,
    parse_log,
    replay_log,
    report_to_dict,
    report_to_json,
    report_to_text,
    verdicts,
)
from fclcheck.fcl import RuleSet, parse_rules
from fclcheck.lifecycle import LifecycleConfig, Status, evaluate_trace
from fclcheck.process_model import Literal, ProcessGraph, Task, TraceOverflow, parse_model

from conftest import lits
from oracles import random_model, random_ruleset


def xor_model(left_ann, right_ann, head_ann=("go",)):
    doc = {
        "name": "xor",
        "nodes": [
            {"id": "start", "type": "start"},
            {"id": "S", "type": "task", "annotations": list(head_ann)},
            {"id": "x", "type": "xor_split"},
            {"id": "L", "type": "task", "annotations": list(left_ann)},
            {"id": "R", "type": "task", "annotations": list(right_ann)},
            {"id": "j", "type": "xor_join"},
            {"id": "end", "type": "end"},
        ],
        "edges": [{"from": a, "to": b} for a, b in [
            ("start", "S"), ("S", "x"), ("x", "L"), ("x", "R"), ("L", "j"), ("R", "j"), ("j", "end")]],
    }
    return parse_model(json.dumps(doc))


def test_orders_without_rules(orders):
    report = check_process(orders, RuleSet())
    assert report.trace_count == 3
    assert report.verdicts == dict.fromkeys(report.verdicts, True)
    assert report.diagnoses == ()
    assert report.compliant


def test_single_task_punctual_breach():
    g = ProcessGraph.sequence([Task("A", "A", lits("p"))])
    report = check_process(g, parse_rules("r1: => [OPU]~p"))
    assert not report.verdicts["fully_strong"]
    assert report.diagnoses == (Diagnosis(("A",), 1, "r1", "A", "~p", "punctual-violation"),)


def test_xor_one_branch_breaches():
    # the licence shown at S is retracted on the right branch only
    g = xor_model(["x"], ["~licence"], head_ann=("go", "licence"))
    report = check_process(g, parse_rules("r: go => [OM]licence"))
    assert report.verdicts == {
        "fully_strong": False,
        "fully_weak": False,
        "partially_strong": True,
        "partially_weak": True,
    }
    assert [(d.trace, d.position, d.kind) for d in report.diagnoses] == [(("S", "R"), 2, "maintenance-violation")]


def test_xor_weak_but_not_strong():
    g = xor_model(["fine"], ["x"], head_ann=("go",))
    rs = parse_rules("r: go => [OPU]licence (x) [OANPNP]fine")
    report = check_process(g, rs)
    assert report.verdicts == {
        "fully_strong": False,
        "fully_weak": False,
        "partially_strong": False,
        "partially_weak": True,
    }
    kinds = sorted((d.trace, d.kind) for d in report.diagnoses)
    assert kinds == [
        (("S", "L"), "punctual-violation"),
        (("S", "R"), "achievement-violation"),
        (("S", "R"), "uncompensated"),
    ]


def test_lattice_enforced_by_report():
    with pytest.raises(RuntimeError):
        ComplianceReport("m", "r", 1, (), {"fully_strong": True, "fully_weak": False,
                                            "partially_strong": True, "partially_weak": True}, ())
    with pytest.raises(RuntimeError):
        ComplianceReport("m", "r", 1, (), dict.fromkeys(
            ("fully_strong", "fully_weak", "partially_strong", "partially_weak"), False), ())


def test_report_rendering(orders):
    rs = parse_rules("r: order => [OM]checked (x) [OANPNP]invoiced")
    report = check_process(orders, rs)
    data = json.loads(report_to_json(report))
    assert data == report_to_dict(report)
    assert set(data) == {"model", "ruleset", "traces", "verdicts", "diagnoses"}
    assert data["traces"] == 3
    for d in data["diagnoses"]:
        assert set(d) == {"trace", "position", "task", "rule", "obligation", "kind"}
    text = report_to_text(report)
    assert "fully_strong: no" in text and "diagnoses:" in text


def test_overflow_propagates(orders):
    with pytest.raises(TraceOverflow):
        check_process(orders, RuleSet(), LifecycleConfig(trace_cap=2))


def test_jobs_do_not_change_output(orders):
    rs = parse_rules("r: order => [OM]checked (x) [OANPNP]invoiced\ns: shipped => [OPU]invoiced")
    one = check_process(orders, rs)
    many = check_process(orders, rs, jobs=3)
    assert report_to_json(one) == report_to_json(many)
    assert one.results == many.results


# --------------------------------------------------------------------------
# Logs


def test_parse_log():
    events = parse_log("# audit log\nA ; order\n\nB;checked , ~paid  # note\nC\n")
    assert events == [("A", lits("order")), ("B", lits("checked", "~paid")), ("C", frozenset())]


@pytest.mark.parametrize("text, line, column", [
    ("A ; order\n ; x", 2, 2),
    ("A ; 9x", 1, 5),
    ("A ; p, ~p", 1, 8),
    ("A ; p,, q", 1, 7),
    ("A B ; p", 1, 1),
])
def test_log_errors_have_positions(text, line, column):
    with pytest.raises(LogParseError) as exc:
        parse_log(text)
    assert (exc.value.line, exc.value.column) == (line, column)


def test_empty_log_is_compliant():
    result = replay_log([], RuleSet())
    assert result.strongly_compliant and result.instances == ()


def test_replay_matches_model_evaluation(orders):
    rs = parse_rules("r: order => [OM]checked (x) [OANPNP]invoiced\ns: shipped => [OPU]invoiced")
    trace = ("A", "B", "D", "E")
    events = [(t, orders.annotations(t)) for t in trace]
    assert replay_log(events, rs) == evaluate_trace(rs, orders, trace)


def test_replay_restaurant_late_fine():
    rs = parse_rules(
        "r0: restaurant => [P]sell_alcohol\n"
        "r2: restaurant, [P]sell_alcohol => [OM]show_license (x) [OAPNP]pay_fine"
    )
    result = replay_log(parse_log("open ; restaurant\nserve ; drinks\ninspect ; pay_fine\n"), rs)
    assert result.weakly_compliant and not result.strongly_compliant
    assert [i.status for i in result.instances] == [Status.COMPENSATED, Status.FULFILLED]


def test_replay_rejects_inconsistent_events():
    with pytest.raises(ValueError):
        replay_log([("A", [Literal("p"), Literal("p", False)])], RuleSet())


# --------------------------------------------------------------------------
# Properties


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_trace_order_independence(seed):
    rng = random.Random(seed)
    _, g = random_model(rng)
    rs = random_ruleset(rng)
    report = check_process(g, rs)
    results = list(report.results)
    rng.shuffle(results)
    assert verdicts(results) == report.verdicts
    assert sorted(d for r in results for d in diagnose(r)) == list(report.diagnoses)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_adding_a_rule_never_fulfils_a_violation(seed):
    rng = random.Random(seed)
    _, g = random_model(rng)
    rs = random_ruleset(rng, n_rules=rng.randint(1, 6))
    extra = random_ruleset(rng, n_rules=1).rules[0]
    bigger = RuleSet(rs.rules + (extra.__class__(f"x_{extra.id}", extra.body, extra.head, extra.terminates),),
                     rs.superiority)
    for before, after in zip(check_process(g, rs).results, check_process(g, bigger).results):
        old = {i.uid: i.status for i in before.instances}
        for inst in after.instances:
            if old.get(inst.uid) is Status.VIOLATED:
                assert inst.status is not Status.FULFILLED
