import pytest

from fclcheck.fcl import DeonticLiteral, Modality, ReparationChain, parse_rules
from fclcheck.lifecycle import (
    LifecycleConfig,
    ObligationInstance,
    Status,
    evaluate_steps,
    evaluate_trace,
    failure_kind,
    step,
)
from fclcheck.process_model import Literal
from fclcheck.reasoner import InForce

from conftest import fold, lits, run
from definition_fixtures import ALL, BY_DEFINITION


def rows(result):
    return [
        (i.source_rule, i.chain_index, i.start, i.end, i.status.value, tuple(i.violation_positions))
        for i in result.instances
    ]


@pytest.mark.parametrize("definition, scenario", ALL, ids=[s.name for _, s in ALL])
def test_definition_scenarios(definition, scenario):
    result = run(scenario.rules, scenario.steps, **scenario.config)
    assert sorted(rows(result)) == sorted(scenario.expected)
    assert (result.strongly_compliant, result.weakly_compliant) == (scenario.strong, scenario.weak)


def test_fixture_counts():
    assert all(len(group) >= 3 for group in BY_DEFINITION.values())
    assert len(ALL) >= 21


def test_punctual_enters_with_body():
    r = run("r: ready => [OPU]ack", [["x"], ["ready", "ack"]])
    assert rows(r) == [("r", 1, 2, 2, "fulfilled", ())]


def test_compensation_soundness():
    (p, q) = run("r: a => [OANPNP]p (x) [OANPNP]q", [["a"], ["x"]]).instances
    assert p.successor == q.uid and q.parent == p.uid
    assert failure_kind(p) == "uncompensated"
    assert failure_kind(q) == "achievement-violation"


def _om(content="p", start=1):
    chain = ReparationChain((DeonticLiteral(Modality.OM, Literal(content)),))
    return ObligationInstance(Literal(content), Modality.OM, "r", chain, 1, start)


def test_step_nothing():
    assert step([], [], frozenset(), 1) == ([], [])


def test_step_maintenance_breach():
    carry = [_om()]
    updated, events = step(carry, [], lits("q"), 2)
    assert [(e.kind, e.position) for e in events] == [("violated", 2)]
    assert updated[0].status is Status.VIOLATED
    assert carry[0].status is Status.ACTIVE  # input left untouched


def test_step_preemptive_on_entry():
    chain = ReparationChain((DeonticLiteral(Modality.OAPNP, Literal("p")),))
    updated, events = step([], [InForce("r", chain)], lits("x"), 3, seen=lits("p", "x"))
    assert updated[0].status is Status.FULFILLED
    assert [e.kind for e in events] == ["enter", "fulfilled"]


def test_step_fold_equals_batch():
    rs = parse_rules(
        "r0: restaurant => [P]sell_alcohol\n"
        "r2: restaurant, [P]sell_alcohol => [OM]show_license (x) [OAPNP]pay_fine\n"
        "r3: a => [OANPP]b\nt: c => d terminates {b}"
    )
    anns = [lits("restaurant", "a"), lits("c"), lits("pay_fine", "b")]
    assert fold(rs, anns) == list(evaluate_steps(rs, ["x", "y", "z"], anns).instances)


def test_reapply_cessation():
    rules = "r: shop_open => [OANPNP]clean"
    steps = [["shop_open"], ["~shop_open"], ["clean"]]
    assert rows(run(rules, steps)) == [("r", 1, 1, 3, "fulfilled", ())]
    assert rows(run(rules, steps, force_mode="reapply")) == [("r", 1, 1, 1, "violated", (1,))]


def test_reapply_reentry_creates_new_instance():
    r = run("r: on => [OM]p", [["on", "p"], ["~on"], ["on"]], force_mode="reapply")
    assert rows(r) == [("r", 1, 1, 1, "fulfilled", ()), ("r", 1, 3, 3, "fulfilled", ())]


def test_no_duplicate_instance_while_in_force():
    # the chain drops out and comes back while its instance is still active
    r = run("r: on => [OANPNP]p", [["on"], ["~on"], ["on"], ["p"]])
    assert rows(r) == [("r", 1, 1, 4, "fulfilled", ())]


def test_achievement_and_maintenance_symmetry():
    always = [["go", "p"], ["p"], ["p"]]
    once = [["go"], ["p"], ["~p"]]
    for mod in ("OANPNP", "OM"):
        assert run(f"r: go => [{mod}]p", always).instances[0].status is Status.FULFILLED
    assert run("r: go => [OANPNP]p", once).instances[0].status is Status.FULFILLED
    assert run("r: go => [OM]p", once).instances[0].status is Status.VIOLATED


def test_evaluate_trace_on_model(orders):
    rs = parse_rules("r: shipped => [OANPNP]invoiced")
    ok = evaluate_trace(rs, orders, ("A", "B", "D", "E"))
    early = evaluate_trace(rs, orders, ("A", "B", "E", "D"))
    assert rows(ok) == [("r", 1, 3, 4, "fulfilled", ())]
    # the invoice from step 3 is still part of the state when shipping happens
    assert rows(early) == [("r", 1, 4, 4, "fulfilled", ())]
    assert rows(evaluate_trace(rs, orders, ("A", "C"))) == []


def test_config_validation():
    with pytest.raises(ValueError):
        LifecycleConfig(loop_bound=-1)
    with pytest.raises(ValueError):
        LifecycleConfig(force_mode="sometimes")


def test_deterministic(orders):
    rs = parse_rules("r: order => [OM]checked (x) [OPU]shipped")
    a = evaluate_trace(rs, orders, ("A", "B", "D", "E"))
    b = evaluate_trace(rs, orders, ("A", "B", "D", "E"))
    assert a == b
