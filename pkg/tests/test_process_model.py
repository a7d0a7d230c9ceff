import itertools
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from fclcheck.process_model import (
    Gateway,
    GatewayKind,
    Literal,
    ModelError,
    ProcessGraph,
    Task,
    TraceOverflow,
    enumerate_traces,
    is_consistent,
    load_model,
    model_to_json,
    parse_model,
    validate_graph,
)

from conftest import DATA, lits
from oracles import random_model, token_game_traces


def doc(nodes, edges, name="m"):
    return json.dumps({"name": name, "nodes": nodes, "edges": [{"from": a, "to": b} for a, b in edges]})


def task(i, *ann):
    return {"id": i, "type": "task", "annotations": list(ann)}


SE = [{"id": "start", "type": "start"}, {"id": "end", "type": "end"}]


def test_literal_complement_involution():
    p = Literal.parse("~p")
    assert not p.positive and str(p) == "~p"
    assert p.complement().complement() == p
    assert ~Literal("q") == Literal("q", False)


def test_consistency():
    assert is_consistent(lits("p", "q"))
    assert not is_consistent(lits("p", "~p"))


def test_orders_parses(orders):
    assert set(orders.tasks) == {"A", "B", "C", "D", "E"}
    kinds = sorted(g.kind.value for g in orders.gateways.values())
    assert kinds == ["and_join", "and_split", "xor_join", "xor_split"]
    assert validate_graph(orders) == []


def test_orders_traces(orders):
    assert enumerate_traces(orders, 0) == [("A", "B", "D", "E"), ("A", "B", "E", "D"), ("A", "C")]


def test_single_task():
    g = parse_model(doc(SE + [task("A", "p")], [("start", "A"), ("A", "end")]))
    assert list(g.tasks) == ["A"]
    assert enumerate_traces(g) == [("A",)]


def test_sequence_traces():
    g = ProcessGraph.sequence([Task("A", "A"), Task("B", "B")])
    assert enumerate_traces(g) == [("A", "B")]


def test_and_of_three_gives_all_permutations():
    nodes = SE + [task("A"), task("B"), task("C"),
                  {"id": "s", "type": "and_split"}, {"id": "j", "type": "and_join"}]
    edges = [("start", "s"), ("s", "A"), ("s", "B"), ("s", "C"),
             ("A", "j"), ("B", "j"), ("C", "j"), ("j", "end")]
    traces = enumerate_traces(parse_model(doc(nodes, edges)))
    assert set(traces) == set(itertools.permutations("ABC"))
    assert len(traces) == 6


def test_inconsistent_annotation_rejected():
    with pytest.raises(ModelError) as exc:
        parse_model(doc(SE + [task("A", "p", "~p")], [("start", "A"), ("A", "end")]))
    assert exc.value.position


def test_syntax_error_has_position():
    with pytest.raises(ModelError) as exc:
        parse_model('{"name": "m",\n "nodes": [}')
    assert exc.value.line == 2 and exc.value.column is not None


@pytest.mark.parametrize("bad, fragment", [
    (doc(SE + [task("A")], [("start", "A"), ("A", "nowhere")]), "nowhere"),
    (doc(SE + [task("A"), task("A")], [("start", "A"), ("A", "end")]), "duplicate"),
    (doc(SE + [{"id": "A", "type": "gizmo"}], [("start", "A"), ("A", "end")]), "gizmo"),
    (doc(SE + [task("A", "1bad")], [("start", "A"), ("A", "end")]), "1bad"),
    ('{"nodes": 3}', "nodes"),
    ("[]", "object"),
])
def test_semantic_errors(bad, fragment):
    with pytest.raises(ModelError) as exc:
        parse_model(bad)
    assert fragment in str(exc.value)
    assert exc.value.position


def _xor_closed_by_and():
    gws = {"s": Gateway("s", GatewayKind.XOR_SPLIT), "j": Gateway("j", GatewayKind.AND_JOIN)}
    tasks = {"A": Task("A", "A"), "B": Task("B", "B")}
    edges = (("start", "s"), ("s", "A"), ("s", "B"), ("A", "j"), ("B", "j"), ("j", "end"))
    return ProcessGraph("bad", tasks, gws, edges, "start", "end")


def test_mismatched_block_reported():
    kinds = {v.kind for v in validate_graph(_xor_closed_by_and())}
    assert "block-structure" in kinds


def test_unreachable_task_reported():
    tasks = {"A": Task("A", "A"), "B": Task("B", "B")}
    g = ProcessGraph("bad", tasks, {}, (("start", "A"), ("A", "end"), ("B", "end")), "start", "end")
    assert "reachability" in {v.kind for v in validate_graph(g)}


def test_invalid_graph_rejected_by_parser():
    nodes = SE + [task("A"), task("B"), {"id": "s", "type": "xor_split"}, {"id": "j", "type": "and_join"}]
    edges = [("start", "s"), ("s", "A"), ("s", "B"), ("A", "j"), ("B", "j"), ("j", "end")]
    with pytest.raises(ModelError):
        parse_model(doc(nodes, edges))


def _loop_model():
    nodes = SE + [task("A"), task("B"), {"id": "j", "type": "xor_join"}, {"id": "s", "type": "xor_split"}]
    edges = [("start", "A"), ("A", "j"), ("j", "B"), ("B", "s"), ("s", "j"), ("s", "end")]
    return parse_model(doc(nodes, edges))


def test_loop_bound():
    g = _loop_model()
    assert enumerate_traces(g, 0) == [("A", "B")]
    assert enumerate_traces(g, 2) == [("A", "B"), ("A", "B", "B"), ("A", "B", "B", "B")]


def test_loop_bound_irrelevant_without_loops(orders):
    assert enumerate_traces(orders, 0) == enumerate_traces(orders, 2)


def test_overflow_is_reported():
    nodes = SE + [task(x) for x in "ABCDE"] + [{"id": "s", "type": "and_split"}, {"id": "j", "type": "and_join"}]
    edges = [("start", "s")] + [("s", x) for x in "ABCDE"] + [(x, "j") for x in "ABCDE"] + [("j", "end")]
    g = parse_model(doc(nodes, edges))
    with pytest.raises(TraceOverflow):
        enumerate_traces(g, cap=100)
    assert len(enumerate_traces(g, cap=120)) == 120


def test_json_round_trip(orders):
    again = parse_model(json.dumps(model_to_json(orders)))
    assert enumerate_traces(again) == enumerate_traces(orders)
    assert {t: again.annotations(t) for t in again.tasks} == {t: orders.annotations(t) for t in orders.tasks}


def test_load_from_path():
    assert load_model(DATA / "orders.json").name == "orders"


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 2))
def test_traces_match_token_game(seed, bound):
    _, g = random_model(random.Random(seed), loop_bound=bound)
    assert validate_graph(g) == []
    assert set(enumerate_traces(g, bound)) == token_game_traces(g, bound)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_loop_free_trace_count_formula(seed):
    _, g = random_model(random.Random(seed), loop_bound=0, max_loops=0)
    from fclcheck.process_model import process_tree

    def count(tree):
        tag, payload = tree
        if tag == "task":
            return 1, 1
        parts = [count(c) for c in payload]
        if tag == "seq":
            n = 1
            for c, _ in parts:
                n *= c
            lengths = [l for _, l in parts]
            return n, None if None in lengths else sum(lengths)
        if tag == "xor":
            # distinct branches of a block never share task ids
            return sum(c for c, _ in parts), None
        # AND: multinomial over branch lengths, times the branch counts
        from math import factorial

        lengths = [l for _, l in parts]
        n = factorial(sum(lengths))
        for l in lengths:
            n //= factorial(l)
        for c, _ in parts:
            n *= c
        return n, sum(lengths)

    tree = process_tree(g)

    def fixed_length(tree):
        tag, payload = tree
        if tag == "task":
            return True
        if tag == "xor":
            return False
        return all(fixed_length(c) for c in payload)

    # the product formula needs fixed-length AND branches
    def and_ok(tree):
        tag, payload = tree
        if tag == "task":
            return True
        if tag == "and" and not all(fixed_length(c) for c in payload):
            return False
        return all(and_ok(c) for c in payload)

    if and_ok(tree):
        assert len(enumerate_traces(g, 0)) == count(tree)[0]


def test_enumeration_is_deterministic(orders):
    assert enumerate_traces(orders) == enumerate_traces(orders)
    assert enumerate_traces(orders) == sorted(enumerate_traces(orders))


def test_non_string_node_type_rejected():
    with pytest.raises(ModelError) as exc:
        parse_model(doc(SE + [{"id": "A", "type": ["task"]}], [("start", "A"), ("A", "end")]))
    assert exc.value.path == "nodes[2]"
