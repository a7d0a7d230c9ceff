"""
Checking an order-handling process
==================================

A five-task process: take an order (A), then either check it (B) and run
shipping (D) and invoicing (E) in parallel, or reject it (C). We enumerate
its traces, look at how the state evolves, and check it against two rules.
"""

from fclcheck import (
    LifecycleConfig,
    check_process,
    cumulate,
    enumerate_traces,
    evaluate_trace,
    parse_model,
    parse_rules,
)
from fclcheck.compliance import report_to_text

MODEL = """
{"name": "orders",
 "nodes": [
   {"id": "start", "type": "start"},
   {"id": "A", "type": "task", "annotations": ["order"]},
   {"id": "x1", "type": "xor_split"},
   {"id": "B", "type": "task", "annotations": ["checked"]},
   {"id": "a1", "type": "and_split"},
   {"id": "D", "type": "task", "annotations": ["~checked", "shipped"]},
   {"id": "E", "type": "task", "annotations": ["invoiced"]},
   {"id": "a2", "type": "and_join"},
   {"id": "C", "type": "task"},
   {"id": "x2", "type": "xor_join"},
   {"id": "end", "type": "end"}],
 "edges": [
   {"from": "start", "to": "A"}, {"from": "A", "to": "x1"},
   {"from": "x1", "to": "B"}, {"from": "x1", "to": "C"},
   {"from": "B", "to": "a1"}, {"from": "a1", "to": "D"}, {"from": "a1", "to": "E"},
   {"from": "D", "to": "a2"}, {"from": "E", "to": "a2"},
   {"from": "a2", "to": "x2"}, {"from": "C", "to": "x2"}, {"from": "x2", "to": "end"}]}
"""

graph = parse_model(MODEL)

# three traces: the AND block contributes two interleavings
traces = enumerate_traces(graph)
for t in traces:
    print(",".join(t))

# update semantics: D retracts `checked` and adds `shipped`
trace = ("A", "B", "D", "E")
for k, state in enumerate(cumulate(trace, graph), start=1):
    print(k, trace[k - 1], sorted(map(str, state)))

# every order must eventually be invoiced, and the order must count as
# checked at the moment of shipping. D itself retracts `checked`, so the
# punctual obligation fails on every shipping branch, and C never invoices.
rules = parse_rules("""
inv: order => [OANPNP]invoiced
chk: shipped => [OPU]checked
""", name="orders")

for t in traces:
    result = evaluate_trace(rules, graph, t)
    print(",".join(t), "strong" if result.strongly_compliant else "not strong")
    for inst in result.instances:
        print("   ", inst.source_rule, inst.content, inst.status.value, inst.violation_positions)

# the report aggregates all traces into the four verdicts
report = check_process(graph, rules, LifecycleConfig(loop_bound=0))
print(report_to_text(report))
