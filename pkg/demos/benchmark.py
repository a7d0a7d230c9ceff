"""
Timing a full-size check
========================

Generate a synthetic process of 41 tasks (12 decisions, one of them
three-way, and 2 loops) together with 176 rules over 223 atoms, then time
a full compliance check with loops unrolled up to twice.
"""

import sys
import tempfile

from fclcheck import bench
from fclcheck.fcl import load_rules, ruleset_stats
from fclcheck.lifecycle import LifecycleConfig
from fclcheck.compliance import check_process
from fclcheck.process_model import load_model, process_tree

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0

with tempfile.TemporaryDirectory() as out:
    model_path, rules_path = bench.write_benchmark(out, seed=seed)
    graph, rules = load_model(model_path), load_rules(rules_path)

print("tasks:", len(graph.tasks), "paths (shortest, longest):", bench.path_lengths(process_tree(graph)))
for label, count in ruleset_stats(rules).table():
    print(f"{label:<24}{count.distinct:>5}{count.total:>6}")

report, seconds = bench.timed(check_process, graph, rules, LifecycleConfig(loop_bound=2))
print(f"{report.trace_count} traces checked in {seconds:.1f}s")
print("verdicts:", report.verdicts)
print("diagnoses:", len(report.diagnoses))
