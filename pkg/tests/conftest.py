from pathlib import Path

import pytest

from fclcheck import Literal, load_model, parse_rules
from fclcheck.lifecycle import LifecycleConfig, evaluate_steps, finish, step
from fclcheck.reasoner import conclusions
from fclcheck.state import cumulate_annotations

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE: dict = {}


@pytest.fixture
def orders():
    return load_model(DATA / "orders.json")


def lits(*texts):
    return frozenset(Literal.parse(t) for t in texts)


def run(rules_text, steps, **cfg):
    """Evaluate a trace given as a list of annotation lists, one per step."""
    rs = parse_rules(rules_text)
    trace = [f"t{i}" for i in range(1, len(steps) + 1)]
    return evaluate_steps(rs, trace, [lits(*s) for s in steps], LifecycleConfig(**cfg))


def fold(rs, anns, cfg=LifecycleConfig()):
    """Incremental evaluation written against the public step/finish API."""
    states = cumulate_annotations(anns)
    tracked, done, seen = [], [], frozenset()
    prev, prev_fired = frozenset(), frozenset()
    for k, state in enumerate(states, start=1):
        seen |= state
        conc = conclusions(rs, state, {i.deontic for i in tracked if i.in_force})
        ending = set()
        for rule in conc.fired - prev_fired:
            ending |= set(rs.rule(rule).terminates)
        out, _ = step(tracked, conc.deontic - prev, state, k, seen=seen,
                      terminated=frozenset(ending), still_derivable=conc.deontic, cfg=cfg)
        tracked = [i for i in out if i.tracked]
        done += [i for i in out if not i.tracked]
        prev, prev_fired = conc.deontic, conc.fired
    final, _ = finish(done + tracked, len(states), states[-1] if states else frozenset(), seen, cfg)
    return sorted(final, key=lambda i: (i.start, i.source_rule, i.chain_index))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
