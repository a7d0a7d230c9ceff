"""Synthetic benchmark: random models and rule sets with a prescribed shape.

The default profile is an industrial complaint-handling process: 41 tasks,
12 XOR decision points (11 binary, 1 ternary) of which 2 close loops,
shortest path 6 tasks, longest loop-free path 22 tasks, checked against 176
rules over 223 atoms with 7 superiority pairs.

Shape of the generated model::

    start -> spine tasks -> XOR[skip | body | side] -> spine tasks -> end

The bodies of the outer decisions hold nested binary decisions, whose
off-path branches may themselves hold a decision, and plain tasks; every
skip branch keeps the shortest path equal to the spine.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass
from pathlib import Path

from .fcl import (
    DeonticLiteral,
    Modality,
    ReparationChain,
    Rule,
    RuleSet,
    serialize_rules,
)
from .process_model import GatewayKind, Literal, ProcessGraph, Task, model_to_json, process_tree

__all__ = [
    "Shape",
    "RuleShape",
    "INDUSTRIAL_SHAPE",
    "INDUSTRIAL_RULES",
    "generate_model",
    "generate_rules",
    "path_lengths",
    "write_benchmark",
]


class InfeasibleShape(ValueError):
    pass


@dataclass(frozen=True)
class Shape:
    tasks: int = 41
    xor: int = 12  # decision points, loop splits included
    ternary: int = 1
    loops: int = 2
    shortest: int | None = 6
    longest: int | None = 22


@dataclass(frozen=True)
class RuleShape:
    rules: int = 176
    atoms: int = 223
    superiority: int = 7
    definitional: int = 33


INDUSTRIAL_SHAPE = Shape()
INDUSTRIAL_RULES = RuleShape()


# --------------------------------------------------------------------------
# Process trees built here use the same tuple encoding as process_model:
#   ("task", id) | ("seq", [..]) | ("xor", [..]) | ("loop", body)


def path_lengths(tree) -> tuple[int, int]:
    """(shortest, longest) number of tasks on a start-to-end path, loops taken once."""
    tag, payload = tree
    if tag == "task":
        return 1, 1
    if tag == "seq":
        pairs = [path_lengths(c) for c in payload]
        return sum(p[0] for p in pairs), sum(p[1] for p in pairs)
    if tag in ("xor", "and"):
        pairs = [path_lengths(c) for c in payload]
        return min(p[0] for p in pairs), max(p[1] for p in pairs)
    return path_lengths(payload)


def _split(rng: random.Random, total: int, slots: list[tuple[int, int]]) -> list[int] | None:
    """Random integers within per-slot [lo, hi] bounds summing to total."""
    lows = [lo for lo, _ in slots]
    rest = total - sum(lows)
    if rest < 0 or rest > sum(hi - lo for lo, hi in slots):
        return None
    values = lows[:]
    while rest:
        free = [i for i, (lo, hi) in enumerate(slots) if values[i] < hi]
        i = rng.choice(free)
        values[i] += 1
        rest -= 1
    return values


def _plan(shape: Shape, rng: random.Random):
    """Integer layout of the model, or None when this draw does not fit."""
    T, S, L = shape.tasks, shape.shortest, shape.longest
    forward = shape.xor - shape.loops
    if forward < shape.ternary or forward < 0:
        raise InfeasibleShape("more ternary decisions or loops than decision points")
    if forward == 0:
        if not (S == L == T):
            raise InfeasibleShape("without forward decisions all paths contain every task")
        if shape.loops > T:
            raise InfeasibleShape("every loop needs a task")
        return {"spine": T, "outer": []}
    if S < 0 or L <= S or T <= L and shape.ternary:
        raise InfeasibleShape("need shortest < longest, and off-path tasks for ternary branches")

    n_outer = max(1, shape.ternary)
    n_nested = forward - n_outer
    n_offblocks = n_nested // 2
    n_inner = n_nested - n_offblocks
    owners = [rng.randrange(n_outer) for _ in range(n_inner)]
    ternary = [j < shape.ternary for j in range(n_outer)]

    on_total, off_total = L - S, T - L
    lonely = [j for j in range(n_outer) if j not in owners]
    # on-path slots: one plain count per outer body, one branch length per nested block
    on_slots = [(1 if j in lonely else 0, on_total) for j in range(n_outer)]
    on_slots += [(1, on_total)] * n_inner
    on = _split(rng, on_total, on_slots)
    if on is None:
        return None
    plain, p = on[:n_outer], on[n_outer:]
    if shape.loops > S + sum(plain):
        return None

    has_block = [False] * n_inner
    for i in rng.sample(range(n_inner), n_offblocks):
        has_block[i] = True
    body_len = [plain[j] + sum(p[i] for i in range(n_inner) if owners[i] == j) for j in range(n_outer)]
    off_slots = [(2, 2 * p[i]) if has_block[i] else (1, p[i]) for i in range(n_inner)]
    off_slots += [(1, body_len[j]) for j in range(n_outer) if ternary[j]]
    off = _split(rng, off_total, off_slots)
    if off is None:
        return None
    side = iter(off[n_inner:])
    outer = []
    for j in range(n_outer):
        nested = []
        for i in range(n_inner):
            if owners[i] != j:
                continue
            if has_block[i]:
                y = _split(rng, off[i], [(1, p[i]), (1, p[i])])
                nested.append({"on": p[i], "off": tuple(y)})
            else:
                nested.append({"on": p[i], "off": off[i]})
        outer.append({"plain": plain[j], "nested": nested, "side": next(side) if ternary[j] else None})
    return {"spine": S, "outer": outer}


class _Builder:
    def __init__(self, rng):
        self.rng = rng
        self.n_tasks = 0
        self.n_gw = 0

    def task(self):
        self.n_tasks += 1
        return ("task", f"T{self.n_tasks:02d}")

    def tasks(self, n):
        return [self.task() for _ in range(n)]

    def seq(self, n):
        return ("seq", self.tasks(n))

    def tree(self, plan, loops):
        spine = self.tasks(plan["spine"])
        cut = self.rng.randint(0, len(spine))
        middle = []
        for o in plan["outer"]:
            parts = self.tasks(o["plain"])
            for nb in o["nested"]:
                if isinstance(nb["off"], tuple):
                    off = ("xor", [self.seq(nb["off"][0]), self.seq(nb["off"][1])])
                else:
                    off = self.seq(nb["off"])
                parts.append(("xor", [self.seq(nb["on"]), ("seq", [off])]))
            self.rng.shuffle(parts)
            branches = [("seq", []), ("seq", parts)]
            if o["side"] is not None:
                branches.append(self.seq(o["side"]))
            middle.append(("xor", branches))
        items = spine[:cut] + middle + spine[cut:]
        return self.wrap_loops(("seq", items), loops)

    def wrap_loops(self, tree, loops):
        # plain tasks sitting directly in a sequence can be wrapped in a loop
        slots = []

        def collect(node, parent, idx):
            tag, payload = node
            if tag == "task" and parent is not None:
                slots.append((parent, idx))
            elif tag == "seq":
                for i, child in enumerate(payload):
                    collect(child, payload, i)
            elif tag == "xor":
                for b in payload:
                    collect(b, None, None)

        collect(tree, None, None)
        if len(slots) < loops:
            raise InfeasibleShape("not enough plain tasks to place the loops")
        for parent, idx in self.rng.sample(slots, loops):
            parent[idx] = ("loop", ("seq", [parent[idx]]))
        return tree


def _graph_from_tree(tree, name: str, annotate) -> ProcessGraph:
    tasks, gateways, edges = {}, {}, []
    counter = {"xor": 0, "loop": 0}

    def emit(node, pred):
        """Wire ``node`` after ``pred``; return the node id that exits it."""
        tag, payload = node
        if tag == "task":
            tasks[payload] = Task(payload, payload, annotate(payload))
            edges.append((pred, payload))
            return payload
        if tag == "seq":
            for child in payload:
                pred = emit(child, pred)
            return pred
        if tag == "xor":
            counter["xor"] += 1
            s, j = f"xs{counter['xor']}", f"xj{counter['xor']}"
            gateways[s] = (s, GatewayKind.XOR_SPLIT)
            gateways[j] = (j, GatewayKind.XOR_JOIN)
            edges.append((pred, s))
            for branch in payload:
                edges.append((emit(branch, s), j))
            return j
        counter["loop"] += 1
        j, s = f"lj{counter['loop']}", f"ls{counter['loop']}"
        gateways[j] = (j, GatewayKind.XOR_JOIN)
        gateways[s] = (s, GatewayKind.XOR_SPLIT)
        edges.append((pred, j))
        edges.append((emit(payload, j), s))
        edges.append((s, j))
        return s

    last = emit(tree, "start")
    edges.append((last, "end"))
    from .process_model import Gateway

    return ProcessGraph(
        name=name,
        tasks=tasks,
        gateways={k: Gateway(*v) for k, v in gateways.items()},
        edges=tuple(edges),
        start="start",
        end="end",
    )


def _atoms(n: int) -> list[str]:
    width = max(3, len(str(n - 1)))
    return [f"a{i:0{width}d}" for i in range(n)]


def generate_model(shape: Shape = INDUSTRIAL_SHAPE, seed: int = 0, atoms: int = 223,
                   attempts: int = 2000) -> ProcessGraph:
    """A valid block-structured model with exactly the requested shape.

    Raises InfeasibleShape when the constraints cannot be met.
    """
    if shape.tasks < 1:
        raise InfeasibleShape("a model needs at least one task")
    forward = shape.xor - shape.loops
    # unset lengths get defaults; explicit ones are left for _plan to reject
    if forward == 0:
        default_short = default_long = shape.tasks
    else:
        default_short = max(1, shape.tasks // 6)
        default_long = None
    shortest = shape.shortest if shape.shortest is not None else default_short
    longest = shape.longest if shape.longest is not None else (default_long or (shape.tasks + shortest) // 2)
    shape = Shape(shape.tasks, shape.xor, shape.ternary, shape.loops, shortest, longest)

    rng = random.Random(seed)
    for _ in range(attempts):
        plan = _plan(shape, rng)
        if plan is not None:
            break
    else:
        raise InfeasibleShape(f"no layout found for {shape}")
    tree = _Builder(rng).tree(plan, shape.loops)

    pool = _atoms(atoms)[: max(1, (atoms * 3) // 5)]

    def annotate(task_id):
        r = random.Random(f"{seed}:{task_id}")
        picked = r.sample(pool, k=min(len(pool), r.randint(1, 3)))
        return frozenset(Literal(a, r.random() > 0.15) for a in picked)

    graph = _graph_from_tree(tree, f"bench-{seed}", annotate)
    got = path_lengths(process_tree(graph))
    if got != (shape.shortest, shape.longest) or len(graph.tasks) != shape.tasks:
        raise InfeasibleShape(f"generated layout misses the shape: paths {got}")
    return graph


_HEAD_MODALITIES = (
    [Modality.OPU] * 5
    + [Modality.OAPP] * 41
    + [Modality.OAPNP] * 5
    + [Modality.OANPP] * 62
    + [Modality.OANPNP] * 2
    + [Modality.OM] * 13
    + [Modality.P] * 16
)


def generate_rules(shape: RuleShape = INDUSTRIAL_RULES, seed: int = 0) -> RuleSet:
    """A rule set with the requested rule, atom and superiority counts."""
    if shape.definitional > shape.rules or shape.superiority * 2 > shape.rules - shape.definitional:
        raise InfeasibleShape("not enough rules for the requested definitions and superiority pairs")
    rng = random.Random(f"rules:{seed}")
    names = _atoms(shape.atoms)
    state_pool = names[: max(1, (shape.atoms * 3) // 5)]
    defined = names[len(state_pool):] or names
    unused = list(names)
    rng.shuffle(unused)

    def pick(pool):
        # prefer atoms not yet used so that every atom ends up in the rule set
        for i, a in enumerate(unused):
            if a in pool and rng.random() < 0.6:
                return unused.pop(i)
        return rng.choice(pool)

    def lit(pool, neg=0.15):
        return Literal(pick(pool), rng.random() > neg)

    rules: list[Rule] = []
    for i in range(shape.definitional):
        body = tuple({lit(state_pool) for _ in range(rng.randint(1, 2))})
        if not all(b.complement() not in body for b in body):
            body = body[:1]
        rules.append(Rule(f"d{i + 1:03d}", body, Literal(pick(defined))))

    n_deontic = shape.rules - shape.definitional
    mods = [rng.choice(_HEAD_MODALITIES) for _ in range(n_deontic)]
    sup_pairs = []
    comp_left = 2
    for i in range(n_deontic):
        rid = f"r{i + 1:03d}"
        mod = mods[i]
        if i % 2 == 1 and len(sup_pairs) < shape.superiority:
            # an exception to the previous rule: same trigger plus a condition,
            # contrary conclusion, and a priority over it
            prev = rules[-1]
            first = prev.head.first
            if mod is Modality.P or first.modality is Modality.P:
                mod = Modality.OM if first.modality is Modality.P else Modality.P
            body = prev.body + (lit(state_pool + defined),)
            body = tuple(dict.fromkeys(b for b in body if not isinstance(b, Literal) or b.complement() not in body))
            head = ReparationChain((DeonticLiteral(mod, first.content.complement()),))
            rules.append(Rule(rid, body, head))
            sup_pairs.append((rid, prev.id))
            continue
        body_items = []
        for _ in range(rng.randint(1, 2)):
            body_items.append(lit(state_pool + defined))
        body = tuple(dict.fromkeys(body_items))
        if any(b.complement() in body for b in body):
            body = body[:1]
        links = [DeonticLiteral(mod, lit(state_pool, neg=0.3))]
        if comp_left and mod is not Modality.P and rng.random() < 0.1:
            comp = Literal(pick(state_pool))
            if comp != links[0].content and comp != links[0].content.complement():
                links.append(DeonticLiteral(Modality.OANPNP, comp))
                comp_left -= 1
        rules.append(Rule(rid, body, ReparationChain(tuple(links))))

    # make sure every atom occurs: attach leftovers as extra conditions
    while unused:
        idx = rng.randrange(len(rules))
        r = rules[idx]
        rules[idx] = Rule(r.id, r.body + (Literal(unused.pop()),), r.head, r.terminates)

    # a few deadline rules: a derived event ends obligations of some content
    contents = sorted({r.head.first.content for r in rules if r.is_obligation})
    for idx in rng.sample(range(shape.definitional), k=min(6, shape.definitional)):
        r = rules[idx]
        rules[idx] = Rule(r.id, r.body, r.head, (rng.choice(contents),))
    return RuleSet(tuple(rules), tuple(sup_pairs), name=f"bench-rules-{seed}")


def write_benchmark(out_dir, shape: Shape = INDUSTRIAL_SHAPE, rule_shape: RuleShape = INDUSTRIAL_RULES,
                    seed: int = 0) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    graph = generate_model(shape, seed, atoms=rule_shape.atoms)
    rs = generate_rules(rule_shape, seed)
    model_path = out / f"bench-{seed}.json"
    rules_path = out / f"bench-{seed}.fcl"
    model_path.write_text(json.dumps(model_to_json(graph), indent=1) + "\n", encoding="utf-8")
    rules_path.write_text(serialize_rules(rs), encoding="utf-8")
    return model_path, rules_path


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    value = fn(*args, **kwargs)
    return value, time.perf_counter() - t0
