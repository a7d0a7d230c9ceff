"""Annotated process models: literals, tasks, gateways and trace enumeration.

Models are block-structured graphs. Every split is closed by a join of the
same kind, and loops are XOR blocks whose split has a back-edge to the join
that opens the block::

    xor_join -> body -> xor_split --> (exit)
        ^                   |
        +-------------------+
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Literal",
    "is_consistent",
    "Task",
    "Gateway",
    "GatewayKind",
    "ProcessGraph",
    "Violation",
    "ModelError",
    "TraceOverflow",
    "Trace",
    "parse_model",
    "load_model",
    "validate_graph",
    "enumerate_traces",
    "DEFAULT_TRACE_CAP",
]

DEFAULT_TRACE_CAP = 10**6

_ATOM_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

Trace = tuple  # tuple[str, ...] of task ids, position 1 is trace[0]


@dataclass(frozen=True, order=True)
class Literal:
    atom: str
    positive: bool = True

    def __post_init__(self):
        if not _ATOM_RE.match(self.atom):
            raise ValueError(f"invalid atom {self.atom!r}")

    @classmethod
    def parse(cls, text: str) -> "Literal":
        text = text.strip()
        if text.startswith("~"):
            return cls(text[1:].strip(), False)
        return cls(text, True)

    def complement(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def __invert__(self) -> "Literal":
        return self.complement()

    def __str__(self) -> str:
        return self.atom if self.positive else "~" + self.atom

    def __repr__(self) -> str:
        return f"Literal({str(self)!r})"


def is_consistent(literals: Iterable[Literal]) -> bool:
    lits = set(literals)
    return not any(lit.complement() in lits for lit in lits)


class GatewayKind(str, Enum):
    AND_SPLIT = "and_split"
    AND_JOIN = "and_join"
    XOR_SPLIT = "xor_split"
    XOR_JOIN = "xor_join"

    @property
    def is_split(self) -> bool:
        return self in (GatewayKind.AND_SPLIT, GatewayKind.XOR_SPLIT)

    @property
    def family(self) -> str:
        return self.value.split("_")[0]


@dataclass(frozen=True)
class Task:
    id: str
    name: str = ""
    annotations: frozenset = frozenset()

    def __post_init__(self):
        if not is_consistent(self.annotations):
            raise ModelError(f"task {self.id!r} has an inconsistent annotation set")


@dataclass(frozen=True)
class Gateway:
    id: str
    kind: GatewayKind


class ModelError(ValueError):
    """Raised for unreadable or semantically invalid model files."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 path: str = "$"):
        self.line = line
        self.column = column
        self.path = path
        self.detail = message
        super().__init__(f"{self.position}: {message}")

    @property
    def position(self) -> str:
        if self.line is not None:
            return f"line {self.line}, column {self.column}"
        return self.path


class TraceOverflow(RuntimeError):
    """The number of traces exceeds the configured cap."""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"trace enumeration exceeds the cap of {cap} traces")


@dataclass(frozen=True)
class Violation:
    kind: str  # start-end | degree | reachability | block-structure | empty-trace
    node: str | None
    message: str

    def __str__(self) -> str:
        where = f" [{self.node}]" if self.node else ""
        return f"{self.kind}{where}: {self.message}"


@dataclass(frozen=True)
class ProcessGraph:
    name: str
    tasks: Mapping[str, Task]
    gateways: Mapping[str, Gateway]
    edges: tuple  # tuple[tuple[str, str], ...]
    start: str
    end: str
    _succ: dict = field(default=None, repr=False, compare=False)
    _pred: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        succ = {n: [] for n in self.node_ids}
        pred = {n: [] for n in self.node_ids}
        for a, b in self.edges:
            succ.setdefault(a, []).append(b)
            pred.setdefault(b, []).append(a)
        object.__setattr__(self, "_succ", succ)
        object.__setattr__(self, "_pred", pred)

    @property
    def node_ids(self) -> list[str]:
        return [self.start, *self.tasks, *self.gateways, self.end]

    def successors(self, node: str) -> list[str]:
        return self._succ.get(node, [])

    def predecessors(self, node: str) -> list[str]:
        return self._pred.get(node, [])

    def annotations(self, task_id: str) -> frozenset:
        try:
            return self.tasks[task_id].annotations
        except KeyError:
            raise KeyError(f"unknown task id {task_id!r}") from None

    @classmethod
    def sequence(cls, tasks: Sequence[Task], name: str = "sequence") -> "ProcessGraph":
        """A straight-line model start -> t1 -> ... -> tn -> end."""
        ids = ["start", *[t.id for t in tasks], "end"]
        return cls(
            name=name,
            tasks={t.id: t for t in tasks},
            gateways={},
            edges=tuple(zip(ids, ids[1:])),
            start="start",
            end="end",
        )


# --------------------------------------------------------------------------
# Parsing


def _parse_literal(text, where: str) -> Literal:
    if not isinstance(text, str):
        raise ModelError(f"annotation must be a string, got {text!r}", path=where)
    body = text[1:] if text.startswith("~") else text
    if not _ATOM_RE.match(body):
        raise ModelError(f"malformed literal {text!r}", path=where)
    return Literal(body, not text.startswith("~"))


def parse_model(data: bytes | str) -> ProcessGraph:
    """Parse and validate a JSON model document."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelError("model is not valid UTF-8", path=f"byte {exc.start}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelError(exc.msg, exc.lineno, exc.colno) from None
    except RecursionError:
        raise ModelError("model nesting too deep") from None

    if not isinstance(doc, dict):
        raise ModelError("top-level value must be an object")
    nodes = doc.get("nodes")
    edges = doc.get("edges")
    if not isinstance(nodes, list) or not isinstance(edges, list):
        raise ModelError("model needs 'nodes' and 'edges' arrays")
    name = doc.get("name", "model")
    if not isinstance(name, str):
        raise ModelError("'name' must be a string")

    tasks: dict[str, Task] = {}
    gateways: dict[str, Gateway] = {}
    starts, ends, seen = [], [], set()
    for i, node in enumerate(nodes):
        where = f"nodes[{i}]"
        if not isinstance(node, dict):
            raise ModelError("node must be an object", path=where)
        nid, ntype = node.get("id"), node.get("type")
        if not isinstance(nid, str) or not _ATOM_RE.match(nid):
            raise ModelError(f"invalid node id {nid!r}", path=where)
        if nid in seen:
            raise ModelError(f"duplicate node id {nid!r}", path=where)
        if not isinstance(ntype, str):
            raise ModelError(f"node type must be a string, got {ntype!r}", path=where)
        seen.add(nid)
        if ntype == "task":
            anns = node.get("annotations", [])
            if not isinstance(anns, list):
                raise ModelError("'annotations' must be an array", path=where)
            lits = frozenset(_parse_literal(a, where) for a in anns)
            if not is_consistent(lits):
                raise ModelError(f"inconsistent annotations on task {nid!r}", path=where)
            label = node.get("name", nid)
            if not isinstance(label, str):
                raise ModelError("'name' must be a string", path=where)
            tasks[nid] = Task(nid, label, lits)
        elif ntype == "start":
            starts.append(nid)
        elif ntype == "end":
            ends.append(nid)
        elif ntype in {k.value for k in GatewayKind}:
            if node.get("annotations"):
                raise ModelError("gateways cannot carry annotations", path=where)
            gateways[nid] = Gateway(nid, GatewayKind(ntype))
        else:
            raise ModelError(f"unknown node type {ntype!r}", path=where)
    if len(starts) != 1 or len(ends) != 1:
        raise ModelError(
            f"model needs exactly one start and one end node "
            f"(found {len(starts)} start, {len(ends)} end)"
        )

    pairs, edge_set = [], set()
    for i, edge in enumerate(edges):
        if not isinstance(edge, dict):
            raise ModelError("edge must be an object", path=f"edges[{i}]")
        a, b = edge.get("from"), edge.get("to")
        for end_ in (a, b):
            if not isinstance(end_, str) or end_ not in seen:
                raise ModelError(f"dangling edge endpoint {end_!r}", path=f"edges[{i}]")
        if (a, b) in edge_set:
            raise ModelError(f"duplicate edge {a}->{b}", path=f"edges[{i}]")
        edge_set.add((a, b))
        pairs.append((a, b))

    graph = ProcessGraph(name, tasks, gateways, tuple(pairs), starts[0], ends[0])
    problems = validate_graph(graph)
    if problems:
        first = problems[0]
        raise ModelError(
            "invalid model: " + "; ".join(map(str, problems)),
            path=f"node {first.node}" if first.node else "$",
        )
    return graph


def load_model(path) -> ProcessGraph:
    with open(path, "rb") as fh:
        return parse_model(fh.read())


def model_to_json(graph: ProcessGraph) -> dict:
    nodes = [{"id": graph.start, "type": "start"}]
    for t in graph.tasks.values():
        node = {"id": t.id, "type": "task"}
        if t.name and t.name != t.id:
            node["name"] = t.name
        if t.annotations:
            node["annotations"] = sorted(map(str, t.annotations))
        nodes.append(node)
    nodes += [{"id": g.id, "type": g.kind.value} for g in graph.gateways.values()]
    nodes.append({"id": graph.end, "type": "end"})
    return {
        "name": graph.name,
        "nodes": nodes,
        "edges": [{"from": a, "to": b} for a, b in graph.edges],
    }


# --------------------------------------------------------------------------
# Block structure
#
# A validated graph is decomposed into a process tree of nested tuples:
#   ("task", id) | ("seq", [children]) | ("xor", [branches])
#   | ("and", [branches]) | ("loop", body)


class _BlockError(Exception):
    def __init__(self, node, message):
        self.node = node
        super().__init__(message)


def _back_edges(graph: ProcessGraph) -> set:
    back, state = set(), {}
    stack = [(graph.start, iter(graph.successors(graph.start)))]
    state[graph.start] = 1
    while stack:
        node, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            state[node] = 2
            stack.pop()
            continue
        if state.get(nxt) == 1:
            back.add((node, nxt))
        elif nxt not in state:
            state[nxt] = 1
            stack.append((nxt, iter(graph.successors(nxt))))
    return back


class _TreeBuilder:
    def __init__(self, graph: ProcessGraph):
        self.g = graph
        self.back = _back_edges(graph)
        self.visited: set = set()

    def kind(self, node):
        gw = self.g.gateways.get(node)
        return gw.kind if gw else None

    def forward(self, node):
        return [s for s in self.g.successors(node) if (node, s) not in self.back]

    def next(self, node):
        nxt = self.forward(node)
        if len(nxt) != 1:
            raise _BlockError(node, "expected exactly one outgoing forward edge")
        return nxt[0]

    def is_loop_entry(self, node):
        return any((p, node) in self.back for p in self.g.predecessors(node))

    def build(self):
        tree, stop = self.sequence(self.next(self.g.start))
        if stop != self.g.end:
            raise _BlockError(stop, "unexpected join reached at top level")
        return tree

    def sequence(self, node, loop_exit_of=None):
        """Follow the flow from node until a closing join, loop split or end."""
        items = []
        while True:
            if node == self.g.end:
                return ("seq", items), node
            if node in self.g.tasks:
                self.mark(node)
                items.append(("task", node))
                node = self.next(node)
                continue
            kind = self.kind(node)
            if kind is GatewayKind.XOR_JOIN and self.is_loop_entry(node):
                if len(self.g.predecessors(node)) != 2:
                    raise _BlockError(node, "loop entry join needs exactly one forward and one back edge")
                self.mark(node)
                body, split = self.sequence(self.next(node), loop_exit_of=node)
                if self.kind(split) is not GatewayKind.XOR_SPLIT:
                    raise _BlockError(node, "loop is not closed by an xor_split back-edge")
                items.append(("loop", body))
                node = self.next(split)
                continue
            if kind is not None and kind.is_split:
                if loop_exit_of is not None and (node, loop_exit_of) in self.back:
                    self.mark(node)
                    return ("seq", items), node
                if any((node, s) in self.back for s in self.g.successors(node)):
                    raise _BlockError(node, "back-edge from a split that does not close a loop")
                self.mark(node)
                branches, join = [], None
                for succ in self.forward(node):
                    branch, stop = self.sequence(succ)
                    if stop == self.g.end or self.kind(stop) is None or self.kind(stop).is_split:
                        raise _BlockError(node, "split branch is not closed by a join")
                    if join is None:
                        join = stop
                    elif stop != join:
                        raise _BlockError(
                            node, f"split branches close at different joins ({join}, {stop})"
                        )
                    branches.append(branch)
                if self.kind(join).family != kind.family:
                    raise _BlockError(
                        node, f"{kind.value} {node} is closed by {self.kind(join).value} {join}"
                    )
                if len(self.g.predecessors(join)) != len(branches):
                    raise _BlockError(join, "join in-degree does not match its split")
                self.mark(join)
                items.append((kind.family, branches))
                node = self.next(join)
                continue
            # a plain join: closes the enclosing split
            return ("seq", items), node

    def mark(self, node):
        if node in self.visited:
            raise _BlockError(node, "node shared between blocks")
        self.visited.add(node)


def _structural_problems(graph: ProcessGraph) -> list[Violation]:
    out = []
    g = graph
    if g.predecessors(g.start):
        out.append(Violation("start-end", g.start, "start node has incoming edges"))
    if g.successors(g.end):
        out.append(Violation("start-end", g.end, "end node has outgoing edges"))
    if len(g.successors(g.start)) != 1:
        out.append(Violation("degree", g.start, "start node needs exactly one outgoing edge"))
    if len(g.predecessors(g.end)) != 1:
        out.append(Violation("degree", g.end, "end node needs exactly one incoming edge"))
    known = set(g.node_ids)
    for a, b in g.edges:
        if a not in known or b not in known:
            out.append(Violation("dangling-edge", a if a not in known else b, f"edge {a}->{b}"))
    for tid in g.tasks:
        if len(g.predecessors(tid)) != 1 or len(g.successors(tid)) != 1:
            out.append(Violation("degree", tid, "tasks need in-degree 1 and out-degree 1"))
    for gw in g.gateways.values():
        n_in, n_out = len(g.predecessors(gw.id)), len(g.successors(gw.id))
        if gw.kind.is_split and (n_in != 1 or n_out < 2):
            out.append(Violation("degree", gw.id, f"{gw.kind.value} needs in-degree 1, out-degree >= 2"))
        if not gw.kind.is_split and (n_out != 1 or n_in < 2):
            out.append(Violation("degree", gw.id, f"{gw.kind.value} needs out-degree 1, in-degree >= 2"))
    for t in g.tasks.values():
        if not is_consistent(t.annotations):
            out.append(Violation("annotations", t.id, "inconsistent annotation set"))

    def reach(frontier, step):
        seen = set(frontier)
        while frontier:
            n = frontier.pop()
            for m in step(n):
                if m not in seen:
                    seen.add(m)
                    frontier.append(m)
        return seen

    fwd = reach([g.start], g.successors)
    bwd = reach([g.end], g.predecessors)
    for n in g.node_ids:
        if n not in fwd:
            out.append(Violation("reachability", n, "not reachable from start"))
        elif n not in bwd:
            out.append(Violation("reachability", n, "cannot reach end"))
    return out


def _nullable(tree) -> bool:
    tag, payload = tree
    if tag == "task":
        return False
    if tag == "seq":
        return all(map(_nullable, payload))
    if tag == "xor":
        return any(map(_nullable, payload))
    if tag == "and":
        return all(map(_nullable, payload))
    return _nullable(payload)  # loop


def _process_tree(graph: ProcessGraph):
    builder = _TreeBuilder(graph)
    tree = builder.build()
    missing = set(graph.tasks) | set(graph.gateways)
    missing -= builder.visited
    if missing:
        raise _BlockError(sorted(missing)[0], "node not part of any block")
    return tree


def validate_graph(graph: ProcessGraph) -> list[Violation]:
    """Return every invariant violation found; an empty list means valid."""
    problems = _structural_problems(graph)
    if problems:
        return problems
    try:
        tree = _process_tree(graph)
    except _BlockError as exc:
        return [Violation("block-structure", exc.node, str(exc))]
    if _nullable(tree):
        return [Violation("empty-trace", None, "the model admits an execution with no tasks")]
    return []


# --------------------------------------------------------------------------
# Trace enumeration


def _interleavings(a: tuple, b: tuple):
    if not a:
        yield b
        return
    if not b:
        yield a
        return
    for rest in _interleavings(a[1:], b):
        yield (a[0],) + rest
    for rest in _interleavings(a, b[1:]):
        yield (b[0],) + rest


class _Language:
    def __init__(self, cap: int, loop_bound: int):
        self.cap = cap
        self.loop_bound = loop_bound

    def check(self, traces: set) -> set:
        if len(traces) > self.cap:
            raise TraceOverflow(self.cap)
        return traces

    def concat(self, left: set, right: set) -> set:
        if len(left) * len(right) > self.cap * 64:
            raise TraceOverflow(self.cap)
        return self.check({a + b for a in left for b in right})

    def of(self, tree) -> set:
        tag, payload = tree
        if tag == "task":
            return {(payload,)}
        if tag == "seq":
            out = {()}
            for child in payload:
                out = self.concat(out, self.of(child))
            return out
        if tag == "xor":
            out = set()
            for branch in payload:
                out |= self.of(branch)
                self.check(out)
            return out
        if tag == "and":
            out = {()}
            for branch in payload:
                lang = self.of(branch)
                if len(out) * len(lang) > self.cap * 64:
                    raise TraceOverflow(self.cap)
                nxt = set()
                for a, b in product(out, lang):
                    nxt.update(_interleavings(a, b))
                    if len(nxt) > self.cap:
                        raise TraceOverflow(self.cap)
                out = nxt
            return out
        # loop: the body runs once, then the back-edge is taken up to loop_bound times
        body = self.of(payload)
        out, current = set(body), body
        for _ in range(self.loop_bound):
            current = self.concat(current, body)
            out |= current
            self.check(out)
        return out


def enumerate_traces(
    graph: ProcessGraph, loop_bound: int = 2, cap: int = DEFAULT_TRACE_CAP
) -> list[tuple[str, ...]]:
    """All task sequences the control flow admits, sorted lexicographically.

    Raises TraceOverflow instead of truncating when more than ``cap`` traces
    exist.
    """
    if loop_bound < 0:
        raise ValueError("loop_bound must be nonnegative")
    problems = validate_graph(graph)
    if problems:
        raise ModelError("invalid model: " + "; ".join(map(str, problems)))
    traces = _Language(cap, loop_bound).of(_process_tree(graph))
    return sorted(traces)


def process_tree(graph: ProcessGraph):
    """The block decomposition of a valid graph (nested tuples)."""
    problems = validate_graph(graph)
    if problems:
        raise ModelError("invalid model: " + "; ".join(map(str, problems)))
    return _process_tree(graph)
