"""Obligation instances tracked along a trace.

At every position the cumulated state is handed to the reasoner; chains that
become derivable enter force as new instances. Instances are then checked
against the state according to their modality, explicit ``terminates``
clauses close them, and a violated link activates the next link of its
reparation chain. After the last position the remaining instances are closed
and compensations are resolved.

Statuses only move ACTIVE -> FULFILLED | VIOLATED | TERMINATED and
VIOLATED -> COMPENSATED.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

from .fcl import DeonticLiteral, Modality, ReparationChain, RuleSet
from .process_model import Literal, ProcessGraph
from .reasoner import InForce, reasoner_for
from .state import cumulate_annotations

__all__ = [
    "Status",
    "ObligationInstance",
    "Event",
    "LifecycleConfig",
    "TraceResult",
    "step",
    "finish",
    "evaluate_trace",
    "evaluate_steps",
    "failure_kind",
]


class Status(str, Enum):
    ACTIVE = "active"
    FULFILLED = "fulfilled"
    VIOLATED = "violated"
    COMPENSATED = "compensated"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class LifecycleConfig:
    loop_bound: int = 2
    strict_compensation: bool = False
    force_mode: str = "persist"  # or "reapply"
    trace_cap: int = 10**6

    def __post_init__(self):
        if self.loop_bound < 0 or self.trace_cap < 0:
            raise ValueError("loop_bound and trace_cap must be nonnegative")
        if self.force_mode not in ("persist", "reapply"):
            raise ValueError(f"unknown force_mode {self.force_mode!r}")


@dataclass
class ObligationInstance:
    content: Literal
    modality: Modality
    source_rule: str
    chain: ReparationChain
    chain_index: int  # 1-based position in chain
    start: int
    end: int | None = None
    status: Status = Status.ACTIVE
    violation_positions: tuple = ()
    fulfilled_at: int | None = None
    # a violated perdurant obligation stays in force until fulfilled
    open: bool = False
    # a violated maintenance obligation keeps recording breaches
    monitoring: bool = False
    parent: tuple | None = None
    successor: tuple | None = None

    @property
    def uid(self) -> tuple:
        return (self.source_rule, self.chain_index, self.start)

    @property
    def deontic(self) -> DeonticLiteral:
        return DeonticLiteral(self.modality, self.content)

    @property
    def in_force(self) -> bool:
        return self.status is Status.ACTIVE or self.open

    @property
    def tracked(self) -> bool:
        return self.in_force or self.monitoring

    @property
    def violated(self) -> bool:
        return bool(self.violation_positions)


class Event(NamedTuple):
    kind: str  # enter | fulfilled | violated | breach | terminated | late-fulfilment | compensation
    position: int
    rule: str
    content: Literal
    chain_index: int


@dataclass(frozen=True)
class TraceResult:
    trace: tuple
    instances: tuple  # ObligationInstance, final statuses
    strongly_compliant: bool
    weakly_compliant: bool
    states: tuple = field(default=(), compare=False, repr=False)


# --------------------------------------------------------------------------
# One position


class _Step:
    def __init__(self, state, k, seen, cfg):
        self.state = state
        self.k = k
        self.seen = seen
        self.cfg = cfg
        self.events: list[Event] = []
        self.created: list[ObligationInstance] = []

    def emit(self, kind, inst):
        self.events.append(Event(kind, self.k, inst.source_rule, inst.content, inst.chain_index))

    def violate(self, inst, position, keep_open=False):
        inst.status = Status.VIOLATED
        inst.violation_positions += (position,)
        inst.open = keep_open
        if not keep_open:
            inst.end = position
        self.emit("violated", inst)
        self.spawn_successor(inst)

    def spawn_successor(self, inst):
        if inst.chain_index >= len(inst.chain):
            return
        link = inst.chain.links[inst.chain_index]
        succ = ObligationInstance(
            content=link.content,
            modality=link.modality,
            source_rule=inst.source_rule,
            chain=inst.chain,
            chain_index=inst.chain_index + 1,
            start=self.k,
            parent=inst.uid,
        )
        inst.successor = succ.uid
        self.created.append(succ)
        self.emit("compensation", succ)
        self.evaluate(succ)

    def evaluate(self, inst):
        """Check one tracked instance against the state at this position."""
        holds = inst.content in self.state
        mod = inst.modality
        if inst.status is Status.ACTIVE:
            if mod is Modality.OPU:
                if holds:
                    inst.status, inst.end, inst.fulfilled_at = Status.FULFILLED, self.k, self.k
                    self.emit("fulfilled", inst)
                else:
                    self.violate(inst, self.k)
            elif mod is Modality.OM:
                if not holds:
                    inst.monitoring = True
                    self.violate(inst, self.k)
            else:
                if holds or (mod.preemptive and inst.content in self.seen):
                    inst.status, inst.end, inst.fulfilled_at = Status.FULFILLED, self.k, self.k
                    self.emit("fulfilled", inst)
        elif inst.open:
            if holds:
                inst.open = False
                inst.end = inst.fulfilled_at = self.k
                self.emit("late-fulfilment", inst)
        elif inst.monitoring and not holds and self.k not in inst.violation_positions:
            inst.violation_positions += (self.k,)
            self.emit("breach", inst)

    def close(self, inst, position, how):
        """End of the in-force interval at ``position`` (deadline or trace end)."""
        mod = inst.modality
        if inst.status is Status.ACTIVE:
            if mod is Modality.OM:
                inst.status = Status.TERMINATED if how == "terminated" else Status.FULFILLED
                inst.end = position
                self.emit("terminated" if how == "terminated" else "fulfilled", inst)
            elif mod.perdurant:
                # deadline passed unfulfilled: violated, but still owed
                self.violate(inst, position, keep_open=how != "end")
            else:
                self.violate(inst, position)
        elif how != "terminated":
            if inst.open:
                inst.open = False
                inst.end = position
            inst.monitoring = False
        elif inst.monitoring:
            inst.monitoring = False


def step(
    carry: Iterable[ObligationInstance],
    in_force_new: Iterable[InForce],
    state: frozenset,
    k: int,
    *,
    seen: frozenset | None = None,
    terminated: frozenset = frozenset(),
    still_derivable: frozenset | None = None,
    cfg: LifecycleConfig = LifecycleConfig(),
) -> tuple[list[ObligationInstance], list[Event]]:
    """Advance tracked instances through position ``k``.

    ``carry`` holds the instances still tracked after position k-1 and is not
    modified; updated copies are returned together with the instances created
    at ``k``. ``seen`` is the set of literals that held at any position up to
    and including ``k`` (preemptive achievement). ``terminated`` lists the
    contents ended by ``terminates`` clauses firing at ``k``. In reapply mode
    ``still_derivable`` is the set of chains derivable at ``k``; first links
    no longer derivable leave force.
    """
    seen = state if seen is None else seen
    st = _Step(state, k, seen, cfg)
    tracked = [replace(inst) for inst in carry]

    if cfg.force_mode == "reapply" and still_derivable is not None:
        for inst in tracked:
            if (
                inst.status is Status.ACTIVE
                and inst.chain_index == 1
                and inst.start < k
                and InForce(inst.source_rule, inst.chain) not in still_derivable
            ):
                st.close(inst, k - 1, "ceased")

    keys = {(i.source_rule, i.chain_index) for i in tracked if i.in_force}
    for c in sorted(in_force_new, key=lambda c: c.rule):
        if (c.rule, 1) in keys:
            continue
        first = c.chain.first
        inst = ObligationInstance(first.content, first.modality, c.rule, c.chain, 1, k)
        st.created.append(inst)
        st.emit("enter", inst)
        keys.add((c.rule, 1))

    evaluated = set()
    for inst in tracked + st.created[:]:
        if inst.tracked and inst.uid not in evaluated:
            evaluated.add(inst.uid)
            if inst.chain_index == 1 or inst.start != k:
                st.evaluate(inst)
            # successors created at k were already evaluated when spawned

    if terminated:
        for inst in tracked + st.created[:]:
            if inst.content in terminated and inst.tracked:
                if inst.in_force and not (inst.open and inst.status is Status.VIOLATED):
                    st.close(inst, k, "terminated")
                elif inst.monitoring:
                    inst.monitoring = False

    return tracked + st.created, st.events


def finish(
    instances: Sequence[ObligationInstance],
    length: int,
    state: frozenset,
    seen: frozenset,
    cfg: LifecycleConfig = LifecycleConfig(),
) -> tuple[list[ObligationInstance], list[Event]]:
    """Close everything still tracked at the end of the trace and resolve compensations."""
    st = _Step(state, length, seen, cfg)
    insts = [replace(i) for i in instances]
    queue = [i for i in insts if i.tracked]
    while queue:
        inst = queue.pop(0)
        before = len(st.created)
        st.close(inst, length, "end")
        queue.extend(st.created[before:])
    insts += st.created

    by_uid = {i.uid: i for i in insts}
    # successors carry higher chain indices, so resolve from the chain tails up
    for inst in sorted(insts, key=lambda i: -i.chain_index):
        if inst.status is not Status.VIOLATED or inst.successor is None:
            continue
        succ = by_uid[inst.successor]
        discharged = succ.status in (Status.FULFILLED, Status.TERMINATED) or (
            not cfg.strict_compensation and succ.status is Status.COMPENSATED
        )
        if inst.modality.perdurant and inst.fulfilled_at is None:
            discharged = False
        if discharged:
            inst.status = Status.COMPENSATED
            st.emit("compensation", inst)
    return insts, st.events


# --------------------------------------------------------------------------
# Whole traces


def evaluate_steps(
    rs: RuleSet,
    trace: Sequence[str],
    annotations: Sequence[Iterable[Literal]],
    cfg: LifecycleConfig = LifecycleConfig(),
) -> TraceResult:
    """Evaluate a trace given the annotations of each of its steps."""
    if len(trace) != len(annotations):
        raise ValueError("trace and annotations differ in length")
    reasoner = reasoner_for(rs)
    states = cumulate_annotations(annotations)
    terminators = {r.id: frozenset(r.terminates) for r in rs.rules if r.terminates}

    done: list[ObligationInstance] = []
    tracked: list[ObligationInstance] = []
    prev_deontic, prev_fired = frozenset(), frozenset()
    seen: frozenset = frozenset()
    for k, state in enumerate(states, start=1):
        seen = seen | state
        ambient = frozenset(i.deontic for i in tracked if i.in_force)
        conc = reasoner.conclusions(state, ambient)
        ending = frozenset().union(
            *(terminators[r] for r in conc.fired - prev_fired if r in terminators)
        )
        updated, _ = step(
            tracked,
            conc.deontic - prev_deontic,
            state,
            k,
            seen=seen,
            terminated=ending,
            still_derivable=conc.deontic,
            cfg=cfg,
        )
        tracked = [i for i in updated if i.tracked]
        done += [i for i in updated if not i.tracked]
        prev_deontic, prev_fired = conc.deontic, conc.fired

    final_state = states[-1] if states else frozenset()
    instances, _ = finish(done + tracked, len(states), final_state, seen, cfg)
    instances.sort(key=lambda i: (i.start, i.source_rule, i.chain_index))
    strong = not any(i.status in (Status.VIOLATED, Status.COMPENSATED) for i in instances)
    weak = not any(i.status is Status.VIOLATED for i in instances)
    return TraceResult(tuple(trace), tuple(instances), strong, weak, states)


def evaluate_trace(
    rs: RuleSet, graph: ProcessGraph, trace: Sequence[str], cfg: LifecycleConfig = LifecycleConfig()
) -> TraceResult:
    return evaluate_steps(rs, trace, [graph.annotations(t) for t in trace], cfg)


def failure_kind(inst: ObligationInstance) -> str | None:
    """Diagnosis category of an instance, or None if it was never violated."""
    if not inst.violated:
        return None
    if inst.status is Status.VIOLATED and inst.successor is not None:
        return "uncompensated"
    if inst.modality is Modality.OPU:
        return "punctual-violation"
    if inst.modality is Modality.OM:
        return "maintenance-violation"
    if inst.modality.perdurant:
        return "perdurant-violation"
    return "achievement-violation"
