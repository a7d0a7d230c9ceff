"""Environment states along a trace.

Each task's annotations are folded into the running state: a literal whose
complement is already present replaces it, everything else accumulates.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .process_model import Literal, ProcessGraph

__all__ = ["update", "cumulate", "cumulate_annotations", "state_at", "StateSequence"]

StateSequence = tuple  # tuple[frozenset[Literal], ...]; position k is states[k - 1]

EMPTY = frozenset()


def update(state: frozenset, annotations: Iterable[Literal]) -> frozenset:
    incoming = frozenset(annotations)
    overwritten = {lit.complement() for lit in incoming}
    return (state - overwritten) | incoming


def cumulate_annotations(annotations: Sequence[Iterable[Literal]]) -> StateSequence:
    states, current = [], EMPTY
    for anns in annotations:
        current = update(current, anns)
        states.append(current)
    return tuple(states)


def cumulate(trace: Sequence[str], graph: ProcessGraph) -> StateSequence:
    """The state after each step of ``trace``, starting from the empty state."""
    return cumulate_annotations([graph.annotations(task_id) for task_id in trace])


def state_at(seq: StateSequence, n: int) -> frozenset:
    """State at 1-based position ``n``; out-of-range positions give the empty set."""
    if 1 <= n <= len(seq):
        return seq[n - 1]
    return EMPTY
