"""Defeasible inference over a rule set.

Rules are defeasible and conflicts are settled by the superiority relation
with ambiguity blocking and no team defeat. Each rule is proved (+),
refuted (-) or left undetermined by iterating to the least fixpoint:

* a rule is *applicable* when every body item is proved and *discarded*
  when some body item is refuted;
* a rule is proved when it is applicable and every conflicting rule is
  discarded or inferior to it;
* a rule is refuted when it is discarded, or some applicable conflicting
  rule is not inferior to it.

Literals of the input state are indisputable: a definitional rule whose
head contradicts the state never fires and never attacks. Ambient deontic
literals (obligations carried over from earlier positions) only serve to
satisfy rule bodies.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from .fcl import DeonticLiteral, ReparationChain, Rule, RuleSet, heads_conflict
from .process_model import Literal
from .state import state_at

__all__ = ["InForce", "ConclusionSet", "Reasoner", "conclusions", "force"]


class InForce(NamedTuple):
    rule: str
    chain: ReparationChain


@dataclass(frozen=True)
class ConclusionSet:
    facts: frozenset  # Literal
    deontic: frozenset  # InForce, obligation chains only
    permissions: frozenset  # DeonticLiteral with modality P
    fired: frozenset  # ids of proved rules
    rounds: int = 0

    @property
    def deontic_literals(self) -> frozenset:
        """First links of in-force chains plus permissions."""
        return frozenset(c.chain.first for c in self.deontic) | self.permissions


class Reasoner:
    """A rule set compiled for repeated queries; results are memoized."""

    def __init__(self, rs: RuleSet, cache_size: int = 1 << 16):
        self.rs = rs
        self.rules: list[Rule] = list(rs.rules)
        n = len(self.rules)
        index = {r.id: i for i, r in enumerate(self.rules)}
        sup = {(index[w], index[l]) for w, l in rs.superiority}

        # supporters of every body item: fact literal -> definitional rules,
        # deontic literal -> rules whose chain starts with it
        self.fact_support: dict[Literal, list[int]] = {}
        self.deontic_support: dict[DeonticLiteral, list[int]] = {}
        for i, r in enumerate(self.rules):
            if r.is_definitional:
                self.fact_support.setdefault(r.head, []).append(i)
            else:
                self.deontic_support.setdefault(r.head.first, []).append(i)

        self.attackers: list[list[tuple[int, bool]]] = [[] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if i != j and heads_conflict(self.rules[i], self.rules[j]):
                    self.attackers[i].append((j, (i, j) in sup))
        self.body_facts = [
            [b for b in r.body if isinstance(b, Literal)] for r in self.rules
        ]
        self.body_deontic = [
            [b for b in r.body if isinstance(b, DeonticLiteral)] for r in self.rules
        ]
        self._cache: dict = {}
        self._cache_size = cache_size

    def conclusions(self, state: Iterable[Literal], ambient: Iterable[DeonticLiteral] = ()) -> ConclusionSet:
        key = (frozenset(state), frozenset(ambient))
        hit = self._cache.get(key)
        if hit is None:
            hit = self._solve(*key)
            if len(self._cache) >= self._cache_size:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    def _solve(self, state: frozenset, ambient: frozenset) -> ConclusionSet:
        rules = self.rules
        n = len(rules)
        status: list = [None] * n  # True proved, False refuted, None undetermined
        blocked = [r.is_definitional and r.head.complement() in state for r in rules]

        def fact_status(lit):
            if lit in state:
                return True
            if lit.complement() in state:
                return False
            sup = self.fact_support.get(lit, ())
            if any(status[i] is True for i in sup):
                return True
            if all(status[i] is False for i in sup):
                return False
            return None

        def deontic_status(dl):
            if dl in ambient:
                return True
            sup = self.deontic_support.get(dl, ())
            if any(status[i] is True for i in sup):
                return True
            if all(status[i] is False for i in sup):
                return False
            return None

        def body_status(i):
            result = True
            for lit in self.body_facts[i]:
                s = fact_status(lit)
                if s is False:
                    return False
                if s is None:
                    result = None
            for dl in self.body_deontic[i]:
                s = deontic_status(dl)
                if s is False:
                    return False
                if s is None:
                    result = None
            return result

        rounds = 0
        changed = True
        while changed:
            changed = False
            rounds += 1
            bodies = [body_status(i) for i in range(n)]
            for i in range(n):
                if status[i] is not None:
                    continue
                if blocked[i] or bodies[i] is False:
                    status[i] = False
                    changed = True
                    continue
                beaten = False
                open_attack = False
                for j, superior in self.attackers[i]:
                    if blocked[j] or bodies[j] is False or superior:
                        continue
                    if bodies[j] is True:
                        beaten = True
                        break
                    open_attack = True
                if beaten:
                    status[i] = False
                    changed = True
                elif bodies[i] is True and not open_attack:
                    status[i] = True
                    changed = True
        assert rounds <= n + 1, "fixpoint iteration exceeded the number of rules"

        facts = set(state)
        deontic, permissions, fired = set(), set(), set()
        for i, r in enumerate(rules):
            if status[i] is not True:
                continue
            fired.add(r.id)
            if r.is_definitional:
                facts.add(r.head)
            elif r.is_permission:
                permissions.add(r.head.first)
            else:
                deontic.add(InForce(r.id, r.head))
        return ConclusionSet(
            frozenset(facts), frozenset(deontic), frozenset(permissions), frozenset(fired), rounds
        )


# equal rule sets reason identically, so they may share a compiled reasoner
_REASONERS: "weakref.WeakKeyDictionary[RuleSet, Reasoner]" = weakref.WeakKeyDictionary()


def reasoner_for(rs: RuleSet) -> Reasoner:
    r = _REASONERS.get(rs)
    if r is None:
        r = _REASONERS[rs] = Reasoner(rs)
    return r


def conclusions(
    rs: RuleSet, state: Iterable[Literal], ambient_deontic: Iterable[DeonticLiteral] = ()
) -> ConclusionSet:
    """Definitional and deontic conclusions of ``rs`` in a consistent state."""
    return reasoner_for(rs).conclusions(state, ambient_deontic)


def force(
    rs: RuleSet,
    seq: Sequence[frozenset],
    trace: Sequence[str] = (),
    ambient: Mapping[int, Iterable[DeonticLiteral]] | Callable[[int], Iterable[DeonticLiteral]] | None = None,
) -> dict[int, frozenset]:
    """Chains derivable at each position 1..len(seq).

    ``ambient`` gives the carried-over deontic literals per position, either
    as a mapping or a callable; positions outside the trace map to nothing.
    """
    if trace and len(trace) != len(seq):
        raise ValueError("state sequence and trace differ in length")
    if ambient is None:
        get = lambda k: ()
    elif callable(ambient):
        get = ambient
    else:
        get = lambda k: ambient.get(k, ())
    r = reasoner_for(rs)
    return {k: r.conclusions(state_at(seq, k), get(k)).deontic for k in range(1, len(seq) + 1)}
