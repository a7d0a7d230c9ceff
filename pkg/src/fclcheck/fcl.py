"""FCL-style rule language: AST, parser and serializer.

One statement per line, ``#`` starts a comment::

    r1: customer, spending_over_1000 => premium_customer
    r2: restaurant, [P]sell_alcohol => [OM]show_license (x) [OAPNP]pay_fine
    r3: complaint_closed => closed terminates {~credit_action}
    r2 > r1

Literals are propositional (``p`` or ``~p``). ``[F]p`` is read as ``[OM]~p``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Union

from .process_model import Literal

__all__ = [
    "Modality",
    "DeonticLiteral",
    "ReparationChain",
    "Rule",
    "RuleSet",
    "RuleParseError",
    "parse_rules",
    "load_rules",
    "serialize_rules",
    "ruleset_stats",
    "RuleSetStats",
    "Count",
    "heads_conflict",
]


class Modality(str, Enum):
    P = "P"
    OPU = "OPU"
    OM = "OM"
    OAPP = "OAPP"
    OAPNP = "OAPNP"
    OANPP = "OANPP"
    OANPNP = "OANPNP"

    @property
    def is_obligation(self) -> bool:
        return self is not Modality.P

    @property
    def is_achievement(self) -> bool:
        return self.value.startswith("OA")

    @property
    def preemptive(self) -> bool:
        return self in (Modality.OAPP, Modality.OAPNP)

    @property
    def perdurant(self) -> bool:
        return self in (Modality.OAPP, Modality.OANPP)

    @classmethod
    def achievement(cls, preemptive: bool, perdurant: bool) -> "Modality":
        return cls("OA" + ("P" if preemptive else "NP") + ("P" if perdurant else "NP"))


@dataclass(frozen=True, order=True)
class DeonticLiteral:
    modality: Modality
    content: Literal

    def __str__(self) -> str:
        return f"[{self.modality.value}]{self.content}"


@dataclass(frozen=True)
class ReparationChain:
    links: tuple  # tuple[DeonticLiteral, ...]

    def __post_init__(self):
        if not self.links:
            raise ValueError("a reparation chain needs at least one link")
        for i, link in enumerate(self.links):
            if i > 0 and link.modality is Modality.P:
                raise ValueError("only the first link of a chain may be a permission")
        if self.links[0].modality is Modality.P and len(self.links) > 1:
            raise ValueError("a permission cannot be followed by compensations")
        contents = [link.content for link in self.links]
        if len(set(contents)) != len(contents):
            raise ValueError("chain links must have distinct contents")

    @property
    def first(self) -> DeonticLiteral:
        return self.links[0]

    def compensation(self, index: int) -> frozenset:
        """Links compensating the violation of 1-based link ``index``."""
        if index < len(self.links):
            return frozenset({self.links[index]})
        return frozenset()

    def __len__(self) -> int:
        return len(self.links)

    def __str__(self) -> str:
        return " (x) ".join(map(str, self.links))


BodyItem = Union[Literal, DeonticLiteral]


@dataclass(frozen=True)
class Rule:
    id: str
    body: tuple  # tuple[BodyItem, ...]
    head: Union[Literal, ReparationChain]
    terminates: tuple = ()  # tuple[Literal, ...]

    @property
    def is_definitional(self) -> bool:
        return isinstance(self.head, Literal)

    @property
    def is_permission(self) -> bool:
        return isinstance(self.head, ReparationChain) and self.head.first.modality is Modality.P

    @property
    def is_obligation(self) -> bool:
        return isinstance(self.head, ReparationChain) and self.head.first.modality.is_obligation

    def __str__(self) -> str:
        body = ", ".join(map(str, self.body))
        text = f"{self.id}: {body} => {self.head}" if body else f"{self.id}: => {self.head}"
        if self.terminates:
            text += " terminates {" + ", ".join(map(str, self.terminates)) + "}"
        return text


def heads_conflict(r: Rule, s: Rule) -> bool:
    """Whether the conclusions of two rules attack each other.

    Complementary definitional heads conflict, as do obligations of
    complementary contents and an obligation against a permission of the
    complement. Two permissions never conflict.
    """
    if r.is_definitional or s.is_definitional:
        return r.is_definitional and s.is_definitional and r.head == s.head.complement()
    a, b = r.head.first, s.head.first
    if a.content != b.content.complement():
        return False
    return a.modality.is_obligation or b.modality.is_obligation


@dataclass(frozen=True)
class RuleSet:
    rules: tuple = ()  # tuple[Rule, ...]
    superiority: tuple = ()  # tuple[(winner_id, loser_id), ...]
    name: str = field(default="rules", compare=False)

    def __post_init__(self):
        ids = [r.id for r in self.rules]
        dup = [i for i, n in Counter(ids).items() if n > 1]
        if dup:
            raise ValueError(f"duplicate rule id {dup[0]!r}")
        known = set(ids)
        for w, l in self.superiority:
            for rid in (w, l):
                if rid not in known:
                    raise ValueError(f"superiority references unknown rule {rid!r}")
        cycle = self._conflict_cycle()
        if cycle:
            raise ValueError("cyclic superiority between conflicting rules: " + " > ".join(cycle))

    def _conflict_cycle(self):
        rules = {r.id: r for r in self.rules}
        graph: dict[str, list[str]] = {}
        for w, l in self.superiority:
            if heads_conflict(rules[w], rules[l]):
                graph.setdefault(w, []).append(l)
        colour: dict[str, int] = {}

        def visit(node, path):
            colour[node] = 1
            for nxt in graph.get(node, ()):
                if colour.get(nxt) == 1:
                    return path[path.index(nxt):] + [nxt]
                if nxt not in colour:
                    found = visit(nxt, path + [nxt])
                    if found:
                        return found
            colour[node] = 2
            return None

        for start in list(graph):
            if start not in colour:
                found = visit(start, [start])
                if found:
                    return found
        return None

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    @property
    def superior_pairs(self) -> frozenset:
        return frozenset(self.superiority)

    def __len__(self) -> int:
        return len(self.rules)


# --------------------------------------------------------------------------
# Parsing


class RuleParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        self.detail = message
        super().__init__(f"line {line}, column {column}: {message}")

    @property
    def position(self) -> str:
        return f"line {self.line}, column {self.column}"


_MODALITIES = {m.value for m in Modality} | {"F"}


def _is_ident_start(ch: str) -> bool:
    return ch == "_" or ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def _is_ident_char(ch: str) -> bool:
    return _is_ident_start(ch) or ("0" <= ch <= "9")


def _tokenize(text: str, lineno: int) -> list[tuple[str, str, int]]:
    """Tokens of one line as (kind, value, column)."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        col = i + 1
        if ch in " \t\r\f\v":
            i += 1
        elif ch == "#":
            break
        elif _is_ident_start(ch):
            j = i + 1
            while j < n and _is_ident_char(text[j]):
                j += 1
            tokens.append(("ID", text[i:j], col))
            i = j
        elif text.startswith("=>", i):
            tokens.append(("=>", "=>", col))
            i += 2
        elif text.startswith("(x)", i):
            tokens.append(("(x)", "(x)", col))
            i += 3
        elif ch == "⊗":
            tokens.append(("(x)", "(x)", col))
            i += 1
        elif ch in ":,[]{}>~":
            tokens.append((ch, ch, col))
            i += 1
        else:
            raise RuleParseError(f"unexpected character {ch!r}", lineno, col)
    tokens.append(("EOL", "", n + 1))
    return tokens


class _LineParser:
    def __init__(self, tokens, lineno):
        self.toks = tokens
        self.pos = 0
        self.lineno = lineno

    @property
    def peek(self):
        return self.toks[self.pos]

    def error(self, message, tok=None):
        tok = tok or self.peek
        return RuleParseError(message, self.lineno, tok[2])

    def expect(self, kind, what=None):
        tok = self.peek
        if tok[0] != kind:
            found = "end of line" if tok[0] == "EOL" else repr(tok[1])
            raise self.error(f"expected {what or kind!r}, found {found}")
        self.pos += 1
        return tok

    def literal(self) -> Literal:
        positive = True
        if self.peek[0] == "~":
            self.pos += 1
            positive = False
        tok = self.expect("ID", "literal")
        return Literal(tok[1], positive)

    def deontic(self) -> tuple[DeonticLiteral, tuple]:
        start = self.expect("[")
        mod = self.expect("ID", "modality")
        if mod[1] not in _MODALITIES:
            raise self.error(f"unknown modality {mod[1]!r}", mod)
        self.expect("]")
        content = self.literal()
        if mod[1] == "F":
            return DeonticLiteral(Modality.OM, content.complement()), start
        return DeonticLiteral(Modality(mod[1]), content), start

    def body_item(self) -> BodyItem:
        if self.peek[0] == "[":
            return self.deontic()[0]
        return self.literal()

    def chain(self) -> ReparationChain:
        links = [self.deontic()]
        while self.peek[0] == "(x)":
            self.pos += 1
            links.append(self.deontic())
        for i, (link, tok) in enumerate(links):
            if i > 0 and link.modality is Modality.P:
                raise self.error("a compensation cannot be a permission", tok)
            if i > 0 and links[0][0].modality is Modality.P:
                raise self.error("a permission cannot be followed by compensations", tok)
            if any(link.content == other.content for other, _ in links[:i]):
                raise self.error(f"duplicate content {link.content} in chain", tok)
        return ReparationChain(tuple(link for link, _ in links))

    def rule(self) -> Rule:
        rid = self.expect("ID", "rule id")[1]
        self.expect(":")
        body = []
        if self.peek[0] != "=>":
            body.append(self.body_item())
            while self.peek[0] == ",":
                self.pos += 1
                body.append(self.body_item())
        self.expect("=>")
        head = self.chain() if self.peek[0] == "[" else self.literal()
        terminates = []
        if self.peek[0] == "ID" and self.peek[1] == "terminates":
            self.pos += 1
            self.expect("{")
            terminates.append(self.literal())
            while self.peek[0] == ",":
                self.pos += 1
                terminates.append(self.literal())
            self.expect("}")
        self.expect("EOL", "end of line")
        return Rule(rid, tuple(body), head, tuple(terminates))


def parse_rules(text: str | bytes, name: str = "rules") -> RuleSet:
    """Parse a rule document; every rejection carries a line and column."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            before = text[: exc.start]
            line = before.count(b"\n") + 1
            col = exc.start - (before.rfind(b"\n") + 1) + 1
            raise RuleParseError("invalid UTF-8", line, col) from None

    rules: list[Rule] = []
    rule_pos: dict[str, tuple[int, int]] = {}
    sups: list[tuple[str, str]] = []
    sup_pos: list[tuple[int, int, int]] = []  # line, winner column, loser column

    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(line, lineno)
        if tokens[0][0] == "EOL":
            continue
        parser = _LineParser(tokens, lineno)
        if tokens[0][0] == "ID" and tokens[1][0] == ">":
            parser.pos = 2
            loser = parser.expect("ID", "rule id")
            parser.expect("EOL", "end of line")
            sups.append((tokens[0][1], loser[1]))
            sup_pos.append((lineno, tokens[0][2], loser[2]))
            continue
        if not (tokens[0][0] == "ID" and tokens[1][0] == ":"):
            raise parser.error("expected a rule 'id: body => head' or a superiority 'id > id'")
        rule = parser.rule()
        if rule.id in rule_pos:
            first = rule_pos[rule.id][0]
            raise RuleParseError(f"duplicate rule id {rule.id!r} (first defined on line {first})",
                                 lineno, tokens[0][2])
        rule_pos[rule.id] = (lineno, tokens[0][2])
        rules.append(rule)

    for (w, l), (lineno, wcol, lcol) in zip(sups, sup_pos):
        if w not in rule_pos:
            raise RuleParseError(f"superiority references unknown rule {w!r}", lineno, wcol)
        if l not in rule_pos:
            raise RuleParseError(f"superiority references unknown rule {l!r}", lineno, lcol)
    try:
        return RuleSet(tuple(rules), tuple(sups), name=name)
    except ValueError as exc:
        lineno, wcol, _ = sup_pos[0] if sup_pos else (1, 1, 1)
        for (w, l), pos in zip(sups, sup_pos):
            if w in str(exc) and l in str(exc):
                lineno, wcol, _ = pos
                break
        raise RuleParseError(str(exc), lineno, wcol) from None


def load_rules(path) -> RuleSet:
    from pathlib import Path

    p = Path(path)
    return parse_rules(p.read_bytes(), name=p.stem)


def serialize_rules(rs: RuleSet) -> str:
    lines = [str(r) for r in rs.rules]
    lines += [f"{w} > {l}" for w, l in rs.superiority]
    return "".join(line + "\n" for line in lines)


# --------------------------------------------------------------------------
# Statistics


@dataclass(frozen=True)
class Count:
    distinct: int = 0
    total: int = 0

    def __str__(self) -> str:
        return f"{self.distinct} ({self.total})"


def _count(items: Iterable) -> Count:
    items = list(items)
    return Count(len(set(items)), len(items))


@dataclass(frozen=True)
class RuleSetStats:
    by_modality: dict  # Modality -> Count, over head chain links
    body: dict  # Modality -> Count, over deontic body literals
    rule_kinds: dict  # "definitional" | "obligation" | "permission" -> int
    compensations: Count
    prohibitions: Count
    atoms: int
    superiority: int

    @property
    def total(self) -> int:
        return sum(c.total for c in self.by_modality.values())

    def table(self) -> list[tuple[str, Count]]:
        m = self.by_modality

        def merged(mods):
            d = sum((m[x].distinct for x in mods), 0)
            t = sum((m[x].total for x in mods), 0)
            return Count(d, t)

        ach = [x for x in Modality if x.is_achievement]
        return [
            ("Punctual Obligation", m[Modality.OPU]),
            ("Achievement Obligation", merged(ach)),
            ("  Preemptive", merged([x for x in ach if x.preemptive])),
            ("  Non preemptive", merged([x for x in ach if not x.preemptive])),
            ("  Perdurant", merged([x for x in ach if x.perdurant])),
            ("  Non perdurant", merged([x for x in ach if not x.perdurant])),
            ("Maintenance Obligation", m[Modality.OM]),
            ("  Prohibition", self.prohibitions),
            ("Permission", m[Modality.P]),
            ("Compensation", self.compensations),
        ]


def ruleset_stats(rs: RuleSet) -> RuleSetStats:
    heads: dict[Modality, list] = {mod: [] for mod in Modality}
    body: dict[Modality, list] = {mod: [] for mod in Modality}
    comps, prohib, atoms = [], [], set()
    kinds = {"definitional": 0, "obligation": 0, "permission": 0}
    for r in rs.rules:
        for item in r.body:
            if isinstance(item, DeonticLiteral):
                body[item.modality].append(item)
                atoms.add(item.content.atom)
            else:
                atoms.add(item.atom)
        atoms.update(lit.atom for lit in r.terminates)
        if r.is_definitional:
            kinds["definitional"] += 1
            atoms.add(r.head.atom)
            continue
        kinds["permission" if r.is_permission else "obligation"] += 1
        for i, link in enumerate(r.head.links):
            heads[link.modality].append(link)
            atoms.add(link.content.atom)
            if i > 0:
                comps.append(link)
            if link.modality is Modality.OM and not link.content.positive:
                prohib.append(link)
    return RuleSetStats(
        by_modality={mod: _count(v) for mod, v in heads.items()},
        body={mod: _count(v) for mod, v in body.items()},
        rule_kinds=kinds,
        compensations=_count(comps),
        prohibitions=_count(prohib),
        atoms=len(atoms),
        superiority=len(rs.superiority),
    )
