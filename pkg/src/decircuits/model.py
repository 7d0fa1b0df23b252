"""Influence diagrams: variables, families, CPTs, evidence and structural checks.

CPT tables are flat tuples laid out parent-major with the last listed parent
varying fastest and the child state innermost, so for a family X|P1..Pk the
entry for (p1..pk, x) lives at ``row(p1..pk) * |X| + x``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

ROW_TOLERANCE = 1e-9


class Kind(enum.Enum):
    CHANCE = "chance"
    DECISION = "decision"
    UTILITY = "utility"


UTILITY_STATES = ("u", "not_u")


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    kind: Kind
    states: tuple[str, ...]

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def state_index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise KeyError(f"variable {self.name!r} has no state {label!r}") from None


@dataclass(frozen=True)
class Family:
    child: int
    parents: tuple[int, ...]


def row_count(cards: Sequence[int]) -> int:
    return math.prod(cards)


def encode_row(assignment: Sequence[int], cards: Sequence[int]) -> int:
    """Mixed-radix index of a parent instantiation, last position fastest."""
    row = 0
    for value, card in zip(assignment, cards):
        row = row * card + value
    return row


def decode_row(row: int, cards: Sequence[int]) -> tuple[int, ...]:
    values = []
    for card in reversed(cards):
        row, value = divmod(row, card)
        values.append(value)
    return tuple(reversed(values))


def instantiations(cards: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All assignments in canonical (row) order."""
    return itertools.product(*(range(c) for c in cards))


@dataclass(frozen=True)
class Cpt:
    family: Family
    parent_cards: tuple[int, ...]
    child_card: int
    table: tuple[float, ...]

    @property
    def rows(self) -> int:
        return row_count(self.parent_cards)

    def flat_index(self, parent_states: Sequence[int], child_state: int) -> int:
        return encode_row(parent_states, self.parent_cards) * self.child_card + child_state

    def split_index(self, index: int) -> tuple[tuple[int, ...], int]:
        row, child_state = divmod(index, self.child_card)
        return decode_row(row, self.parent_cards), child_state

    def prob(self, parent_states: Sequence[int], child_state: int) -> float:
        return self.table[self.flat_index(parent_states, child_state)]

    def row(self, r: int) -> tuple[float, ...]:
        k = self.child_card
        return self.table[r * k:(r + 1) * k]


@dataclass(frozen=True)
class UtilityScale:
    u_min: float
    u_max: float

    def __post_init__(self):
        if not self.u_max > self.u_min:
            raise ValueError(f"utility scale needs max > min, got [{self.u_min}, {self.u_max}]")

    def to_probability(self, raw: float) -> float:
        return (raw - self.u_min) / (self.u_max - self.u_min)

    def to_raw(self, prob: float) -> float:
        return self.u_min + prob * (self.u_max - self.u_min)


class UtilityRangeError(ValueError):
    pass


def normalize_utilities(family: Family, parent_cards: Sequence[int],
                        raw: Mapping[tuple[int, ...], float],
                        scale: UtilityScale) -> Cpt:
    """Turn raw utilities per parent instantiation into a binary CPT P(u | parents).

    Every parent instantiation must be present in ``raw`` and lie inside the
    scale; the offending instantiation is named otherwise.
    """
    parent_cards = tuple(parent_cards)
    table = []
    for inst in instantiations(parent_cards):
        if inst not in raw:
            raise UtilityRangeError(f"no raw utility for parent instantiation {inst}")
        value = raw[inst]
        if not scale.u_min <= value <= scale.u_max:
            raise UtilityRangeError(
                f"raw utility {value} at parent instantiation {inst} is outside "
                f"[{scale.u_min}, {scale.u_max}]")
        p = scale.to_probability(value)
        table.extend((p, 1.0 - p))
    return Cpt(family, parent_cards, 2, tuple(table))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class InfluenceDiagram:
    """Typed DAG of chance, decision and utility variables.

    ``parents`` maps every variable id to its ordered parent tuple (for a
    decision these are its informational parents).  ``cpts`` holds one table
    per chance and utility variable.  ``decision_order`` may be None, in which
    case it is derived from the graph when that is unambiguous.

    Construction does no validation; call :func:`validate`.
    """

    variables: tuple[Variable, ...]
    parents: Mapping[int, tuple[int, ...]]
    cpts: Mapping[int, Cpt]
    decision_order: tuple[int, ...] | None = None
    utility_scale: UtilityScale | None = None
    _children: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        children = {v.id: [] for v in self.variables}
        for child, pars in self.parents.items():
            for p in pars:
                if p in children:
                    children[p].append(child)
        object.__setattr__(self, "_children", {k: tuple(sorted(v)) for k, v in children.items()})

    def __len__(self):
        return len(self.variables)

    def var(self, key: int | str) -> Variable:
        if isinstance(key, str):
            for v in self.variables:
                if v.name == key:
                    return v
            raise KeyError(f"unknown variable {key!r}")
        return self.variables[key]

    def children(self, vid: int) -> tuple[int, ...]:
        return self._children[vid]

    def parents_of(self, vid: int) -> tuple[int, ...]:
        return self.parents.get(vid, ())

    def cards(self, ids: Iterable[int]) -> tuple[int, ...]:
        return tuple(self.variables[i].cardinality for i in ids)

    def of_kind(self, kind: Kind) -> tuple[int, ...]:
        return tuple(v.id for v in self.variables if v.kind is kind)

    @property
    def chance(self) -> tuple[int, ...]:
        return self.of_kind(Kind.CHANCE)

    @property
    def decisions(self) -> tuple[int, ...]:
        return self.of_kind(Kind.DECISION)

    @property
    def utility(self) -> int | None:
        ids = self.of_kind(Kind.UTILITY)
        return ids[0] if len(ids) == 1 else None

    @property
    def temporal_order(self) -> tuple[int, ...]:
        """Decisions in the order they are made.

        Raises ValueError when no order was given and the graph does not fix one.
        """
        if self.decision_order is not None:
            return tuple(self.decision_order)
        order = derive_decision_order(self)
        if order is None:
            raise ValueError("decision order omitted and not determined by the graph")
        return order

    def descendants(self, vid: int) -> set[int]:
        seen: set[int] = set()
        stack = list(self.children(vid))
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(self.children(n))
        return seen

    def is_belief_network(self) -> bool:
        return not self.decisions


def topological_order(diagram: InfluenceDiagram) -> list[int] | None:
    """Kahn's algorithm, smallest id first; None if the graph has a cycle."""
    import heapq

    indeg = {v.id: 0 for v in diagram.variables}
    for v in diagram.variables:
        for p in diagram.parents_of(v.id):
            if p in indeg:
                indeg[v.id] += 1
    ready = [vid for vid, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for c in diagram.children(n):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    return order if len(order) == len(indeg) else None


def derive_decision_order(diagram: InfluenceDiagram) -> tuple[int, ...] | None:
    """The unique order of decisions implied by directed paths, or None if ambiguous."""
    topo = topological_order(diagram)
    if topo is None:
        return None
    decisions = [n for n in topo if diagram.var(n).kind is Kind.DECISION]
    for a, b in zip(decisions, decisions[1:]):
        if b not in diagram.descendants(a):
            return None
    return tuple(decisions)


def validate(diagram: InfluenceDiagram, require_utility: bool = True) -> list[Violation]:
    """Every structural or numeric problem with the diagram; empty iff valid.

    With ``require_utility=False`` a plain belief network (no utility node)
    also passes.
    """
    out: list[Violation] = []
    ids = {v.id for v in diagram.variables}
    names = {}

    for i, v in enumerate(diagram.variables):
        if v.id != i:
            out.append(Violation("bad_id", f"variable {v.name!r} has id {v.id}, expected {i}"))
        if v.name in names:
            out.append(Violation("duplicate_name", f"variable name {v.name!r} used twice"))
        names[v.name] = v.id
        if not v.states:
            out.append(Violation("empty_states", f"variable {v.name!r} has no states"))
        if len(set(v.states)) != len(v.states):
            out.append(Violation("duplicate_state", f"variable {v.name!r} repeats a state label"))
        if v.kind is Kind.UTILITY and len(v.states) != 2:
            out.append(Violation("utility_states", f"utility {v.name!r} must have exactly two states"))
    if out:
        return out

    for child, pars in diagram.parents.items():
        cname = diagram.var(child).name
        if len(set(pars)) != len(pars):
            out.append(Violation("duplicate_parent", f"{cname!r} lists a parent twice"))
        if child in pars:
            out.append(Violation("self_parent", f"{cname!r} is its own parent"))
        for p in pars:
            if p not in ids:
                out.append(Violation("unknown_parent", f"{cname!r} has unknown parent id {p}"))

    utilities = diagram.of_kind(Kind.UTILITY)
    if len(utilities) > 1 or (require_utility and not utilities):
        out.append(Violation("utility_count", f"expected exactly one utility node, found {len(utilities)}"))
    for u in utilities:
        if diagram.children(u):
            kids = ", ".join(diagram.var(c).name for c in diagram.children(u))
            out.append(Violation("utility_has_children", f"utility {diagram.var(u).name!r} has children: {kids}"))

    acyclic = topological_order(diagram) is not None
    if not acyclic:
        out.append(Violation("cycle", "the graph contains a directed cycle"))

    out.extend(_check_cpts(diagram))
    if acyclic:
        out.extend(_check_decision_order(diagram))
    return out


def _check_cpts(diagram: InfluenceDiagram) -> list[Violation]:
    out = []
    for v in diagram.variables:
        if v.kind is Kind.DECISION:
            if v.id in diagram.cpts:
                out.append(Violation("decision_cpt", f"decision {v.name!r} must not carry a CPT"))
            continue
        cpt = diagram.cpts.get(v.id)
        if cpt is None:
            out.append(Violation("missing_cpt", f"{v.name!r} has no CPT"))
            continue
        pars = diagram.parents_of(v.id)
        if cpt.family != Family(v.id, tuple(pars)):
            out.append(Violation("family_mismatch", f"CPT of {v.name!r} does not match its parents"))
            continue
        if cpt.parent_cards != diagram.cards(pars) or cpt.child_card != v.cardinality:
            out.append(Violation("table_shape", f"CPT of {v.name!r} has the wrong shape"))
            continue
        expected = cpt.rows * cpt.child_card
        if len(cpt.table) != expected:
            out.append(Violation("table_size", f"CPT of {v.name!r} has {len(cpt.table)} entries, expected {expected}"))
            continue
        for idx, p in enumerate(cpt.table):
            if not (0.0 <= p <= 1.0):
                inst, x = cpt.split_index(idx)
                out.append(Violation("probability_range", f"{v.name!r} entry {idx} (parents {inst}, state {x}) = {p!r}"))
        for r in range(cpt.rows):
            total = sum(cpt.row(r))
            if abs(total - 1.0) > ROW_TOLERANCE:
                inst = decode_row(r, cpt.parent_cards)
                out.append(Violation("row_not_normalized",
                                     f"{v.name!r} row {r} (parents {inst}) sums to {total:.12g}"))
    return out


def _check_decision_order(diagram: InfluenceDiagram) -> list[Violation]:
    decisions = diagram.decisions
    if diagram.decision_order is None:
        order = derive_decision_order(diagram)
        if order is None:
            return [Violation("decision_order_ambiguous",
                              "decision_order omitted and the graph does not fix one")]
    else:
        order = tuple(diagram.decision_order)
        if sorted(order) != sorted(decisions) or len(set(order)) != len(order):
            return [Violation("decision_order", "decision_order must list every decision exactly once")]
    out = []
    for a, b in zip(order, order[1:]):
        need = set(diagram.parents_of(a)) | {a}
        missing = need - set(diagram.parents_of(b))
        if missing:
            names = ", ".join(sorted(diagram.var(m).name for m in missing))
            out.append(Violation("no_forgetting",
                                 f"{diagram.var(b).name!r} does not observe {names} known at {diagram.var(a).name!r}"))
    return out


@dataclass(frozen=True)
class Evidence:
    assignments: Mapping[int, int] = field(default_factory=dict)

    def __iter__(self):
        return iter(sorted(self.assignments.items()))

    def __len__(self):
        return len(self.assignments)

    def __contains__(self, vid):
        return vid in self.assignments

    def get(self, vid, default=None):
        return self.assignments.get(vid, default)

    def extend(self, vid: int, state: int) -> "Evidence":
        merged = dict(self.assignments)
        merged[vid] = state
        return Evidence(merged)

    @classmethod
    def from_names(cls, diagram: InfluenceDiagram, pairs: Mapping[str, str] | Iterable[tuple[str, str]]) -> "Evidence":
        items = pairs.items() if isinstance(pairs, Mapping) else pairs
        out = {}
        for name, state in items:
            var = diagram.var(name)
            out[var.id] = var.state_index(state)
        return cls(out)


def assert_unresponsive(diagram: InfluenceDiagram, evidence: Evidence) -> list[int]:
    """Evidence variables that may respond to some decision.

    That is every assigned decision or descendant of a decision, plus the
    utility node whenever it is assigned at all.  An empty list means the
    evidence is fine.
    """
    downstream = set()
    for d in diagram.decisions:
        downstream |= diagram.descendants(d) | {d}
    bad = [vid for vid, _ in evidence if vid in downstream]
    u = diagram.utility
    if u is not None and u in evidence and u not in bad:
        bad.append(u)
    return sorted(bad)
