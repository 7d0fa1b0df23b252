"""Temporally constrained elimination orders and their induced width.

Decisions are eliminated latest-first.  Before the last decision go the
utility node and every chance variable no decision observes; between two
consecutive decisions go the variables first observed before the later one;
the variables observed before the first decision are eliminated last.  The
utility node always leads (its neighbours are already a clique, so this never
costs width).  Inside a block a greedy heuristic picks the next variable, with
ties going to the lowest id.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .model import InfluenceDiagram, Kind


class Heuristic(str, enum.Enum):
    MIN_FILL = "minfill"
    MIN_DEGREE = "mindegree"
    AS_GIVEN = "asgiven"


@dataclass(frozen=True)
class EliminationOrder:
    sequence: tuple[int, ...]
    before: Mapping[int, frozenset[int]]   # per decision: variables eliminated before it
    after: Mapping[int, frozenset[int]]    # per decision: variables eliminated after it
    width: int
    heuristic: str = Heuristic.AS_GIVEN.value

    def position(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.sequence)}


class OrderError(ValueError):
    pass


def interaction_graph(diagram: InfluenceDiagram) -> dict[int, set[int]]:
    """Undirected graph in which every initial factor scope is a clique.

    Chance and utility families give one factor each; a decision gives the
    factor over itself and its informational parents.
    """
    adj = {v.id: set() for v in diagram.variables}
    for v in diagram.variables:
        scope = (v.id,) + tuple(diagram.parents_of(v.id))
        for a in scope:
            for b in scope:
                if a != b:
                    adj[a].add(b)
    return adj


def temporal_blocks(diagram: InfluenceDiagram) -> list[list[int]]:
    """Groups of variables in elimination order; each decision is its own block."""
    order = diagram.temporal_order if diagram.decisions else ()
    observed_at = {}
    for k, d in enumerate(order):
        for p in diagram.parents_of(d):
            if diagram.var(p).kind is not Kind.DECISION:
                observed_at.setdefault(p, k)
    n_dec = len(order)
    groups: list[list[int]] = [[] for _ in range(n_dec + 1)]
    for v in diagram.variables:
        if v.kind is Kind.DECISION:
            continue
        groups[observed_at.get(v.id, n_dec)].append(v.id)
    blocks: list[list[int]] = [groups[n_dec]]
    for k in range(n_dec - 1, -1, -1):
        blocks.append([order[k]])
        blocks.append(groups[k])
    return [b for b in blocks if b]


def _fill_in(adj: Mapping[int, set[int]], v: int) -> int:
    nbrs = sorted(adj[v])
    return sum(1 for i, a in enumerate(nbrs) for b in nbrs[i + 1:] if b not in adj[a])


def _eliminate(adj: dict[int, set[int]], v: int) -> int:
    nbrs = adj.pop(v)
    for a in nbrs:
        adj[a].discard(v)
        adj[a].update(nbrs - {a})
    return len(nbrs)


def constrained_order(diagram: InfluenceDiagram, heuristic: Heuristic | str = Heuristic.MIN_FILL) -> EliminationOrder:
    heuristic = Heuristic(heuristic)
    adj = interaction_graph(diagram)
    u = diagram.utility
    sequence = []
    width = 0
    for block in temporal_blocks(diagram):
        pending = sorted(block)
        if u in pending:
            pending.remove(u)
            width = max(width, _eliminate(adj, u))
            sequence.append(u)
        while pending:
            if heuristic is Heuristic.AS_GIVEN:
                v = pending[0]
            elif heuristic is Heuristic.MIN_FILL:
                v = min(pending, key=lambda x: (_fill_in(adj, x), x))
            else:
                v = min(pending, key=lambda x: (len(adj[x]), x))
            pending.remove(v)
            width = max(width, _eliminate(adj, v))
            sequence.append(v)
    return _finish(diagram, sequence, width, heuristic.value)


def induced_width(diagram: InfluenceDiagram, sequence: Iterable[int]) -> int:
    adj = interaction_graph(diagram)
    width = 0
    for v in sequence:
        width = max(width, _eliminate(adj, v))
    return width


def order_violations(diagram: InfluenceDiagram, sequence: Sequence[int]) -> list[str]:
    """Reasons why ``sequence`` is not a legal elimination order (empty if legal)."""
    problems = []
    ids = [v.id for v in diagram.variables]
    if sorted(sequence) != ids:
        return ["sequence must contain every variable exactly once"]
    pos = {v: i for i, v in enumerate(sequence)}
    decisions = diagram.temporal_order if diagram.decisions else ()
    u = diagram.utility
    for d in decisions:
        name = diagram.var(d).name
        if u is not None and pos[u] > pos[d]:
            problems.append(f"utility must be eliminated before decision {name!r}")
        informed = set(diagram.parents_of(d))
        later = {v for v in ids if pos[v] > pos[d]}
        for p in sorted(informed - later):
            problems.append(f"{diagram.var(p).name!r} is observed before {name!r} but eliminated first")
        for v in sorted(later - informed):
            problems.append(f"{diagram.var(v).name!r} is not observed before {name!r} but eliminated after it")
    return problems


def order_from_sequence(diagram: InfluenceDiagram, sequence: Sequence[int]) -> EliminationOrder:
    problems = order_violations(diagram, sequence)
    if problems:
        raise OrderError("; ".join(problems))
    return _finish(diagram, list(sequence), induced_width(diagram, sequence), Heuristic.AS_GIVEN.value)


def _finish(diagram, sequence, width, heuristic) -> EliminationOrder:
    pos = {v: i for i, v in enumerate(sequence)}
    before, after = {}, {}
    for d in diagram.decisions:
        before[d] = frozenset(v for v in sequence if pos[v] < pos[d])
        after[d] = frozenset(v for v in sequence if pos[v] > pos[d])
    return EliminationOrder(tuple(sequence), before, after, width, heuristic)
