"""Random influence diagrams and belief networks for property testing.

Diagrams are generated in temporal layers: chance variables observed before
the first decision, the first decision, chance variables first observed before
the second decision, and so on, then the never-observed chance variables and
the utility.  Arcs only point forward through that sequence, and every
decision observes everything earlier (no-forgetting holds by construction).
Variable ids are a random permutation of the sequence positions.
"""

from __future__ import annotations

import numpy as np

from .model import (UTILITY_STATES, Cpt, Evidence, Family, InfluenceDiagram, Kind, Variable,
                    row_count)
from .oracle import joint_size
from .strategies import StrategySpace


def _row(rng: np.random.Generator, k: int, floor: float) -> list[float]:
    w = rng.uniform(floor, 1.0, size=k)
    return list(w / w.sum())


def _table(rng, n_rows, k, floor):
    out = []
    for _ in range(n_rows):
        out.extend(_row(rng, k, floor))
    return out


def random_diagram(rng: np.random.Generator, max_chance: int = 6, max_states: int = 3,
                   max_decisions: int = 2, max_alternatives: int = 3, max_parents: int = 2,
                   max_utility_parents: int = 3, floor: float = 0.05,
                   min_decisions: int = 0) -> InfluenceDiagram:
    n_chance = int(rng.integers(1, max_chance + 1))
    n_dec = int(rng.integers(min_decisions, max_decisions + 1))
    blocks = rng.integers(0, n_dec + 1, size=n_chance)

    # sequence of (kind, cardinality, block)
    seq: list[tuple[Kind, int]] = []
    block_of = []
    for k in range(n_dec + 1):
        for c in range(n_chance):
            if blocks[c] == k:
                seq.append((Kind.CHANCE, int(rng.integers(2, max_states + 1))))
                block_of.append(k)
        if k < n_dec:
            seq.append((Kind.DECISION, int(rng.integers(2, max_alternatives + 1))))
            block_of.append(k)
    seq.append((Kind.UTILITY, 2))
    block_of.append(n_dec + 1)

    n = len(seq)
    perm = [int(x) for x in rng.permutation(n)]   # sequence position -> id
    parents_pos: dict[int, list[int]] = {}
    decisions_pos = [i for i, (kind, _) in enumerate(seq) if kind is Kind.DECISION]
    for i, (kind, _) in enumerate(seq):
        if kind is Kind.CHANCE:
            k = int(rng.integers(0, min(max_parents, i) + 1))
            parents_pos[i] = sorted(int(p) for p in rng.choice(i, size=k, replace=False)) if k else []
        elif kind is Kind.DECISION:
            parents_pos[i] = [j for j in range(i) if seq[j][0] is not Kind.UTILITY]
        else:
            pool = list(range(i))
            k = int(rng.integers(1, min(max_utility_parents, len(pool)) + 1))
            chosen = set(int(p) for p in rng.choice(pool, size=k, replace=False))
            if decisions_pos and not chosen & set(decisions_pos):
                chosen.add(int(rng.choice(decisions_pos)))
            parents_pos[i] = sorted(chosen)
        rng.shuffle(parents_pos[i])

    variables = [None] * n
    counters = {Kind.CHANCE: 0, Kind.DECISION: 0, Kind.UTILITY: 0}
    for i, (kind, card) in enumerate(seq):
        vid = perm[i]
        if kind is Kind.UTILITY:
            variables[vid] = Variable(vid, "U", kind, UTILITY_STATES)
            continue
        prefix = "C" if kind is Kind.CHANCE else "D"
        name = f"{prefix}{counters[kind]}"
        counters[kind] += 1
        variables[vid] = Variable(vid, name, kind, tuple(f"{name.lower()}{s}" for s in range(card)))

    parents = {perm[i]: tuple(perm[p] for p in ps) for i, ps in parents_pos.items()}
    cpts = {}
    for i, (kind, card) in enumerate(seq):
        if kind is Kind.DECISION:
            continue
        vid = perm[i]
        pars = parents[vid]
        pcards = tuple(variables[p].cardinality for p in pars)
        if kind is Kind.UTILITY:
            table = []
            for _ in range(row_count(pcards)):
                p = float(rng.uniform(0.02, 0.98))
                table.extend((p, 1.0 - p))
        else:
            table = _table(rng, row_count(pcards), card, floor)
        cpts[vid] = Cpt(Family(vid, pars), pcards, card, tuple(table))
    order = tuple(perm[i] for i in decisions_pos)
    return InfluenceDiagram(tuple(variables), parents, cpts, decision_order=order)


def oracle_cost(diagram: InfluenceDiagram) -> int:
    return StrategySpace.of(diagram).size * joint_size(diagram)


def random_tractable_diagram(rng: np.random.Generator, budget: int = 2_000_000,
                             max_strategies: int = 4096, **kwargs) -> InfluenceDiagram:
    """Redraw until brute-force strategy enumeration stays within ``budget``."""
    while True:
        d = random_diagram(rng, **kwargs)
        if StrategySpace.of(d).size <= max_strategies and oracle_cost(d) <= budget:
            return d


def random_belief_network(rng: np.random.Generator, max_vars: int = 5, max_states: int = 3,
                          max_parents: int = 2, floor: float = 0.05) -> InfluenceDiagram:
    n = int(rng.integers(1, max_vars + 1))
    perm = [int(x) for x in rng.permutation(n)]
    cards = [int(rng.integers(2, max_states + 1)) for _ in range(n)]
    variables = [None] * n
    for i in range(n):
        vid = perm[i]
        variables[vid] = Variable(vid, f"X{i}", Kind.CHANCE, tuple(f"x{i}_{s}" for s in range(cards[i])))
    parents, cpts = {}, {}
    for i in range(n):
        k = int(rng.integers(0, min(max_parents, i) + 1))
        ps = [perm[int(p)] for p in rng.choice(i, size=k, replace=False)] if k else []
        vid = perm[i]
        parents[vid] = tuple(ps)
        pcards = tuple(variables[p].cardinality for p in ps)
        cpts[vid] = Cpt(Family(vid, tuple(ps)), pcards, cards[i],
                        tuple(_table(rng, row_count(pcards), cards[i], floor)))
    return InfluenceDiagram(tuple(variables), parents, cpts, decision_order=())


def random_evidence(diagram: InfluenceDiagram, rng: np.random.Generator, p: float = 0.3) -> Evidence:
    """Random states for some chance variables that no decision can influence."""
    downstream = set()
    for d in diagram.decisions:
        downstream |= diagram.descendants(d) | {d}
    out = {}
    for v in diagram.variables:
        if v.kind is Kind.CHANCE and v.id not in downstream and rng.random() < p:
            out[v.id] = int(rng.integers(0, v.cardinality))
    return Evidence(out)
