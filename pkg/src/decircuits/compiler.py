"""Compile influence diagrams into decision circuits by symbolic variable elimination.

Each initial factor maps every instantiation of its scope to a small
sub-circuit: ``lambda_x * theta_x|u`` for a chance or utility family and
``lambda_d * theta_d|u`` for a decision and its informational parents.
Eliminating a variable multiplies the factors that mention it cell by cell and
then sums it out (chance) or maximizes it out (decision).  The single scalar
left at the end is the root.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .circuit import Circuit, CircuitBuilder, MaxTag, ParameterAddr
from .model import InfluenceDiagram, Kind, encode_row, instantiations
from .ordering import EliminationOrder, Heuristic, constrained_order, order_violations


@dataclass
class SymbolicFactor:
    scope: tuple[int, ...]        # sorted variable ids
    cells: list[int]              # node index per scope instantiation, row-major
    strides: tuple[int, ...] = ()

    def cell(self, assignment: dict[int, int]) -> int:
        idx = 0
        for v, stride in zip(self.scope, self.strides):
            idx += assignment[v] * stride
        return self.cells[idx]


def _strides(cards: Sequence[int]) -> tuple[int, ...]:
    out = []
    acc = 1
    for c in reversed(cards):
        out.append(acc)
        acc *= c
    return tuple(reversed(out))


def _factor(scope: Iterable[int], cells: list[int], card) -> SymbolicFactor:
    scope = tuple(scope)
    return SymbolicFactor(scope, cells, _strides([card(v) for v in scope]))


Forbidden = Iterable[tuple[int, int, int]]


def compile_diagram(diagram: InfluenceDiagram, order: EliminationOrder | None = None,
                    forbidden: Forbidden = (), hash_consing: bool = True) -> Circuit:
    """Build the decision circuit of ``diagram`` along ``order``.

    ``forbidden`` holds (decision, parent row, alternative) triples whose
    policy parameter starts at 0 instead of 1.  It never changes the circuit's
    structure.  A belief network (no decisions) yields a plain arithmetic
    circuit.
    """
    if order is None:
        order = constrained_order(diagram)
    problems = order_violations(diagram, order.sequence)
    if problems:
        raise ValueError("elimination order inconsistent with the diagram: " + "; ".join(problems))

    def card(v):
        return diagram.variables[v].cardinality

    builder = CircuitBuilder(hash_consing=hash_consing)
    params: dict[ParameterAddr, float] = {}
    factors: list[SymbolicFactor] = []

    for var in diagram.variables:
        pars = tuple(diagram.parents_of(var.id))
        pcards = diagram.cards(pars)
        scope = tuple(sorted((var.id,) + pars))
        decision = var.kind is Kind.DECISION
        cpt = None if decision else diagram.cpts[var.id]
        cells = []
        for inst in instantiations([card(v) for v in scope]):
            assign = dict(zip(scope, inst))
            row = encode_row([assign[p] for p in pars], pcards)
            x = assign[var.id]
            addr = ParameterAddr(var.id, row, x)
            params[addr] = 1.0 if decision else cpt.table[row * var.cardinality + x]
            cells.append(builder.product([builder.indicator(var.id, x),
                                          builder.parameter(var.id, row, x)]))
        factors.append(_factor(scope, cells, card))

    for d, row, alt in forbidden:
        addr = ParameterAddr(d, row, alt)
        if addr not in params or diagram.var(d).kind is not Kind.DECISION:
            raise KeyError(f"no decision parameter {addr}")
        params[addr] = 0.0

    for x in order.sequence:
        bucket = [f for f in factors if x in f.scope]
        factors = [f for f in factors if x not in f.scope]
        union = sorted({v for f in bucket for v in f.scope})
        rest = [v for v in union if v != x]
        is_decision = diagram.var(x).kind is Kind.DECISION
        if is_decision:
            dpars = tuple(diagram.parents_of(x))
            dcards = diagram.cards(dpars)
        cells = []
        for inst in instantiations([card(v) for v in rest]):
            assign = dict(zip(rest, inst))
            branches = []
            for s in range(card(x)):
                assign[x] = s
                branches.append(builder.product([f.cell(assign) for f in bucket]))
            if is_decision:
                tag = MaxTag(x, encode_row([assign[p] for p in dpars], dcards))
                cells.append(builder.max(branches, tag))
            else:
                cells.append(builder.sum(branches))
        factors.append(_factor(rest, cells, card))

    leftovers = [f.cells[0] for f in factors]
    root = builder.product(leftovers)
    responsive = set()
    for d in diagram.decisions:
        responsive |= diagram.descendants(d) | {d}
    return builder.build(
        root, params,
        var_names=tuple(v.name for v in diagram.variables),
        state_names=tuple(v.states for v in diagram.variables),
        parents={v.id: tuple(diagram.parents_of(v.id)) for v in diagram.variables},
        utility=diagram.utility,
        decisions=tuple(diagram.temporal_order) if diagram.decisions else (),
        responsive=frozenset(responsive),
    )


@dataclass(frozen=True)
class WidthRow:
    heuristic: str
    width: int
    nodes: int
    edges: int


def treewidth_report(diagram: InfluenceDiagram,
                     heuristics: Sequence[Heuristic] = tuple(Heuristic)) -> list[WidthRow]:
    """Width and compiled size for each ordering heuristic."""
    rows = []
    for h in heuristics:
        order = constrained_order(diagram, h)
        circuit = compile_diagram(diagram, order)
        rows.append(WidthRow(Heuristic(h).value, order.width, len(circuit), circuit.size))
    return rows
