"""Arithmetic and decision circuits with upward evaluation and downward differentiation.

A circuit is an arena of nodes in topological order (children before parents).
Leaves are constants, evidence indicators and parameters; internal nodes are
sums, products and maximizations.  Values and derivatives never live on the
circuit itself: each evaluation owns a :class:`SweepState`, so a compiled
circuit can be shared freely.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

from .model import Evidence


class Op(enum.IntEnum):
    CONSTANT = 0
    INDICATOR = 1
    PARAMETER = 2
    SUM = 3
    PRODUCT = 4
    MAX = 5


LEAF_OPS = (Op.CONSTANT, Op.INDICATOR, Op.PARAMETER)


class IndicatorAddr(NamedTuple):
    var: int
    state: int


class ParameterAddr(NamedTuple):
    family: int   # id of the family's child variable
    row: int      # parent instantiation, canonical row order
    state: int    # child state (alternative, for decisions)

    def flat(self, card: int) -> int:
        return self.row * card + self.state


class MaxTag(NamedTuple):
    decision: int
    row: int      # instantiation of the decision's informational parents


@dataclass(frozen=True)
class Node:
    op: Op
    children: tuple[int, ...] = ()
    payload: object = None   # constant value, leaf address or MaxTag


class AddressError(KeyError):
    pass


class NumericDomainError(ValueError):
    pass


@dataclass(frozen=True)
class Circuit:
    nodes: tuple[Node, ...]
    root: int
    leaf_index: Mapping[tuple, int]
    parameter_values: Mapping[ParameterAddr, float]
    var_names: tuple[str, ...] = ()
    state_names: tuple[tuple[str, ...], ...] = ()
    parents: Mapping[int, tuple[int, ...]] = field(default_factory=dict)
    utility: int | None = None
    decisions: tuple[int, ...] = ()
    # decisions and their descendants: evidence on these is refused
    responsive: frozenset[int] = frozenset()

    @property
    def size(self) -> int:
        """Number of edges."""
        return sum(len(n.children) for n in self.nodes)

    def __len__(self):
        return len(self.nodes)

    def indicator(self, var: int, state: int) -> int | None:
        return self.leaf_index.get(IndicatorAddr(var, state))

    def parameter(self, addr: ParameterAddr) -> int | None:
        return self.leaf_index.get(ParameterAddr(*addr))

    def max_nodes(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.op is Op.MAX]

    def count(self, op: Op) -> int:
        return sum(1 for n in self.nodes if n.op is op)

    def describe(self, i: int) -> str:
        node = self.nodes[i]
        if node.op is Op.CONSTANT:
            return f"const {node.payload!r}"
        if node.op is Op.INDICATOR:
            return "lambda " + self._assign(node.payload.var, node.payload.state)
        if node.op is Op.PARAMETER:
            addr = node.payload
            ctx = self._context(addr.family, addr.row)
            return "theta " + self._assign(addr.family, addr.state) + (f"|{ctx}" if ctx else "")
        if node.op is Op.MAX:
            tag = node.payload
            ctx = self._context(tag.decision, tag.row)
            return "max " + self._name(tag.decision) + (f"|{ctx}" if ctx else "")
        return node.op.name.lower()

    def _name(self, var: int) -> str:
        return self.var_names[var] if var < len(self.var_names) else f"v{var}"

    def _assign(self, var: int, state: int) -> str:
        if var < len(self.state_names):
            return f"{self._name(var)}={self.state_names[var][state]}"
        return f"{self._name(var)}={state}"

    def _context(self, var: int, row: int) -> str:
        from .model import decode_row

        pars = self.parents.get(var, ())
        if not pars:
            return ""
        cards = tuple(len(self.state_names[p]) for p in pars)
        return ",".join(self._assign(p, s) for p, s in zip(pars, decode_row(row, cards)))


class CircuitBuilder:
    """Creates nodes bottom-up, merging structurally identical ones when asked.

    Products and sums of a single child collapse to the child; an empty
    product is the constant 1.
    """

    def __init__(self, hash_consing: bool = True):
        self.hash_consing = hash_consing
        self.nodes: list[Node] = []
        self.leaf_index: dict[tuple, int] = {}
        self._memo: dict[tuple, int] = {}

    def _add(self, node: Node, key=None) -> int:
        if key is not None and self.hash_consing:
            hit = self._memo.get(key)
            if hit is not None:
                return hit
        self.nodes.append(node)
        idx = len(self.nodes) - 1
        if key is not None:
            self._memo.setdefault(key, idx)
        return idx

    def constant(self, value: float) -> int:
        return self._add(Node(Op.CONSTANT, (), float(value)), ("c", float(value)))

    def _leaf(self, op: Op, addr: tuple) -> int:
        idx = self.leaf_index.get(addr)
        if idx is None:
            self.nodes.append(Node(op, (), addr))
            idx = self.leaf_index[addr] = len(self.nodes) - 1
        return idx

    def indicator(self, var: int, state: int) -> int:
        return self._leaf(Op.INDICATOR, IndicatorAddr(var, state))

    def parameter(self, family: int, row: int, state: int) -> int:
        return self._leaf(Op.PARAMETER, ParameterAddr(family, row, state))

    def product(self, children: Sequence[int]) -> int:
        children = tuple(children)
        if not children:
            return self.constant(1.0)
        if len(children) == 1:
            return children[0]
        return self._add(Node(Op.PRODUCT, children), ("*", children))

    def sum(self, children: Sequence[int]) -> int:
        children = tuple(children)
        if not children:
            return self.constant(0.0)
        if len(children) == 1:
            return children[0]
        return self._add(Node(Op.SUM, children), ("+", children))

    def max(self, children: Sequence[int], tag: MaxTag) -> int:
        children = tuple(children)
        if not children:
            raise ValueError("max node needs at least one child")
        return self._add(Node(Op.MAX, children, tag), ("max", children, tag))

    def build(self, root: int, parameter_values: Mapping[ParameterAddr, float], **meta) -> Circuit:
        """Freeze the arena, keeping only nodes reachable from ``root``.

        Every kept node was created before ``root``, so the root ends up last.
        """
        keep = set()
        stack = [root]
        while stack:
            n = stack.pop()
            if n not in keep:
                keep.add(n)
                stack.extend(self.nodes[n].children)
        remap = {}
        nodes = []
        for old in sorted(keep):
            node = self.nodes[old]
            remap[old] = len(nodes)
            nodes.append(Node(node.op, tuple(remap[c] for c in node.children), node.payload))
        leaf_index = {addr: remap[i] for addr, i in self.leaf_index.items() if i in keep}
        params = {a: v for a, v in parameter_values.items() if a in leaf_index}
        return Circuit(tuple(nodes), remap[root], leaf_index, params, **meta)


@dataclass
class LeafAssignment:
    """Value of every leaf node for one evaluation, keyed by node index."""
    values: dict[int, float]

    def with_values(self, updates: Mapping[int, float]) -> "LeafAssignment":
        merged = dict(self.values)
        merged.update(updates)
        return LeafAssignment(merged)


def set_leaves(circuit: Circuit, evidence: Evidence | Mapping[int, int] | None = None,
               overrides: Mapping[tuple, float] | None = None) -> LeafAssignment:
    """Indicators consistent with ``evidence``, parameters at their stored values.

    ``overrides`` maps leaf addresses (:class:`IndicatorAddr` or
    :class:`ParameterAddr`) to replacement values and is applied last.
    """
    assigned = dict(evidence.assignments if isinstance(evidence, Evidence) else (evidence or {}))
    values: dict[int, float] = {}
    seen_vars = set()
    for i, node in enumerate(circuit.nodes):
        if node.op is Op.CONSTANT:
            values[i] = node.payload
        elif node.op is Op.INDICATOR:
            var, state = node.payload
            seen_vars.add(var)
            observed = assigned.get(var)
            values[i] = 0.0 if observed is not None and observed != state else 1.0
        elif node.op is Op.PARAMETER:
            values[i] = circuit.parameter_values.get(node.payload, 1.0)
    for var in assigned:
        if var not in seen_vars:
            raise AddressError(f"evidence on variable {var}, which has no indicators in the circuit")
    for addr, value in (overrides or {}).items():
        idx = circuit.leaf_index.get(addr)
        if idx is None:
            raise AddressError(f"no leaf with address {addr!r}")
        values[idx] = float(value)
    return LeafAssignment(values)


@dataclass
class SweepState:
    value: list[float]
    argmax: dict[int, int]
    zero_count: list[int]
    nonzero_product: list[float]
    root: int = -1
    derivative: list[float] | None = None
    semantics: str | None = None
    up_edges: int = 0
    down_edges: int = 0

    @property
    def root_value(self) -> float:
        return self.value[self.root]


def sweep_up(circuit: Circuit, leaves: LeafAssignment,
             eligible: Mapping[int, Sequence[bool]] | None = None,
             tie_epsilon: float = 0.0) -> SweepState:
    """Evaluate every node from the leaves to the root.

    At a max node the selected child is the lowest position attaining the
    maximum; with ``tie_epsilon`` > 0 values within that relative distance of
    the maximum count as ties.  ``eligible`` optionally marks, per max node,
    which positions may be selected when several tie.
    """
    nodes = circuit.nodes
    n = len(nodes)
    value = [0.0] * n
    zero_count = [0] * n
    nonzero = [1.0] * n
    argmax: dict[int, int] = {}
    edges = 0
    leaf_values = leaves.values
    for i, node in enumerate(nodes):
        op = node.op
        if op is Op.PRODUCT:
            zc = 0
            prod = 1.0
            for c in node.children:
                v = value[c]
                if v == 0.0:
                    zc += 1
                else:
                    prod *= v
            edges += len(node.children)
            zero_count[i] = zc
            nonzero[i] = prod
            value[i] = prod if zc == 0 else 0.0
        elif op is Op.SUM:
            total = 0.0
            for c in node.children:
                total += value[c]
            edges += len(node.children)
            value[i] = total
        elif op is Op.MAX:
            vals = [value[c] for c in node.children]
            edges += len(vals)
            best = max(vals)
            ok = eligible.get(i) if eligible else None
            pick = _select(vals, best, ok, tie_epsilon)
            argmax[i] = pick
            value[i] = best
        else:
            v = leaf_values.get(i)
            if v is None:
                raise AddressError(f"leaf node {i} has no assigned value")
            if v != v or v < 0.0:
                raise NumericDomainError(f"leaf {circuit.describe(i)} has value {v!r}")
            value[i] = v
    return SweepState(value, argmax, zero_count, nonzero, root=circuit.root, up_edges=edges)


def _select(vals: list[float], best: float, ok: Sequence[bool] | None, tie_epsilon: float) -> int:
    def ties(v):
        if tie_epsilon > 0.0:
            return v >= best - tie_epsilon * abs(best)
        return v == best

    if ok is not None:
        for pos, v in enumerate(vals):
            if ok[pos] and ties(v):
                return pos
    for pos, v in enumerate(vals):
        if ties(v):
            return pos
    return 0


def sweep_down(circuit: Circuit, state: SweepState, max_semantics: str = "route") -> SweepState:
    """Fill ``state.derivative`` with the partial of the root with respect to every node.

    ``max_semantics="route"`` sends the derivative of a max node only to its
    selected child.  ``"sum"`` differentiates max nodes as if they were sums,
    which is the right reading once the losing alternatives' parameters have
    been zeroed.
    """
    if max_semantics not in ("route", "sum"):
        raise ValueError(f"unknown max semantics {max_semantics!r}")
    nodes = circuit.nodes
    value = state.value
    deriv = [0.0] * len(nodes)
    deriv[circuit.root] = 1.0
    edges = 0
    for i in range(len(nodes) - 1, -1, -1):
        node = nodes[i]
        op = node.op
        if op in LEAF_OPS:
            continue
        d = deriv[i]
        kids = node.children
        edges += len(kids)
        if op is Op.SUM:
            for c in kids:
                deriv[c] += d
        elif op is Op.PRODUCT:
            zc = state.zero_count[i]
            if zc == 0:
                p = state.nonzero_product[i]
                for c in kids:
                    deriv[c] += d * (p / value[c])
            elif zc == 1:
                p = state.nonzero_product[i]
                for c in kids:
                    if value[c] == 0.0:
                        deriv[c] += d * p
        elif op is Op.MAX:
            if max_semantics == "route":
                deriv[kids[state.argmax[i]]] += d
            else:
                for c in kids:
                    deriv[c] += d
    state.derivative = deriv
    state.semantics = max_semantics
    state.down_edges = edges
    return state


def evaluate(circuit: Circuit, leaves: LeafAssignment, **kwargs) -> SweepState:
    """Both sweeps in sequence."""
    semantics = kwargs.pop("max_semantics", "route")
    return sweep_down(circuit, sweep_up(circuit, leaves, **kwargs), semantics)


class Partial(NamedTuple):
    value: float
    pruned: bool = False


def _require_derivatives(state: SweepState):
    if state.derivative is None:
        raise RuntimeError("downward sweep has not been run")


def partial_wrt_indicator(circuit: Circuit, state: SweepState, var: int, state_idx: int) -> Partial:
    _require_derivatives(state)
    idx = circuit.indicator(var, state_idx)
    if idx is None:
        return Partial(0.0, True)
    return Partial(state.derivative[idx])


def partial_wrt_parameter(circuit: Circuit, state: SweepState, addr: ParameterAddr) -> Partial:
    _require_derivatives(state)
    idx = circuit.parameter(addr)
    if idx is None:
        return Partial(0.0, True)
    return Partial(state.derivative[idx])


def indicator_partials(circuit: Circuit, state: SweepState, var: int, card: int) -> list[float]:
    return [partial_wrt_indicator(circuit, state, var, s).value for s in range(card)]


def retracted_probability(circuit: Circuit, state: SweepState, var: int, card: int) -> float:
    """Sum of indicator partials of ``var``: the probability of the evidence with ``var`` retracted."""
    return math.fsum(indicator_partials(circuit, state, var, card))


def export_graph(circuit: Circuit) -> str:
    """Deterministic text dump, one line per node after a header line."""
    lines = [f"circuit nodes={len(circuit.nodes)} edges={circuit.size} root={circuit.root}"]
    for i, node in enumerate(circuit.nodes):
        kids = " ".join(str(c) for c in node.children)
        lines.append(f"{i} {node.op.name} [{kids}] {circuit.describe(i)}")
    return "\n".join(lines) + "\n"


def walk(circuit: Circuit, start: int) -> Iterable[int]:
    """Indices of all nodes below ``start`` (inclusive)."""
    seen = set()
    stack = [start]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        yield n
        stack.extend(circuit.nodes[n].children)
