"""Solve an influence diagram on its decision circuit.

``evaluate`` clamps the utility to ``u``, sets every decision indicator and
policy parameter to 1 (except forbidden or excluded alternatives), and runs one
upward and one downward sweep.  Each max node picks its alternative on the way
up; the parameters of the losing alternatives are then zeroed in the
evaluation's leaf assignment, which is what turns the decision circuit into the
circuit of the optimal policy.  The MEU is the root value divided by the
probability of the evidence, read off the two utility indicator partials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .circuit import (Circuit, IndicatorAddr, LeafAssignment, Op, ParameterAddr, Partial,
                      SweepState, partial_wrt_indicator, partial_wrt_parameter, set_leaves,
                      sweep_down, sweep_up)
from .compiler import compile_diagram
from .errors import EvidenceImpossibleError, InfeasibleDecisionError, ResponsiveEvidenceError
from .model import Cpt, Evidence, Family, InfluenceDiagram, Kind, Variable, decode_row
from .ordering import Heuristic, constrained_order

UTILITY_STATE = 0


@dataclass(frozen=True)
class Policy:
    """Chosen alternative per decision and parent row, with a moot flag per entry."""
    tables: Mapping[int, tuple[int, ...]]
    moot: Mapping[int, tuple[bool, ...]]

    def choice(self, decision: int, row: int = 0) -> int:
        return self.tables[decision][row]

    def __iter__(self):
        return iter(sorted(self.tables))


@dataclass
class EvaluationResult:
    meu: float
    policy: Policy
    root_value: float
    p_evidence: float
    sweep: SweepState                # derivatives carry "route" max semantics
    leaves: LeafAssignment           # after the losing policy parameters were zeroed
    circuit: Circuit
    max_choices: dict[int, int] = field(default_factory=dict)   # max node -> chosen position

    @property
    def derivatives(self) -> list[float]:
        return self.sweep.derivative

    @property
    def derivative_semantics(self) -> str:
        return self.sweep.semantics

    def partial_indicator(self, var: int, state: int) -> Partial:
        return partial_wrt_indicator(self.circuit, self.sweep, var, state)

    def partial_parameter(self, addr: ParameterAddr) -> Partial:
        return partial_wrt_parameter(self.circuit, self.sweep, addr)


def _decision_leaf_overrides(circuit: Circuit, forbidden, excluded) -> dict:
    overrides = {}
    for d, row, alt in forbidden:
        addr = ParameterAddr(d, row, alt)
        if circuit.parameter(addr) is None:
            raise KeyError(f"no policy parameter for decision {d}, row {row}, alternative {alt}")
        overrides[addr] = 0.0
    for d, alt in excluded:
        addr = IndicatorAddr(d, alt)
        if circuit.indicator(d, alt) is None:
            raise KeyError(f"no indicator for decision {d}, alternative {alt}")
        overrides[addr] = 0.0
    return overrides


def _context_text(circuit: Circuit, decision: int, row: int) -> str:
    pars = circuit.parents.get(decision, ())
    cards = tuple(len(circuit.state_names[p]) for p in pars)
    return ",".join(f"{circuit.var_names[p]}={circuit.state_names[p][s]}"
                    for p, s in zip(pars, decode_row(row, cards))) or "(no observations)"


def evaluate(circuit: Circuit, evidence: Evidence | None = None,
             forbidden: Iterable[tuple[int, int, int]] = (),
             excluded: Iterable[tuple[int, int]] = (),
             tie_epsilon: float = 0.0) -> EvaluationResult:
    """Optimal policies and MEU with exactly one upward and one downward sweep.

    ``forbidden`` holds (decision, parent row, alternative) triples that are
    unavailable in that context; ``excluded`` holds (decision, alternative)
    pairs removed everywhere.
    """
    evidence = evidence or Evidence()
    u = circuit.utility
    if u is None:
        raise ValueError("circuit has no utility node")
    bad = sorted(v for v, _ in evidence if v in circuit.responsive or v == u)
    if bad:
        names = ", ".join(circuit.var_names[b] for b in bad)
        raise ResponsiveEvidenceError(f"evidence responsive to decisions: {names}")

    overrides = _decision_leaf_overrides(circuit, forbidden, excluded)
    leaves = set_leaves(circuit, evidence.extend(u, UTILITY_STATE), overrides)
    vals = leaves.values

    eligible = {}
    for i in circuit.max_nodes():
        d, row = circuit.nodes[i].payload
        ok = []
        for alt in range(len(circuit.nodes[i].children)):
            lam = vals[circuit.indicator(d, alt)]
            theta = vals[circuit.parameter(ParameterAddr(d, row, alt))]
            ok.append(lam != 0.0 and theta != 0.0)
        eligible[i] = ok
        if not any(ok) and _context_consistent(circuit, d, row, evidence):
            raise InfeasibleDecisionError(
                f"every alternative of {circuit.var_names[d]!r} is unavailable at "
                f"{_context_text(circuit, d, row)}", d, row)

    state = sweep_up(circuit, leaves, eligible, tie_epsilon)

    zeroed = {}
    tables: dict[int, list[int]] = {}
    moot: dict[int, list[bool]] = {}
    for d in circuit.decisions:
        n_rows = 1
        for p in circuit.parents.get(d, ()):
            n_rows *= len(circuit.state_names[p])
        tables[d] = [0] * n_rows
        moot[d] = [True] * n_rows
    for i, pick in state.argmax.items():
        d, row = circuit.nodes[i].payload
        kids = circuit.nodes[i].children
        tables[d][row] = pick
        moot[d][row] = all(state.value[c] == 0.0 for c in kids)
        for alt in range(len(kids)):
            if alt != pick:
                zeroed[circuit.parameter(ParameterAddr(d, row, alt))] = 0.0

    sweep_down(circuit, state, "route")

    root = state.root_value
    p_e = partial_wrt_indicator(circuit, state, u, 0).value + partial_wrt_indicator(circuit, state, u, 1).value
    if p_e <= 0.0:
        raise EvidenceImpossibleError("P(e) = 0: the evidence is impossible")
    policy = Policy({d: tuple(t) for d, t in tables.items()}, {d: tuple(m) for d, m in moot.items()})
    return EvaluationResult(root / p_e, policy, root, p_e, state, leaves.with_values(zeroed),
                            circuit, dict(state.argmax))


def _context_consistent(circuit: Circuit, d: int, row: int, evidence: Evidence) -> bool:
    pars = circuit.parents.get(d, ())
    cards = tuple(len(circuit.state_names[p]) for p in pars)
    for p, s in zip(pars, decode_row(row, cards)):
        if p in evidence and evidence.get(p) != s:
            return False
    return True


def zeroed_sweep(result: EvaluationResult) -> SweepState:
    """Re-run both sweeps on the zeroed leaves, differentiating max nodes as sums.

    Used to cross-check the route semantics of :func:`evaluate`.
    """
    state = sweep_up(result.circuit, result.leaves)
    return sweep_down(result.circuit, state, "sum")


def solve(diagram: InfluenceDiagram, evidence: Evidence | None = None,
          heuristic: Heuristic | str = Heuristic.MIN_FILL,
          forbidden=(), excluded=(), tie_epsilon: float = 0.0) -> EvaluationResult:
    """Compile and evaluate in one call."""
    circuit = compile_diagram(diagram, constrained_order(diagram, heuristic))
    return evaluate(circuit, evidence, forbidden, excluded, tie_epsilon)


@dataclass(frozen=True)
class VoiResult:
    value: float
    base_meu: float
    branch_prob: tuple[float, ...]
    branch_meu: tuple[float | None, ...]
    impossible: tuple[int, ...]       # states whose probability given the evidence is zero


def voi(circuit: Circuit, evidence: Evidence | None, var: int, **options) -> VoiResult:
    """Gain in MEU from observing ``var`` before every decision.

    The branch probabilities come from the evidence probabilities of the
    branch evaluations themselves, which do not depend on the policy because
    neither the evidence nor ``var`` responds to a decision.
    """
    evidence = evidence or Evidence()
    if var in circuit.responsive or var == circuit.utility:
        raise ResponsiveEvidenceError(f"{circuit.var_names[var]!r} responds to a decision")
    if var in evidence:
        raise ValueError(f"{circuit.var_names[var]!r} is already observed")
    base = evaluate(circuit, evidence, **options)
    probs, meus, impossible = [], [], []
    gain = 0.0
    for s in range(len(circuit.state_names[var])):
        try:
            branch = evaluate(circuit, evidence.extend(var, s), **options)
        except EvidenceImpossibleError:
            probs.append(0.0)
            meus.append(None)
            impossible.append(s)
            continue
        p = branch.p_evidence / base.p_evidence
        probs.append(p)
        meus.append(branch.meu)
        gain += p * branch.meu
    return VoiResult(gain - base.meu, base.meu, tuple(probs), tuple(meus), tuple(impossible))


def to_policy_diagram(diagram: InfluenceDiagram, policy: Policy) -> InfluenceDiagram:
    """Turn every decision into a chance node that follows ``policy`` deterministically."""
    variables = []
    cpts = dict(diagram.cpts)
    for v in diagram.variables:
        if v.kind is not Kind.DECISION:
            variables.append(v)
            continue
        variables.append(Variable(v.id, v.name, Kind.CHANCE, v.states))
        pars = tuple(diagram.parents_of(v.id))
        table = []
        for alt in policy.tables[v.id]:
            row = [0.0] * v.cardinality
            row[alt] = 1.0
            table.extend(row)
        cpts[v.id] = Cpt(Family(v.id, pars), diagram.cards(pars), v.cardinality, tuple(table))
    return InfluenceDiagram(tuple(variables), dict(diagram.parents), cpts, decision_order=())


class PolicyQuery:
    """Probabilistic queries on a compiled policy (or any belief-network) circuit."""

    def __init__(self, circuit: Circuit, evidence: Evidence | None = None):
        if circuit.count(Op.MAX):
            raise ValueError("policy circuits have no max nodes")
        self.circuit = circuit
        self.evidence = evidence or Evidence()
        self.state = sweep_down(circuit, sweep_up(circuit, set_leaves(circuit, self.evidence)))

    def prob_evidence(self) -> float:
        """P(e), the root value."""
        return self.state.root_value

    def joint(self, var: int, state: int) -> float:
        """P(x, e - X)."""
        return partial_wrt_indicator(self.circuit, self.state, var, state).value

    def retracted(self, var: int) -> float:
        """P(e - X)."""
        card = len(self.circuit.state_names[var])
        return sum(self.joint(var, s) for s in range(card))

    def family(self, var: int, row: int, state: int) -> float:
        """P(x, u, e) for the family instantiation (row, state) of ``var``."""
        addr = ParameterAddr(var, row, state)
        idx = self.circuit.parameter(addr)
        if idx is None:
            return 0.0
        return self.state.value[idx] * self.state.derivative[idx]

    def posterior(self, var: int) -> list[float]:
        """P(x | e - X) for every state of ``var``."""
        card = len(self.circuit.state_names[var])
        joint = [self.joint(var, s) for s in range(card)]
        total = sum(joint)
        if total <= 0.0:
            raise EvidenceImpossibleError("P(e) = 0: the evidence is impossible")
        return [j / total for j in joint]


def query_policy_circuit(policy_circuit: Circuit, evidence: Evidence | None = None) -> PolicyQuery:
    return PolicyQuery(policy_circuit, evidence)
