"""Normal-form evaluation: one strategy variable, one arithmetic circuit, two sweeps.

Every decision becomes a deterministic chance variable conditioned on the
strategy variable S and on its former informational parents.  S gets a
uniform prior, the network is compiled like any belief network, and a single
upward/downward pass with the utility clamped to ``u`` yields the partial
derivative with respect to each strategy indicator.  That partial is
proportional to the probability of ``u`` under the strategy, so the best
strategy is its argmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuit import Circuit, SweepState, indicator_partials, set_leaves, sweep_down, sweep_up
from .compiler import compile_diagram
from .errors import EvidenceImpossibleError, ResponsiveEvidenceError, StrategyCapError
from .model import Cpt, Evidence, Family, InfluenceDiagram, Kind, Variable, assert_unresponsive
from .ordering import Heuristic, constrained_order
from .strategies import Strategy, StrategySpace

DEFAULT_STRATEGY_CAP = 10 ** 6


@dataclass(frozen=True)
class NormalFormDiagram:
    base: InfluenceDiagram
    strategy_var: int
    space: StrategySpace

    @property
    def n_strategies(self) -> int:
        return self.space.size


def strategy_count(diagram: InfluenceDiagram) -> int:
    return StrategySpace.of(diagram).size


def to_normal_form(diagram: InfluenceDiagram, cap: int = DEFAULT_STRATEGY_CAP) -> NormalFormDiagram:
    """Replace the decisions by deterministic functions of a root strategy variable.

    Raises StrategyCapError when the number of strategies exceeds ``cap``.
    """
    space = StrategySpace.of(diagram)
    n_s = space.size
    if n_s > cap:
        raise StrategyCapError(f"{n_s} strategies exceed the cap of {cap}", n_s)

    taken = {v.name for v in diagram.variables}
    name = "S"
    while name in taken:
        name = "_" + name
    s_id = len(diagram.variables)
    strategy = Variable(s_id, name, Kind.CHANCE, tuple(f"s{i}" for i in range(n_s)))

    variables = []
    for v in diagram.variables:
        variables.append(Variable(v.id, v.name, Kind.CHANCE, v.states) if v.kind is Kind.DECISION else v)
    variables.append(strategy)

    parents = dict(diagram.parents)
    cpts = dict(diagram.cpts)
    cpts[s_id] = Cpt(Family(s_id, ()), (), n_s, tuple([1.0 / n_s] * n_s))
    parents[s_id] = ()

    tables = {d: [] for d in space.decisions}
    for strat in space:
        for d in space.decisions:
            card = diagram.var(d).cardinality
            for alt in strat.choices[d]:
                row = [0.0] * card
                row[alt] = 1.0
                tables[d].extend(row)
    for d in space.decisions:
        pars = (s_id,) + tuple(diagram.parents_of(d))
        parents[d] = pars
        pcards = (n_s,) + diagram.cards(diagram.parents_of(d))
        cpts[d] = Cpt(Family(d, pars), pcards, diagram.var(d).cardinality, tuple(tables[d]))

    base = InfluenceDiagram(tuple(variables), parents, cpts, decision_order=())
    return NormalFormDiagram(base, s_id, space)


@dataclass
class NormalFormResult:
    strategy: Strategy
    meu: float
    p_evidence: float
    strategy_partials: list[float]
    circuit: Circuit
    sweep: SweepState

    @property
    def policy(self):
        return self.strategy.choices


def _check_evidence(diagram: InfluenceDiagram, evidence: Evidence):
    bad = assert_unresponsive(diagram, evidence)
    if bad:
        names = ", ".join(diagram.var(b).name for b in bad)
        raise ResponsiveEvidenceError(f"evidence responsive to decisions: {names}")


def solve_normal_form(diagram: InfluenceDiagram, evidence: Evidence | None = None,
                      heuristic: Heuristic | str = Heuristic.MIN_FILL,
                      cap: int = DEFAULT_STRATEGY_CAP, tie_epsilon: float = 0.0,
                      nf: NormalFormDiagram | None = None) -> NormalFormResult:
    """Best strategy and MEU from one sweep pair on the normal-form circuit.

    Ties go to the lowest strategy id.
    """
    evidence = evidence or Evidence()
    _check_evidence(diagram, evidence)
    nf = nf or to_normal_form(diagram, cap)
    net = nf.base
    u = net.utility
    circuit = compile_diagram(net, constrained_order(net, heuristic))
    leaves = set_leaves(circuit, evidence.extend(u, 0))
    state = sweep_down(circuit, sweep_up(circuit, leaves))

    partials = indicator_partials(circuit, state, nf.strategy_var, nf.n_strategies)
    p_evidence = sum(indicator_partials(circuit, state, u, 2))
    if p_evidence <= 0.0:
        raise EvidenceImpossibleError("P(e) = 0: the evidence is impossible")
    best_value = max(partials)
    threshold = best_value - tie_epsilon * abs(best_value) if tie_epsilon > 0 else best_value
    best = next(i for i, v in enumerate(partials) if v >= threshold)
    meu = partials[best] * nf.n_strategies / p_evidence
    return NormalFormResult(nf.space.decode(best), meu, p_evidence, partials, circuit, state)


def uniform_prior_ok(nf: NormalFormDiagram) -> bool:
    return abs(math.fsum(nf.base.cpts[nf.strategy_var].table) - 1.0) <= 1e-9


def deterministic_rows_ok(nf: NormalFormDiagram) -> bool:
    for d in nf.space.decisions:
        cpt = nf.base.cpts[d]
        for r in range(cpt.rows):
            row = cpt.row(r)
            if sorted(row)[-1] != 1.0 or any(p not in (0.0, 1.0) for p in row):
                return False
    return True
