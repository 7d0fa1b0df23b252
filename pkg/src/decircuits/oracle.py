"""Brute-force ground truth by enumerating the full joint distribution.

Nothing here is factorized: the joint over every variable is materialized as
one dense array, policies enter as 0/1 indicator arrays, and every answer is
a plain sum over that array.  Sums run over C-ordered arrays with numpy's
fixed reduction order, so identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EvidenceImpossibleError, SizeCapError
from .model import Evidence, InfluenceDiagram, Kind
from .strategies import StrategySpace

DEFAULT_CAP = 10 ** 7
ARGMAX_TOLERANCE = 1e-12


def _place(diagram: InfluenceDiagram, table, axes: Sequence[int]) -> np.ndarray:
    """Reshape a flat table over ``axes`` (last fastest) so it broadcasts over the joint."""
    cards = [diagram.var(a).cardinality for a in axes]
    arr = np.asarray(table, dtype=float).reshape(cards)
    perm = sorted(range(len(axes)), key=lambda i: axes[i])
    arr = arr.transpose(perm)
    shape = [1] * len(diagram.variables)
    for a in axes:
        shape[a] = diagram.var(a).cardinality
    return arr.reshape(shape)


def joint_size(diagram: InfluenceDiagram) -> int:
    return math.prod(v.cardinality for v in diagram.variables)


def _chance_joint(diagram: InfluenceDiagram) -> np.ndarray:
    """Product of every chance and utility CPT, broadcast over all variables."""
    full = np.ones([v.cardinality for v in diagram.variables])
    for v in diagram.variables:
        if v.kind is Kind.DECISION:
            continue
        axes = list(diagram.parents_of(v.id)) + [v.id]
        full = full * _place(diagram, diagram.cpts[v.id].table, axes)
    return full


def _evidence_mask(diagram: InfluenceDiagram, evidence: Mapping[int, int]) -> np.ndarray:
    mask = np.ones([v.cardinality for v in diagram.variables])
    for var, state in evidence.items():
        ind = np.zeros(diagram.var(var).cardinality)
        ind[state] = 1.0
        mask = mask * _place(diagram, ind, [var])
    return mask


def _policy_indicator(diagram: InfluenceDiagram, decision: int, table: Sequence[int]) -> np.ndarray:
    card = diagram.var(decision).cardinality
    flat = np.zeros(len(table) * card)
    for row, alt in enumerate(table):
        flat[row * card + alt] = 1.0
    return _place(diagram, flat, list(diagram.parents_of(decision)) + [decision])


def _as_dict(evidence) -> dict[int, int]:
    if evidence is None:
        return {}
    if isinstance(evidence, Evidence):
        return dict(evidence.assignments)
    return dict(evidence)


@dataclass(frozen=True)
class OracleResult:
    meu: float
    argmax: frozenset[int]          # every strategy within tolerance of the best
    values: tuple[float, ...]       # expected utility per enumerated strategy id
    p_evidence: float
    feasible: frozenset[int] | None = None


def _feasible(table: Sequence[int], decision: int, forbidden: set, excluded: set) -> bool:
    for row, alt in enumerate(table):
        if (decision, row, alt) in forbidden or (decision, alt) in excluded:
            return False
    return True


def oracle_meu(diagram: InfluenceDiagram, evidence=None, cap: int = DEFAULT_CAP,
               forbidden: Iterable[tuple[int, int, int]] = (),
               excluded: Iterable[tuple[int, int]] = (),
               tolerance: float = ARGMAX_TOLERANCE) -> OracleResult:
    """Expected utility of every (feasible) strategy by summing the joint.

    Strategies use the shared mixed-radix numbering.  Infeasible strategies,
    those picking a forbidden or excluded alternative anywhere, are skipped
    and get NaN in ``values``.
    """
    space = StrategySpace.of(diagram)
    total = space.size * joint_size(diagram)
    if total > cap:
        raise SizeCapError(f"{space.size} strategies x {joint_size(diagram)} joint entries exceed {cap}", total)
    ev = _as_dict(evidence)
    u = diagram.utility
    base = _chance_joint(diagram) * _evidence_mask(diagram, ev)
    with_u = base * _evidence_mask(diagram, {u: 0})
    forbidden, excluded = set(forbidden), set(excluded)

    locals_ = []
    for k, d in enumerate(space.decisions):
        locals_.append([(t, _feasible(t, d, forbidden, excluded), _policy_indicator(diagram, d, t))
                        for t in space.local_policies(k)])

    values = []
    p_ev = math.nan
    for combo in itertools.product(*locals_):
        if not all(ok for _, ok, _ in combo):
            values.append(math.nan)
            continue
        mask = np.ones_like(base)
        for _, _, ind in combo:
            mask = mask * ind
        p_e = float((base * mask).sum())
        if p_e <= 0.0:
            raise EvidenceImpossibleError("P(e) = 0: the evidence is impossible")
        p_ev = p_e
        values.append(float((with_u * mask).sum()) / p_e)

    feasible = [i for i, v in enumerate(values) if not math.isnan(v)]
    if not feasible:
        raise ValueError("no feasible strategy")
    best = max(values[i] for i in feasible)
    argmax = frozenset(i for i in feasible if values[i] >= best - tolerance)
    return OracleResult(best, argmax, tuple(values), p_ev, frozenset(feasible))


def oracle_expected_utility(diagram: InfluenceDiagram, policy: Mapping[int, Sequence[int]],
                            evidence=None, cap: int = DEFAULT_CAP) -> float:
    """P(U = u | e) when every decision follows its table in ``policy``."""
    if joint_size(diagram) > cap:
        raise SizeCapError("joint too large", joint_size(diagram))
    ev = _as_dict(evidence)
    joint = _chance_joint(diagram) * _evidence_mask(diagram, ev)
    for d in diagram.decisions:
        joint = joint * _policy_indicator(diagram, d, policy[d])
    p_e = float(joint.sum())
    if p_e <= 0.0:
        raise EvidenceImpossibleError("P(e) = 0: the evidence is impossible")
    return float((joint * _evidence_mask(diagram, {diagram.utility: 0})).sum()) / p_e


def oracle_query(network: InfluenceDiagram, evidence=None, var: int | None = None,
                 state: int | None = None, parent_states: Sequence[int] | None = None,
                 cap: int = DEFAULT_CAP) -> float:
    """Exact probabilities on a network without decisions.

    With only ``evidence``: P(e).  With ``var`` and ``state``: P(x, e - X).
    With ``parent_states`` as well: P(x, u, e) for the family of ``var``.
    """
    if network.decisions:
        raise ValueError("oracle_query needs a network without decisions")
    if joint_size(network) > cap:
        raise SizeCapError("joint too large", joint_size(network))
    ev = _as_dict(evidence)
    joint = _chance_joint(network)
    if var is None:
        return float((joint * _evidence_mask(network, ev)).sum())
    if parent_states is None:
        ev.pop(var, None)
        ev[var] = state
        return float((joint * _evidence_mask(network, ev)).sum())
    joint = joint * _evidence_mask(network, ev)
    inst = dict(zip(network.parents_of(var), parent_states))
    inst[var] = state
    for v, s in inst.items():
        joint = joint * _evidence_mask(network, {v: s})
    return float(joint.sum())
