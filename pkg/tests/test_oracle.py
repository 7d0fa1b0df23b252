import itertools
import math

import pytest

from decircuits.errors import EvidenceImpossibleError, SizeCapError
from decircuits.library import umbrella, weather_network, weather_report
from decircuits.model import Evidence
from decircuits.oracle import oracle_expected_utility, oracle_meu, oracle_query
from decircuits.strategies import StrategySpace


def brute_eu(diagram, tables):
    """Expected utility by explicit loops over every joint instantiation."""
    vs = diagram.variables
    u = diagram.utility
    total = 0.0
    for inst in itertools.product(*(range(v.cardinality) for v in vs)):
        if inst[u] != 0:
            continue
        p = 1.0
        for v in vs:
            pars = [inst[q] for q in diagram.parents_of(v.id)]
            if v.id in tables:
                row = 0
                for q, s in zip(diagram.parents_of(v.id), pars):
                    row = row * diagram.var(q).cardinality + s
                p *= 1.0 if tables[v.id][row] == inst[v.id] else 0.0
            else:
                p *= diagram.cpts[v.id].prob(pars, inst[v.id])
        total += p
    return total


class TestOracleMeu:
    def test_umbrella_values(self):
        res = oracle_meu(umbrella())
        assert res.values == pytest.approx((0.66, 0.76))
        assert res.meu == pytest.approx(0.76)
        assert res.argmax == {1}

    def test_values_match_explicit_loops(self):
        d = weather_report()
        res = oracle_meu(d)
        for strat in StrategySpace.of(d):
            assert res.values[strat.id] == pytest.approx(brute_eu(d, strat.choices), abs=1e-14)

    def test_ties_form_argmax_set(self):
        # the report is never bought, so B's rows after a purchase do not matter
        res = oracle_meu(weather_report(cost=0.5))
        assert len(res.argmax) > 1

    def test_forbidden_strategies_are_skipped(self):
        res = oracle_meu(umbrella(), forbidden=[(1, 0, 1)])
        assert math.isnan(res.values[1])
        assert res.meu == pytest.approx(0.66)
        assert res.feasible == {0}

    def test_cap(self):
        with pytest.raises(SizeCapError):
            oracle_meu(weather_report(), cap=10)

    def test_impossible_evidence(self):
        with pytest.raises(EvidenceImpossibleError):
            oracle_meu(umbrella(p_rain=0.0), Evidence({0: 0}))

    def test_expected_utility_of_policy(self):
        assert oracle_expected_utility(umbrella(), {1: (0,)}) == pytest.approx(0.66)


class TestOracleQuery:
    def test_marginal(self):
        assert oracle_query(weather_network(), Evidence({1: 0})) == pytest.approx(0.41)

    def test_retracted_joint(self):
        # evidence on B itself is replaced by the queried state
        assert oracle_query(weather_network(), Evidence({1: 1}), 1, 0) == pytest.approx(0.41)

    def test_family(self):
        assert oracle_query(weather_network(), None, 1, 0, (0,)) == pytest.approx(0.27)

    def test_decisions_rejected(self):
        with pytest.raises(ValueError):
            oracle_query(umbrella())
