import numpy as np
import pytest

from decircuits import evaluator as evaluator_mod
from decircuits import fileformat
from decircuits.circuit import Op, ParameterAddr
from decircuits.compiler import compile_diagram
from decircuits.errors import (EvidenceImpossibleError, InfeasibleDecisionError,
                               ResponsiveEvidenceError)
from decircuits.evaluator import (evaluate, query_policy_circuit, solve, to_policy_diagram, voi,
                                  zeroed_sweep)
from decircuits.generate import random_evidence, random_tractable_diagram
from decircuits.library import umbrella, weather_report
from decircuits.model import Evidence, validate
from decircuits.oracle import oracle_expected_utility, oracle_meu, oracle_query
from decircuits.strategies import StrategySpace

W, B, U = 0, 1, 2


def forecast(p_rain=0.3):
    """W -> O, B observes O, U on (W, B); O is a noisy forecast."""
    return fileformat.parse_diagram({
        "variables": [
            {"name": "W", "kind": "chance", "states": ["w", "not_w"]},
            {"name": "O", "kind": "chance", "states": ["rain", "dry"]},
            {"name": "B", "kind": "decision", "states": ["b", "not_b"]},
            {"name": "U", "kind": "utility"},
        ],
        "arcs": [["W", "O"], ["O", "B"], ["W", "U"], ["B", "U"]],
        "cpts": {"W": [p_rain, 1 - p_rain], "O": [0.8, 0.2, 0.1, 0.9],
                 "U": [0.8, 0.2, 0.2, 0.8, 0.6, 0.4, 1.0, 0.0]},
    })


class TestUmbrella:
    def test_meu_and_policy(self):
        res = solve(umbrella())
        assert res.meu == pytest.approx(0.76, abs=1e-12)
        assert res.policy.choice(B) == 1
        assert res.p_evidence == pytest.approx(1.0)

    def test_excluding_optimal_alternative(self):
        # only b remains: 0.3 * 0.8 + 0.7 * 0.6
        res = solve(umbrella(), excluded=[(B, 1)])
        assert res.meu == pytest.approx(0.66, abs=1e-12)
        assert res.policy.choice(B) == 0

    def test_certain_utility(self):
        res = solve(umbrella(utilities={(0, 0): 1.0, (0, 1): 1.0, (1, 0): 1.0, (1, 1): 1.0}))
        assert res.meu == pytest.approx(1.0)

    def test_voi_of_weather(self):
        v = voi(compile_diagram(umbrella()), None, W)
        assert v.value == pytest.approx(0.18, abs=1e-12)
        assert v.branch_prob == pytest.approx((0.3, 0.7))
        assert v.branch_meu == pytest.approx((0.8, 1.0))

    def test_voi_of_already_observed(self):
        c = compile_diagram(forecast())
        with pytest.raises(ValueError):
            voi(c, Evidence({1: 0}), 1)


class TestVoi:
    def test_irrelevant_variable_has_zero_value(self):
        d = forecast()
        # once W is known, learning the forecast adds nothing
        v = voi(compile_diagram(d), Evidence({0: 0}), 1)
        assert v.value == pytest.approx(0.0, abs=1e-12)

    def test_responsive_variable_rejected(self):
        with pytest.raises(ResponsiveEvidenceError):
            voi(compile_diagram(weather_report()), None, 2)

    @pytest.mark.parametrize("seed", range(15))
    def test_nonnegative_and_matches_oracle(self, seed):
        rng = np.random.default_rng(900 + seed)
        d = random_tractable_diagram(rng, min_decisions=1, max_strategies=512)
        ev = random_evidence(d, rng, p=0.2)
        c = compile_diagram(d)
        candidates = [v.id for v in d.variables
                      if v.id not in c.responsive and v.id != d.utility and v.id not in ev]
        for x in candidates:
            res = voi(c, ev, x)
            assert res.value >= -1e-12
            base = oracle_meu(d, ev).meu
            p_e = oracle_query(to_policy_diagram(d, solve(d, ev).policy), ev)
            want = -base
            for s in range(d.var(x).cardinality):
                ev_s = ev.extend(x, s)
                p = oracle_query(to_policy_diagram(d, solve(d, ev).policy), ev_s) / p_e
                want += p * oracle_meu(d, ev_s).meu
            assert res.value == pytest.approx(want, abs=1e-10)


class TestPolicyDiagram:
    def test_umbrella_policy_diagram(self):
        d = umbrella()
        res = solve(d)
        pd = to_policy_diagram(d, res.policy)
        assert validate(pd) == []
        q = query_policy_circuit(compile_diagram(pd))
        assert q.joint(U, 0) == pytest.approx(0.76, abs=1e-12)

    def test_root_value_matches_decision_circuit(self):
        d = weather_report()
        res = solve(d)
        q = query_policy_circuit(compile_diagram(to_policy_diagram(d, res.policy)), Evidence({4: 0}))
        assert q.prob_evidence() == pytest.approx(res.root_value, abs=1e-14)

    def test_posterior_under_optimal_policy(self):
        d = weather_report()
        pd = to_policy_diagram(d, solve(d).policy)
        q = query_policy_circuit(compile_diagram(pd), Evidence({3: 0}))
        want = oracle_query(pd, Evidence({3: 0}), 1, 0) / oracle_query(pd, Evidence({3: 0}))
        # B = b happens only after a rain report: 0.27 / (0.27 + 0.07)
        assert q.posterior(1)[0] == pytest.approx(want, abs=1e-12)
        assert want == pytest.approx(0.27 / 0.34, abs=1e-12)

    def test_family_marginal(self):
        d = weather_report()
        pd = to_policy_diagram(d, solve(d).policy)
        q = query_policy_circuit(compile_diagram(pd))
        assert q.family(2, 0, 0) == pytest.approx(oracle_query(pd, None, 2, 0, (0, 0)), abs=1e-14)

    def test_decision_circuit_rejected(self):
        with pytest.raises(ValueError):
            query_policy_circuit(compile_diagram(umbrella()))


class TestMechanism:
    def test_meu_is_root_over_evidence_probability(self):
        d = forecast()
        res = solve(d, Evidence({0: 0}))
        assert res.p_evidence == pytest.approx(0.3)
        assert res.meu == pytest.approx(res.root_value / 0.3)
        assert res.meu == pytest.approx(oracle_meu(d, Evidence({0: 0})).meu, abs=1e-12)

    def test_zeroed_sweep_matches_routing(self):
        d = weather_report()
        res = solve(d)
        zero = zeroed_sweep(res)
        assert zero.root_value == pytest.approx(res.root_value, abs=1e-15)
        c = res.circuit
        losing = set()
        for i in c.max_nodes():
            dec, row = c.nodes[i].payload
            for alt in range(len(c.nodes[i].children)):
                if alt != res.max_choices[i]:
                    losing.add(c.parameter(ParameterAddr(dec, row, alt)))
        for i, node in enumerate(c.nodes):
            if node.op is Op.PARAMETER and i not in losing:
                assert zero.derivative[i] == pytest.approx(res.derivatives[i], abs=1e-14)

    def test_policy_value_of_each_max_choice(self):
        d = weather_report()
        res = solve(d)
        eu = oracle_expected_utility(d, res.policy.tables)
        assert eu == pytest.approx(res.meu, abs=1e-12)

    def test_exactly_one_sweep_each(self, monkeypatch):
        calls = []
        up, down = evaluator_mod.sweep_up, evaluator_mod.sweep_down
        monkeypatch.setattr(evaluator_mod, "sweep_up", lambda *a, **k: calls.append("up") or up(*a, **k))
        monkeypatch.setattr(evaluator_mod, "sweep_down", lambda *a, **k: calls.append("down") or down(*a, **k))
        c = compile_diagram(weather_report())
        res = evaluate(c)
        assert calls == ["up", "down"]
        assert res.sweep.up_edges == res.sweep.down_edges == c.size


class TestMootAndInfeasible:
    def test_moot_context(self):
        res = solve(forecast(), Evidence({1: 0}))
        assert res.policy.moot[2] == (False, True)
        assert res.policy.choice(2, 0) == 0

    def test_forbidden_at_impossible_context_is_fine(self):
        res = solve(forecast(), Evidence({1: 0}), forbidden=[(2, 1, 0), (2, 1, 1)])
        assert res.meu == pytest.approx(oracle_meu(forecast(), Evidence({1: 0})).meu, abs=1e-12)

    def test_infeasible(self):
        with pytest.raises(InfeasibleDecisionError) as err:
            solve(forecast(), forbidden=[(2, 1, 0), (2, 1, 1)])
        assert "O=dry" in str(err.value)

    def test_all_excluded(self):
        with pytest.raises(InfeasibleDecisionError):
            solve(umbrella(), excluded=[(B, 0), (B, 1)])

    def test_impossible_evidence(self):
        with pytest.raises(EvidenceImpossibleError):
            solve(forecast(p_rain=0.0), Evidence({0: 0}))

    def test_responsive_evidence(self):
        with pytest.raises(ResponsiveEvidenceError):
            solve(umbrella(), Evidence({U: 0}))

    def test_forbid_changes_policy(self):
        d = forecast()
        base = solve(d)
        alt = base.policy.choice(2, 0)
        after = solve(d, forbidden=[(2, 0, alt)])
        assert after.policy.choice(2, 0) != alt
        assert after.meu <= base.meu
        orc = oracle_meu(d, forbidden=[(2, 0, alt)])
        assert after.meu == pytest.approx(orc.meu, abs=1e-12)
        assert StrategySpace.of(d).encode(after.policy.tables) in orc.argmax
