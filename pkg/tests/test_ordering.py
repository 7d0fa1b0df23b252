import dataclasses
import itertools

import numpy as np
import pytest

from decircuits.generate import random_tractable_diagram
from decircuits.library import umbrella, weather_network, weather_report
from decircuits.model import Cpt, Family, InfluenceDiagram, Kind, Variable
from decircuits.ordering import (Heuristic, constrained_order, induced_width, order_from_sequence,
                                 order_violations, temporal_blocks)


def chain(n):
    variables = tuple(Variable(i, f"X{i}", Kind.CHANCE, ("a", "b")) for i in range(n))
    parents = {i: ((i - 1,) if i else ()) for i in range(n)}
    cpts = {i: Cpt(Family(i, parents[i]), (2,) * len(parents[i]), 2, (0.5, 0.5) * (2 if i else 1))
            for i in range(n)}
    return InfluenceDiagram(variables, parents, cpts, decision_order=())


def names(d, seq):
    return [d.var(v).name for v in seq]


class TestConstrainedOrder:
    def test_umbrella(self):
        d = umbrella()
        order = constrained_order(d)
        assert names(d, order.sequence) == ["U", "W", "B"]
        assert order.width == 2

    def test_chain_has_width_one(self):
        for h in Heuristic:
            assert constrained_order(chain(6), h).width == 1

    def test_weather_report_blocks(self):
        d = weather_report()
        assert [names(d, b) for b in temporal_blocks(d)] == [["W", "U"], ["B"], ["R"], ["G"]]

    def test_weather_report_heuristics_reach_best_legal_width(self):
        d = weather_report()
        legal = [p for p in itertools.permutations(range(len(d))) if not order_violations(d, p)]
        best = min(induced_width(d, p) for p in legal)
        fill = constrained_order(d, Heuristic.MIN_FILL).width
        degree = constrained_order(d, Heuristic.MIN_DEGREE).width
        assert best == fill <= degree

    @pytest.mark.parametrize("seed", range(20))
    def test_random_orders_are_legal(self, seed):
        d = random_tractable_diagram(np.random.default_rng(seed), min_decisions=1)
        for h in Heuristic:
            order = constrained_order(d, h)
            assert order_violations(d, order.sequence) == []
            assert order.width == induced_width(d, order.sequence)

    @pytest.mark.parametrize("seed", range(20))
    def test_variables_after_decision_are_its_parents(self, seed):
        d = random_tractable_diagram(np.random.default_rng(seed), min_decisions=1)
        order = constrained_order(d)
        for dec in d.decisions:
            assert order.after[dec] == frozenset(d.parents_of(dec))

    def test_deterministic(self):
        d = weather_report()
        assert constrained_order(d) == constrained_order(d)

    def test_belief_network(self):
        assert sorted(constrained_order(weather_network()).sequence) == [0, 1]


class TestLegality:
    def test_decision_before_utility(self):
        d = umbrella()
        assert order_violations(d, (1, 2, 0))

    def test_observed_variable_eliminated_too_early(self):
        d = weather_report()
        assert order_violations(d, (4, 1, 2, 3, 0))

    def test_incomplete_sequence(self):
        assert order_violations(umbrella(), (2, 0))

    def test_order_from_sequence_rejects_illegal(self):
        with pytest.raises(ValueError):
            order_from_sequence(umbrella(), (1, 2, 0))

    def test_order_from_sequence_accepts_legal(self):
        order = order_from_sequence(umbrella(), (2, 0, 1))
        assert order.width == 2
