import numpy as np
import pytest

from decircuits.generate import (oracle_cost, random_belief_network, random_diagram, random_evidence,
                                 random_tractable_diagram)
from decircuits.model import assert_unresponsive, validate


class TestGenerators:
    @pytest.mark.parametrize("seed", range(30))
    def test_random_diagram_is_valid(self, seed):
        rng = np.random.default_rng(seed)
        d = random_diagram(rng)
        assert validate(d) == []
        assert len(d.chance) <= 6 and len(d.decisions) <= 2
        assert all(d.var(v).cardinality <= 3 for v in d.chance + d.decisions)
        assert assert_unresponsive(d, random_evidence(d, rng, p=1.0)) == []

    @pytest.mark.parametrize("seed", range(10))
    def test_belief_network_is_valid(self, seed):
        net = random_belief_network(np.random.default_rng(seed))
        assert validate(net, require_utility=False) == []
        assert net.is_belief_network

    def test_strictly_positive_tables(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            d = random_diagram(rng)
            assert all(p > 0.0 for c in d.cpts.values() for p in c.table)

    def test_tractable_respects_budget(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            assert oracle_cost(random_tractable_diagram(rng, budget=10_000)) <= 10_000

    def test_seeded_generation_is_reproducible(self):
        a = random_diagram(np.random.default_rng(42))
        b = random_diagram(np.random.default_rng(42))
        assert a == b
