import numpy as np
import pytest

from decircuits.circuit import (AddressError, CircuitBuilder, IndicatorAddr, MaxTag,
                                NumericDomainError, Op, ParameterAddr, export_graph,
                                partial_wrt_indicator, partial_wrt_parameter, retracted_probability,
                                set_leaves, sweep_down, sweep_up)
from decircuits.compiler import compile_diagram
from decircuits.generate import random_belief_network, random_evidence
from decircuits.library import weather_network
from decircuits.model import Evidence
from decircuits.oracle import oracle_query

W, B = 0, 1


@pytest.fixture
def net():
    return weather_network()


@pytest.fixture
def circuit(net):
    return compile_diagram(net)


def run(circuit, evidence=None, **kw):
    return sweep_down(circuit, sweep_up(circuit, set_leaves(circuit, evidence), **kw))


class TestWeatherNetwork:
    def test_no_evidence_gives_one(self, circuit):
        assert run(circuit).root_value == pytest.approx(1.0, abs=1e-15)

    def test_probability_of_evidence(self, circuit):
        # P(b) = 0.3 * 0.9 + 0.7 * 0.2
        assert run(circuit, Evidence({B: 0})).root_value == pytest.approx(0.41, abs=1e-15)

    def test_indicator_partial_is_joint(self, circuit):
        state = run(circuit)
        assert partial_wrt_indicator(circuit, state, B, 0).value == pytest.approx(0.41, abs=1e-15)

    def test_indicator_partial_retracts_own_evidence(self, circuit):
        state = run(circuit, Evidence({B: 1}))
        assert partial_wrt_indicator(circuit, state, B, 0).value == pytest.approx(0.41, abs=1e-15)
        assert retracted_probability(circuit, state, B, 2) == pytest.approx(1.0, abs=1e-15)

    def test_parameter_partial_gives_family_marginal(self, circuit):
        state = run(circuit, Evidence({B: 0}))
        idx = circuit.parameter(ParameterAddr(B, 0, 0))
        assert state.value[idx] * state.derivative[idx] == pytest.approx(0.27, abs=1e-15)

    def test_unknown_address(self, circuit):
        with pytest.raises(AddressError):
            set_leaves(circuit, overrides={IndicatorAddr(7, 0): 1.0})

    def test_pruned_leaf_reports_zero(self, circuit):
        state = run(circuit)
        assert partial_wrt_parameter(circuit, state, ParameterAddr(B, 9, 0)) == (0.0, True)


class TestDerivativesAgainstEnumeration:
    @pytest.mark.parametrize("seed", range(15))
    def test_random_network(self, seed):
        rng = np.random.default_rng(seed)
        net = random_belief_network(rng, max_vars=5)
        ev = random_evidence(net, rng, p=0.5)
        c = compile_diagram(net)
        state = run(c, ev)
        assert state.root_value == pytest.approx(oracle_query(net, ev), abs=1e-12)
        for v in net.variables:
            for s in range(v.cardinality):
                got = partial_wrt_indicator(c, state, v.id, s).value
                assert got == pytest.approx(oracle_query(net, ev, v.id, s), abs=1e-12)


class TestSweeps:
    def test_root_is_last_node(self, circuit):
        assert circuit.root == len(circuit) - 1

    def test_edge_counters(self, circuit):
        state = run(circuit)
        assert state.up_edges == circuit.size
        assert state.down_edges == circuit.size

    def test_negative_leaf_rejected(self, circuit):
        leaves = set_leaves(circuit, overrides={ParameterAddr(W, 0, 0): -0.1})
        with pytest.raises(NumericDomainError):
            sweep_up(circuit, leaves)

    def test_nan_leaf_rejected(self, circuit):
        leaves = set_leaves(circuit, overrides={ParameterAddr(W, 0, 0): float("nan")})
        with pytest.raises(NumericDomainError):
            sweep_up(circuit, leaves)

    def test_derivatives_need_downward_sweep(self, circuit):
        state = sweep_up(circuit, set_leaves(circuit))
        with pytest.raises(RuntimeError):
            partial_wrt_indicator(circuit, state, W, 0)

    def test_unknown_semantics(self, circuit):
        with pytest.raises(ValueError):
            sweep_down(circuit, sweep_up(circuit, set_leaves(circuit)), "mean")

    def test_finite_differences(self, circuit):
        leaves = set_leaves(circuit, Evidence({B: 0}))
        state = sweep_down(circuit, sweep_up(circuit, leaves))
        for i, node in enumerate(circuit.nodes):
            if node.op is not Op.PARAMETER:
                continue
            x, h = leaves.values[i], 1e-3
            hi = sweep_up(circuit, leaves.with_values({i: x + h})).root_value
            lo = sweep_up(circuit, leaves.with_values({i: x - h})).root_value
            assert (hi - lo) / (2 * h) == pytest.approx(state.derivative[i], rel=1e-6, abs=1e-12)


class TestZeroHandling:
    """Products with zero-valued children still get correct partials."""

    def build(self):
        b = CircuitBuilder()
        x, y, z = (b.parameter(0, 0, s) for s in range(3))
        root = b.product([x, y, z])
        params = {ParameterAddr(0, 0, s): v for s, v in enumerate((2.0, 0.0, 5.0))}
        return b.build(root, params, var_names=("X",), state_names=(("a", "b", "c"),), parents={0: ()},
                       utility=None, decisions=(), responsive=frozenset())

    def test_single_zero(self):
        c = self.build()
        state = run(c)
        d = [state.derivative[c.parameter(ParameterAddr(0, 0, s))] for s in range(3)]
        assert d == [0.0, 10.0, 0.0]

    def test_two_zeros(self):
        c = self.build()
        leaves = set_leaves(c, overrides={ParameterAddr(0, 0, 0): 0.0})
        state = sweep_down(c, sweep_up(c, leaves))
        d = [state.derivative[c.parameter(ParameterAddr(0, 0, s))] for s in range(3)]
        assert d == [0.0, 0.0, 0.0]


class TestMaxNodes:
    def build(self, values):
        b = CircuitBuilder()
        kids = [b.product([b.indicator(0, s), b.parameter(1, 0, s)]) for s in range(len(values))]
        root = b.max(kids, MaxTag(0, 0))
        params = {ParameterAddr(1, 0, s): v for s, v in enumerate(values)}
        return b.build(root, params, var_names=("D", "T"), state_names=(("a", "b", "c"), ("a", "b", "c")),
                       parents={0: (), 1: ()}, utility=None, decisions=(0,), responsive=frozenset({0}))

    def test_route_semantics(self):
        c = self.build([0.2, 0.7, 0.5])
        state = run(c)
        assert state.argmax[c.root] == 1
        assert [state.derivative[c.indicator(0, s)] for s in range(3)] == [0.0, 0.7, 0.0]

    def test_sum_semantics(self):
        c = self.build([0.2, 0.7, 0.5])
        state = sweep_down(c, sweep_up(c, set_leaves(c)), "sum")
        assert [state.derivative[c.indicator(0, s)] for s in range(3)] == [0.2, 0.7, 0.5]

    def test_tie_goes_to_lowest_position(self):
        c = self.build([0.5, 0.7, 0.7])
        assert run(c).argmax[c.root] == 1

    def test_tie_epsilon(self):
        c = self.build([0.7 - 1e-13, 0.7, 0.1])
        assert run(c).argmax[c.root] == 1
        assert run(c, tie_epsilon=1e-9).argmax[c.root] == 0

    def test_eligibility_breaks_ties(self):
        c = self.build([0.7, 0.7, 0.1])
        assert run(c, eligible={c.root: [False, True, True]}).argmax[c.root] == 1

    @pytest.mark.parametrize("scale", [1e-6, 0.5, 3.0, 1e6])
    def test_argmax_invariant_to_positive_scaling(self, scale):
        vals = [0.2, 0.7, 0.5]
        a = run(self.build(vals))
        b = run(self.build([v * scale for v in vals]))
        assert a.argmax == b.argmax


class TestBuilder:
    def test_hash_consing_shares_nodes(self):
        b = CircuitBuilder()
        assert b.indicator(0, 1) == b.indicator(0, 1)
        x, y = b.indicator(0, 0), b.parameter(0, 0, 0)
        assert b.product([x, y]) == b.product([x, y])

    def test_without_hash_consing(self):
        b = CircuitBuilder(hash_consing=False)
        x, y = b.indicator(0, 0), b.parameter(0, 0, 0)
        assert b.product([x, y]) != b.product([x, y])

    def test_single_child_collapses(self):
        b = CircuitBuilder()
        x = b.indicator(0, 0)
        assert b.sum([x]) == x
        assert b.product([x]) == x

    def test_hash_consing_preserves_values(self, net):
        shared = compile_diagram(net, hash_consing=True)
        plain = compile_diagram(net, hash_consing=False)
        assert shared.size <= plain.size
        for ev in (Evidence(), Evidence({B: 0}), Evidence({W: 1, B: 1})):
            assert run(shared, ev).root_value == pytest.approx(run(plain, ev).root_value, abs=1e-15)


class TestExport:
    def test_deterministic(self, net):
        assert export_graph(compile_diagram(net)) == export_graph(compile_diagram(net))

    def test_header_and_lines(self, circuit):
        text = export_graph(circuit)
        lines = text.splitlines()
        assert lines[0] == f"circuit nodes={len(circuit)} edges={circuit.size} root={circuit.root}"
        assert len(lines) == len(circuit) + 1
