"""Decision circuits: compile influence diagrams and solve them with two sweeps."""

from .circuit import (Circuit, IndicatorAddr, MaxTag, Op, ParameterAddr, SweepState,
                      export_graph, partial_wrt_indicator, partial_wrt_parameter, set_leaves,
                      sweep_down, sweep_up)
from .compiler import compile_diagram, treewidth_report
from .errors import (EvidenceImpossibleError, InfeasibleDecisionError, ResponsiveEvidenceError,
                     SizeCapError, StrategyCapError)
from .evaluator import (EvaluationResult, Policy, evaluate, query_policy_circuit, solve,
                        to_policy_diagram, voi)
from .model import (Cpt, Evidence, Family, InfluenceDiagram, Kind, UtilityScale, Variable,
                    assert_unresponsive, normalize_utilities, validate)
from .normal_form import solve_normal_form, to_normal_form
from .oracle import oracle_expected_utility, oracle_meu, oracle_query
from .ordering import EliminationOrder, Heuristic, constrained_order

__version__ = "0.1.0"
