"""Exceptions shared across the package."""


class DecisionCircuitError(Exception):
    pass


class EvidenceImpossibleError(DecisionCircuitError):
    """The evidence has probability zero, so the MEU is undefined."""


class ResponsiveEvidenceError(DecisionCircuitError, ValueError):
    """Evidence on a decision, a descendant of one, or the utility node."""


class InfeasibleDecisionError(DecisionCircuitError):
    def __init__(self, message, decision=None, context=None):
        super().__init__(message)
        self.decision = decision
        self.context = context


class SizeCapError(DecisionCircuitError):
    def __init__(self, message, size=None):
        super().__init__(message)
        self.size = size


class StrategyCapError(SizeCapError):
    pass
