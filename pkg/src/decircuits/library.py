"""Small reference diagrams: the weather/umbrella family of examples."""

from __future__ import annotations

from .model import (UTILITY_STATES, Cpt, Family, InfluenceDiagram, Kind, UtilityScale, Variable,
                    normalize_utilities)

W, B, U = 0, 1, 2


def weather_network(p_rain: float = 0.3, p_bring_given_rain: float = 0.9,
                    p_bring_given_dry: float = 0.2) -> InfluenceDiagram:
    """Belief network W -> B: will a friend bring an umbrella given the weather."""
    variables = (
        Variable(W, "W", Kind.CHANCE, ("w", "not_w")),
        Variable(B, "B", Kind.CHANCE, ("b", "not_b")),
    )
    parents = {W: (), B: (W,)}
    cpts = {
        W: Cpt(Family(W, ()), (), 2, (p_rain, 1.0 - p_rain)),
        B: Cpt(Family(B, (W,)), (2,), 2, (p_bring_given_rain, 1.0 - p_bring_given_rain,
                                          p_bring_given_dry, 1.0 - p_bring_given_dry)),
    }
    return InfluenceDiagram(variables, parents, cpts, decision_order=())


UMBRELLA_UTILITIES = {(0, 0): 0.8, (0, 1): 0.2, (1, 0): 0.6, (1, 1): 1.0}


def umbrella(p_rain: float = 0.3, utilities=None) -> InfluenceDiagram:
    """Decision B (bring umbrella) with no observations; U depends on W and B.

    ``utilities`` maps (weather state, umbrella alternative) to P(U = u).
    """
    utilities = UMBRELLA_UTILITIES if utilities is None else utilities
    variables = (
        Variable(W, "W", Kind.CHANCE, ("w", "not_w")),
        Variable(B, "B", Kind.DECISION, ("b", "not_b")),
        Variable(U, "U", Kind.UTILITY, UTILITY_STATES),
    )
    parents = {W: (), B: (), U: (W, B)}
    cpts = {
        W: Cpt(Family(W, ()), (), 2, (p_rain, 1.0 - p_rain)),
        U: normalize_utilities(Family(U, (W, B)), (2, 2), utilities, UtilityScale(0.0, 1.0)),
    }
    return InfluenceDiagram(variables, parents, cpts, decision_order=(B,))


def weather_report(p_rain: float = 0.3, accuracy: float = 0.9, cost: float = 0.05) -> InfluenceDiagram:
    """Gather-information decision G, report R on W, then B observing G and R.

    Utilities are the umbrella utilities, less ``cost`` when the report is bought.
    Without gathering the report is uninformative.
    """
    g, w, r, b, u = 0, 1, 2, 3, 4
    variables = (
        Variable(g, "G", Kind.DECISION, ("gather", "skip")),
        Variable(w, "W", Kind.CHANCE, ("w", "not_w")),
        Variable(r, "R", Kind.CHANCE, ("says_rain", "says_dry")),
        Variable(b, "B", Kind.DECISION, ("b", "not_b")),
        Variable(u, "U", Kind.UTILITY, UTILITY_STATES),
    )
    parents = {g: (), w: (), r: (w, g), b: (g, r), u: (w, b, g)}
    report = []
    for ws in range(2):
        for gs in range(2):
            hit = accuracy if gs == 0 else 0.5
            p_says_rain = hit if ws == 0 else 1.0 - hit
            report.extend((p_says_rain, 1.0 - p_says_rain))
    raw = {}
    for ws in range(2):
        for bs in range(2):
            for gs in range(2):
                raw[(ws, bs, gs)] = UMBRELLA_UTILITIES[(ws, bs)] - (cost if gs == 0 else 0.0)
    cpts = {
        w: Cpt(Family(w, ()), (), 2, (p_rain, 1.0 - p_rain)),
        r: Cpt(Family(r, (w, g)), (2, 2), 2, tuple(report)),
        u: normalize_utilities(Family(u, (w, b, g)), (2, 2, 2), raw, UtilityScale(-cost, 1.0)),
    }
    return InfluenceDiagram(variables, parents, cpts, decision_order=(g, b))
