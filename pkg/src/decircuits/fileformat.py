"""Read and write influence diagram files (JSON, UTF-8).

Top-level keys::

    variables       [{"name", "kind", "states"}]   kind: chance | decision | utility
    arcs            [[parent, child], ...]          parent order follows arc order
    cpts            {name: flat table}              canonical layout
    utility         {"node", "scale": {"min", "max"}, "raw": flat array}
    decision_order  [decision names]                optional

``utility`` and a ``cpts`` entry for the utility node are mutually exclusive.
The utility's first state means U = 1; its states default to ``["u", "not_u"]``.
Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .model import (UTILITY_STATES, Cpt, Family, InfluenceDiagram, Kind, UtilityRangeError,
                    UtilityScale, Variable, decode_row, normalize_utilities, row_count)


class DiagramFormatError(ValueError):
    pass


TOP_KEYS = {"variables", "arcs", "cpts", "utility", "decision_order"}
VAR_KEYS = {"name", "kind", "states"}
UTILITY_KEYS = {"node", "scale", "raw"}
SCALE_KEYS = {"min", "max"}


def _reject_unknown(obj: dict, allowed: set, where: str):
    if not isinstance(obj, dict):
        raise DiagramFormatError(f"{where} must be an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise DiagramFormatError(f"unknown key(s) in {where}: {', '.join(extra)}")


def parse_diagram(doc: dict[str, Any]) -> InfluenceDiagram:
    _reject_unknown(doc, TOP_KEYS, "diagram")
    if "variables" not in doc:
        raise DiagramFormatError("diagram needs a 'variables' array")

    variables = []
    ids = {}
    for i, raw in enumerate(doc["variables"]):
        _reject_unknown(raw, VAR_KEYS, f"variable #{i}")
        name = raw.get("name")
        if not isinstance(name, str) or not name:
            raise DiagramFormatError(f"variable #{i} needs a non-empty name")
        if name in ids:
            raise DiagramFormatError(f"duplicate variable name {name!r}")
        try:
            kind = Kind(raw.get("kind", "chance"))
        except ValueError:
            raise DiagramFormatError(f"variable {name!r} has unknown kind {raw.get('kind')!r}") from None
        states = raw.get("states", list(UTILITY_STATES) if kind is Kind.UTILITY else None)
        if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
            raise DiagramFormatError(f"variable {name!r} needs a list of state labels")
        ids[name] = i
        variables.append(Variable(i, name, kind, tuple(states)))

    parents: dict[int, list[int]] = {v.id: [] for v in variables}
    for arc in doc.get("arcs", []):
        if not (isinstance(arc, list) and len(arc) == 2):
            raise DiagramFormatError(f"arc {arc!r} must be a [parent, child] pair")
        for end in arc:
            if end not in ids:
                raise DiagramFormatError(f"arc {arc!r} names unknown variable {end!r}")
        parents[ids[arc[1]]].append(ids[arc[0]])
    parents_t = {k: tuple(v) for k, v in parents.items()}

    def family_cpt(vid: int, table) -> Cpt:
        pars = parents_t[vid]
        return Cpt(Family(vid, pars), tuple(variables[p].cardinality for p in pars),
                   variables[vid].cardinality, tuple(float(x) for x in table))

    cpts = {}
    raw_cpts = doc.get("cpts", {})
    if not isinstance(raw_cpts, dict):
        raise DiagramFormatError("'cpts' must be an object")
    for name, table in raw_cpts.items():
        if name not in ids:
            raise DiagramFormatError(f"CPT for unknown variable {name!r}")
        if not isinstance(table, list):
            raise DiagramFormatError(f"CPT for {name!r} must be a flat array")
        cpts[ids[name]] = family_cpt(ids[name], table)

    if "utility" in doc:
        block = doc["utility"]
        _reject_unknown(block, UTILITY_KEYS, "utility")
        node = block.get("node")
        if node not in ids or variables[ids[node]].kind is not Kind.UTILITY:
            raise DiagramFormatError(f"utility node {node!r} is not a utility variable")
        vid = ids[node]
        if vid in cpts:
            raise DiagramFormatError(f"{node!r} has both a CPT and a utility block")
        _reject_unknown(block.get("scale", {}), SCALE_KEYS, "utility scale")
        scale_doc = block.get("scale", {"min": 0.0, "max": 1.0})
        try:
            scale = UtilityScale(float(scale_doc["min"]), float(scale_doc["max"]))
        except KeyError as exc:
            raise DiagramFormatError(f"utility scale needs {exc}") from None
        except ValueError as exc:
            raise DiagramFormatError(str(exc)) from None
        pars = parents_t[vid]
        pcards = tuple(variables[p].cardinality for p in pars)
        raw = block.get("raw")
        if not isinstance(raw, list) or len(raw) != row_count(pcards):
            raise DiagramFormatError(
                f"utility raw values must list {row_count(pcards)} numbers, one per parent instantiation")
        mapping = {decode_row(r, pcards): float(x) for r, x in enumerate(raw)}
        try:
            cpts[vid] = normalize_utilities(Family(vid, pars), pcards, mapping, scale)
        except UtilityRangeError as exc:
            raise DiagramFormatError(str(exc)) from None
    else:
        scale = None

    order = doc.get("decision_order")
    if order is not None:
        for name in order:
            if name not in ids:
                raise DiagramFormatError(f"decision_order names unknown variable {name!r}")
        order = tuple(ids[n] for n in order)
    return InfluenceDiagram(tuple(variables), parents_t, cpts, decision_order=order, utility_scale=scale)


def loads(text: str) -> InfluenceDiagram:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DiagramFormatError(f"not valid JSON: {exc}") from None
    return parse_diagram(doc)


def load(path: str | Path) -> InfluenceDiagram:
    return loads(Path(path).read_text(encoding="utf-8"))


def to_document(diagram: InfluenceDiagram) -> dict[str, Any]:
    """Inverse of :func:`parse_diagram`; utilities are written as a plain CPT."""
    doc: dict[str, Any] = {
        "variables": [{"name": v.name, "kind": v.kind.value, "states": list(v.states)}
                      for v in diagram.variables],
        "arcs": [[diagram.var(p).name, v.name]
                 for v in diagram.variables for p in diagram.parents_of(v.id)],
        "cpts": {diagram.var(k).name: list(c.table) for k, c in sorted(diagram.cpts.items())},
    }
    if diagram.decision_order is not None:
        doc["decision_order"] = [diagram.var(d).name for d in diagram.decision_order]
    return doc


def dumps(diagram: InfluenceDiagram) -> str:
    return json.dumps(to_document(diagram), indent=2) + "\n"
