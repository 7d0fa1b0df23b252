"""Command-line front end.

Exit codes: 0 success, 1 invalid input (file, flags or diagram), 2 infeasible
decision or impossible evidence, 3 refused because of a size cap.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import fileformat
from .circuit import Op, export_graph
from .compiler import compile_diagram, treewidth_report
from .errors import (EvidenceImpossibleError, InfeasibleDecisionError, ResponsiveEvidenceError,
                     SizeCapError)
from .evaluator import evaluate, voi
from .model import Evidence, InfluenceDiagram, assert_unresponsive, decode_row, validate
from .normal_form import DEFAULT_STRATEGY_CAP, solve_normal_form
from .oracle import DEFAULT_CAP, oracle_meu
from .ordering import Heuristic, constrained_order
from .strategies import StrategySpace

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_CAP = 0, 1, 2, 3
STRUCTURED = ("structured", "json")


@dataclass
class RunConfig:
    command: str
    diagram: str
    evidence: list[str] | None = None
    heuristic: str = Heuristic.MIN_FILL.value
    forbid: list[str] | None = None
    exclude: list[str] | None = None
    format: str = "human"
    no_timings: bool = False
    cap: int = DEFAULT_STRATEGY_CAP
    oracle_cap: int = DEFAULT_CAP
    observe: str | None = None
    output: str | None = None


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _sci(x: float) -> str:
    mantissa, exp = f"{x:.1e}".split("e")
    return f"{mantissa}e{int(exp)}"


def parse_evidence(diagram: InfluenceDiagram, items) -> Evidence:
    out = {}
    for item in items or ():
        name, sep, state = item.partition("=")
        if not sep:
            raise UsageError(f"evidence {item!r} must look like VAR=state")
        try:
            var = diagram.var(name)
            out[var.id] = var.state_index(state)
        except KeyError as exc:
            raise UsageError(f"evidence {item!r}: {exc.args[0]}") from None
    return Evidence(out)


def _context_rows(diagram: InfluenceDiagram, decision: int, text: str) -> list[int]:
    """Parent rows of ``decision`` matching a partial context 'P=s,Q=t'."""
    pars = diagram.parents_of(decision)
    cards = diagram.cards(pars)
    fixed = {}
    for part in filter(None, text.split(",")):
        name, sep, state = part.partition("=")
        if not sep:
            raise UsageError(f"context entry {part!r} must look like VAR=state")
        try:
            var = diagram.var(name)
            if var.id not in pars:
                raise UsageError(f"{name!r} is not observed before {diagram.var(decision).name!r}")
            fixed[var.id] = var.state_index(state)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    n_rows = 1
    for c in cards:
        n_rows *= c
    rows = []
    for r in range(n_rows):
        inst = dict(zip(pars, decode_row(r, cards)))
        if all(inst[k] == v for k, v in fixed.items()):
            rows.append(r)
    return rows


def _decision_alt(diagram: InfluenceDiagram, text: str):
    name, sep, alt = text.partition(":")
    if not sep:
        raise UsageError(f"{text!r} must look like DECISION:alternative")
    try:
        var = diagram.var(name)
        if var.id not in diagram.decisions:
            raise UsageError(f"{name!r} is not a decision")
        return var.id, var.state_index(alt)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def parse_forbidden(diagram: InfluenceDiagram, items):
    """``DECISION:alternative[@P=s,Q=t]``; a missing or partial context covers every matching row."""
    out = []
    for item in items or ():
        head, _, ctx = item.partition("@")
        d, alt = _decision_alt(diagram, head)
        out.extend((d, r, alt) for r in _context_rows(diagram, d, ctx))
    return out


def parse_excluded(diagram: InfluenceDiagram, items):
    return [_decision_alt(diagram, item) for item in items or ()]


def policy_entries(diagram: InfluenceDiagram, decision: int, table, moot=None) -> list[dict]:
    pars = diagram.parents_of(decision)
    cards = diagram.cards(pars)
    var = diagram.var(decision)
    entries = []
    for row, alt in enumerate(table):
        ctx = {diagram.var(p).name: diagram.var(p).states[s] for p, s in zip(pars, decode_row(row, cards))}
        entry = {"context": ctx, "choice": var.states[alt]}
        if moot is not None:
            entry["moot"] = bool(moot[row])
        entries.append(entry)
    return entries


def _policy_lines(diagram: InfluenceDiagram, policy_doc: dict) -> list[str]:
    lines = []
    for name, entries in policy_doc.items():
        for e in entries:
            ctx = ",".join(f"{k}={v}" for k, v in e["context"].items())
            head = f"{name} | {ctx}" if ctx else name
            tail = "  (moot)" if e.get("moot") else ""
            lines.append(f"  {head} ← {e['choice']}{tail}")
    return lines


def _load(args) -> InfluenceDiagram:
    diagram = fileformat.load(args.diagram)
    problems = validate(diagram)
    if problems:
        raise UsageError("invalid diagram:\n" + "\n".join(f"  {p}" for p in problems))
    return diagram


def _emit(args, doc: dict, human: list[str]):
    if args.format in STRUCTURED:
        print(json.dumps(doc, sort_keys=True))
    else:
        print("\n".join(human))


def cmd_validate(args) -> int:
    diagram = fileformat.load(args.diagram)
    problems = validate(diagram)
    if args.format in STRUCTURED:
        print(json.dumps({"valid": not problems,
                          "violations": [{"code": p.code, "message": p.message} for p in problems]},
                         sort_keys=True))
    else:
        print("valid" if not problems else "\n".join(str(p) for p in problems))
    return EXIT_INVALID if problems else EXIT_OK


def cmd_compile(args) -> int:
    diagram = _load(args)
    order = constrained_order(diagram, args.heuristic)
    circuit = compile_diagram(diagram, order)
    doc = {"nodes": len(circuit), "edges": circuit.size, "width": order.width,
           "max_nodes": circuit.count(Op.MAX),
           "order": [diagram.var(v).name for v in order.sequence]}
    _emit(args, doc, [f"order {' '.join(doc['order'])}",
                      f"nodes {doc['nodes']}, edges {doc['edges']}, width {doc['width']}, "
                      f"max nodes {doc['max_nodes']}"])
    return EXIT_OK


def _raw_scale(diagram, meu):
    scale = diagram.utility_scale
    return None if scale is None else scale.to_raw(meu)


def cmd_solve(args) -> int:
    diagram = _load(args)
    evidence = parse_evidence(diagram, args.evidence)
    forbidden = parse_forbidden(diagram, args.forbid)
    excluded = parse_excluded(diagram, args.exclude)
    t0 = time.perf_counter()
    order = constrained_order(diagram, args.heuristic)
    circuit = compile_diagram(diagram, order)
    t1 = time.perf_counter()
    result = evaluate(circuit, evidence, forbidden, excluded)
    t2 = time.perf_counter()
    policy = {diagram.var(d).name: policy_entries(diagram, d, result.policy.tables[d], result.policy.moot[d])
              for d in circuit.decisions}
    doc = {"meu": result.meu, "p_evidence": result.p_evidence, "policy": policy,
           "circuit": {"nodes": len(circuit), "edges": circuit.size, "width": order.width},
           "timings_ms": {} if args.no_timings else
           {"compile": (t1 - t0) * 1e3, "evaluate": (t2 - t1) * 1e3}}
    human = [f"MEU {_fmt(result.meu)}"]
    raw = _raw_scale(diagram, result.meu)
    if raw is not None:
        human[0] += f"  (utility {_fmt(raw)})"
    human += [f"P(e) {_fmt(result.p_evidence)}", "policy:"] + _policy_lines(diagram, policy)
    human.append(f"circuit: nodes {len(circuit)}, edges {circuit.size}, width {order.width}")
    if not args.no_timings:
        human.append(f"time: compile {(t1 - t0) * 1e3:.3g} ms, evaluate {(t2 - t1) * 1e3:.3g} ms")
    _emit(args, doc, human)
    return EXIT_OK


def cmd_solve_nf(args) -> int:
    diagram = _load(args)
    evidence = parse_evidence(diagram, args.evidence)
    t0 = time.perf_counter()
    res = solve_normal_form(diagram, evidence, args.heuristic, cap=args.cap)
    t1 = time.perf_counter()
    policy = {diagram.var(d).name: policy_entries(diagram, d, res.strategy.choices[d])
              for d in StrategySpace.of(diagram).decisions}
    doc = {"meu": res.meu, "p_evidence": res.p_evidence, "policy": policy,
           "strategy": res.strategy.id, "n_strategies": len(res.strategy_partials),
           "circuit": {"nodes": len(res.circuit), "edges": res.circuit.size},
           "timings_ms": {} if args.no_timings else {"total": (t1 - t0) * 1e3}}
    human = [f"MEU {_fmt(res.meu)}", f"P(e) {_fmt(res.p_evidence)}",
             f"strategy {res.strategy.id} of {doc['n_strategies']}", "policy:"]
    human += _policy_lines(diagram, policy)
    human.append(f"circuit: nodes {len(res.circuit)}, edges {res.circuit.size}")
    _emit(args, doc, human)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    diagram = _load(args)
    evidence = parse_evidence(diagram, args.evidence)
    circuit = compile_diagram(diagram, constrained_order(diagram, args.heuristic))
    dc = evaluate(circuit, evidence)
    nf = solve_normal_form(diagram, evidence, args.heuristic, cap=args.cap)
    orc = oracle_meu(diagram, evidence, cap=args.oracle_cap)
    space = StrategySpace.of(diagram)
    dc_sid = space.encode(dc.policy.tables)
    dev = max(abs(dc.meu - orc.meu), abs(nf.meu - orc.meu), abs(dc.meu - nf.meu))
    ok = dev <= 1e-9 and dc_sid in orc.argmax and nf.strategy.id in orc.argmax
    doc = {"meu": {"decision_circuit": dc.meu, "normal_form": nf.meu, "oracle": orc.meu},
           "strategy": {"decision_circuit": dc_sid, "normal_form": nf.strategy.id,
                        "oracle_argmax": sorted(orc.argmax)},
           "max_deviation": dev, "agree": ok}
    human = [f"decision circuit MEU {dc.meu!r}  strategy {dc_sid}",
             f"normal form      MEU {nf.meu!r}  strategy {nf.strategy.id}",
             f"oracle           MEU {orc.meu!r}  argmax {sorted(orc.argmax)}",
             f"max deviation {_sci(dev)}", "agree" if ok else "DISAGREE"]
    _emit(args, doc, human)
    return EXIT_OK if ok else EXIT_INVALID


def cmd_voi(args) -> int:
    diagram = _load(args)
    evidence = parse_evidence(diagram, args.evidence)
    try:
        var = diagram.var(args.observe)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    circuit = compile_diagram(diagram, constrained_order(diagram, args.heuristic))
    res = voi(circuit, evidence, var.id)
    doc = {"variable": var.name, "voi": res.value, "base_meu": res.base_meu,
           "branches": [{"state": var.states[s], "probability": p, "meu": m}
                        for s, (p, m) in enumerate(zip(res.branch_prob, res.branch_meu))],
           "impossible": [var.states[s] for s in res.impossible]}
    human = [f"VOI({var.name}) {_fmt(res.value)}"]
    scale = diagram.utility_scale
    if scale is not None:
        human[0] += f"  (utility {_fmt(res.value * (scale.u_max - scale.u_min))})"
    human.append(f"MEU without observing {_fmt(res.base_meu)}")
    for b in doc["branches"]:
        meu = "impossible" if b["meu"] is None else _fmt(b["meu"])
        human.append(f"  {var.name}={b['state']}: P {_fmt(b['probability'])}, MEU {meu}")
    _emit(args, doc, human)
    return EXIT_OK


def cmd_dump(args) -> int:
    diagram = _load(args)
    circuit = compile_diagram(diagram, constrained_order(diagram, args.heuristic))
    text = export_graph(circuit)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_treewidth(args) -> int:
    diagram = _load(args)
    rows = treewidth_report(diagram)
    doc = {"rows": [{"heuristic": r.heuristic, "width": r.width, "nodes": r.nodes, "edges": r.edges}
                    for r in rows]}
    human = [f"{'heuristic':<10} {'width':>5} {'nodes':>7} {'edges':>7}"]
    human += [f"{r.heuristic:<10} {r.width:>5} {r.nodes:>7} {r.edges:>7}" for r in rows]
    _emit(args, doc, human)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "compile": cmd_compile,
    "solve": cmd_solve,
    "solve-nf": cmd_solve_nf,
    "oracle-check": cmd_oracle_check,
    "voi": cmd_voi,
    "dump-circuit": cmd_dump,
    "treewidth": cmd_treewidth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="decircuits", description="Compile and solve influence diagrams with decision circuits.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("diagram", help="diagram file (JSON)")
        p.add_argument("--format", choices=("human",) + STRUCTURED, default="human",
                       help="json is an alias of structured")
        p.add_argument("--heuristic", choices=[h.value for h in Heuristic], default=Heuristic.MIN_FILL.value)
        if name in ("solve", "solve-nf", "oracle-check", "voi"):
            p.add_argument("-e", "--evidence", action="append", metavar="VAR=state")
        if name == "solve":
            p.add_argument("--forbid", action="append", metavar="D:alt[@P=s,...]",
                           help="alternative unavailable in the given observation context")
            p.add_argument("--exclude", action="append", metavar="D:alt",
                           help="alternative removed in every context")
        if name in ("solve", "solve-nf"):
            p.add_argument("--no-timings", action="store_true", help="omit wall times (byte-stable output)")
        if name in ("solve-nf", "oracle-check"):
            p.add_argument("--cap", type=int, default=DEFAULT_STRATEGY_CAP, help="maximum number of strategies")
        if name == "oracle-check":
            p.add_argument("--oracle-cap", type=int, default=DEFAULT_CAP,
                           help="maximum strategies x joint entries for enumeration")
        if name == "voi":
            p.add_argument("--observe", required=True, metavar="VAR")
        if name == "dump-circuit":
            p.add_argument("-o", "--output")
    return parser


def run(args: RunConfig) -> int:
    """Execute one command and return its exit code; reports go to stdout, errors to stderr."""
    try:
        if args.command != "validate" and getattr(args, "evidence", None):
            diagram = fileformat.load(args.diagram)
            ev = parse_evidence(diagram, args.evidence)
            bad = assert_unresponsive(diagram, ev)
            if bad:
                names = ", ".join(diagram.var(b).name for b in bad)
                raise UsageError(f"evidence on {names} responds to a decision")
        return COMMANDS[args.command](args)
    except (UsageError, fileformat.DiagramFormatError, ResponsiveEvidenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EvidenceImpossibleError, InfeasibleDecisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SizeCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


def main(argv=None) -> int:
    return run(RunConfig(**vars(build_parser().parse_args(argv))))


if __name__ == "__main__":
    sys.exit(main())
