"""Command-line front end over the toolkit pipelines.

One binary, subcommand style.  Exit codes are stable across subcommands:
0 for success or a positive verdict, 1 for a negative verdict, 2 for usage
and shape errors, 3 when a search or size bound was exceeded.  Subcommands
with a verdict accept --json for machine-readable output.  The environment
variable PDLKIT_BOUNDS ("size=4,depth=6,budget=500000,clauses=200000")
overrides default search bounds; explicit flags win over the environment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields

from .atm import AtmSpec, GraphBound, bdne_formula, encode_accepts
from .calculus import (
    BoxResult,
    SystemSpec,
    check,
    derivation_from_json,
    derivation_to_json,
    p_invert,
)
from .cutelim import ReductionStep, deg, eliminate
from .expansion import (
    bcnf_bound,
    build_refutation_tree,
    decide_bcne,
    expand,
    recognize_bcne,
    refutation_to_json,
)
from .formula import (
    Atom,
    parse,
    parse_sequent,
    render,
    render_sequent,
    seq_negate,
    to_json,
)
from .ordinal import ZERO, o_complexity, nat_sum, render_ordinal
from .prover import Proved, SearchStats, eval_circuit, prove
from .qbf import decide_bdne, emit_qbf, export_qdimacs, qbf_size
from .semantics import frame_to_json, sequent_valid_bounded


@dataclass(frozen=True)
class Bounds:
    """Search limits shared by the bounded subcommands."""

    size: int = 3        # countermodel frame size
    depth: int = 4       # countermodel modal depth
    budget: int = 2_000_000
    clauses: int = 100_000

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise ValueError(f"bound {f.name} must be positive")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    options: dict
    bounds: Bounds


def env_bounds(raw: str | None) -> dict:
    """Parse PDLKIT_BOUNDS ("key=value,key=value") into override kwargs."""
    if not raw:
        return {}
    known = {f.name for f in fields(Bounds)}
    out = {}
    for item in raw.split(","):
        key, eq, value = item.strip().partition("=")
        if not eq or key not in known:
            raise ValueError(f"bad PDLKIT_BOUNDS entry {item.strip()!r}")
        out[key] = int(value)
    return out


def _emit(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_derivation(path: str):
    with open(path, encoding="utf-8") as fh:
        return derivation_from_json(json.load(fh))


def _say(payload: dict, human: str, as_json: bool) -> None:
    print(json.dumps(payload) if as_json else human)


# ---------------------------------------------------------------------------
# subcommand handlers, each returning the exit code


def _cmd_parse(opt: dict, bounds: Bounds) -> int:
    seq = parse_sequent(opt["text"])
    _say({"sequent": [to_json(f) for f in seq]}, render_sequent(seq),
         opt["json"])
    return 0


def _cmd_negate(opt: dict, bounds: Bounds) -> int:
    f = seq_negate(parse(opt["text"]))
    _say({"formula": to_json(f)}, render(f), opt["json"])
    return 0


def _cmd_ordinal(opt: dict, bounds: Bounds) -> int:
    seq = parse_sequent(opt["text"])
    total = ZERO
    for f in seq:
        total = nat_sum(total, o_complexity(f))
    _say({"ordinal": render_ordinal(total),
          "parts": [render_ordinal(o_complexity(f)) for f in seq]},
         render_ordinal(total), opt["json"])
    return 0


def _cmd_prove(opt: dict, bounds: Bounds) -> int:
    seq = parse_sequent(opt["text"])
    verdict = prove(seq)
    if opt["emit_trace"]:
        if isinstance(verdict, Proved):
            stats = SearchStats()
            eval_circuit(seq, stats)
            print(f"nodes={stats.nodes} peak_path={stats.peak_path} "
                  f"depth_bound={stats.depth_bound}", file=sys.stderr)
        else:
            print(verdict.trace, file=sys.stderr)
    if isinstance(verdict, Proved):
        if opt["emit_derivation"]:
            _emit(opt["emit_derivation"],
                  json.dumps(derivation_to_json(verdict.derivation)))
        _say({"verdict": "proved",
              "height": render_ordinal(verdict.derivation.ord_label)},
             "proved", opt["json"])
        return 0
    _say({"verdict": "refuted"}, "refuted", opt["json"])
    return 1


def _cmd_check(opt: dict, bounds: Bounds) -> int:
    system = SystemSpec(opt["system"], cut_allowed=opt["cut"],
                        upgraded=not opt["plain"])
    result = check(system, _load_derivation(opt["path"]))
    if result.ok:
        _say({"verdict": "valid"}, "valid", opt["json"])
        return 0
    where = render_sequent(result.node.sequent) if result.node else "?"
    _say({"verdict": "invalid", "reason": result.reason, "node": where},
         f"invalid: {result.reason} (at {where})", opt["json"])
    return 1


def _cmd_invert(opt: dict, bounds: Bounds) -> int:
    result = p_invert(_load_derivation(opt["path"]), Atom(opt["program"]))
    if opt["emit"]:
        _emit(opt["emit"], json.dumps(derivation_to_json(result.derivation)))
    if isinstance(result, BoxResult):
        _say({"kind": "box", "index": result.index,
              "sequent": render_sequent(result.derivation.sequent)},
             f"box {result.index}: {render_sequent(result.derivation.sequent)}",
             opt["json"])
    else:
        _say({"kind": "side",
              "sequent": render_sequent(result.derivation.sequent)},
             f"side: {render_sequent(result.derivation.sequent)}",
             opt["json"])
    return 0


def _cmd_expand(opt: dict, bounds: Bounds) -> int:
    pi = parse_sequent(opt["pi"]) if opt["pi"] else ()
    seq = expand(parse(opt["text"]), pi, opt["k"], Atom(opt["program"]))
    _say({"sequent": [to_json(f) for f in seq]}, render_sequent(seq),
         opt["json"])
    return 0


def _cmd_decide_bcne(opt: dict, bounds: Bounds) -> int:
    s = parse(opt["text"])
    parts = recognize_bcne(s)
    n = bcnf_bound(parts.shape)
    valid = decide_bcne(s)
    if opt["emit_expansion"]:
        _emit(opt["emit_expansion"],
              render_sequent(expand(parts.a, parts.pi, n + 1,
                                    parts.shape.prog)))
    if opt["emit_refutation"]:
        if valid:
            print("no refutation tree: the formula is valid", file=sys.stderr)
        else:
            tree = build_refutation_tree(parts.shape, parts.pi, n + 1)
            _emit(opt["emit_refutation"], json.dumps(refutation_to_json(tree)))
    _say({"verdict": "valid" if valid else "invalid", "n": n, "k": n + 1},
         "valid" if valid else "invalid", opt["json"])
    return 0 if valid else 1


def _cmd_decide_bdne(opt: dict, bounds: Bounds) -> int:
    s = parse(opt["text"])
    valid = decide_bdne(s, via=opt["via"])
    if opt["emit_qdimacs"]:
        q = emit_qbf(s)
        try:
            blob = export_qdimacs(q, max_clauses=bounds.clauses)
        except ValueError as exc:
            print(f"bound exceeded: {exc}", file=sys.stderr)
            return 3
        if opt["emit_qdimacs"] == "-":
            sys.stdout.write(blob.decode("ascii"))
        else:
            with open(opt["emit_qdimacs"], "wb") as fh:
                fh.write(blob)
    _say({"verdict": "valid" if valid else "invalid", "via": opt["via"]},
         "valid" if valid else "invalid", opt["json"])
    return 0 if valid else 1


def _cmd_emit_qbf(opt: dict, bounds: Bounds) -> int:
    q = emit_qbf(parse(opt["text"]))
    try:
        blob = export_qdimacs(q, max_clauses=bounds.clauses)
    except ValueError as exc:
        print(f"bound exceeded: {exc}", file=sys.stderr)
        return 3
    header = blob.split(b"\n", 1)[0].split()
    nvars, nclauses = int(header[2]), int(header[3])
    summary = {"size": qbf_size(q), "vars": nvars, "clauses": nclauses}
    if opt["out"] == "-" and not opt["json"]:
        sys.stdout.write(blob.decode("ascii"))
        return 0
    if opt["out"] != "-":
        with open(opt["out"], "wb") as fh:
            fh.write(blob)
    _say(summary, f"size={summary['size']} vars={nvars} clauses={nclauses}",
         opt["json"])
    return 0


def _cmd_encode_atm(opt: dict, bounds: Bounds) -> int:
    with open(opt["path"], encoding="utf-8") as fh:
        m = AtmSpec.from_json(json.load(fh))
    repair = opt["repair_endmarkers"]
    f = bdne_formula(m, repair) if opt["negate"] else encode_accepts(m, repair)
    _say({"formula": to_json(f), "rendered": render(f)}, render(f),
         opt["json"])
    return 0


def _cmd_countermodel(opt: dict, bounds: Bounds) -> int:
    seq = parse_sequent(opt["text"])
    verdict = sequent_valid_bounded(seq, size_bound=bounds.size,
                                    depth_bound=bounds.depth,
                                    budget=bounds.budget)
    if verdict.frame is not None:
        payload = {"found": True, "world": verdict.world,
                   "frame": frame_to_json(verdict.frame)}
        _say(payload, json.dumps(payload["frame"]) +
             f"\nfalsified at world {verdict.world}", opt["json"])
        return 0
    if verdict.authoritative:
        _say({"found": False, "authoritative": True},
             "valid: no countermodel exists", opt["json"])
        return 1
    _say({"found": False, "authoritative": False},
         "no countermodel within bounds", opt["json"])
    return 3


def _cmd_cutelim(opt: dict, bounds: Bounds) -> int:
    deriv = _load_derivation(opt["path"])
    before = deg(deriv)
    trace: list[ReductionStep] | None = [] if opt["trace"] else None
    out = eliminate(deriv, trace)
    _emit(opt["out"], json.dumps(derivation_to_json(out)))
    if trace:
        for step in trace:
            print(step.describe(), file=sys.stderr)
    if opt["json"]:
        print(json.dumps({
            "deg_before": render_ordinal(before),
            "deg_after": render_ordinal(deg(out)),
            "steps": len(trace) if trace is not None else None,
            "height": render_ordinal(out.ord_label),
        }))
    return 0


# ---------------------------------------------------------------------------
# argument plumbing


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="pdlkit")
    sub = top.add_subparsers(dest="subcommand", required=True)

    def add(name: str, handler, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.set_defaults(handler=handler)
        p.add_argument("--json", action="store_true",
                       help="structured output on stdout")
        return p

    p = add("parse", _cmd_parse, "parse and re-render a sequent")
    p.add_argument("text")

    p = add("negate", _cmd_negate, "negate a formula in negation normal form")
    p.add_argument("text")

    p = add("ordinal", _cmd_ordinal, "ordinal complexity of a sequent")
    p.add_argument("text")

    p = add("prove", _cmd_prove, "decide derivability of a star-free "
                                 "atomic-program sequent")
    p.add_argument("text")
    p.add_argument("--system", choices=["seq00"], default="seq00",
                   help="proof search runs in the base system")
    p.add_argument("--emit-derivation", metavar="PATH",
                   help="write the found derivation as JSON")
    p.add_argument("--emit-trace", action="store_true",
                   help="print search statistics or the falsifying path")

    p = add("check", _cmd_check, "check a derivation file against a system")
    p.add_argument("path")
    p.add_argument("--system", choices=["Seq00", "Seq0", "Seq10", "Seq1"],
                   default="Seq1")
    p.add_argument("--cut", action="store_true", help="allow Cut nodes")
    p.add_argument("--plain", action="store_true",
                   help="forbid the prefixed program rules")

    p = add("invert", _cmd_invert, "invert the p-modal block of a "
                                   "derivation")
    p.add_argument("path")
    p.add_argument("program")
    p.add_argument("--emit", metavar="PATH",
                   help="write the resulting derivation as JSON")

    p = add("expand", _cmd_expand, "iterate a diamond over a formula")
    p.add_argument("text")
    p.add_argument("-k", type=int, required=True, help="expansion depth")
    p.add_argument("--pi", help="side sequent appended to the expansion")
    p.add_argument("--program", default="p")

    p = add("decide-bcne", _cmd_decide_bcne,
            "decide a starred conjunctive disjunction")
    p.add_argument("text")
    p.add_argument("--emit-expansion", metavar="PATH",
                   help="write the deciding expansion sequent")
    p.add_argument("--emit-refutation", metavar="PATH",
                   help="write a refutation tree when invalid")

    p = add("decide-bdne", _cmd_decide_bdne,
            "decide a starred disjunctive disjunction")
    p.add_argument("text")
    p.add_argument("--via", choices=["f", "expansion", "qbf"], default="f")
    p.add_argument("--emit-qdimacs", metavar="PATH",
                   help="write the equivalid QBF in QDIMACS form")

    p = add("emit-qbf", _cmd_emit_qbf, "unroll the decision recursion "
                                       "into a QBF and export it")
    p.add_argument("text")
    p.add_argument("-o", dest="out", metavar="PATH", default="-",
                   help="QDIMACS output file (default stdout)")

    p = add("encode-atm", _cmd_encode_atm,
            "encode an alternating machine's acceptance")
    p.add_argument("path")
    p.add_argument("--negate", action="store_true",
                   help="emit the negated encoding as a starred disjunction")
    p.add_argument("--repair-endmarkers", action="store_true",
                   help="fix the display-level sign slips in the encoding")

    p = add("countermodel", _cmd_countermodel,
            "search for a frame falsifying a sequent")
    p.add_argument("text")
    p.add_argument("--size", type=int, help="frame size bound")
    p.add_argument("--depth", type=int, help="modal depth bound")
    p.add_argument("--budget", type=int, help="node-visit budget")

    p = add("cutelim", _cmd_cutelim, "eliminate cuts from a derivation file")
    p.add_argument("path")
    p.add_argument("-o", dest="out", metavar="PATH", required=True)
    p.add_argument("--trace", action="store_true",
                   help="log each reduction with degrees and heights")

    return top


def make_config(ns: argparse.Namespace) -> RunConfig:
    overrides = env_bounds(os.environ.get("PDLKIT_BOUNDS"))
    for key in ("size", "depth", "budget", "clauses"):
        flag = getattr(ns, key, None)
        if flag is not None:
            overrides[key] = flag
    return RunConfig(ns.subcommand, vars(ns), Bounds(**overrides))


def run(config: RunConfig) -> int:
    return config.options["handler"](config.options, config.bounds)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return run(make_config(ns))
    except GraphBound as exc:
        print(f"bound exceeded: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, TypeError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
