"""Finite derivation trees and rule checkers for the cutfree sequent calculi.

A derivation is an immutable tree of sequent nodes, each labelled with the
rule that produced it and an ordinal label that strictly dominates the labels
of its premises.  Four systems are supported (Seq00, Seq0, Seq10, Seq1), each
optionally extended with the cut rule and with prefixed variants of the
program-connective rules.

Besides checking, this module builds extended axioms F, ~F, Gamma by recursion
on plain complexity, applies the admissible transformations (weakening,
contraction, rule inversions, iterated generalization), and performs
p-inversion of Seq00 derivations.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .formula import (
    Alt,
    Atom,
    Box,
    Comp,
    Dia,
    Lit,
    Or,
    And,
    Program,
    SeqFormula,
    Sequent,
    ShapeError,
    Star,
    from_json,
    render,
    render_sequent,
    seq_negate,
    to_json,
)
from .ordinal import ONE, ZERO, Ord, compare, ord_sum, parse_ordinal, render_ordinal

RULES = (
    "Ax",
    "Or",
    "And",
    "DiaUnion",
    "BoxUnion",
    "DiaComp",
    "BoxComp",
    "DiaStar",
    "Gen",
    "Cut",
    "Weak",
)

SYSTEMS = ("Seq00", "Seq0", "Seq10", "Seq1")

# Rules available per system, beyond the shared core (Ax, Or, And, Gen).
_PROGRAM_RULES = ("DiaUnion", "BoxUnion", "DiaComp", "BoxComp")


@dataclass(frozen=True)
class Derivation:
    """One node of a finite derivation tree.

    ``principal`` holds positions (into ``sequent``) of the formulas the rule
    acts on.  ``prefix_len`` is the length of the modal prefix for the
    prefixed program rules and for DiaStar, ``m`` the unfolding count of
    DiaStar, and ``cut_formula`` the formula removed by a Cut.
    """

    sequent: Sequent
    rule: str
    children: tuple["Derivation", ...] = ()
    principal: tuple[int, ...] = ()
    ord_label: Ord = ZERO
    prefix_len: int = 0
    m: int = 0
    cut_formula: SeqFormula | None = None

    def height(self) -> Ord:
        return self.ord_label

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


@dataclass(frozen=True)
class SystemSpec:
    name: str
    cut_allowed: bool = False
    upgraded: bool = False

    def __post_init__(self) -> None:
        if self.name not in SYSTEMS:
            raise ValueError(f"unknown system {self.name!r}")

    @property
    def atomic_programs(self) -> bool:
        return self.name in ("Seq00", "Seq10")

    @property
    def has_program_rules(self) -> bool:
        return self.name in ("Seq0", "Seq1")

    @property
    def has_star_rule(self) -> bool:
        return self.name in ("Seq10", "Seq1")


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    node: Derivation | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def _ms(seq: Sequent) -> Counter:
    return Counter(seq)


def _without(seq: Sequent, positions: tuple[int, ...]) -> tuple[SeqFormula, ...]:
    drop = set(positions)
    return tuple(f for i, f in enumerate(seq) if i not in drop)


def _remove(seq: Sequent, values: tuple[SeqFormula, ...]) -> tuple[SeqFormula, ...]:
    need = Counter(values)
    out = []
    for f in seq:
        if need.get(f, 0) > 0:
            need[f] -= 1
        else:
            out.append(f)
    if +need:
        raise ShapeError("sequent lacks an expected formula")
    return tuple(out)


def _find_pair(seq: Sequent) -> tuple[int, int] | None:
    """Positions of a complementary literal pair, if any."""
    pos: dict[tuple[str, bool], int] = {}
    for i, f in enumerate(seq):
        if isinstance(f, Lit):
            if (f.name, not f.neg) in pos:
                return pos[(f.name, not f.neg)], i
            pos.setdefault((f.name, f.neg), i)
    return None


def _splice(node: Derivation, v: SeqFormula,
            pieces: tuple[SeqFormula, ...]) -> tuple[Sequent, tuple[int, ...]]:
    """Replace one non-principal copy of ``v`` by ``pieces``, shifting the
    recorded principal positions along."""
    protected = set(node.principal)
    idx = None
    for i in range(len(node.sequent) - 1, -1, -1):
        if node.sequent[i] == v and i not in protected:
            idx = i
            break
    if idx is None:
        raise ShapeError("no free copy of the target formula")
    seq = node.sequent[:idx] + tuple(pieces) + node.sequent[idx + 1:]
    delta = len(pieces) - 1
    principal = tuple(j if j < idx else j + delta for j in node.principal)
    return seq, principal


# ---------------------------------------------------------------------------
# modal chains


def split_chain(f: SeqFormula, k: int) -> tuple[tuple[tuple[type, Program], ...], SeqFormula]:
    """Split off the first ``k`` modalities of ``f`` as (constructor, program)
    pairs, returning them with the remaining formula."""
    mods: list[tuple[type, Program]] = []
    cur = f
    for _ in range(k):
        if isinstance(cur, Dia):
            mods.append((Dia, cur.prog))
            cur = cur.body
        elif isinstance(cur, Box):
            mods.append((Box, cur.prog))
            cur = cur.body
        else:
            raise ShapeError(f"modal chain of {render(f)} is shorter than {k}")
    return tuple(mods), cur


def join_chain(mods: tuple[tuple[type, Program], ...], rest: SeqFormula) -> SeqFormula:
    for ctor, prog in reversed(mods):
        rest = ctor(prog, rest)
    return rest


def _dia_prefix(f: SeqFormula, k: int) -> tuple[tuple[Program, ...], SeqFormula]:
    mods, rest = split_chain(f, k)
    if any(ctor is not Dia for ctor, _ in mods):
        raise ShapeError("prefix is not a diamond chain")
    return tuple(p for _, p in mods), rest


def _box_prefix(f: SeqFormula, k: int) -> tuple[tuple[Program, ...], SeqFormula]:
    mods, rest = split_chain(f, k)
    if any(ctor is not Box for ctor, _ in mods):
        raise ShapeError("prefix is not a box chain")
    return tuple(p for _, p in mods), rest


def _wrap_dia(progs: tuple[Program, ...], rest: SeqFormula) -> SeqFormula:
    return join_chain(tuple((Dia, p) for p in progs), rest)


def _wrap_box(progs: tuple[Program, ...], rest: SeqFormula) -> SeqFormula:
    return join_chain(tuple((Box, p) for p in progs), rest)


def _iter_dia(prog: Program, n: int, rest: SeqFormula) -> SeqFormula:
    for _ in range(n):
        rest = Dia(prog, rest)
    return rest


# ---------------------------------------------------------------------------
# node builders
#
# Builders construct well-formed nodes and compute ordinal labels.  A fresh
# label is one more than the largest child label, which keeps natural-number
# labels on trees built from scratch; rebuilding code may pass an explicit
# label to preserve heights, and the label is raised as little as needed to
# stay strictly above the children.


def _bump(children: tuple[Derivation, ...]) -> Ord:
    if not children:
        return ZERO
    top = children[0].ord_label
    for c in children[1:]:
        if compare(c.ord_label, top) > 0:
            top = c.ord_label
    return ord_sum(top, ONE)


def _label(children: tuple[Derivation, ...], explicit: Ord | None) -> Ord:
    lab = _bump(children) if explicit is None else explicit
    for c in children:
        if compare(c.ord_label, lab) >= 0:
            lab = ord_sum(c.ord_label, ONE)
    return lab


def ax_leaf(sequent: Sequent, ord_label: Ord | None = None) -> Derivation:
    pair = _find_pair(sequent)
    if pair is None:
        raise ShapeError(f"no complementary literal pair in {render_sequent(sequent)}")
    return Derivation(tuple(sequent), "Ax", (), pair, ZERO if ord_label is None else ord_label)


def or_intro(child: Derivation, a: SeqFormula, b: SeqFormula,
             ord_label: Ord | None = None) -> Derivation:
    seq = (Or(a, b),) + _remove(child.sequent, (a, b))
    return Derivation(seq, "Or", (child,), (0,), _label((child,), ord_label))


def and_intro(left: Derivation, right: Derivation, a: SeqFormula, b: SeqFormula,
              ord_label: Ord | None = None) -> Derivation:
    ctx = _remove(left.sequent, (a,))
    if _ms(ctx) != _ms(_remove(right.sequent, (b,))):
        raise ShapeError("conjunction premises disagree on the context")
    seq = (And(a, b),) + ctx
    return Derivation(seq, "And", (left, right), (0,), _label((left, right), ord_label))


def gen_intro(child: Derivation, program: Program, chis: tuple[int, ...],
              context: Sequent = (), ord_label: Ord | None = None) -> Derivation:
    if len(chis) != len(child.sequent) or not chis:
        raise ShapeError("one polarity per premise formula is required")
    if sum(chis) != 1:
        raise ShapeError("exactly one box is required among the principals")
    principals = tuple(
        (Box(program, f) if chi else Dia(program, f))
        for f, chi in zip(child.sequent, chis)
    )
    seq = principals + tuple(context)
    return Derivation(seq, "Gen", (child,), tuple(range(len(principals))),
                      _label((child,), ord_label))


def dia_union_intro(child: Derivation, prefix: tuple[Program, ...], p: Program, r: Program,
                    a: SeqFormula, ord_label: Ord | None = None) -> Derivation:
    left = _wrap_dia(prefix, Dia(p, a))
    right = _wrap_dia(prefix, Dia(r, a))
    fused = _wrap_dia(prefix, Dia(Alt(p, r), a))
    seq = (fused,) + _remove(child.sequent, (left, right))
    return Derivation(seq, "DiaUnion", (child,), (0,), _label((child,), ord_label),
                      prefix_len=len(prefix))


def box_union_intro(left_child: Derivation, right_child: Derivation,
                    prefix: tuple[Program, ...], p: Program, r: Program, a: SeqFormula,
                    ord_label: Ord | None = None) -> Derivation:
    lf = _wrap_box(prefix, Box(p, a))
    rf = _wrap_box(prefix, Box(r, a))
    ctx = _remove(left_child.sequent, (lf,))
    if _ms(ctx) != _ms(_remove(right_child.sequent, (rf,))):
        raise ShapeError("box-union premises disagree on the context")
    fused = _wrap_box(prefix, Box(Alt(p, r), a))
    seq = (fused,) + ctx
    return Derivation(seq, "BoxUnion", (left_child, right_child), (0,),
                      _label((left_child, right_child), ord_label), prefix_len=len(prefix))


def dia_comp_intro(child: Derivation, prefix: tuple[Program, ...], p: Program, r: Program,
                   a: SeqFormula, ord_label: Ord | None = None) -> Derivation:
    split = _wrap_dia(prefix, Dia(p, Dia(r, a)))
    fused = _wrap_dia(prefix, Dia(Comp(p, r), a))
    seq = (fused,) + _remove(child.sequent, (split,))
    return Derivation(seq, "DiaComp", (child,), (0,), _label((child,), ord_label),
                      prefix_len=len(prefix))


def box_comp_intro(child: Derivation, prefix: tuple[Program, ...], p: Program, r: Program,
                   a: SeqFormula, ord_label: Ord | None = None) -> Derivation:
    split = _wrap_box(prefix, Box(p, Box(r, a)))
    fused = _wrap_box(prefix, Box(Comp(p, r), a))
    seq = (fused,) + _remove(child.sequent, (split,))
    return Derivation(seq, "BoxComp", (child,), (0,), _label((child,), ord_label),
                      prefix_len=len(prefix))


def dia_star_intro(child: Derivation, prefix: tuple[Program, ...], p: Program,
                   a: SeqFormula, m: int, ord_label: Ord | None = None) -> Derivation:
    if m < 0:
        raise ShapeError("unfolding count must be nonnegative")
    starred = _wrap_dia(prefix, Dia(Star(p), a))
    unfold = _wrap_dia(prefix, _iter_dia(p, m, a))
    seq = _remove(child.sequent, (unfold,))
    seq = (starred,) + _remove(seq, (starred,))
    return Derivation(seq, "DiaStar", (child,), (0,), _label((child,), ord_label),
                      prefix_len=len(prefix), m=m)


def cut_intro(left: Derivation, right: Derivation, cut_formula: SeqFormula,
              ord_label: Ord | None = None) -> Derivation:
    gamma = _remove(left.sequent, (cut_formula,))
    pi = _remove(right.sequent, (seq_negate(cut_formula),))
    return Derivation(gamma + pi, "Cut", (left, right), (),
                      _label((left, right), ord_label), cut_formula=cut_formula)


def weak_node(child: Derivation, pi: Sequent, ord_label: Ord | None = None) -> Derivation:
    return Derivation(child.sequent + tuple(pi), "Weak", (child,), (),
                      _label((child,), ord_label))


# ---------------------------------------------------------------------------
# checking


def check(system: SystemSpec, deriv: Derivation) -> CheckResult:
    """Verify every node of ``deriv`` against the schemas of ``system``."""
    try:
        _check_node(system, deriv)
    except _Offence as exc:
        return CheckResult(False, exc.node, exc.reason)
    return CheckResult(True)


class _Offence(Exception):
    def __init__(self, node: Derivation, reason: str):
        super().__init__(reason)
        self.node = node
        self.reason = reason


def _fail(node: Derivation, reason: str) -> None:
    raise _Offence(node, reason)


def _principal(node: Derivation, count: int) -> tuple[SeqFormula, ...]:
    if len(node.principal) != count or len(set(node.principal)) != count:
        _fail(node, f"{node.rule} expects {count} distinct principal position(s)")
    try:
        return tuple(node.sequent[i] for i in node.principal)
    except IndexError:
        _fail(node, "principal position out of range")
    raise AssertionError


def _check_node(system: SystemSpec, node: Derivation) -> None:
    for child in node.children:
        if compare(child.ord_label, node.ord_label) >= 0:
            _fail(node, "premise ordinal label is not smaller than the conclusion's")
        _check_node(system, child)
    handler = _CHECKERS.get(node.rule)
    if handler is None:
        _fail(node, f"unknown rule tag {node.rule!r}")
    handler(system, node)


def _arity(node: Derivation, n: int) -> None:
    if len(node.children) != n:
        _fail(node, f"{node.rule} takes {n} premise(s), found {len(node.children)}")
    for child in node.children:
        if not child.sequent:
            _fail(node, "premises must be nonempty")


def _check_ax(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 0)
    if node.principal:
        a, b = _principal(node, 2)
        if not (isinstance(a, Lit) and isinstance(b, Lit) and a.name == b.name
                and a.neg != b.neg):
            _fail(node, "principal formulas are not a complementary literal pair")
    elif _find_pair(node.sequent) is None:
        _fail(node, "no complementary literal pair")


def _check_or(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 1)
    (f,) = _principal(node, 1)
    if not isinstance(f, Or):
        _fail(node, "principal formula is not a disjunction")
    want = _ms(_without(node.sequent, node.principal))
    want.update((f.left, f.right))
    if _ms(node.children[0].sequent) != want:
        _fail(node, "premise does not match the unfolded disjunction")


def _check_and(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 2)
    (f,) = _principal(node, 1)
    if not isinstance(f, And):
        _fail(node, "principal formula is not a conjunction")
    ctx = _ms(_without(node.sequent, node.principal))
    for child, piece in zip(node.children, (f.left, f.right)):
        want = ctx.copy()
        want.update((piece,))
        if _ms(child.sequent) != want:
            _fail(node, "premise does not match its conjunct")


def _head_after_prefix(node: Derivation, f: SeqFormula, boxes: bool):
    take = _box_prefix if boxes else _dia_prefix
    try:
        return take(f, node.prefix_len)
    except ShapeError as exc:
        _fail(node, str(exc))
    raise AssertionError


def _check_prefix_allowed(system: SystemSpec, node: Derivation) -> None:
    if not system.has_program_rules:
        _fail(node, f"{node.rule} is not a rule of {system.name}")
    if node.prefix_len and not system.upgraded:
        _fail(node, "prefixed program rules need the upgraded system")


def _check_dia_union(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 1)
    _check_prefix_allowed(system, node)
    (f,) = _principal(node, 1)
    prefix, head = _head_after_prefix(node, f, boxes=False)
    if not (isinstance(head, Dia) and isinstance(head.prog, Alt)):
        _fail(node, "principal formula is not a diamond over a union")
    want = _ms(_without(node.sequent, node.principal))
    want.update((_wrap_dia(prefix, Dia(head.prog.left, head.body)),
                 _wrap_dia(prefix, Dia(head.prog.right, head.body))))
    if _ms(node.children[0].sequent) != want:
        _fail(node, "premise does not split the union")


def _check_box_union(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 2)
    _check_prefix_allowed(system, node)
    (f,) = _principal(node, 1)
    prefix, head = _head_after_prefix(node, f, boxes=True)
    if not (isinstance(head, Box) and isinstance(head.prog, Alt)):
        _fail(node, "principal formula is not a box over a union")
    ctx = _ms(_without(node.sequent, node.principal))
    pieces = (_wrap_box(prefix, Box(head.prog.left, head.body)),
              _wrap_box(prefix, Box(head.prog.right, head.body)))
    for child, piece in zip(node.children, pieces):
        want = ctx.copy()
        want.update((piece,))
        if _ms(child.sequent) != want:
            _fail(node, "premise does not match its union branch")


def _check_dia_comp(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 1)
    _check_prefix_allowed(system, node)
    (f,) = _principal(node, 1)
    prefix, head = _head_after_prefix(node, f, boxes=False)
    if not (isinstance(head, Dia) and isinstance(head.prog, Comp)):
        _fail(node, "principal formula is not a diamond over a composition")
    want = _ms(_without(node.sequent, node.principal))
    want.update((_wrap_dia(prefix, Dia(head.prog.left, Dia(head.prog.right, head.body))),))
    if _ms(node.children[0].sequent) != want:
        _fail(node, "premise does not unfold the composition")


def _check_box_comp(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 1)
    _check_prefix_allowed(system, node)
    (f,) = _principal(node, 1)
    prefix, head = _head_after_prefix(node, f, boxes=True)
    if not (isinstance(head, Box) and isinstance(head.prog, Comp)):
        _fail(node, "principal formula is not a box over a composition")
    want = _ms(_without(node.sequent, node.principal))
    want.update((_wrap_box(prefix, Box(head.prog.left, Box(head.prog.right, head.body))),))
    if _ms(node.children[0].sequent) != want:
        _fail(node, "premise does not unfold the composition")


def _check_dia_star(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 1)
    if not system.has_star_rule:
        _fail(node, f"DiaStar is not a rule of {system.name}")
    (f,) = _principal(node, 1)
    if system.name == "Seq10" and node.prefix_len:
        _fail(node, "Seq10 admits no modal prefix on the star rule")
    prefix, head = _head_after_prefix(node, f, boxes=False)
    if not (isinstance(head, Dia) and isinstance(head.prog, Star)):
        _fail(node, "principal formula is not a diamond over a star")
    if system.atomic_programs and not isinstance(head.prog.body, Atom):
        _fail(node, f"{system.name} stars atomic programs only")
    if node.m < 0:
        _fail(node, "negative unfolding count")
    want = _ms(node.sequent)
    want.update((_wrap_dia(prefix, _iter_dia(head.prog.body, node.m, head.body)),))
    if _ms(node.children[0].sequent) != want:
        _fail(node, "premise does not match the star unfolding")


def _check_gen(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 1)
    principals = _principal(node, len(node.principal))
    if not principals:
        _fail(node, "generalization needs at least one principal formula")
    program: Program | None = None
    chis = []
    bodies = []
    for f in principals:
        if isinstance(f, Box):
            chis.append(1)
        elif isinstance(f, Dia):
            chis.append(0)
        else:
            _fail(node, "principal formulas must be modal")
        if program is None:
            program = f.prog
        elif f.prog != program:
            _fail(node, "principal formulas must share one program")
        bodies.append(f.body)
    if sum(chis) != 1:
        _fail(node, "exactly one box is required among the principals")
    if system.atomic_programs and not isinstance(program, Atom):
        _fail(node, f"{system.name} generalizes over atomic programs only")
    if _ms(tuple(bodies)) != _ms(node.children[0].sequent):
        _fail(node, "premise does not list the principal bodies")


def _check_cut(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 2)
    if not system.cut_allowed:
        _fail(node, "cut is not allowed in this system")
    c = node.cut_formula
    if c is None:
        _fail(node, "cut node lacks its cut formula")
    left, right = node.children
    gamma = _ms(left.sequent)
    gamma.subtract((c,))
    pi = _ms(right.sequent)
    pi.subtract((seq_negate(c),))
    if any(v < 0 for v in gamma.values()) or any(v < 0 for v in pi.values()):
        _fail(node, "premises do not carry the cut formula and its negation")
    if gamma + pi != _ms(node.sequent):
        _fail(node, "conclusion is not the sum of the side sequents")


def _check_weak(system: SystemSpec, node: Derivation) -> None:
    _arity(node, 1)
    diff = _ms(node.sequent)
    diff.subtract(node.children[0].sequent)
    if any(v < 0 for v in diff.values()):
        _fail(node, "conclusion does not contain the premise")


_CHECKERS = {
    "Ax": _check_ax,
    "Or": _check_or,
    "And": _check_and,
    "DiaUnion": _check_dia_union,
    "BoxUnion": _check_box_union,
    "DiaComp": _check_dia_comp,
    "BoxComp": _check_box_comp,
    "DiaStar": _check_dia_star,
    "Gen": _check_gen,
    "Cut": _check_cut,
    "Weak": _check_weak,
}


# ---------------------------------------------------------------------------
# JSON


def derivation_to_json(deriv: Derivation) -> dict:
    out = {
        "sequent": [to_json(f) for f in deriv.sequent],
        "rule": deriv.rule,
        "principal": list(deriv.principal),
        "ord": render_ordinal(deriv.ord_label),
        "children": [derivation_to_json(c) for c in deriv.children],
    }
    if deriv.prefix_len:
        out["prefix_len"] = deriv.prefix_len
    if deriv.rule == "DiaStar":
        out["m"] = deriv.m
    if deriv.cut_formula is not None:
        out["cut"] = to_json(deriv.cut_formula)
    return out


def derivation_from_json(data: dict) -> Derivation:
    return Derivation(
        sequent=tuple(from_json(f) for f in data["sequent"]),
        rule=data["rule"],
        children=tuple(derivation_from_json(c) for c in data.get("children", ())),
        principal=tuple(data.get("principal", ())),
        ord_label=parse_ordinal(data["ord"]),
        prefix_len=data.get("prefix_len", 0),
        m=data.get("m", 0),
        cut_formula=from_json(data["cut"]) if "cut" in data else None,
    )


# ---------------------------------------------------------------------------
# extended axioms


def _star_free(f) -> bool:
    if isinstance(f, Star):
        return False
    if isinstance(f, Atom | Lit):
        return True
    if isinstance(f, Dia | Box):
        return _star_free(f.prog) and _star_free(f.body)
    if isinstance(f, Or | And | Comp | Alt):
        return _star_free(f.left) and _star_free(f.right)
    raise TypeError(f"unexpected node {f!r}")


def extended_axiom(f: SeqFormula, context: Sequent = ()) -> Derivation:
    """A cutfree derivation of ``f, ~f, context`` by recursion on plain
    complexity.  Starred programs are rejected: the boxed dual of a starred
    diamond has no finite introduction rule here."""
    if not _star_free(f):
        raise ShapeError("extended axioms do not cover starred programs")
    return _ext_ax(f, tuple(context))


def _ext_ax(f: SeqFormula, ctx: Sequent) -> Derivation:
    if isinstance(f, Lit):
        return ax_leaf((f, seq_negate(f)) + ctx)
    if isinstance(f, Or):
        a, b = f.left, f.right
        left = _ext_ax(a, (b,) + ctx)
        right = _ext_ax(b, (a,) + ctx)
        conj = and_intro(left, right, seq_negate(a), seq_negate(b))
        return or_intro(conj, a, b)
    if isinstance(f, And):
        a, b = f.left, f.right
        left = _ext_ax(a, (seq_negate(b),) + ctx)
        right = _ext_ax(b, (seq_negate(a),) + ctx)
        conj = and_intro(left, right, a, b)
        return or_intro(conj, seq_negate(a), seq_negate(b))
    if isinstance(f, Box):
        # Same tree as for the dual diamond; the endsequent is the same
        # multiset.
        return _ext_ax(Dia(f.prog, seq_negate(f.body)), ctx)
    if isinstance(f, Dia):
        prog, body = f.prog, f.body
        if isinstance(prog, Atom):
            # The recursion returns the pair in construction order, which is
            # not always (body, ~body); align before zipping polarities.
            core = _align_premise(_ext_ax(body, ()), (body, seq_negate(body)))
            return gen_intro(core, prog, (0, 1), ctx)
        if isinstance(prog, Comp):
            p, r = prog.left, prog.right
            inner = _ext_ax(Dia(p, Dia(r, body)), ctx)
            fused = dia_comp_intro(inner, (), p, r, body)
            return box_comp_intro(fused, (), p, r, seq_negate(body))
        if isinstance(prog, Alt):
            p, r = prog.left, prog.right
            left = _ext_ax(Dia(p, body), (Dia(r, body),) + ctx)
            left = dia_union_intro(left, (), p, r, body)
            right = _ext_ax(Dia(r, body), (Dia(p, body),) + ctx)
            right = dia_union_intro(right, (), p, r, body)
            return box_union_intro(left, right, (), p, r, seq_negate(body))
    raise ShapeError(f"no extended axiom for {render(f)}")


# ---------------------------------------------------------------------------
# admissible transformations

TRANSFORM_KINDS = (
    "W",
    "C",
    "OrInv",
    "AndInv1",
    "AndInv2",
    "DiaUnionInv",
    "BoxUnionInv1",
    "BoxUnionInv2",
    "DiaCompInv",
    "BoxCompInv",
    "GenVec",
)

_MODAL_INV = {
    "DiaUnionInv": (False, Alt),
    "BoxUnionInv1": (True, Alt),
    "BoxUnionInv2": (True, Alt),
    "DiaCompInv": (False, Comp),
    "BoxCompInv": (True, Comp),
}


def transform(kind: str, deriv: Derivation, **args) -> Derivation:
    """Apply an admissible transformation.

    W takes ``pi`` (the formulas to weaken in), C and the inversions take
    ``target`` (a formula value in the endsequent; the modal inversions also
    accept ``prefix_len``), and GenVec takes ``programs``, ``vectors`` and an
    optional ``context``.
    """
    if kind == "W":
        return weaken(deriv, tuple(args["pi"]))
    if kind == "C":
        return contract(deriv, args["target"])
    if kind == "OrInv":
        return invert_or(deriv, args["target"])
    if kind == "AndInv1":
        return invert_and(deriv, args["target"], 0)
    if kind == "AndInv2":
        return invert_and(deriv, args["target"], 1)
    if kind in _MODAL_INV:
        return invert_modal(kind, deriv, args["target"], args.get("prefix_len", 0))
    if kind == "GenVec":
        return gen_vec(deriv, tuple(args["programs"]),
                       tuple(tuple(v) for v in args["vectors"]),
                       tuple(args.get("context", ())))
    raise ValueError(f"unknown transformation {kind!r}")


def _replace(node: Derivation, sequent: Sequent | None = None,
             children: tuple[Derivation, ...] | None = None,
             principal: tuple[int, ...] | None = None) -> Derivation:
    return Derivation(
        sequent=node.sequent if sequent is None else tuple(sequent),
        rule=node.rule,
        children=node.children if children is None else children,
        principal=node.principal if principal is None else principal,
        ord_label=node.ord_label,
        prefix_len=node.prefix_len,
        m=node.m,
        cut_formula=node.cut_formula,
    )


def _rebuild(node: Derivation, sequent: Sequent, children: tuple[Derivation, ...],
             principal: tuple[int, ...]) -> Derivation:
    return Derivation(
        sequent=tuple(sequent),
        rule=node.rule,
        children=children,
        principal=principal,
        ord_label=_label(children, node.ord_label),
        prefix_len=node.prefix_len,
        m=node.m,
        cut_formula=node.cut_formula,
    )


# --- weakening ---------------------------------------------------------------


def weaken(deriv: Derivation, pi: Sequent) -> Derivation:
    """Height-preserving weakening: ``pi`` joins the endsequent and flows up
    the premises until an arbitrary-context rule absorbs it."""
    if not pi:
        return deriv
    return _weaken(deriv, tuple(pi))


def _weaken(node: Derivation, pi: tuple[SeqFormula, ...]) -> Derivation:
    seq = node.sequent + pi
    rule = node.rule
    if rule in ("Ax", "Gen", "Weak"):
        return _replace(node, sequent=seq)
    if rule == "Cut":
        return _replace(node, sequent=seq,
                        children=(_weaken(node.children[0], pi), node.children[1]))
    return _replace(node, sequent=seq,
                    children=tuple(_weaken(c, pi) for c in node.children))


# --- contraction -------------------------------------------------------------


def contract(deriv: Derivation, target: SeqFormula) -> Derivation:
    """Merge two copies of ``target`` in the endsequent.

    The merge keeps the root label except when a copy is the principal of a
    program-connective rule while its twin is genuinely used elsewhere; there
    an inversion round trip is needed and the label can grow by a finite
    amount.
    """
    if Counter(deriv.sequent)[target] < 2:
        raise ShapeError("contraction needs two copies of the target")
    return _contract(deriv, target)


def _delete_inert(node: Derivation, v: SeqFormula) -> Derivation | None:
    """Drop one copy of ``v`` from every sequent it rides through, provided
    the copy is never principal.  Returns None when it is used somewhere."""
    if v not in node.sequent:
        return node
    if any(node.sequent[i] == v for i in node.principal):
        return None
    if node.rule == "Cut" and v in (node.cut_formula, seq_negate(node.cut_formula)):
        return None
    seq, principal = _splice(node, v, ())
    rule = node.rule
    if rule == "Ax":
        pair = _find_pair(seq)
        if pair is None:
            return None
        return _replace(node, sequent=seq, principal=pair)
    if rule == "Gen":
        return _replace(node, sequent=seq, principal=principal)
    if rule == "Weak":
        child = node.children[0]
        if Counter(node.sequent)[v] > Counter(child.sequent)[v]:
            return _replace(node, sequent=seq, principal=principal)
        sub = _delete_inert(child, v)
        if sub is None:
            return None
        return _replace(node, sequent=seq, children=(sub,), principal=principal)
    if rule == "Cut":
        left, right = node.children
        if Counter(_remove(left.sequent, (node.cut_formula,)))[v] > 0:
            sub = _delete_inert(left, v)
            if sub is None:
                return None
            children = (sub, right)
        else:
            sub = _delete_inert(right, v)
            if sub is None:
                return None
            children = (left, sub)
        return _replace(node, sequent=seq, children=children, principal=principal)
    children = []
    for child in node.children:
        sub = _delete_inert(child, v)
        if sub is None:
            return None
        children.append(sub)
    return _replace(node, sequent=seq, children=tuple(children), principal=principal)


def _contract(node: Derivation, v: SeqFormula) -> Derivation:
    rule = node.rule
    principal_hits = sum(1 for i in node.principal if node.sequent[i] == v)

    if rule == "Ax":
        seq, _ = _splice(node, v, ())
        return ax_leaf(seq, node.ord_label)
    if rule == "Gen":
        if principal_hits >= 2:
            return _contract_gen_principals(node, v)
        seq, principal = _splice(node, v, ())
        return _replace(node, sequent=seq, principal=principal)
    if rule == "Weak":
        child = node.children[0]
        seq, principal = _splice(node, v, ())
        if Counter(node.sequent)[v] > Counter(child.sequent)[v]:
            return _replace(node, sequent=seq, principal=principal)
        return _rebuild(node, seq, (_contract(child, v),), principal)
    if rule == "Cut":
        return _contract_cut(node, v)

    if principal_hits == 0:
        seq, principal = _splice(node, v, ())
        return _rebuild(node, seq, tuple(_contract(c, v) for c in node.children), principal)

    # One copy is principal; its twin rides in the premises.
    if rule == "Or":
        assert isinstance(v, Or)
        child = invert_or(node.children[0], v)
        child = _contract(_contract(child, v.left), v.right)
        return or_intro(child, v.left, v.right, node.ord_label)
    if rule == "And":
        assert isinstance(v, And)
        left = _contract(invert_and(node.children[0], v, 0), v.left)
        right = _contract(invert_and(node.children[1], v, 1), v.right)
        return and_intro(left, right, v.left, v.right, node.ord_label)
    if rule == "DiaStar":
        # The premise keeps the starred principal, so both copies meet there.
        child = _contract(node.children[0], v)
        prefix, head = _dia_prefix(v, node.prefix_len)
        return dia_star_intro(child, prefix, head.prog.body, head.body, node.m,
                              node.ord_label)

    # Program-connective principal.  Shed an unused twin where possible,
    # otherwise invert it and contract the pieces.
    children = []
    usable = True
    for child in node.children:
        if v in child.sequent:
            sub = _delete_inert(child, v)
            if sub is None:
                usable = False
                break
            children.append(sub)
        else:
            children.append(child)
    if usable:
        seq, principal = _splice(node, v, ())
        return _rebuild(node, seq, tuple(children), principal)
    return _contract_via_inversion(node, v)


def _contract_gen_principals(node: Derivation, v: SeqFormula) -> Derivation:
    # Two equal diamond principals: contract their bodies in the premise and
    # drop one principal position.
    child = _contract(node.children[0], v.body)
    keep = list(node.principal)
    for i in node.principal:
        if node.sequent[i] == v:
            keep.remove(i)
            break
    principals = tuple(node.sequent[i] for i in keep)
    chis = tuple(1 if isinstance(f, Box) else 0 for f in principals)
    context = _without(node.sequent, node.principal)
    ordered = _align_premise(child, tuple(f.body for f in principals))
    return gen_intro(ordered, v.prog, chis, context, node.ord_label)


def _contract_cut(node: Derivation, v: SeqFormula) -> Derivation:
    left, right = node.children
    seq, principal = _splice(node, v, ())
    in_left = Counter(_remove(left.sequent, (node.cut_formula,)))[v]
    in_right = Counter(_remove(right.sequent, (seq_negate(node.cut_formula),)))[v]
    if in_left >= 2:
        return _rebuild(node, seq, (_contract(left, v), right), principal)
    if in_right >= 2:
        return _rebuild(node, seq, (left, _contract(right, v)), principal)
    for idx, side in ((0, left), (1, right)):
        slim = _delete_inert(side, v)
        if slim is not None:
            children = (slim, right) if idx == 0 else (left, slim)
            return _rebuild(node, seq, children, principal)
    raise ShapeError("contraction across a cut with both copies in use")


def _contract_via_inversion(node: Derivation, v: SeqFormula) -> Derivation:
    rule = node.rule
    d = node.prefix_len
    if rule == "DiaUnion":
        prefix, head = _dia_prefix(v, d)
        child = invert_modal("DiaUnionInv", node.children[0], v, d)
        child = _contract(child, _wrap_dia(prefix, Dia(head.prog.left, head.body)))
        child = _contract(child, _wrap_dia(prefix, Dia(head.prog.right, head.body)))
        return dia_union_intro(child, prefix, head.prog.left, head.prog.right,
                               head.body, node.ord_label)
    if rule == "BoxUnion":
        prefix, head = _box_prefix(v, d)
        pieces = (_wrap_box(prefix, Box(head.prog.left, head.body)),
                  _wrap_box(prefix, Box(head.prog.right, head.body)))
        kids = []
        for idx, kind in enumerate(("BoxUnionInv1", "BoxUnionInv2")):
            sub = invert_modal(kind, node.children[idx], v, d)
            kids.append(_contract(sub, pieces[idx]))
        return box_union_intro(kids[0], kids[1], prefix, head.prog.left,
                               head.prog.right, head.body, node.ord_label)
    if rule == "DiaComp":
        prefix, head = _dia_prefix(v, d)
        child = invert_modal("DiaCompInv", node.children[0], v, d)
        child = _contract(child, _wrap_dia(prefix, Dia(head.prog.left,
                                                       Dia(head.prog.right, head.body))))
        return dia_comp_intro(child, prefix, head.prog.left, head.prog.right,
                              head.body, node.ord_label)
    if rule == "BoxComp":
        prefix, head = _box_prefix(v, d)
        child = invert_modal("BoxCompInv", node.children[0], v, d)
        child = _contract(child, _wrap_box(prefix, Box(head.prog.left,
                                                       Box(head.prog.right, head.body))))
        return box_comp_intro(child, prefix, head.prog.left, head.prog.right,
                              head.body, node.ord_label)
    raise ShapeError(f"cannot contract through {rule}")


# --- boolean inversions ------------------------------------------------------


def invert_or(deriv: Derivation, target: SeqFormula) -> Derivation:
    if not isinstance(target, Or):
        raise ShapeError("target of the disjunction inversion must be a disjunction")
    return _inv_bool(deriv, target, (target.left, target.right), Or, None)


def invert_and(deriv: Derivation, target: SeqFormula, side: int) -> Derivation:
    if not isinstance(target, And):
        raise ShapeError("target of the conjunction inversion must be a conjunction")
    piece = (target.left, target.right)[side]
    return _inv_bool(deriv, target, (piece,), And, side)


def _inv_bool(node: Derivation, v: SeqFormula, pieces: tuple[SeqFormula, ...],
              ctor: type, side: int | None) -> Derivation:
    """Replace one copy of ``v`` by ``pieces`` without raising the label."""
    if v not in node.sequent:
        raise ShapeError("target formula is absent from the endsequent")
    rule = node.rule
    is_principal = any(node.sequent[i] == v for i in node.principal)

    if rule == "Or" and is_principal and ctor is Or:
        return node.children[0]
    if rule == "And" and is_principal and ctor is And:
        return node.children[side]

    seq, principal = _splice(node, v, pieces)
    if rule == "Ax":
        return ax_leaf(seq, node.ord_label)
    if rule == "Gen":
        # A boolean target is never modal, so the copy sits in the arbitrary
        # context.
        return _replace(node, sequent=seq, principal=principal)
    if rule == "Weak":
        child = node.children[0]
        if Counter(node.sequent)[v] > Counter(child.sequent)[v]:
            return _replace(node, sequent=seq, principal=principal)
        return _rebuild(node, seq, (_inv_bool(child, v, pieces, ctor, side),), principal)
    if rule == "Cut":
        if v in (node.cut_formula, seq_negate(node.cut_formula)):
            raise ShapeError("inversion through a cut on the target formula")
        left, right = node.children
        if Counter(_remove(left.sequent, (node.cut_formula,)))[v] > 0:
            return _rebuild(node, seq, (_inv_bool(left, v, pieces, ctor, side), right),
                            principal)
        return _rebuild(node, seq, (left, _inv_bool(right, v, pieces, ctor, side)),
                        principal)
    kids = tuple(_inv_bool(c, v, pieces, ctor, side) for c in node.children)
    return _rebuild(node, seq, kids, principal)


# --- modal inversions --------------------------------------------------------


def _inv_pieces(kind: str, v: SeqFormula, d: int) -> tuple[SeqFormula, ...]:
    boxes, conn = _MODAL_INV[kind]
    take = _box_prefix if boxes else _dia_prefix
    prefix, head = take(v, d)
    wrap = _wrap_box if boxes else _wrap_dia
    mod = Box if boxes else Dia
    if not isinstance(head, mod) or not isinstance(head.prog, conn):
        raise ShapeError("target does not match the inversion shape")
    p, r = head.prog.left, head.prog.right
    if kind == "DiaUnionInv":
        return (wrap(prefix, Dia(p, head.body)), wrap(prefix, Dia(r, head.body)))
    if kind == "BoxUnionInv1":
        return (wrap(prefix, Box(p, head.body)),)
    if kind == "BoxUnionInv2":
        return (wrap(prefix, Box(r, head.body)),)
    if kind == "DiaCompInv":
        return (wrap(prefix, Dia(p, Dia(r, head.body))),)
    return (wrap(prefix, Box(p, Box(r, head.body))),)


def invert_modal(kind: str, deriv: Derivation, target: SeqFormula,
                 prefix_len: int = 0) -> Derivation:
    """Undo one program-connective introduction inside ``target`` at chain
    position ``prefix_len``.  The label can grow by a finite amount."""
    _inv_pieces(kind, target, prefix_len)  # validate the target shape early
    return _inv_modal_rec(kind, deriv, target, prefix_len)


def _inv_modal_rec(kind: str, node: Derivation, v: SeqFormula, d: int) -> Derivation:
    if v not in node.sequent:
        raise ShapeError("target formula is absent from the endsequent")
    rule = node.rule
    pieces = _inv_pieces(kind, v, d)
    is_principal = any(node.sequent[i] == v for i in node.principal)

    if not is_principal:
        seq, principal = _splice(node, v, pieces)
        if rule == "Ax":
            return ax_leaf(seq, node.ord_label)
        if rule == "Gen":
            return _replace(node, sequent=seq, principal=principal)
        if rule == "Weak":
            child = node.children[0]
            if Counter(node.sequent)[v] > Counter(child.sequent)[v]:
                return _replace(node, sequent=seq, principal=principal)
            return _rebuild(node, seq, (_inv_modal_rec(kind, child, v, d),), principal)
        if rule == "Cut":
            if v in (node.cut_formula, seq_negate(node.cut_formula)):
                raise ShapeError("inversion through a cut on the target formula")
            left, right = node.children
            if Counter(_remove(left.sequent, (node.cut_formula,)))[v] > 0:
                return _rebuild(node, seq, (_inv_modal_rec(kind, left, v, d), right),
                                principal)
            return _rebuild(node, seq, (left, _inv_modal_rec(kind, right, v, d)),
                            principal)
        kids = tuple(_inv_modal_rec(kind, c, v, d) for c in node.children)
        return _rebuild(node, seq, kids, principal)

    if rule == "Gen":
        return _inv_gen_principal(kind, node, v, d)
    if rule in ("DiaUnion", "DiaComp", "BoxComp"):
        if node.prefix_len == d and _same_shape(rule, kind):
            return node.children[0]
        return _inv_through_unary(kind, node, v, d)
    if rule == "BoxUnion":
        if node.prefix_len == d and kind in ("BoxUnionInv1", "BoxUnionInv2"):
            return node.children[0 if kind == "BoxUnionInv1" else 1]
        return _inv_through_boxunion(kind, node, v, d)
    if rule == "DiaStar":
        return _inv_through_star(kind, node, v, d)
    raise ShapeError(f"cannot invert a principal formula of {rule}")


def _same_shape(rule: str, kind: str) -> bool:
    return (rule, kind) in (
        ("DiaUnion", "DiaUnionInv"),
        ("DiaComp", "DiaCompInv"),
        ("BoxComp", "BoxCompInv"),
    )


def _inv_through_unary(kind: str, node: Derivation, v: SeqFormula, d: int) -> Derivation:
    """The target is principal, but the inversion aims at a different chain
    position: invert the transported copies in the premise and refuse them
    with the node's own rule."""
    rule = node.rule
    s = node.prefix_len
    if rule == "DiaUnion":
        prefix, head = _dia_prefix(v, s)
        copies = ((_wrap_dia(prefix, Dia(head.prog.left, head.body)), d),
                  (_wrap_dia(prefix, Dia(head.prog.right, head.body)), d))
    elif rule == "DiaComp":
        prefix, head = _dia_prefix(v, s)
        pos = d if d < s else d + 1
        copies = ((_wrap_dia(prefix, Dia(head.prog.left, Dia(head.prog.right, head.body))),
                   pos),)
    else:
        prefix, head = _box_prefix(v, s)
        pos = d if d < s else d + 1
        copies = ((_wrap_box(prefix, Box(head.prog.left, Box(head.prog.right, head.body))),
                   pos),)
    child = node.children[0]
    for copy, pos in copies:
        child = _inv_modal_rec(kind, child, copy, pos)
    for res in _inv_pieces(kind, v, d):
        if rule == "DiaUnion":
            rp, rh = _dia_prefix(res, s)
            child = dia_union_intro(child, rp, rh.prog.left, rh.prog.right, rh.body)
        elif rule == "DiaComp":
            rp, rh = _dia_prefix(res, s)
            child = dia_comp_intro(child, rp, rh.prog.left, rh.prog.right, rh.body)
        else:
            rp, rh = _box_prefix(res, s)
            child = box_comp_intro(child, rp, rh.prog.left, rh.prog.right, rh.body)
    return child


def _inv_through_boxunion(kind: str, node: Derivation, v: SeqFormula, d: int) -> Derivation:
    s = node.prefix_len
    prefix, head = _box_prefix(v, s)
    lc = _wrap_box(prefix, Box(head.prog.left, head.body))
    rc = _wrap_box(prefix, Box(head.prog.right, head.body))
    left = _inv_modal_rec(kind, node.children[0], lc, d)
    right = _inv_modal_rec(kind, node.children[1], rc, d)
    (res,) = _inv_pieces(kind, v, d)
    rp, rh = _box_prefix(res, s)
    return box_union_intro(left, right, rp, rh.prog.left, rh.prog.right, rh.body)


def _inv_through_star(kind: str, node: Derivation, v: SeqFormula, d: int) -> Derivation:
    s = node.prefix_len
    m = node.m
    prefix, head = _dia_prefix(v, s)
    unfold = _wrap_dia(prefix, _iter_dia(head.prog.body, m, head.body))
    upos = d if d < s else d + m - 1
    child = _inv_modal_rec(kind, node.children[0], unfold, upos)
    child = _inv_modal_rec(kind, child, v, d)
    for res in _inv_pieces(kind, v, d):
        rp, rh = _dia_prefix(res, s)
        child = dia_star_intro(child, rp, rh.prog.body, rh.body, m)
    return child


def _inv_gen_principal(kind: str, node: Derivation, v: SeqFormula, d: int) -> Derivation:
    principals = [node.sequent[i] for i in node.principal]
    context = _without(node.sequent, node.principal)
    program = principals[0].prog
    chis = tuple(1 if isinstance(f, Box) else 0 for f in principals)
    bodies = tuple(f.body for f in principals)
    premise = _align_premise(node.children[0], bodies)

    if d > 0:
        # The head of the chain is this node's modality: shorten the prefix
        # and invert inside the premise, then regeneralize.
        idx = next(i for i, f in enumerate(principals) if f == v)
        inner = v.body
        sub = _inv_modal_rec(kind, premise, inner, d - 1)
        inner_pieces = _inv_pieces(kind, inner, d - 1)
        new_chis = list(chis)
        new_chis[idx:idx + 1] = [chis[idx]] * len(inner_pieces)
        ordered = _align_premise(sub, bodies[:idx] + inner_pieces + bodies[idx + 1:])
        return gen_intro(ordered, program, tuple(new_chis), context, node.ord_label)

    boxes, conn = _MODAL_INV[kind]
    p, r = v.prog.left, v.prog.right
    target_idx = next(i for i, f in enumerate(principals) if f == v)
    dia_idx = [i for i, chi in enumerate(chis) if chi == 0]
    box_idx = next(i for i, chi in enumerate(chis) if chi == 1)

    if conn is Alt:
        def branch(side_prog: Program, other_prog: Program) -> Derivation:
            extra = tuple(Dia(other_prog, bodies[i]) for i in dia_idx)
            out = gen_intro(premise, side_prog, chis, extra + context)
            fuse = dia_idx if boxes else [i for i in dia_idx if i != target_idx]
            for i in fuse:
                out = dia_union_intro(out, (), p, r, bodies[i])
            return out

        if boxes:
            return branch(r, p) if kind == "BoxUnionInv2" else branch(p, r)
        left = branch(p, r)
        right = branch(r, p)
        return box_union_intro(left, right, (), p, r, bodies[box_idx])

    # conn is Comp: generalize over the right factor, then the left, and
    # refuse every bystander chain.
    out = gen_intro(premise, r, chis, ())
    out = gen_intro(out, p, chis, context)
    for i in dia_idx:
        if boxes or i != target_idx:
            out = dia_comp_intro(out, (), p, r, bodies[i])
    if not boxes:
        out = box_comp_intro(out, (), p, r, bodies[box_idx])
    return out


def _align_premise(sub: Derivation, wanted: tuple[SeqFormula, ...]) -> Derivation:
    """Reorder a derivation's endsequent tuple.  Sequents are multisets, so
    this is presentation only; principal positions follow the permutation."""
    if _ms(sub.sequent) != _ms(wanted):
        raise ShapeError("premise does not match the expected formulas")
    if sub.sequent == wanted:
        return sub
    old = list(sub.sequent)
    used = [False] * len(old)
    perm: list[int] = []
    for f in wanted:
        for j, g in enumerate(old):
            if not used[j] and f == g:
                used[j] = True
                perm.append(j)
                break
    back = {j: i for i, j in enumerate(perm)}
    return _replace(sub, sequent=wanted,
                    principal=tuple(back[i] for i in sub.principal))


def gen_vec(deriv: Derivation, programs: tuple[Program, ...],
            vectors: tuple[tuple[int, ...], ...], context: Sequent = ()) -> Derivation:
    """Iterated generalization: prefix every premise formula with the modal
    string over ``programs`` selected by its vector.  Exactly one vector must
    pick the box at every program position."""
    k = len(programs)
    n = len(deriv.sequent)
    if k == 0:
        raise ShapeError("at least one program is required")
    if len(vectors) != n or any(len(vec) != k for vec in vectors):
        raise ShapeError("one vector per premise formula, one bit per program")
    for j in range(k):
        if sum(vec[j] for vec in vectors) != 1:
            raise ShapeError("exactly one box is required at every position")
    out = deriv
    for j in range(k - 1, -1, -1):
        chis = tuple(vec[j] for vec in vectors)
        out = gen_intro(out, programs[j], chis, context if j == 0 else ())
    return out


# ---------------------------------------------------------------------------
# p-inversion


@dataclass(frozen=True)
class SideResult:
    derivation: Derivation


@dataclass(frozen=True)
class BoxResult:
    index: int
    derivation: Derivation


def _exposes_program(f: SeqFormula, p: Atom) -> bool:
    """True when the boolean skeleton of ``f`` reaches a p-modality.  A
    p-modality buried under another program's modality stays put, but one
    behind disjunctions or conjunctions surfaces once they unfold."""
    if isinstance(f, Lit):
        return False
    if isinstance(f, Or | And):
        return _exposes_program(f.left, p) or _exposes_program(f.right, p)
    if isinstance(f, Dia | Box):
        return f.prog == p
    raise TypeError(f"unexpected node {f!r}")


def p_invert(deriv: Derivation, p: Atom) -> SideResult | BoxResult:
    """Invert the p-modal block of a cutfree Seq00 derivation.

    For an endsequent [p]A_1, ..., [p]A_j, <p>B_1, ..., <p>B_k, Gamma,
    return a derivation of Gamma or of some A_i, B_1, ..., B_k without
    raising the height label.  No side formula may expose a p-modality
    through its boolean skeleton: a copy of, say, <p>B or ~[p]A hidden
    behind a disjunction can make both candidate conclusions underivable.
    """
    boxes: list[SeqFormula] = []
    dias: list[SeqFormula] = []
    for f in deriv.sequent:
        if isinstance(f, Box) and f.prog == p:
            boxes.append(f.body)
        elif isinstance(f, Dia) and f.prog == p:
            dias.append(f.body)
        elif _exposes_program(f, p):
            raise ShapeError("a side formula exposes the inverted program")
    return _p_inv(deriv, p, tuple(boxes), tuple(dias))


def _p_inv(node: Derivation, p: Atom, all_boxes: tuple[SeqFormula, ...],
           all_dias: tuple[SeqFormula, ...]) -> SideResult | BoxResult:
    rule = node.rule

    def is_block(f: SeqFormula) -> bool:
        return isinstance(f, Dia | Box) and f.prog == p

    gamma = tuple(f for f in node.sequent if not is_block(f))

    if rule == "Ax":
        return SideResult(ax_leaf(gamma, node.ord_label))
    if rule == "Weak":
        sub = _p_inv(node.children[0], p, all_boxes, all_dias)
        if isinstance(sub, BoxResult):
            return sub
        extra = tuple((Counter(gamma) - _ms(sub.derivation.sequent)).elements())
        return SideResult(weaken(sub.derivation, extra))
    if rule == "Gen":
        principals = [node.sequent[i] for i in node.principal]
        program = principals[0].prog
        if program == p:
            # The box principal names the branch; the premise carries the box
            # body plus the principal diamond bodies, and weakening fills in
            # the rest.
            box_body = next(f.body for f in principals if isinstance(f, Box))
            have = _ms(node.children[0].sequent)
            want = Counter((box_body,) + all_dias)
            missing = tuple((want - have).elements())
            return BoxResult(all_boxes.index(box_body),
                             weaken(node.children[0], missing))
        keep = list(gamma)
        for f in principals:
            keep.remove(f)
        ordered = _align_premise(node.children[0],
                                 tuple(f.body for f in principals))
        return SideResult(gen_intro(
            ordered, program,
            tuple(1 if isinstance(f, Box) else 0 for f in principals),
            tuple(keep), node.ord_label))
    if rule == "Or":
        (f,) = (node.sequent[i] for i in node.principal)
        assert isinstance(f, Or)
        sub = _p_inv(node.children[0], p, all_boxes, all_dias)
        if isinstance(sub, BoxResult):
            return sub
        return SideResult(or_intro(sub.derivation, f.left, f.right, node.ord_label))
    if rule == "And":
        (f,) = (node.sequent[i] for i in node.principal)
        assert isinstance(f, And)
        left = _p_inv(node.children[0], p, all_boxes, all_dias)
        if isinstance(left, BoxResult):
            return left
        right = _p_inv(node.children[1], p, all_boxes, all_dias)
        if isinstance(right, BoxResult):
            return right
        return SideResult(and_intro(left.derivation, right.derivation,
                                    f.left, f.right, node.ord_label))
    raise ShapeError(f"p-inversion does not cover {rule}")
