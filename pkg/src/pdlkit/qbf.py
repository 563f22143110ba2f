"""Starred diamonds over disjunctive row shapes, decided by a boolean recursion.

A formula <p*>A | Z with A in disjunctive shape (recognize_bdnf) is first
converted to an equivalent conjunctive shape R by distributing the
disjunction: every choice function xi picks, for each row, either its side
formula or its modal part, and the picks form one conjunct R_xi.  Validity
of the original expression then reduces to a two-argument boolean function
f over the R_xi families, evaluated at depth n+1 for n the total box count
of the conversion.  Unrolling the same recursion yields a quantified
boolean formula (an AND/OR tree over universally closed matrices), which
can be exported in QDIMACS form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .expansion import expand
from .formula import (
    Atom,
    BcnfRow,
    BcnfShape,
    BdnfShape,
    Dia,
    Or,
    SeqFormula,
    ShapeError,
    Star,
    fold_or,
    is_propositional,
    recognize_bdnf,
    render,
    variables,
)
from .prover import eval_circuit
from .semantics import taut_check


def _or2(a: SeqFormula | None, b: SeqFormula | None) -> SeqFormula | None:
    return fold_or([x for x in (a, b) if x is not None])


@dataclass(frozen=True)
class XiEntry:
    """One choice function xi together with its derived families.

    trivial marks choices that select an absent side formula; the
    corresponding conjunct is vacuously true and never rendered.
    """

    xi: tuple[int, ...]
    b: SeqFormula | None
    c: SeqFormula | None
    j_set: tuple[int, ...]
    d: tuple[SeqFormula, ...]
    trivial: bool


@dataclass(frozen=True)
class ConvertedBcnf:
    prog: Atom
    s: int
    t: int
    entries: tuple[XiEntry, ...]
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def xi_index(self) -> tuple[tuple[int, ...], ...]:
        return tuple(e.xi for e in self.entries)

    @property
    def n(self) -> int:
        """Total box count over all choice functions."""
        return sum(len(e.j_set) for e in self.entries)

    def to_shape(self) -> BcnfShape:
        rows = tuple(BcnfRow(e.b, e.c, e.d)
                     for e in self.entries if not e.trivial)
        return BcnfShape(self.prog, rows)


def bdnf_to_bcnf(shape: BdnfShape) -> ConvertedBcnf:
    """Distribute a disjunctive shape into its conjunctive counterpart."""
    s, t = shape.s, shape.t
    sides = tuple(side for side, _ in shape.box_rows + shape.dia_rows)
    boxes = tuple(body for _, body in shape.box_rows)
    dias = tuple(body for _, body in shape.dia_rows)
    entries = []
    for xi in itertools.product((1, 2), repeat=s + t):
        b_parts = [] if shape.f is None else [shape.f]
        trivial = False
        for k, pick in enumerate(xi, start=1):
            if pick != 1:
                continue
            if sides[k - 1] is None:
                trivial = True
            else:
                b_parts.append(sides[k - 1])
        c = fold_or([dias[k - s - 1] for k, pick in enumerate(xi, start=1)
                     if k > s and pick == 2])
        j_set = tuple(k for k, pick in enumerate(xi, start=1)
                      if k <= s and pick == 2)
        entries.append(XiEntry(xi, fold_or(b_parts), c, j_set,
                               tuple(boxes[j - 1] for j in j_set), trivial))
    return ConvertedBcnf(shape.prog, s, t, tuple(entries))


def f_eval(i: int, x: SeqFormula | None, conv: ConvertedBcnf) -> bool:
    """The depth-indexed boolean recursion over the converted families."""
    if i < 0:
        raise ValueError("depth must be nonnegative")
    key = (i, None if x is None else render(x))
    memo = conv._memo
    if key in memo:
        return memo[key]
    out = True
    for e in conv.entries:
        if e.trivial:
            continue
        bx = _or2(e.b, x)
        if bx is not None and taut_check(bx):
            continue
        if i == 0:
            hit = any(taut_check(_or2(e.c, d)) for d in e.d)
        else:
            hit = any(f_eval(i - 1, _or2(e.c, d), conv) for d in e.d)
        if not hit:
            out = False
            break
    memo[key] = out
    return out


@dataclass(frozen=True)
class BdneParts:
    """A starred-diamond disjunction with a disjunctive-shape head."""

    a: SeqFormula
    shape: BdnfShape
    z: SeqFormula | None

    @property
    def pi(self) -> tuple:
        return () if self.z is None else (self.z,)


def _disjuncts(f: SeqFormula) -> list[SeqFormula]:
    if isinstance(f, Or):
        return _disjuncts(f.left) + _disjuncts(f.right)
    return [f]


def recognize_bdne(s: SeqFormula) -> BdneParts:
    """Split s as <p*>A | Z with A in disjunctive shape, or raise."""
    parts = _disjuncts(s)
    starred = [f for f in parts
               if isinstance(f, Dia) and isinstance(f.prog, Star)]
    if len(starred) != 1:
        raise ShapeError("need exactly one starred diamond disjunct")
    head = starred[0]
    base = head.prog.body
    if not isinstance(base, Atom):
        raise ShapeError(f"starred program in {render(head)} is not atomic")
    shape = recognize_bdnf(head.body)
    if shape.prog != base:
        raise ShapeError(
            f"row program {shape.prog.name} differs from star base {base.name}")
    rest = [f for f in parts if f is not head]
    for f in rest:
        if not is_propositional(f):
            raise ShapeError(f"side disjunct {render(f)} is not propositional")
    return BdneParts(head.body, shape, fold_or(rest))


def decide_bdne(s: SeqFormula, via: str = "f") -> bool:
    """Validity of <p*>A | Z through one of three equivalent routes."""
    parts = recognize_bdne(s)
    conv = bdnf_to_bcnf(parts.shape)
    if via == "f":
        return f_eval(conv.n + 1, parts.z, conv)
    if via == "expansion":
        a = conv.to_shape().to_formula()
        # verdict only; extracting a derivation for these expansions can
        # dwarf the decision itself
        return eval_circuit(expand(a, parts.pi, conv.n + 1, conv.prog))
    if via == "qbf":
        return qbf_eval(emit_qbf(s))
    raise ValueError(f"unknown route {via!r}")


# Quantified boolean output.  The tree mirrors the f recursion: each
# conjunct contributes OR(closed side matrix, per-box subproblems), with
# depth-0 subproblems closing their matrices directly.  Sharing is by
# construction (memoized unrolling), so the result is a DAG.


@dataclass(frozen=True)
class QAll:
    matrix: SeqFormula
    vars: tuple[str, ...]


@dataclass(frozen=True)
class QAnd:
    parts: tuple


@dataclass(frozen=True)
class QOr:
    parts: tuple


QbfFormula = QAll | QAnd | QOr


def _qall(matrix: SeqFormula) -> QAll:
    return QAll(matrix, tuple(sorted(variables(matrix))))


def emit_qbf(s: SeqFormula) -> QbfFormula:
    """Unroll the decision recursion for s into closed-block form."""
    parts = recognize_bdne(s)
    conv = bdnf_to_bcnf(parts.shape)
    memo: dict = {}

    def unroll(i: int, x: SeqFormula | None) -> QbfFormula:
        key = (i, None if x is None else render(x))
        if key in memo:
            return memo[key]
        clauses = []
        for e in conv.entries:
            if e.trivial:
                continue
            alts = []
            bx = _or2(e.b, x)
            if bx is not None:
                alts.append(_qall(bx))
            for d in e.d:
                cd = _or2(e.c, d)
                alts.append(_qall(cd) if i == 0 else unroll(i - 1, cd))
            clauses.append(QOr(tuple(alts)))
        out = QAnd(tuple(clauses))
        memo[key] = out
        return out

    return unroll(conv.n + 1, parts.z)


def qbf_eval(q: QbfFormula) -> bool:
    cache: dict[int, bool] = {}

    def go(node: QbfFormula) -> bool:
        got = cache.get(id(node))
        if got is not None:
            return got
        if isinstance(node, QAll):
            out = taut_check(node.matrix)
        elif isinstance(node, QAnd):
            out = all(go(p) for p in node.parts)
        else:
            out = any(go(p) for p in node.parts)
        cache[id(node)] = out
        return out

    return go(q)


def qbf_size(q: QbfFormula) -> int:
    """Distinct nodes reachable in the emitted structure."""
    seen: set[int] = set()

    def go(node: QbfFormula) -> None:
        if id(node) in seen:
            return
        seen.add(id(node))
        if not isinstance(node, QAll):
            for p in node.parts:
                go(p)

    go(q)
    return len(seen)


class _Cnf:
    """Clause accumulator with gate allocation for the QDIMACS export."""

    def __init__(self, max_clauses: int):
        self.max_clauses = max_clauses
        self.next_var = 1
        self.universals: list[int] = []
        self.gates: list[int] = []
        self.clauses: list[tuple[int, ...]] = []

    def fresh(self, universal: bool) -> int:
        v = self.next_var
        self.next_var += 1
        (self.universals if universal else self.gates).append(v)
        return v

    def add(self, *lits: int) -> None:
        if len(self.clauses) >= self.max_clauses:
            raise ValueError(
                f"clause budget of {self.max_clauses} exceeded")
        self.clauses.append(lits)

    def gate_and(self, parts: list[int]) -> int:
        g = self.fresh(universal=False)
        for p in parts:
            self.add(-g, p)
        self.add(g, *[-p for p in parts])
        return g

    def gate_or(self, parts: list[int]) -> int:
        g = self.fresh(universal=False)
        for p in parts:
            self.add(g, -p)
        self.add(-g, *parts)
        return g


def _encode_matrix(f: SeqFormula, env: dict[str, int], cnf: _Cnf) -> int:
    kind = type(f).__name__
    if kind == "Lit":
        v = env[f.name]
        return -v if f.neg else v
    left = _encode_matrix(f.left, env, cnf)
    right = _encode_matrix(f.right, env, cnf)
    if kind == "And":
        return cnf.gate_and([left, right])
    return cnf.gate_or([left, right])


def export_qdimacs(q: QbfFormula, max_clauses: int = 100_000) -> bytes:
    """Prenexed CNF form: renamed universals first, then the gate variables.

    Universal blocks at different positions are closed, so renaming them
    apart lets one outer universal prefix cover the whole tree; the gate
    variables come after the universal range and sit in a single inner
    existential block.
    """
    cnf = _Cnf(max_clauses)
    leaf_names: dict[int, dict[str, int]] = {}

    def alloc(node: QbfFormula, seen: set[int]) -> None:
        if id(node) in seen:
            return
        seen.add(id(node))
        if isinstance(node, QAll):
            leaf_names[id(node)] = {
                name: cnf.fresh(universal=True) for name in node.vars}
        else:
            for p in node.parts:
                alloc(p, seen)

    alloc(q, set())
    codes: dict[int, int] = {}

    def encode(node: QbfFormula) -> int:
        got = codes.get(id(node))
        if got is not None:
            return got
        if isinstance(node, QAll):
            out = _encode_matrix(node.matrix, leaf_names[id(node)], cnf)
        else:
            parts = [encode(p) for p in node.parts]
            if isinstance(node, QAnd):
                out = cnf.gate_and(parts)
            else:
                out = cnf.gate_or(parts)
        codes[id(node)] = out
        return out

    root = encode(q)
    cnf.add(root)
    lines = [f"p cnf {cnf.next_var - 1} {len(cnf.clauses)}"]
    if cnf.universals:
        lines.append("a " + " ".join(map(str, cnf.universals)) + " 0")
    if cnf.gates:
        lines.append("e " + " ".join(map(str, cnf.gates)) + " 0")
    for clause in cnf.clauses:
        lines.append(" ".join(map(str, clause)) + " 0")
    return ("\n".join(lines) + "\n").encode("ascii")
