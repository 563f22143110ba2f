"""Programs, seq-formulas, sequents, and the normal-form shapes they fit."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass


class ParseError(ValueError):
    """Raised on malformed formula text, carrying the offending position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class ShapeError(ValueError):
    """Raised when a formula does not match a requested normal form."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    """Atomic program variable."""

    name: str

    def __str__(self) -> str:
        return render_program(self)


@dataclass(frozen=True)
class Comp:
    """Sequential composition of two programs."""

    left: Program
    right: Program

    def __str__(self) -> str:
        return render_program(self)


@dataclass(frozen=True)
class Alt:
    """Nondeterministic choice between two programs."""

    left: Program
    right: Program

    def __str__(self) -> str:
        return render_program(self)


@dataclass(frozen=True)
class Star:
    """Finite iteration of a program."""

    body: Program

    def __str__(self) -> str:
        return render_program(self)


Program = Atom | Comp | Alt | Star


@dataclass(frozen=True)
class Lit:
    """Possibly negated formula variable; negation lives only here."""

    name: str
    neg: bool = False

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Or:
    left: SeqFormula
    right: SeqFormula

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class And:
    left: SeqFormula
    right: SeqFormula

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Dia:
    prog: Program
    body: SeqFormula

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Box:
    prog: Program
    body: SeqFormula

    def __str__(self) -> str:
        return render(self)


SeqFormula = Lit | Or | And | Dia | Box

# Sequents are plain tuples of formulas.  Display order is preserved but all
# logical operations treat them as multisets; see seq_equal.
Sequent = tuple


def seq_equal(a: Sequent, b: Sequent) -> bool:
    """Multiset equality of two sequents."""
    return Counter(a) == Counter(b)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_PUNCT = ("|", "&", "~", "(", ")", "[", "]", "<", ">", ";", "+", "*", ",")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
        elif ch in _PUNCT:
            tokens.append((ch, ch, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> str:
        return self.tokens[self.pos][0]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> tuple[str, str, int]:
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def here(self) -> int:
        return self.tokens[self.pos][2]

    # formulas: `|` < `&` < modalities/atoms

    def formula(self) -> SeqFormula:
        f = self.conjunct()
        while self.peek() == "|":
            self.next()
            f = Or(f, self.conjunct())
        return f

    def conjunct(self) -> SeqFormula:
        f = self.unary()
        while self.peek() == "&":
            self.next()
            f = And(f, self.unary())
        return f

    def unary(self) -> SeqFormula:
        kind = self.peek()
        if kind == "~":
            self.next()
            name = self.expect("ident")[1]
            return Lit(name, neg=True)
        if kind == "ident":
            return Lit(self.next()[1])
        if kind == "(":
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        if kind == "[":
            self.next()
            p = self.program()
            self.expect("]")
            return Box(p, self.unary())
        if kind == "<":
            self.next()
            p = self.program()
            self.expect(">")
            return Dia(p, self.unary())
        tok = self.next()
        raise ParseError(f"expected a formula, found {tok[1]!r}", tok[2])

    # programs: `+` < `;` < postfix `*`

    def program(self) -> Program:
        p = self.comp()
        while self.peek() == "+":
            self.next()
            p = Alt(p, self.comp())
        return p

    def comp(self) -> Program:
        p = self.starred()
        while self.peek() == ";":
            self.next()
            p = Comp(p, self.starred())
        return p

    def starred(self) -> Program:
        kind = self.peek()
        if kind == "ident":
            p: Program = Atom(self.next()[1])
        elif kind == "(":
            self.next()
            p = self.program()
            self.expect(")")
        else:
            tok = self.next()
            raise ParseError(f"expected a program, found {tok[1]!r}", tok[2])
        while self.peek() == "*":
            self.next()
            p = Star(p)
        return p


def parse(text: str) -> SeqFormula:
    """Parse a single formula."""
    p = _Parser(text)
    f = p.formula()
    p.expect("end")
    return f


def parse_program(text: str) -> Program:
    p = _Parser(text)
    prog = p.program()
    p.expect("end")
    return prog


def parse_sequent(text: str) -> Sequent:
    """Parse a comma-separated list of formulas; blank text is the empty sequent."""
    if not text.strip():
        return ()
    p = _Parser(text)
    out = [p.formula()]
    while p.peek() == ",":
        p.next()
        out.append(p.formula())
    p.expect("end")
    return tuple(out)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def render_program(p: Program) -> str:
    # precedence: + (1) < ; (2) < * (3)
    def go(p: Program, ctx: int) -> str:
        if isinstance(p, Atom):
            return p.name
        if isinstance(p, Star):
            return go(p.body, 3) + "*"
        if isinstance(p, Comp):
            s = go(p.left, 2) + ";" + go(p.right, 3)
            return f"({s})" if ctx > 2 else s
        s = go(p.left, 1) + "+" + go(p.right, 2)
        return f"({s})" if ctx > 1 else s

    return go(p, 0)


def render(f: SeqFormula) -> str:
    """Text form that parses back to the same AST."""
    # precedence: | (1) < & (2) < literals and modalities (3)
    def go(f: SeqFormula, ctx: int) -> str:
        if isinstance(f, Lit):
            return ("~" if f.neg else "") + f.name
        if isinstance(f, Dia):
            return f"<{render_program(f.prog)}>" + go(f.body, 3)
        if isinstance(f, Box):
            return f"[{render_program(f.prog)}]" + go(f.body, 3)
        if isinstance(f, And):
            s = go(f.left, 2) + " & " + go(f.right, 3)
            return f"({s})" if ctx > 2 else s
        s = go(f.left, 1) + " | " + go(f.right, 2)
        return f"({s})" if ctx > 1 else s

    return go(f, 0)


def render_sequent(seq: Sequent) -> str:
    return ", ".join(render(f) for f in seq)


# ---------------------------------------------------------------------------
# JSON form
# ---------------------------------------------------------------------------

def program_to_json(p: Program) -> dict:
    if isinstance(p, Atom):
        return {"atom": p.name}
    if isinstance(p, Comp):
        return {"comp": [program_to_json(p.left), program_to_json(p.right)]}
    if isinstance(p, Alt):
        return {"alt": [program_to_json(p.left), program_to_json(p.right)]}
    return {"star": program_to_json(p.body)}


def program_from_json(d: dict) -> Program:
    if "atom" in d:
        return Atom(d["atom"])
    if "comp" in d:
        left, right = d["comp"]
        return Comp(program_from_json(left), program_from_json(right))
    if "alt" in d:
        left, right = d["alt"]
        return Alt(program_from_json(left), program_from_json(right))
    if "star" in d:
        return Star(program_from_json(d["star"]))
    raise ValueError(f"not a program object: {d!r}")


def to_json(f: SeqFormula) -> dict:
    if isinstance(f, Lit):
        return {"lit": f.name, "neg": f.neg}
    if isinstance(f, Or):
        return {"or": [to_json(f.left), to_json(f.right)]}
    if isinstance(f, And):
        return {"and": [to_json(f.left), to_json(f.right)]}
    if isinstance(f, Dia):
        return {"dia": program_to_json(f.prog), "body": to_json(f.body)}
    return {"box": program_to_json(f.prog), "body": to_json(f.body)}


def from_json(d: dict) -> SeqFormula:
    if "lit" in d:
        return Lit(d["lit"], bool(d.get("neg", False)))
    if "or" in d:
        left, right = d["or"]
        return Or(from_json(left), from_json(right))
    if "and" in d:
        left, right = d["and"]
        return And(from_json(left), from_json(right))
    if "dia" in d:
        return Dia(program_from_json(d["dia"]), from_json(d["body"]))
    if "box" in d:
        return Box(program_from_json(d["box"]), from_json(d["body"]))
    raise ValueError(f"not a formula object: {d!r}")


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------

def seq_negate(f: SeqFormula) -> SeqFormula:
    """Negation normal-form dual; an involution."""
    if isinstance(f, Lit):
        return Lit(f.name, not f.neg)
    if isinstance(f, Or):
        return And(seq_negate(f.left), seq_negate(f.right))
    if isinstance(f, And):
        return Or(seq_negate(f.left), seq_negate(f.right))
    if isinstance(f, Dia):
        return Box(f.prog, seq_negate(f.body))
    return Dia(f.prog, seq_negate(f.body))


def plain_complexity(x: SeqFormula | Program) -> int:
    """Occurrences of literals and of the connectives |, &, +, ; and *."""
    if isinstance(x, Lit):
        return 1
    if isinstance(x, Atom):
        return 0
    if isinstance(x, (Or, And)):
        return 1 + plain_complexity(x.left) + plain_complexity(x.right)
    if isinstance(x, (Comp, Alt)):
        return 1 + plain_complexity(x.left) + plain_complexity(x.right)
    if isinstance(x, Star):
        return 1 + plain_complexity(x.body)
    # modal brackets themselves do not count
    return plain_complexity(x.prog) + plain_complexity(x.body)


def variables(f: SeqFormula) -> set[str]:
    """Formula variables occurring in f."""
    if isinstance(f, Lit):
        return {f.name}
    if isinstance(f, (Or, And)):
        return variables(f.left) | variables(f.right)
    return variables(f.body)


def program_atoms(x: SeqFormula | Program) -> set[str]:
    """Atomic program names occurring anywhere in x."""
    if isinstance(x, Lit):
        return set()
    if isinstance(x, (Or, And)):
        return program_atoms(x.left) | program_atoms(x.right)
    if isinstance(x, (Dia, Box)):
        return program_atoms(x.prog) | program_atoms(x.body)
    if isinstance(x, Atom):
        return {x.name}
    if isinstance(x, Star):
        return program_atoms(x.body)
    return program_atoms(x.left) | program_atoms(x.right)


def is_propositional(f: SeqFormula) -> bool:
    if isinstance(f, Lit):
        return True
    if isinstance(f, (Or, And)):
        return is_propositional(f.left) and is_propositional(f.right)
    return False


def _program_starfree(p: Program) -> bool:
    if isinstance(p, Atom):
        return True
    if isinstance(p, Star):
        return False
    return _program_starfree(p.left) and _program_starfree(p.right)


def classify_fragment(f: SeqFormula) -> set[str]:
    """Cumulative fragment tags among L_empty, L_00, L_0, FOR_10, FOR_1."""
    no_modal = True
    star_free = True
    atoms_only = True
    iter_atomic = True   # every program is an atom, or an atom starred under <>
    box_star_free = True

    def walk(f: SeqFormula) -> None:
        nonlocal no_modal, star_free, atoms_only, iter_atomic, box_star_free
        if isinstance(f, Lit):
            return
        if isinstance(f, (Or, And)):
            walk(f.left)
            walk(f.right)
            return
        no_modal = False
        p = f.prog
        if not _program_starfree(p):
            star_free = False
        if not isinstance(p, Atom):
            atoms_only = False
        if isinstance(f, Box):
            if not _program_starfree(p):
                box_star_free = False
            if not isinstance(p, Atom):
                iter_atomic = False
        else:
            ok = isinstance(p, Atom) or (
                isinstance(p, Star) and isinstance(p.body, Atom))
            if not ok:
                iter_atomic = False
        walk(f.body)

    walk(f)
    tags: set[str] = set()
    if no_modal:
        tags.add("L_empty")
    if star_free and atoms_only:
        tags.add("L_00")
    if star_free:
        tags.add("L_0")
    if iter_atomic and box_star_free:
        tags.add("FOR_10")
    if box_star_free:
        tags.add("FOR_1")
    return tags


def interpret_into_L00(f: SeqFormula) -> SeqFormula:
    """Rewrite composite-program modalities away; input must be star-free."""
    if isinstance(f, Lit):
        return f
    if isinstance(f, Or):
        return Or(interpret_into_L00(f.left), interpret_into_L00(f.right))
    if isinstance(f, And):
        return And(interpret_into_L00(f.left), interpret_into_L00(f.right))

    body = interpret_into_L00(f.body)
    dia = isinstance(f, Dia)

    def unfold(p: Program, inner: SeqFormula) -> SeqFormula:
        if isinstance(p, Atom):
            return Dia(p, inner) if dia else Box(p, inner)
        if isinstance(p, Comp):
            return unfold(p.left, unfold(p.right, inner))
        if isinstance(p, Alt):
            left = unfold(p.left, inner)
            right = unfold(p.right, inner)
            return Or(left, right) if dia else And(left, right)
        raise ValueError(f"cannot rewrite starred program {render_program(p)}")

    return unfold(f.prog, body)


# ---------------------------------------------------------------------------
# Normal-form shapes
# ---------------------------------------------------------------------------

def fold_or(parts: list[SeqFormula]) -> SeqFormula | None:
    """Left-associated disjunction; empty list collapses to absence."""
    out: SeqFormula | None = None
    for f in parts:
        out = f if out is None else Or(out, f)
    return out


def fold_and(parts: list[SeqFormula]) -> SeqFormula | None:
    out: SeqFormula | None = None
    for f in parts:
        out = f if out is None else And(out, f)
    return out


def _or_leaves(f: SeqFormula) -> list[SeqFormula]:
    if isinstance(f, Or):
        return _or_leaves(f.left) + _or_leaves(f.right)
    return [f]


def _and_leaves(f: SeqFormula) -> list[SeqFormula]:
    if isinstance(f, And):
        return _and_leaves(f.left) + _and_leaves(f.right)
    return [f]


@dataclass(frozen=True)
class BcnfRow:
    b: SeqFormula | None
    c: SeqFormula | None
    d: tuple[SeqFormula, ...]


@dataclass(frozen=True)
class BcnfShape:
    """Conjunction of rows  B_i | <p>C_i | [p]D_i1 | ... over one atom p."""

    prog: Atom
    rows: tuple[BcnfRow, ...]

    @property
    def m(self) -> int:
        return len(self.rows)

    def to_formula(self) -> SeqFormula:
        conjuncts = []
        for row in self.rows:
            parts: list[SeqFormula] = []
            if row.b is not None:
                parts.append(row.b)
            if row.c is not None:
                parts.append(Dia(self.prog, row.c))
            parts.extend(Box(self.prog, d) for d in row.d)
            conjuncts.append(fold_or(parts))
        out = fold_and(conjuncts)
        assert out is not None
        return out


@dataclass(frozen=True)
class BdnfShape:
    """Disjunction  F | (F_i & [p]G_i)... | (F_j & <p>H_j)... over one atom p."""

    prog: Atom
    f: SeqFormula | None
    box_rows: tuple[tuple[SeqFormula | None, SeqFormula], ...]
    dia_rows: tuple[tuple[SeqFormula | None, SeqFormula], ...]

    @property
    def s(self) -> int:
        return len(self.box_rows)

    @property
    def t(self) -> int:
        return len(self.dia_rows)

    def to_formula(self) -> SeqFormula:
        parts: list[SeqFormula] = []
        if self.f is not None:
            parts.append(self.f)
        for prop, g in self.box_rows:
            box = Box(self.prog, g)
            parts.append(box if prop is None else And(prop, box))
        for prop, h in self.dia_rows:
            dia = Dia(self.prog, h)
            parts.append(dia if prop is None else And(prop, dia))
        out = fold_or(parts)
        assert out is not None
        return out


def _check_same_prog(prog: Atom | None, p: Program, where: SeqFormula) -> Atom:
    if not isinstance(p, Atom):
        raise ShapeError(f"program is not atomic in {render(where)}")
    if prog is not None and p != prog:
        raise ShapeError(
            f"mixed programs {prog.name} and {p.name} in {render(where)}")
    return p


def recognize_bcnf(f: SeqFormula) -> BcnfShape:
    """Match f against the conjunctive shape, or raise ShapeError."""
    prog: Atom | None = None
    rows = []
    for conjunct in _and_leaves(f):
        leaves = _or_leaves(conjunct)
        if len(leaves) < 2 and isinstance(conjunct, Dia):
            raise ShapeError(f"row {render(conjunct)} is not a disjunction")
        props: list[SeqFormula] = []
        c: SeqFormula | None = None
        d: list[SeqFormula] = []
        for leaf in leaves:
            if is_propositional(leaf):
                props.append(leaf)
            elif isinstance(leaf, Dia):
                prog = _check_same_prog(prog, leaf.prog, leaf)
                if not is_propositional(leaf.body):
                    raise ShapeError(f"body not propositional in {render(leaf)}")
                if c is not None:
                    raise ShapeError(
                        f"second diamond {render(leaf)} in row {render(conjunct)}")
                c = leaf.body
            elif isinstance(leaf, Box):
                prog = _check_same_prog(prog, leaf.prog, leaf)
                if not is_propositional(leaf.body):
                    raise ShapeError(f"body not propositional in {render(leaf)}")
                d.append(leaf.body)
            else:
                raise ShapeError(f"unexpected subformula {render(leaf)}")
        rows.append(BcnfRow(fold_or(props), c, tuple(d)))
    if prog is None:
        # A modality-free conjunction still fits the shape; tag it with the
        # customary program name so every shape carries one.
        prog = Atom("p")
    return BcnfShape(prog, tuple(rows))


def recognize_bdnf(f: SeqFormula) -> BdnfShape:
    """Match f against the disjunctive shape, or raise ShapeError."""
    prog: Atom | None = None
    props: list[SeqFormula] = []
    box_rows = []
    dia_rows = []
    for leaf in _or_leaves(f):
        if is_propositional(leaf):
            props.append(leaf)
            continue
        if isinstance(leaf, (Dia, Box)):
            side, modal = None, leaf
        elif isinstance(leaf, And):
            parts = _and_leaves(leaf)
            modals = [g for g in parts if isinstance(g, (Dia, Box))]
            rest = [g for g in parts if not isinstance(g, (Dia, Box))]
            if len(modals) != 1:
                raise ShapeError(f"row {render(leaf)} needs exactly one modality")
            bad = next((g for g in rest if not is_propositional(g)), None)
            if bad is not None:
                raise ShapeError(f"unexpected subformula {render(bad)}")
            side, modal = fold_and(rest), modals[0]
        else:
            raise ShapeError(f"unexpected subformula {render(leaf)}")
        prog = _check_same_prog(prog, modal.prog, modal)
        if not is_propositional(modal.body):
            raise ShapeError(f"body not propositional in {render(modal)}")
        if isinstance(modal, Box):
            box_rows.append((side, modal.body))
        else:
            dia_rows.append((side, modal.body))
    if prog is None:
        raise ShapeError("no modal component; shape requires an atomic program")
    if not box_rows or not dia_rows:
        raise ShapeError("shape requires at least one box row and one diamond row")
    return BdnfShape(prog, fold_or(props), tuple(box_rows), tuple(dia_rows))


# Boolean constants are macros over a reserved variable, not primitives.

def const_true(var: str = "v0") -> SeqFormula:
    return Or(Lit(var), Lit(var, neg=True))


def const_false(var: str = "v0") -> SeqFormula:
    return And(Lit(var), Lit(var, neg=True))
