"""Finite expansions of a starred diamond and refutation trees.

A starred diamond over an atomic program can be traded for the sequent

    A, <p>A, <p><p>A, ..., <p>^k A, Pi

at some finite depth k.  When A is in row shape (see recognize_bcnf) the
depth n+1 suffices, where n counts the boxes across all rows: if any depth
works at all, then n+1 does.  decide_bcne exploits this; the refutation
trees below certify the negative answers and carry the pumping argument
that pushes a certificate one level higher.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .formula import (
    Atom,
    BcnfShape,
    Dia,
    Or,
    SeqFormula,
    Sequent,
    ShapeError,
    Star,
    fold_or,
    from_json,
    is_propositional,
    recognize_bcnf,
    render,
    seq_equal,
    to_json,
)
from .prover import prove

DEFAULT_PROGRAM = Atom("p")


def expand(a: SeqFormula, pi: Sequent, k: int,
           program: Atom = DEFAULT_PROGRAM) -> Sequent:
    """The sequent a, <p>a, ..., <p>^k a, pi."""
    if k < 0:
        raise ValueError("expansion depth must be nonnegative")
    copies = []
    head = a
    for _ in range(k + 1):
        copies.append(head)
        head = Dia(program, head)
    return tuple(copies) + tuple(pi)


def bcnf_bound(shape: BcnfShape) -> int:
    """Box count n; depth n+1 decides every expansion question for the shape."""
    return sum(len(row.d) for row in shape.rows)


class _NotWithinCap:
    """Sentinel: no expansion depth up to the cap was provable."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "NotWithinCap"


NotWithinCap = _NotWithinCap()


def min_expansion_k(a: SeqFormula, pi: Sequent, cap: int,
                    program: Atom = DEFAULT_PROGRAM):
    """Least k <= cap whose expansion is provable, else NotWithinCap."""
    for k in range(cap + 1):
        if prove(expand(a, pi, k, program)):
            return k
    return NotWithinCap


@dataclass(frozen=True)
class BcneParts:
    """A starred-diamond disjunction split into its three ingredients."""

    a: SeqFormula
    shape: BcnfShape
    z: SeqFormula | None

    @property
    def pi(self) -> Sequent:
        return () if self.z is None else (self.z,)


def _disjuncts(f: SeqFormula) -> list[SeqFormula]:
    if isinstance(f, Or):
        return _disjuncts(f.left) + _disjuncts(f.right)
    return [f]


def recognize_bcne(s: SeqFormula) -> BcneParts:
    """Split s as <p*>A | Z with A in row shape, or raise ShapeError."""
    parts = _disjuncts(s)
    starred = [f for f in parts
               if isinstance(f, Dia) and isinstance(f.prog, Star)]
    if len(starred) != 1:
        raise ShapeError("need exactly one starred diamond disjunct")
    head = starred[0]
    base = head.prog.body
    if not isinstance(base, Atom):
        raise ShapeError(f"starred program in {render(head)} is not atomic")
    shape = recognize_bcnf(head.body)
    has_modal_row = any(r.c is not None or r.d for r in shape.rows)
    if has_modal_row and shape.prog != base:
        raise ShapeError(
            f"row program {shape.prog.name} differs from star base {base.name}")
    if not has_modal_row:
        # modality-free rows carry a placeholder program; align it
        shape = BcnfShape(base, shape.rows)
    rest = [f for f in parts if f is not head]
    for f in rest:
        if not is_propositional(f):
            raise ShapeError(f"side disjunct {render(f)} is not propositional")
    return BcneParts(head.body, shape, fold_or(rest))


def decide_bcne(s: SeqFormula) -> bool:
    """Validity of <p*>A | Z, settled at expansion depth n+1."""
    parts = recognize_bcne(s)
    n = bcnf_bound(parts.shape)
    return bool(prove(expand(parts.a, parts.pi, n + 1, parts.shape.prog)))


# Refutation trees.  A tree of height k+1 over (shape, pi) certifies that
# the depth-k expansion is underivable.  Each inner node commits to a row i:
# its son records the side check B_i, label and stays a leaf, while one
# daughter per box D_ij carries the fresh label C_i, D_ij and continues the
# game one level lower.  Leaves sit exactly at depth k+1 (or wherever a row
# has no boxes, in which case the node simply has no daughters).


@dataclass(frozen=True)
class RefutationTree:
    label: Sequent
    choice: int = -1
    son: "RefutationTree | None" = None
    daughters: tuple["RefutationTree", ...] = field(default=())

    @property
    def is_leaf(self) -> bool:
        return self.choice < 0

    def nodes(self) -> Iterator["RefutationTree"]:
        yield self
        if self.son is not None:
            yield from self.son.nodes()
        for d in self.daughters:
            yield from d.nodes()

    def height(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max((d.height() for d in self.daughters), default=0)


def _refuted(label: Sequent) -> bool:
    # the empty sequent has no derivation at all
    if not label:
        return True
    return not prove(label)


def _son_label(row, label: Sequent) -> Sequent:
    return label if row.b is None else (row.b,) + tuple(label)


def _daughter_label(row, d_ij: SeqFormula) -> Sequent:
    return (d_ij,) if row.c is None else (row.c, d_ij)


def build_refutation_tree(shape: BcnfShape, pi: Sequent,
                          k: int) -> RefutationTree | None:
    """A certificate that expand(A, pi, k) is underivable, or None."""
    if k < 0:
        raise ValueError("expansion depth must be nonnegative")
    pi = tuple(pi)
    for f in pi:
        if not is_propositional(f):
            raise ShapeError(f"side formula {render(f)} is not propositional")

    def attempt(label: Sequent, level: int) -> RefutationTree | None:
        for i, row in enumerate(shape.rows):
            son_label = _son_label(row, label)
            if not _refuted(son_label):
                continue
            son = RefutationTree(son_label)
            daughters = []
            for d_ij in row.d:
                dl = _daughter_label(row, d_ij)
                if level == 0:
                    child = RefutationTree(dl) if _refuted(dl) else None
                else:
                    child = attempt(dl, level - 1)
                if child is None:
                    daughters = None
                    break
                daughters.append(child)
            if daughters is not None:
                return RefutationTree(label, i, son, tuple(daughters))
        return None

    return attempt(pi, k)


def check_refutation_tree(tree: RefutationTree, shape: BcnfShape,
                          pi: Sequent, k: int) -> bool:
    """Verify structure and refutedness of every label, root included."""
    if not seq_equal(tree.label, tuple(pi)):
        return False

    def ok(node: RefutationTree, depth: int) -> bool:
        if not _refuted(node.label):
            return False
        if depth == k + 1:
            return node.is_leaf
        if node.is_leaf or not 0 <= node.choice < len(shape.rows):
            return False
        row = shape.rows[node.choice]
        if node.son is None or not node.son.is_leaf:
            return False
        if not seq_equal(node.son.label, _son_label(row, node.label)):
            return False
        if not _refuted(node.son.label):
            return False
        if len(node.daughters) != len(row.d):
            return False
        for d_ij, child in zip(row.d, node.daughters):
            if not seq_equal(child.label, _daughter_label(row, d_ij)):
                return False
            if not ok(child, depth + 1):
                return False
        return True

    return ok(tree, 0)


def pump_refutation_tree(tree: RefutationTree, s: int) -> RefutationTree:
    """Stretch a height-(s+1) certificate to height s+2.

    Along each maximal daughter path some label repeats (the shape offers
    fewer distinct daughter labels than the path has inner nodes).  Grafting
    the subtree of the first occurrence onto the second makes every daughter
    path one step longer; cutting back at depth s+2 restores leaf discipline.
    Deterministic: repeats are claimed top-down, earliest ancestor first.
    """
    limit = s + 2

    def truncate(node: RefutationTree, depth: int) -> RefutationTree:
        if depth == limit:
            return RefutationTree(node.label)
        if node.is_leaf:
            return node
        return RefutationTree(node.label, node.choice, node.son,
                              tuple(truncate(d, depth + 1)
                                    for d in node.daughters))

    def walk(node: RefutationTree, depth: int,
             trail: tuple[tuple[Sequent, RefutationTree], ...]) -> RefutationTree:
        if depth > 0:
            for seen_label, seen_sub in trail:
                if seq_equal(seen_label, node.label):
                    return truncate(seen_sub, depth)
        if node.is_leaf:
            if depth == s + 1:
                raise ValueError("no label repeats above a maximal daughter")
            return node
        grown = trail + ((node.label, node),) if depth > 0 else trail
        return RefutationTree(node.label, node.choice, node.son,
                              tuple(walk(d, depth + 1, grown)
                                    for d in node.daughters))

    return walk(tree, 0, ())


def refutation_to_json(tree: RefutationTree) -> dict:
    out: dict = {"label": [to_json(f) for f in tree.label]}
    if not tree.is_leaf:
        out["choice"] = tree.choice
        out["son"] = refutation_to_json(tree.son)
        out["daughters"] = [refutation_to_json(d) for d in tree.daughters]
    return out


def refutation_from_json(data: dict) -> RefutationTree:
    label = tuple(from_json(x) for x in data["label"])
    if "choice" not in data:
        return RefutationTree(label)
    return RefutationTree(
        label, data["choice"], refutation_from_json(data["son"]),
        tuple(refutation_from_json(x) for x in data["daughters"]))
