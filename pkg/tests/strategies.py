"""Shared hypothesis strategies and random generators for the test suite."""

from __future__ import annotations

import random

import hypothesis.strategies as st

from pdlkit.calculus import (
    cut_intro, extended_axiom, gen_intro, or_intro, weaken)
from pdlkit.formula import (
    Alt, And, Atom, BcnfRow, BcnfShape, BdnfShape, Box, Comp, Dia, Lit, Or,
    ShapeError, Star, seq_negate)
from pdlkit.ordinal import (
    Ord, ZERO, compare, nat, nat_sum, o_complexity, omega_pow, ord_sum,
    veblen)
from pdlkit.semantics import KripkeFrame

PROG_NAMES = ("p", "q", "r")
VAR_NAMES = ("x", "y", "z", "w")


def atoms() -> st.SearchStrategy:
    return st.sampled_from(PROG_NAMES).map(Atom)


def programs(allow_star: bool = True, atomic_only: bool = False) -> st.SearchStrategy:
    if atomic_only:
        return atoms()

    def extend(children: st.SearchStrategy) -> st.SearchStrategy:
        branches = [
            st.tuples(children, children).map(lambda t: Comp(*t)),
            st.tuples(children, children).map(lambda t: Alt(*t)),
        ]
        if allow_star:
            branches.append(children.map(Star))
        return st.one_of(branches)

    return st.recursive(atoms(), extend, max_leaves=4)


def literals() -> st.SearchStrategy:
    return st.tuples(st.sampled_from(VAR_NAMES), st.booleans()).map(
        lambda t: Lit(*t))


def formulas(allow_star: bool = True, atomic_only: bool = False,
             max_leaves: int = 6) -> st.SearchStrategy:
    progs = programs(allow_star=allow_star, atomic_only=atomic_only)

    def extend(children: st.SearchStrategy) -> st.SearchStrategy:
        return st.one_of(
            st.tuples(children, children).map(lambda t: Or(*t)),
            st.tuples(children, children).map(lambda t: And(*t)),
            st.tuples(progs, children).map(lambda t: Dia(*t)),
            st.tuples(progs, children).map(lambda t: Box(*t)),
        )

    return st.recursive(literals(), extend, max_leaves=max_leaves)


def propositional() -> st.SearchStrategy:
    def extend(children: st.SearchStrategy) -> st.SearchStrategy:
        return st.one_of(
            st.tuples(children, children).map(lambda t: Or(*t)),
            st.tuples(children, children).map(lambda t: And(*t)),
        )

    return st.recursive(literals(), extend, max_leaves=5)


def sequents(allow_star: bool = True, atomic_only: bool = False,
             max_size: int = 4) -> st.SearchStrategy:
    return st.lists(
        formulas(allow_star=allow_star, atomic_only=atomic_only),
        max_size=max_size).map(tuple)


def _row_pieces() -> st.SearchStrategy:
    pair = st.tuples(literals(), literals())
    return st.one_of(literals(),
                     pair.map(lambda t: Or(*t)),
                     pair.map(lambda t: And(*t)))


@st.composite
def bcnf_shapes(draw, max_rows: int = 2, max_boxes: int = 3) -> BcnfShape:
    """Row shapes over program p, with at most max_boxes boxes in total."""
    piece = _row_pieces()
    rows = []
    budget = max_boxes
    for _ in range(draw(st.integers(min_value=1, max_value=max_rows))):
        boxes = draw(st.integers(min_value=0, max_value=budget))
        budget -= boxes
        has_b = draw(st.booleans())
        has_c = draw(st.booleans())
        if has_c and not has_b and boxes == 0:
            has_b = True  # a bare diamond is not a legal row
        if not has_b and not has_c and boxes == 0:
            has_b = True
        rows.append(BcnfRow(
            draw(piece) if has_b else None,
            draw(piece) if has_c else None,
            tuple(draw(piece) for _ in range(boxes))))
    return BcnfShape(Atom("p"), tuple(rows))


@st.composite
def bdnf_shapes(draw, max_each: int = 2) -> BdnfShape:
    """Disjunctive shapes over program p with 1..max_each rows of each kind."""
    piece = _row_pieces()
    side = st.one_of(st.none(), piece)
    return BdnfShape(
        Atom("p"), draw(side),
        tuple((draw(side), draw(piece)) for _ in range(
            draw(st.integers(min_value=1, max_value=max_each)))),
        tuple((draw(side), draw(piece)) for _ in range(
            draw(st.integers(min_value=1, max_value=max_each)))))


# A plain-random ordinal generator, shared with the acceptance suite where
# hypothesis would be too slow for the required sample count.

def random_ordinal(rng: random.Random, depth: int = 2) -> Ord:
    if depth == 0:
        return nat(rng.randrange(4))
    roll = rng.random()
    if roll < 0.25:
        return nat(rng.randrange(4))
    if roll < 0.45:
        return omega_pow(random_ordinal(rng, depth - 1))
    if roll < 0.6:
        return veblen(random_ordinal(rng, depth - 1),
                      random_ordinal(rng, depth - 1))
    if roll < 0.8:
        return nat_sum(random_ordinal(rng, depth - 1),
                       random_ordinal(rng, depth - 1))
    return ord_sum(random_ordinal(rng, depth - 1),
                   random_ordinal(rng, depth - 1))


def ordinals(depth: int = 2) -> st.SearchStrategy:
    return st.integers(min_value=0, max_value=2**32 - 1).map(
        lambda seed: random_ordinal(random.Random(seed), depth))


@st.composite
def frames(draw, max_worlds: int = 3) -> KripkeFrame:
    n = draw(st.integers(min_value=1, max_value=max_worlds))
    pairs = [(u, v) for u in range(n) for v in range(n)]
    access = {}
    for p in PROG_NAMES[:2]:
        edges = draw(st.lists(st.sampled_from(pairs), max_size=4))
        access[p] = frozenset(edges)
    valuation = {}
    for x in VAR_NAMES:
        worlds = draw(st.lists(st.integers(min_value=0, max_value=n - 1),
                               max_size=n))
        valuation[x] = frozenset(worlds)
    return KripkeFrame(n, access, valuation)


# Seeded generator for valid derivations carrying star-free cuts, used by the
# elimination tests and the acceptance suite.  Cuts come in three flavours:
# between two extended axioms on the cut formula, with both copies weakened
# in, and with the running derivation as one premise.

def random_star_free(rng: random.Random, depth: int) -> object:
    if depth <= 0 or rng.random() < 0.35:
        return Lit(rng.choice(VAR_NAMES[:3]), rng.random() < 0.5)
    roll = rng.random()
    if roll < 0.35:
        return Or(random_star_free(rng, depth - 1),
                  random_star_free(rng, depth - 1))
    if roll < 0.55:
        return And(random_star_free(rng, depth - 1),
                   random_star_free(rng, depth - 1))
    ctor = Dia if rng.random() < 0.6 else Box
    return ctor(_random_star_free_prog(rng, depth - 1),
                random_star_free(rng, depth - 1))


def _random_star_free_prog(rng: random.Random, depth: int) -> object:
    if depth <= 0 or rng.random() < 0.6:
        return Atom(rng.choice(PROG_NAMES[:2]))
    ctor = Comp if rng.random() < 0.5 else Alt
    return ctor(_random_star_free_prog(rng, depth - 1),
                _random_star_free_prog(rng, depth - 1))


def random_cut_derivation(rng: random.Random, cuts: int = 2,
                          max_deg: int = 5) -> object:
    def small_ctx() -> tuple:
        return tuple(random_star_free(rng, 1) for _ in range(rng.randrange(2)))

    def leaf():
        return extended_axiom(random_star_free(rng, rng.randrange(1, 3)),
                              small_ctx())

    def cut_formula():
        while True:
            c = random_star_free(rng, rng.randrange(1, 4))
            if compare(ord_sum(o_complexity(c), nat(1)), nat(max_deg)) <= 0:
                return c

    d = leaf()
    for _ in range(cuts):
        c = cut_formula()
        roll = rng.random()
        if roll < 0.4:
            piece = cut_intro(extended_axiom(c, small_ctx()),
                              extended_axiom(seq_negate(c), small_ctx()), c)
        elif roll < 0.7:
            piece = cut_intro(weaken(leaf(), (c,)),
                              weaken(leaf(), (seq_negate(c),)), c)
        else:
            piece = cut_intro(weaken(d, (c,)),
                              extended_axiom(seq_negate(c), small_ctx()), c)
        if rng.random() < 0.5:
            d = piece
        else:
            if rng.random() < 0.5 and len(piece.sequent) >= 2:
                piece = or_intro(piece, piece.sequent[0], piece.sequent[1])
            d = cut_intro(weaken(d, (Lit("w"),)),
                          weaken(piece, (Lit("w", True),)), Lit("w"))
    if rng.random() < 0.3:
        chis = tuple(1 if i == 0 else 0 for i in range(len(d.sequent)))
        try:
            d = gen_intro(d, Atom(rng.choice(PROG_NAMES[:2])), chis,
                          small_ctx())
        except ShapeError:
            pass
    return d
