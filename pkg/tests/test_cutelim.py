"""Cut degrees, the reduction operator, and the elimination driver."""

from __future__ import annotations

import random
from collections import Counter

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from pdlkit.calculus import (
    SystemSpec,
    and_intro,
    ax_leaf,
    check,
    cut_intro,
    extended_axiom,
    gen_intro,
    or_intro,
    weaken,
)
from pdlkit.cutelim import (
    ReductionStep,
    StarredCut,
    _log_omega,
    _split_gap,
    deg,
    eliminate,
    reduce_cut,
)
from pdlkit.formula import (
    Alt, And, Atom, Box, Comp, Dia, Lit, Or, ShapeError, Star, parse,
    seq_equal, seq_negate,
)
from pdlkit.ordinal import (
    OMEGA, ZERO, compare, nat, o_complexity, omega_pow, ord_sum, veblen,
)

import strategies

SEQ0_CUT = SystemSpec("Seq0", cut_allowed=True, upgraded=True)
SEQ0 = SystemSpec("Seq0", upgraded=True)

x, y, z = Lit("x"), Lit("y"), Lit("z")
nx, ny, nz = Lit("x", True), Lit("y", True), Lit("z", True)
p, q = Atom("p"), Atom("q")


def axiom_cut(c, left_ctx=(), right_ctx=()):
    return cut_intro(extended_axiom(c, left_ctx),
                     extended_axiom(seq_negate(c), right_ctx), c)


def cut_nodes(deriv):
    out = []
    stack = [deriv]
    while stack:
        node = stack.pop()
        if node.rule == "Cut":
            out.append(node)
        stack.extend(node.children)
    return out


def assert_reduced(cut, system=SEQ0_CUT):
    out = reduce_cut(cut)
    assert Counter(out.sequent) == Counter(cut.sequent)
    result = check(system, out)
    assert result.ok, result.reason
    assert compare(deg(out), deg(cut)) < 0
    return out


# --- degrees -----------------------------------------------------------------

def test_deg_of_cutfree_derivation_is_zero():
    assert deg(extended_axiom(parse("<p>(x | y)"))) == ZERO


def test_deg_of_single_boolean_cut():
    assert deg(axiom_cut(Or(x, y))) == nat(2)


def test_deg_takes_the_maximum_over_all_cuts():
    inner = axiom_cut(x)                      # degree 1
    outer = axiom_cut(Dia(p, x))              # degree 2
    both = cut_intro(weaken(inner, (y,)), weaken(outer, (ny,)), y)
    assert deg(both) == nat(2)


def test_deg_rejects_a_cut_node_without_formula():
    from pdlkit.calculus import Derivation
    stub = Derivation((x, nx), "Cut", (ax_leaf((x, nx)), ax_leaf((nx, x))),
                      (), nat(1))
    with pytest.raises(ShapeError, match="lacks its cut formula"):
        deg(stub)


# --- the reduction cases -----------------------------------------------------

def test_literal_cut_resolves_by_substitution():
    left = extended_axiom(x, (y,))            # x, ~x, y
    right = extended_axiom(nx, (ny,))         # ~x, x, ~y
    out = assert_reduced(cut_intro(left, right, x), SEQ0)
    assert deg(out) == ZERO


def test_literal_cut_grafts_the_right_premise_at_the_axiom():
    left = ax_leaf((x, nx, y))
    right = extended_axiom(nx, (z,))          # ~x, x, z
    out = assert_reduced(cut_intro(left, right, x), SEQ0)
    # the principal axiom turns into the weakened right premise
    assert out.rule == "Ax"
    assert Counter(out.sequent) == Counter((nx, y, x, z))


def test_boolean_cut_reduces_through_the_inversions():
    out = assert_reduced(axiom_cut(Or(x, y)))
    assert deg(out) == ZERO


def test_union_cut_reduces_through_the_program_inversions():
    out = assert_reduced(axiom_cut(Dia(Alt(p, q), x)))
    assert seq_equal(out.sequent,
                     (Box(Alt(p, q), nx), Dia(Alt(p, q), x)))


def test_composition_unchaining_keeps_the_complexity():
    fused = Dia(Comp(p, q), x)
    chained = Dia(p, Dia(q, x))
    assert o_complexity(fused) == o_complexity(chained)
    # hence the reduction recurses on the unchained cut instead of keeping it
    out = assert_reduced(axiom_cut(fused))
    assert all(node.cut_formula != chained for node in cut_nodes(out))


def test_modal_cut_combines_the_generalizations():
    left = gen_intro(ax_leaf((x, nx)), p, (0, 1))     # <p>x, [p]~x
    right = gen_intro(ax_leaf((nx, x)), p, (1, 0))    # [p]~x, <p>x
    out = assert_reduced(cut_intro(left, right, Dia(p, x)))
    remaining = cut_nodes(out)
    assert [node.cut_formula for node in remaining] == [x]
    assert deg(out) == nat(1)


def test_modal_cut_through_context_rules_and_several_graft_sites():
    gen = gen_intro(ax_leaf((x, nx)), p, (0, 1), (y, ny))
    left = or_intro(gen, y, ny)                       # y|~y, <p>x, [p]~x
    site = lambda: gen_intro(ax_leaf((nx, x)), p, (1, 0), (z, nz))
    right = and_intro(site(), site(), z, z)           # z&z, [p]~x, <p>x, ~z
    assert_reduced(cut_intro(left, right, Dia(p, x)))


def test_weakened_in_cut_formula_disappears_quietly():
    c = Dia(p, Or(x, y))
    cut = cut_intro(weaken(extended_axiom(y), (c,)),
                    weaken(extended_axiom(ny), (seq_negate(c),)), c)
    out = assert_reduced(cut, SEQ0)
    assert deg(out) == ZERO


def test_mixed_connective_cut_walks_all_cases():
    out = assert_reduced(axiom_cut(Dia(Comp(p, Alt(q, p)), Or(x, y))))
    result = check(SEQ0_CUT, out)
    assert result.ok, result.reason


def test_reduce_needs_a_cut_at_the_root():
    with pytest.raises(ShapeError, match="ending in a cut"):
        reduce_cut(extended_axiom(x))


def test_reduce_needs_cutfree_premises():
    inner = axiom_cut(x)
    bad = cut_intro(weaken(inner, (y,)), extended_axiom(ny), y)
    with pytest.raises(ShapeError, match="must be cutfree"):
        reduce_cut(bad)


def test_starred_cut_formulas_are_rejected():
    c = Dia(Star(p), x)
    cut = cut_intro(weaken(extended_axiom(y), (c,)),
                    weaken(extended_axiom(ny), (seq_negate(c),)), c)
    with pytest.raises(StarredCut, match="starred program"):
        reduce_cut(cut)


# --- the elimination driver --------------------------------------------------

def test_eliminate_is_the_identity_on_cutfree_input():
    d = extended_axiom(parse("<p>(x | y)"))
    assert eliminate(d) is d


def test_eliminate_the_textbook_detour():
    # x, ~x proved through a cut on y | ~y
    left = or_intro(ax_leaf((y, ny)), y, ny)
    right = and_intro(ax_leaf((ny, x, nx)), ax_leaf((y, x, nx)), ny, y)
    cut = cut_intro(left, right, Or(y, ny))
    assert seq_equal(cut.sequent, (x, nx))
    out = eliminate(cut)
    assert deg(out) == ZERO
    assert seq_equal(out.sequent, (x, nx))
    assert check(SEQ0, out).ok


def test_eliminate_walks_the_degree_ladder():
    big = axiom_cut(Or(x, y))                       # degree 2, sits above
    root = cut_intro(weaken(big, (x,)), extended_axiom(nx), x)
    trace: list[ReductionStep] = []
    out = eliminate(root, trace)
    assert deg(out) == ZERO
    assert check(SEQ0, out).ok
    assert [t.modulus for t in trace] == [nat(2), nat(1)]
    assert [t.deg_before for t in trace] == [nat(2), nat(1)]
    for t in trace:
        assert compare(t.deg_after, t.deg_before) < 0
        assert compare(t.height_after, t.height_bound) < 0


def test_eliminate_rejects_starred_cuts_anywhere():
    c = Dia(Star(p), x)
    cut = cut_intro(weaken(extended_axiom(y), (c,)),
                    weaken(extended_axiom(ny), (seq_negate(c),)), c)
    wrapped = cut_intro(weaken(cut, (z,)), extended_axiom(nz), z)
    with pytest.raises(StarredCut, match="starred program"):
        eliminate(wrapped)


def test_split_gap_pads_with_zero_and_descends():
    delta = ord_sum(omega_pow(nat(2)), nat(3))      # w^2 + 3
    exps = _split_gap(nat(1), nat(3), delta)
    assert exps[-1] == ZERO
    assert all(compare(exps[i + 1], exps[i]) <= 0 for i in range(len(exps) - 1))
    assert all(compare(e, nat(3)) < 0 for e in exps)


def test_log_omega_of_small_degrees():
    assert _log_omega(ZERO) == ZERO
    assert _log_omega(nat(1)) == nat(1)
    assert _log_omega(nat(5)) == nat(1)
    assert _log_omega(OMEGA) == nat(2)


# --- randomized end-to-end ---------------------------------------------------

def test_eliminate_on_seeded_random_derivations():
    rng = random.Random(23)
    for _ in range(60):
        d = strategies.random_cut_derivation(rng, rng.randrange(1, 4))
        result = check(SEQ0_CUT, d)
        assert result.ok, result.reason
        trace: list[ReductionStep] = []
        out = eliminate(d, trace)
        assert deg(out) == ZERO
        assert Counter(out.sequent) == Counter(d.sequent)
        rechecked = check(SEQ0, out)
        assert rechecked.ok, rechecked.reason
        for t in trace:
            assert compare(t.deg_after, t.deg_before) < 0
            assert compare(t.height_after, t.height_bound) < 0
        assert compare(out.ord_label, veblen(nat(1), d.ord_label)) < 0


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_reduction_of_a_single_random_cut(seed):
    rng = random.Random(seed)
    c = strategies.random_star_free(rng, rng.randrange(1, 4))
    ctx = tuple(strategies.random_star_free(rng, 1)
                for _ in range(rng.randrange(2)))
    assert_reduced(axiom_cut(c, ctx))
