"""Ordinal notations: ordering, sums, Veblen identities, complexity measure."""

from __future__ import annotations

import random

from hypothesis import given
import hypothesis.strategies as st

import pytest

from pdlkit.formula import parse, parse_program, parse_sequent
from pdlkit.ordinal import (
    OMEGA, OMEGA_OMEGA, ONE, Ord, PHI_OMEGA_0, Veb, ZERO, compare, is_finite,
    nat, nat_sum, o_complexity, omega_pow, ord_sum, parse_ordinal,
    render_ordinal, times_omega, to_int, veblen,
)
from strategies import formulas, ordinals, random_ordinal

W2 = omega_pow(nat(2))


def test_compare_successor():
    assert compare(OMEGA, ord_sum(OMEGA, ONE)) == -1


def test_omega_pow_is_veblen_0():
    beta = OMEGA
    assert compare(veblen(ZERO, beta), omega_pow(beta)) == 0


def test_epsilon_is_its_own_omega_power():
    eps = veblen(ONE, ZERO)
    assert compare(eps, omega_pow(eps)) == 0


def test_nat_sum_merges_term_lists():
    # (w+1) # w = w*2 + 1
    got = nat_sum(ord_sum(OMEGA, ONE), OMEGA)
    assert render_ordinal(got) == "w*2 + 1"


def test_ord_sum_absorbs_left():
    assert ord_sum(ONE, OMEGA) == OMEGA


def test_veblen_0_2_is_w_squared():
    assert veblen(ZERO, nat(2)) == W2


def test_canonical_collapse_is_strict():
    # phi(0, phi(0,0)) is w itself, not a fixed point to collapse
    assert veblen(ZERO, ONE) == OMEGA
    assert veblen(ZERO, veblen(ONE, ZERO)) == veblen(ONE, ZERO)
    assert veblen(ZERO, ZERO) == ONE


def test_times_omega_degrees():
    assert times_omega(ZERO) == OMEGA
    assert times_omega(OMEGA) == W2
    assert times_omega(ord_sum(OMEGA, nat(3))) == W2
    eps = veblen(ONE, ZERO)
    assert times_omega(eps) == omega_pow(ord_sum(eps, ONE))


def test_o_complexity_examples():
    assert o_complexity(parse("x")) == ZERO
    assert o_complexity(parse("<p>x")) == ONE
    assert o_complexity(parse_program("p*")) == OMEGA
    assert o_complexity(parse("<p*>x")) == ord_sum(OMEGA, ONE)
    assert o_complexity(parse_program("(p*)*")) == W2


def test_o_complexity_more():
    assert o_complexity(parse("x | y")) == ONE
    assert o_complexity(parse("x & (y | z)")) == nat(2)
    assert o_complexity(parse_program("p;q")) == ONE
    assert o_complexity(parse("[p;q]x")) == nat(2)
    assert o_complexity(parse_sequent("x, <p>x, x | y")) == nat(2)
    assert o_complexity(()) == ZERO


def test_render_examples():
    assert render_ordinal(ZERO) == "0"
    assert render_ordinal(nat_sum(W2, nat_sum(Ord(((Veb(ZERO, ONE), 3),)), ONE))) \
        == "w^2 + w*3 + 1"
    assert render_ordinal(veblen(ONE, ZERO)) == "phi(1,0)"
    assert render_ordinal(PHI_OMEGA_0) == "phi(w,0)"
    assert render_ordinal(omega_pow(W2)) == "w^(w^2)"


def test_parse_ordinal_fixtures():
    assert parse_ordinal("w^2 + w*3 + 1") == nat_sum(
        W2, nat_sum(Ord(((Veb(ZERO, ONE), 3),)), ONE))
    assert parse_ordinal("phi(1,0)*2 + w") == nat_sum(
        Ord(((Veb(ONE, ZERO), 2),)), OMEGA)
    with pytest.raises(ValueError):
        parse_ordinal("w +")


def test_finite_helpers():
    assert is_finite(nat(7)) and to_int(nat(7)) == 7
    assert to_int(ZERO) == 0
    assert not is_finite(OMEGA)
    with pytest.raises(ValueError):
        to_int(OMEGA)


# Ordering and arithmetic laws, checked on randomly generated canonical
# notations.  The acceptance suite reruns these at a much larger sample count.

@given(ordinals(), ordinals())
def test_trichotomy(a, b):
    assert sorted((compare(a, b), compare(b, a))) in ([-1, 1], [0, 0])
    assert (compare(a, b) == 0) == (a == b)


@given(ordinals(), ordinals(), ordinals())
def test_transitivity(a, b, c):
    if compare(a, b) <= 0 and compare(b, c) <= 0:
        assert compare(a, c) <= 0


@given(ordinals(), ordinals())
def test_nat_sum_commutative(a, b):
    assert nat_sum(a, b) == nat_sum(b, a)


@given(ordinals(), ordinals(), ordinals())
def test_nat_sum_associative(a, b, c):
    assert nat_sum(nat_sum(a, b), c) == nat_sum(a, nat_sum(b, c))


@given(ordinals(), ordinals(), ordinals())
def test_ord_sum_associative(a, b, c):
    assert ord_sum(ord_sum(a, b), c) == ord_sum(a, ord_sum(b, c))


@given(ordinals())
def test_zero_units(a):
    assert nat_sum(a, ZERO) == a
    assert ord_sum(a, ZERO) == a
    assert ord_sum(ZERO, a) == a
    assert compare(ZERO, a) <= 0


@given(ordinals(), ordinals(), ordinals(), ordinals())
def test_sum_monotonicity(a, b, c, d):
    if compare(a, b) < 0:
        assert compare(nat_sum(a, c), nat_sum(nat_sum(b, c), d)) < 0


@given(ordinals(), ordinals(), ordinals())
def test_veblen_monotonicity(a, b, c):
    # strict growth in the first argument holds below fixed points only:
    # phi(a, phi(b,0)) = phi(b,0) = phi(b-1, phi(b,0)) whenever a < b
    if compare(a, b) < 0:
        assert compare(veblen(a, c), veblen(b, c)) <= 0
        if compare(c, veblen(b, c)) < 0:
            assert compare(veblen(a, c), veblen(b, c)) < 0
        assert compare(veblen(c, a), veblen(c, b)) < 0


@given(ordinals(), ordinals(), ordinals(), ordinals())
def test_principal_terms_absorb_sums(a, b, c, d):
    v = veblen(c, d)
    if compare(a, b) <= 0 and compare(b, v) < 0:
        assert compare(nat_sum(a, b), v) < 0


@given(ordinals(), ordinals(), ordinals(), ordinals())
def test_veblen_fixed_points(a, b, c, d):
    if compare(a, b) < 0:
        v = veblen(b, d)
        if compare(c, v) < 0:
            assert compare(veblen(a, c), v) < 0
        assert veblen(a, v) == v


@given(ordinals())
def test_omega_pow_inflationary(a):
    assert compare(a, omega_pow(a)) <= 0


@given(ordinals(), ordinals())
def test_veblen_values_are_omega_powers(a, b):
    if compare(ZERO, a) < 0:
        v = veblen(a, b)
        assert omega_pow(v) == v


@given(ordinals())
def test_render_parse_round_trip(a):
    assert parse_ordinal(render_ordinal(a)) == a


@given(formulas())
def test_o_complexity_below_w_w(f):
    assert compare(o_complexity(f), OMEGA_OMEGA) < 0


@given(formulas(allow_star=False, atomic_only=True))
def test_o_complexity_finite_on_atomic_starfree(f):
    assert is_finite(o_complexity(f))


@given(st.lists(formulas(), max_size=5), st.randoms())
def test_sequent_complexity_order_independent(fs, rng):
    shuffled = list(fs)
    rng.shuffle(shuffled)
    assert o_complexity(tuple(fs)) == o_complexity(tuple(shuffled))


def test_random_generator_yields_canonical_values():
    rng = random.Random(7)
    for _ in range(300):
        a = random_ordinal(rng)
        assert parse_ordinal(render_ordinal(a)) == a
