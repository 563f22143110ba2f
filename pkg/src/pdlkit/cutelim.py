"""Cut degrees and cut elimination on finite derivations.

The reduction operator dissolves one cut whose formula dominates every cut
above it, by case analysis on that formula: literal cuts resolve through an
axiom-substitution ascent, boolean and program-connective cuts through the
matching inversions followed by cuts on the pieces, and modal cuts by
grafting the premise generalizations of the two sides together.  The
elimination driver sweeps the tree at descending degree moduli until no cut
remains, keeping the endsequent fixed; fresh ordinal labels are assigned
bottom-up as the least notations above the premises, and the stated height
bounds are checked on every run.

Cut formulas containing a starred program are rejected: dissolving them
would take the unfolding rule with infinitely many premises, which finite
trees cannot carry.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .calculus import (
    Derivation,
    _align_premise,
    _bump,
    _label,
    _remove,
    _star_free,
    _without,
    contract,
    cut_intro,
    gen_intro,
    invert_and,
    invert_modal,
    invert_or,
    join_chain,
    split_chain,
    weaken,
)
from .formula import (
    Alt,
    And,
    Atom,
    Box,
    Comp,
    Dia,
    Lit,
    Or,
    SeqFormula,
    ShapeError,
    Star,
    render,
    seq_negate,
)
from .ordinal import (
    OMEGA,
    ONE,
    ZERO,
    Ord,
    compare,
    nat_sum,
    o_complexity,
    omega_pow,
    ord_sum,
    veblen,
)


class StarredCut(ShapeError):
    """A cut formula contains a starred program and cannot be dissolved."""


@dataclass(frozen=True)
class ReductionStep:
    """One application of the reduction operator, as logged by the driver."""

    formula: SeqFormula
    modulus: Ord
    deg_before: Ord
    deg_after: Ord
    height_left: Ord
    height_right: Ord
    height_after: Ord
    height_bound: Ord

    def describe(self) -> str:
        return (f"cut on {render(self.formula)} at modulus {self.modulus}: "
                f"deg {self.deg_before} -> {self.deg_after}, "
                f"h {self.height_left} / {self.height_right} -> "
                f"{self.height_after} (< {self.height_bound})")


def deg(deriv: Derivation) -> Ord:
    """Largest o(C)+1 over the cut formulas in the tree; zero when cutfree."""
    out = ZERO
    stack = [deriv]
    while stack:
        node = stack.pop()
        if node.rule == "Cut":
            if node.cut_formula is None:
                raise ShapeError("cut node lacks its cut formula")
            value = ord_sum(o_complexity(node.cut_formula), ONE)
            if compare(value, out) > 0:
                out = value
        stack.extend(node.children)
    return out


def reduce_cut(deriv: Derivation) -> Derivation:
    """Dissolve the cut at the root of ``deriv``.

    The premises must be cutfree.  The result proves the same endsequent,
    its degree drops strictly, and its height stays below the symmetric sum
    of the premise heights plus w.
    """
    if deriv.rule != "Cut" or deriv.cut_formula is None:
        raise ShapeError("the reduction wants a derivation ending in a cut")
    c = deriv.cut_formula
    if not _star_free(c):
        raise StarredCut(f"cut formula {render(c)} contains a starred program")
    left, right = deriv.children
    if deg(left) != ZERO or deg(right) != ZERO:
        raise ShapeError("premises of the reduced cut must be cutfree")
    out = _align_premise(_relabel(_reduce(c, left, right)), deriv.sequent)
    before = deg(deriv)
    if compare(deg(out), before) >= 0:
        raise RuntimeError("cut reduction did not lower the degree")
    bound = ord_sum(nat_sum(left.ord_label, right.ord_label), OMEGA)
    if compare(out.ord_label, bound) >= 0:
        raise RuntimeError("cut reduction exceeded its height bound")
    return out


def eliminate(deriv: Derivation,
              trace: list[ReductionStep] | None = None) -> Derivation:
    """Remove every cut, by sweeps at descending degree moduli.

    ``trace`` collects one ReductionStep per dissolved cut.  The result is
    checked on every run to be cutfree, to prove the same endsequent and to
    stay below the height bound phi(alpha, h) for the least alpha with
    deg(deriv) < w^alpha.
    """
    _require_star_free(deriv)
    delta = deg(deriv)
    if delta == ZERO:
        return deriv
    alpha = _log_omega(delta)
    out = _rplus(ONE, alpha, deriv, trace)
    if deg(out) != ZERO:
        raise RuntimeError("elimination left a cut behind")
    bound = veblen(alpha, deriv.ord_label)
    if compare(out.ord_label, bound) >= 0:
        raise RuntimeError("elimination exceeded its height bound")
    return _align_premise(out, deriv.sequent)


def _require_star_free(deriv: Derivation) -> None:
    stack = [deriv]
    while stack:
        node = stack.pop()
        if node.rule == "Cut" and node.cut_formula is not None \
                and not _star_free(node.cut_formula):
            raise StarredCut(
                f"cut formula {render(node.cut_formula)} contains a starred program")
        stack.extend(node.children)


def _log_omega(delta: Ord) -> Ord:
    """Least alpha with delta < w^alpha."""
    if not delta.terms:
        return ZERO
    head = delta.terms[0][0]
    exponent = head.b if head.a == ZERO else Ord(((head, 1),))
    return ord_sum(exponent, ONE)


# ---------------------------------------------------------------------------
# the driver
#
# _rplus(rho, alpha, d) takes deg(d) < rho + w^alpha to a tree of degree
# below rho.  At alpha = 0 one sweep dissolves every cut of degree exactly
# rho; at alpha > 0 the gap between deg(d) and rho splits into a descending
# sum of w-powers below alpha, one nested pass each.


def _rplus(rho: Ord, alpha: Ord, deriv: Derivation,
           trace: list[ReductionStep] | None) -> Derivation:
    if compare(deg(deriv), rho) < 0:
        return deriv
    if alpha == ZERO:
        return _sweep(rho, deriv, trace)
    plan = []
    acc = rho
    for e in _split_gap(rho, alpha, deg(deriv)):
        plan.append((acc, e))
        acc = ord_sum(acc, omega_pow(e))
    out = deriv
    for modulus, e in reversed(plan):
        out = _rplus(modulus, e, out, trace)
    return out


def _split_gap(rho: Ord, alpha: Ord, delta: Ord) -> list[Ord]:
    """Exponents a1 >= ... >= an below alpha with delta < rho + w^a1 + ..."""
    exps: list[Ord] = []
    for term, count in delta.terms:
        e = term.b if term.a == ZERO else Ord(((term, 1),))
        if compare(e, alpha) < 0:
            exps.extend([e] * count)
    exps.append(ZERO)
    return exps


def _sweep(rho: Ord, deriv: Derivation,
           trace: list[ReductionStep] | None) -> Derivation:
    if deriv.rule == "Cut":
        c = deriv.cut_formula
        if c is None:
            raise ShapeError("cut node lacks its cut formula")
        if compare(ord_sum(o_complexity(c), ONE), rho) >= 0:
            left = _rplus(rho, ZERO, deriv.children[0], trace)
            right = _rplus(rho, ZERO, deriv.children[1], trace)
            before = ord_sum(o_complexity(c), ONE)
            for side in (left, right):
                if compare(deg(side), before) > 0:
                    before = deg(side)
            out = _relabel(_reduce(c, left, right))
            after = deg(out)
            bound = ord_sum(nat_sum(left.ord_label, right.ord_label), OMEGA)
            if compare(after, before) >= 0:
                raise RuntimeError("cut reduction did not lower the degree")
            if compare(after, rho) >= 0:
                raise RuntimeError("sweep left a cut at or above its modulus")
            if compare(out.ord_label, bound) >= 0:
                raise RuntimeError("cut reduction exceeded its height bound")
            if trace is not None:
                trace.append(ReductionStep(
                    formula=c, modulus=rho, deg_before=before, deg_after=after,
                    height_left=left.ord_label, height_right=right.ord_label,
                    height_after=out.ord_label, height_bound=bound))
            return out
    kids = tuple(_rplus(rho, ZERO, child, trace) for child in deriv.children)
    if kids == deriv.children:
        return deriv
    return Derivation(deriv.sequent, deriv.rule, kids, deriv.principal,
                      _label(kids, deriv.ord_label), deriv.prefix_len,
                      deriv.m, deriv.cut_formula)


# ---------------------------------------------------------------------------
# the reduction cases
#
# _reduce(c, d1, d2) dissolves a cut on c between d1 : c, Gamma and
# d2 : ~c, Pi into a derivation of Gamma u Pi whose cuts all sit strictly
# below o(c)+1.  Cuts already inside the premises ride along untouched; the
# fallback dissolves them when an ascent or inversion trips over one.


def _reduce(c: SeqFormula, d1: Derivation, d2: Derivation) -> Derivation:
    try:
        return _reduce_cases(c, d1, d2)
    except ShapeError:
        return _reduce_cases(c, _dissolve(d1), _dissolve(d2))


def _reduce_cases(c: SeqFormula, d1: Derivation, d2: Derivation) -> Derivation:
    if isinstance(c, Lit):
        return _case_literal(c, d1, d2)
    if isinstance(c, (And, Box)):
        return _reduce_cases(seq_negate(c), d2, d1)
    if isinstance(c, Or):
        return _case_or(c, d1, d2)
    if isinstance(c, Dia):
        depth = 0
        cur: SeqFormula = c
        while isinstance(cur, Dia):
            prog = cur.prog
            if isinstance(prog, Star):
                raise StarredCut(
                    f"cut formula {render(c)} contains a starred program")
            if isinstance(prog, Alt):
                return _case_union(c, depth, d1, d2)
            if isinstance(prog, Comp):
                return _case_comp(c, depth, d1, d2)
            depth += 1
            cur = cur.body
        return _case_modal(c, d1, d2)
    raise ShapeError(f"no reduction for cut formula {render(c)}")


def _context(deriv: Derivation, f: SeqFormula) -> tuple[SeqFormula, ...]:
    return _remove(deriv.sequent, (f,))


def _case_literal(lit: Lit, d1: Derivation, d2: Derivation) -> Derivation:
    pi = _context(d2, seq_negate(lit))

    def at_axiom(leaf: Derivation) -> Derivation:
        extra = _remove(leaf.sequent, (lit, seq_negate(lit)))
        return weaken(d2, extra)

    return _substitute(d1, lit, pi, at_axiom)


def _case_or(c: Or, d1: Derivation, d2: Derivation) -> Derivation:
    neg = seq_negate(c)
    pi = _context(d2, neg)
    pieces = invert_or(d1, c)
    first = invert_and(d2, neg, 0)
    second = invert_and(d2, neg, 1)
    inner = cut_intro(pieces, first, c.left)
    out = cut_intro(inner, second, c.right)
    for f in pi:
        out = _contract_safe(out, f)
    return out


def _case_union(c: Dia, depth: int, d1: Derivation, d2: Derivation) -> Derivation:
    neg = seq_negate(c)
    pi = _context(d2, neg)
    mods, rest = split_chain(c, depth)
    left_arm = join_chain(mods, Dia(rest.prog.left, rest.body))
    right_arm = join_chain(mods, Dia(rest.prog.right, rest.body))
    pieces = invert_modal("DiaUnionInv", d1, c, depth)
    first = invert_modal("BoxUnionInv1", d2, neg, depth)
    second = invert_modal("BoxUnionInv2", d2, neg, depth)
    inner = cut_intro(pieces, first, left_arm)
    out = cut_intro(inner, second, right_arm)
    for f in pi:
        out = _contract_safe(out, f)
    return out


def _case_comp(c: Dia, depth: int, d1: Derivation, d2: Derivation) -> Derivation:
    # Unchaining a composition keeps the ordinal complexity of the cut
    # formula, so the fresh cut dissolves right away; each round removes one
    # program connective.
    mods, rest = split_chain(c, depth)
    unchained = join_chain(
        mods, Dia(rest.prog.left, Dia(rest.prog.right, rest.body)))
    pieces = invert_modal("DiaCompInv", d1, c, depth)
    dual = invert_modal("BoxCompInv", d2, seq_negate(c), depth)
    return _reduce_cases(unchained, pieces, dual)


def _case_modal(c: Dia, d1: Derivation, d2: Derivation) -> Derivation:
    p = c.prog
    body = c.body
    pi = _context(d2, seq_negate(c))

    def at_gen(node: Derivation) -> Derivation:
        premise = node.children[0]
        principals = [node.sequent[i] for i in node.principal]
        context = _without(node.sequent, node.principal)
        principals.remove(c)
        dias = tuple(f.body for f in principals if isinstance(f, Dia))
        box = next(f.body for f in principals if isinstance(f, Box))
        core = _graft_gen(premise, d2, p, body, dias, box)
        return weaken(core, context)

    return _substitute(d1, c, pi, at_gen)


def _graft_gen(d1p: Derivation, d2: Derivation, p: Atom, a: SeqFormula,
               dias: tuple[SeqFormula, ...], box: SeqFormula) -> Derivation:
    """Thread the opened left generalization through d2.

    d1p proves a, B..., D for diamond bodies B and box body D; d2 proves
    [p]~a, Pi.  The result proves <p>B..., [p]D, Pi: wherever [p]~a was
    introduced by a generalization, its premise is cut against d1p on a and
    the pieces are regeneralized.
    """
    target = Box(p, seq_negate(a))
    pieces = tuple(Dia(p, b) for b in dias) + (Box(p, box),)

    def at_gen(node: Derivation) -> Derivation:
        premise = node.children[0]
        principals = [node.sequent[i] for i in node.principal]
        context = _without(node.sequent, node.principal)
        spectators = tuple(f.body for f in principals if isinstance(f, Dia))
        grafted = cut_intro(d1p, premise, a)
        wanted = dias + (box,) + spectators
        chis = (0,) * len(dias) + (1,) + (0,) * len(spectators)
        return gen_intro(_align_premise(grafted, wanted), p, chis, context)

    return _substitute(d2, target, pieces, at_gen)


# ---------------------------------------------------------------------------
# the substitution ascent
#
# One distinguished copy of ``target`` is replaced by ``pieces`` in every
# sequent it rides through.  Where no spare copy exists the occurrence is
# principal, and ``on_principal`` rebuilds that node; sequents are
# multisets, so any copy may serve as the distinguished one.


def _substitute(node: Derivation, target: SeqFormula,
                pieces: tuple[SeqFormula, ...], on_principal) -> Derivation:
    protected = set(node.principal)
    idx = None
    for i in range(len(node.sequent) - 1, -1, -1):
        if node.sequent[i] == target and i not in protected:
            idx = i
            break
    if idx is None:
        return on_principal(node)

    seq = node.sequent[:idx] + pieces + node.sequent[idx + 1:]
    delta = len(pieces) - 1
    principal = tuple(j if j < idx else j + delta for j in node.principal)
    rule = node.rule

    if rule in ("Ax", "Gen"):
        return Derivation(seq, rule, node.children, principal, node.ord_label,
                          node.prefix_len, node.m, node.cut_formula)
    if rule == "Weak":
        child = node.children[0]
        if Counter(node.sequent)[target] > Counter(child.sequent)[target]:
            return Derivation(seq, rule, node.children, principal,
                              node.ord_label, node.prefix_len, node.m,
                              node.cut_formula)
        kid = _substitute(child, target, pieces, on_principal)
        return Derivation(seq, rule, (kid,), principal,
                          _label((kid,), node.ord_label), node.prefix_len,
                          node.m, node.cut_formula)
    if rule == "Cut":
        left, right = node.children
        spare = Counter(left.sequent)[target]
        if target == node.cut_formula:
            spare -= 1
        if spare > 0:
            kid = _substitute(left, target, pieces, on_principal)
            return cut_intro(kid, right, node.cut_formula, node.ord_label)
        kid = _substitute(right, target, pieces, on_principal)
        return cut_intro(left, kid, node.cut_formula, node.ord_label)

    # Context-sharing rules: the copy rides into every premise.
    kids = []
    for child in node.children:
        if Counter(child.sequent)[target] < 1:
            raise ShapeError("a premise lost the tracked formula")
        kids.append(_substitute(child, target, pieces, on_principal))
    return Derivation(seq, rule, tuple(kids), principal,
                      _label(tuple(kids), node.ord_label), node.prefix_len,
                      node.m, node.cut_formula)


# ---------------------------------------------------------------------------
# contraction and dissolution
#
# The two-cut recombinations double the right-hand context, and merging it
# back crosses the fresh cuts.  Contraction over a cut can block when both
# copies are in genuine use; dissolving the cuts first always unblocks it,
# and terminates because every dissolved formula is smaller than the one
# that spawned it (fewer program connectives at equal ordinal complexity,
# or lower ordinal complexity outright).


def _contract_safe(deriv: Derivation, f: SeqFormula) -> Derivation:
    try:
        return contract(deriv, f)
    except ShapeError:
        return contract(_dissolve(deriv), f)


def _dissolve(node: Derivation) -> Derivation:
    kids = tuple(_dissolve(child) for child in node.children)
    if node.rule == "Cut":
        if node.cut_formula is None:
            raise ShapeError("cut node lacks its cut formula")
        return _dissolve(_reduce(node.cut_formula, kids[0], kids[1]))
    if kids == node.children:
        return node
    return Derivation(node.sequent, node.rule, kids, node.principal,
                      _label(kids, node.ord_label), node.prefix_len, node.m,
                      node.cut_formula)


def _relabel(node: Derivation) -> Derivation:
    kids = tuple(_relabel(child) for child in node.children)
    return Derivation(node.sequent, node.rule, kids, node.principal,
                      _bump(kids), node.prefix_len, node.m, node.cut_formula)
