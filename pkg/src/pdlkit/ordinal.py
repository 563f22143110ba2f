"""Ordinal notations below phi(w,0) and the ordinal complexity measure."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .formula import Alt, And, Atom, Box, Comp, Dia, Lit, Or, Star


@dataclass(frozen=True)
class Veb:
    """Principal term phi(a, b) of the binary Veblen function."""

    a: Ord
    b: Ord


@dataclass(frozen=True)
class Ord:
    """Sum of Veblen terms with positive coefficients, strictly descending."""

    terms: tuple[tuple[Veb, int], ...] = ()

    def __lt__(self, other: Ord) -> bool:
        return compare(self, other) < 0

    def __le__(self, other: Ord) -> bool:
        return compare(self, other) <= 0

    def __gt__(self, other: Ord) -> bool:
        return compare(self, other) > 0

    def __ge__(self, other: Ord) -> bool:
        return compare(self, other) >= 0

    def __str__(self) -> str:
        return render_ordinal(self)


ZERO = Ord()
ONE = Ord(((Veb(ZERO, ZERO), 1),))
OMEGA = Ord(((Veb(ZERO, ONE), 1),))


def nat(n: int) -> Ord:
    """The finite ordinal n."""
    if n < 0:
        raise ValueError("ordinals are non-negative")
    return Ord(((Veb(ZERO, ZERO), n),)) if n else ZERO


def is_finite(x: Ord) -> bool:
    return not x.terms or (len(x.terms) == 1 and x.terms[0][0] == Veb(ZERO, ZERO))


def to_int(x: Ord) -> int:
    if not is_finite(x):
        raise ValueError(f"{render_ordinal(x)} is not finite")
    return x.terms[0][1] if x.terms else 0


def _term_value(t: Veb) -> Ord:
    return Ord(((t, 1),))


def _cmp_term(s: Veb, t: Veb) -> int:
    c = compare(s.a, t.a)
    if c == 0:
        return compare(s.b, t.b)
    if c < 0:
        # phi(t.a, -) fixes the value of t, so s measures against it by s.b
        return compare(s.b, _term_value(t))
    return -compare(t.b, _term_value(s))


def compare(x: Ord, y: Ord) -> int:
    """-1, 0 or 1 as x is less than, equal to or greater than y."""
    for (s, cs), (t, ct) in zip(x.terms, y.terms):
        c = _cmp_term(s, t)
        if c != 0:
            return c
        if cs != ct:
            return -1 if cs < ct else 1
    if len(x.terms) == len(y.terms):
        return 0
    return -1 if len(x.terms) < len(y.terms) else 1


def nat_sum(x: Ord, y: Ord) -> Ord:
    """Symmetric sum: merge the two term lists."""
    terms: list[tuple[Veb, int]] = []
    i = j = 0
    xt, yt = x.terms, y.terms
    while i < len(xt) and j < len(yt):
        c = _cmp_term(xt[i][0], yt[j][0])
        if c > 0:
            terms.append(xt[i])
            i += 1
        elif c < 0:
            terms.append(yt[j])
            j += 1
        else:
            terms.append((xt[i][0], xt[i][1] + yt[j][1]))
            i += 1
            j += 1
    terms.extend(xt[i:])
    terms.extend(yt[j:])
    return Ord(tuple(terms))


def ord_sum(x: Ord, y: Ord) -> Ord:
    """Ordinary sum: terms of x below the head of y are absorbed."""
    if not y.terms:
        return x
    head = y.terms[0][0]
    n = 0
    while n < len(x.terms) and _cmp_term(x.terms[n][0], head) > 0:
        n += 1
    keep = x.terms[:n]
    if n < len(x.terms) and _cmp_term(x.terms[n][0], head) == 0:
        merged = (head, x.terms[n][1] + y.terms[0][1])
        return Ord(keep + (merged,) + y.terms[1:])
    return Ord(keep + y.terms)


def veblen(a: Ord, b: Ord) -> Ord:
    """phi(a, b), collapsing fixed points of higher Veblen functions."""
    if len(b.terms) == 1 and b.terms[0][1] == 1 and compare(b.terms[0][0].a, a) > 0:
        return b
    return Ord(((Veb(a, b), 1),))


def omega_pow(a: Ord) -> Ord:
    return veblen(ZERO, a)


def times_omega(a: Ord) -> Ord:
    """w^(d+1) for d the omega-degree of a's leading term; zero counts as degree 0."""
    if not a.terms:
        return OMEGA
    t = a.terms[0][0]
    d = t.b if t.a == ZERO else _term_value(t)
    return omega_pow(ord_sum(d, ONE))


OMEGA_OMEGA = omega_pow(OMEGA)
PHI_OMEGA_0 = veblen(OMEGA, ZERO)  # sentinel bound; nothing larger is constructed


def _succ(x: Ord) -> Ord:
    return ord_sum(x, ONE)


def _o(x) -> Ord:
    if isinstance(x, tuple):
        out = ZERO
        for f in x:
            out = nat_sum(out, _o(f))
        return out
    if isinstance(x, (Lit, Atom)):
        return ZERO
    if isinstance(x, (Or, And, Alt)):
        left, right = _o(x.left), _o(x.right)
        return _succ(left if compare(left, right) >= 0 else right)
    if isinstance(x, Comp):
        return _succ(nat_sum(_o(x.left), _o(x.right)))
    if isinstance(x, Star):
        return times_omega(_o(x.body))
    return _succ(nat_sum(_o(x.prog), _o(x.body)))


def o_complexity(x) -> Ord:
    """Ordinal complexity of a formula, program or sequent; always below w^w."""
    out = _o(x)
    assert compare(out, OMEGA_OMEGA) < 0
    return out


# ---------------------------------------------------------------------------
# Text form
# ---------------------------------------------------------------------------

def _render_term(t: Veb) -> str:
    if t.a == ZERO:
        if t.b == ZERO:
            return "1"
        if t.b == ONE:
            return "w"
        exp = render_ordinal(t.b)
        if not (exp.isdigit() or exp == "w"):
            exp = f"({exp})"
        return f"w^{exp}"
    return f"phi({render_ordinal(t.a)},{render_ordinal(t.b)})"


def render_ordinal(x: Ord) -> str:
    if not x.terms:
        return "0"
    parts = []
    for t, c in x.terms:
        base = _render_term(t)
        if base == "1":
            parts.append(str(c))
        elif c == 1:
            parts.append(base)
        else:
            parts.append(f"{base}*{c}")
    return " + ".join(parts)


_ORD_TOKEN = re.compile(r"\s*(\d+|w|phi|[+^*(),])")


def _ord_tokens(text: str) -> list[str]:
    out = []
    pos = 0
    while pos < len(text):
        m = _ORD_TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ValueError(f"bad ordinal syntax at {text[pos:]!r}")
            break
        out.append(m.group(1))
        pos = m.end()
    out.append("")
    return out


def parse_ordinal(text: str) -> Ord:
    """Inverse of render_ordinal on canonical output."""
    toks = _ord_tokens(text)
    pos = 0

    def peek() -> str:
        return toks[pos]

    def take(expect: str | None = None) -> str:
        nonlocal pos
        tok = toks[pos]
        if expect is not None and tok != expect:
            raise ValueError(f"expected {expect!r}, found {tok!r}")
        pos += 1
        return tok

    def notation() -> Ord:
        out = term()
        while peek() == "+":
            take()
            out = nat_sum(out, term())
        return out

    def term() -> Ord:
        f = factor()
        if peek() == "*":
            take()
            c = int(take())
            if len(f.terms) != 1:
                raise ValueError("coefficient on a non-principal part")
            t, c0 = f.terms[0]
            return Ord(((t, c0 * c),))
        return f

    def factor() -> Ord:
        tok = take()
        if tok.isdigit():
            return nat(int(tok))
        if tok == "w":
            if peek() == "^":
                take()
                return omega_pow(exponent())
            return OMEGA
        if tok == "phi":
            take("(")
            a = notation()
            take(",")
            b = notation()
            take(")")
            return veblen(a, b)
        raise ValueError(f"unexpected token {tok!r}")

    def exponent() -> Ord:
        if peek() == "(":
            take()
            out = notation()
            take(")")
            return out
        tok = take()
        if tok.isdigit():
            return nat(int(tok))
        if tok == "w":
            return OMEGA
        raise ValueError(f"unexpected exponent {tok!r}")

    out = notation()
    if peek() != "":
        raise ValueError(f"trailing input {peek()!r}")
    return out
