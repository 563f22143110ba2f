"""Deterministic proof search for atomic-program star-free sequents.

The search works bottom-up with a fixed priority: split a disjunction if one
occurs at the top level, otherwise a conjunction, otherwise the sequent is
literals and modal atoms only and the choice is which box to generalize over.
With exactly one box present the Gen step is forced; with several, the first
box either becomes the Gen principal or is weakened away, which makes the
node a binary OR over those two alternatives.  Reading steps as gates (AND
for the conjunction split, OR for the box choice, ID for the rest) turns the
search tree into a circuit whose value at the root decides derivability.

The evaluator walks that circuit iteratively and keeps a single branch in
memory, so the peak retained path is bounded by the sequent's symbol count.
"""

from __future__ import annotations

from dataclasses import dataclass

from .calculus import Derivation, ax_leaf, and_intro, gen_intro, or_intro, weaken
from .formula import (
    And, Box, Dia, Lit, Or, Sequent, SeqFormula, classify_fragment, render,
    render_sequent,
)

KINDS = ("ax", "fail", "or", "and", "gen", "weak")


@dataclass(frozen=True)
class SearchTree:
    """One node of the distinguished search tree.

    ``position`` is the index of the formula the step acts on: the split
    disjunction or conjunction, or the chosen box.  Leaves carry -1.
    """

    node: Sequent
    kind: str
    position: int = -1
    children: tuple["SearchTree", ...] = ()

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)


@dataclass(frozen=True)
class Proved:
    derivation: Derivation

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Refuted:
    trace: str

    def __bool__(self) -> bool:
        return False


@dataclass
class SearchStats:
    """Instrumentation for one evaluator run."""

    nodes: int = 0
    peak_path: int = 0
    depth_bound: int = 0


def _require_searchable(seq: Sequent) -> tuple[SeqFormula, ...]:
    seq = tuple(seq)
    if not seq:
        raise ValueError("proof search needs a nonempty sequent")
    for f in seq:
        if "L_00" not in classify_fragment(f):
            raise ValueError(
                f"{render(f)} lies outside the atomic-program star-free language")
    return seq


def _size(f: SeqFormula) -> int:
    """Symbol count including modal brackets; every search step shrinks it."""
    if isinstance(f, Lit):
        return 1
    if isinstance(f, (Or, And)):
        return 1 + _size(f.left) + _size(f.right)
    return 1 + _size(f.body)


def seq_size(seq: Sequent) -> int:
    return sum(_size(f) for f in seq)


def _has_pair(seq: Sequent) -> bool:
    lits = {f for f in seq if isinstance(f, Lit)}
    return any(Lit(f.name, not f.neg) in lits for f in lits)


def _classify(seq: Sequent) -> tuple[str, int, tuple[Sequent, ...]]:
    """Kind, acted-on position, and child sequents of the search step."""
    if _has_pair(seq):
        return "ax", -1, ()
    for i, f in enumerate(seq):
        if isinstance(f, Or):
            return "or", i, (seq[:i] + (f.left, f.right) + seq[i + 1:],)
    for i, f in enumerate(seq):
        if isinstance(f, And):
            return "and", i, (seq[:i] + (f.left,) + seq[i + 1:],
                              seq[:i] + (f.right,) + seq[i + 1:])
    boxes = [i for i, f in enumerate(seq) if isinstance(f, Box)]
    if not boxes:
        return "fail", -1, ()
    j = boxes[0]
    prog = seq[j].prog
    premise = (seq[j].body,) + tuple(
        f.body for f in seq if isinstance(f, Dia) and f.prog == prog)
    if len(boxes) == 1:
        return "gen", j, (premise,)
    return "weak", j, (premise, seq[:j] + seq[j + 1:])


def search_tree(seq: Sequent) -> SearchTree:
    """Materialize the whole search tree (exponential; for small inputs)."""
    seq = _require_searchable(seq)

    def build(s: Sequent) -> SearchTree:
        kind, pos, children = _classify(s)
        return SearchTree(s, kind, pos, tuple(build(c) for c in children))

    return build(seq)


def tree_value(tree: SearchTree) -> bool:
    """Gate semantics over a materialized tree: leaves, then AND/OR/ID."""
    if tree.kind == "ax":
        return True
    if tree.kind == "fail":
        return False
    values = [tree_value(c) for c in tree.children]
    if tree.kind == "and":
        return values[0] and values[1]
    if tree.kind == "weak":
        return values[0] or values[1]
    return values[0]


@dataclass
class _Frame:
    seq: Sequent
    kind: str
    children: tuple[Sequent, ...]
    key: frozenset
    idx: int = 0


def _state_key(seq: Sequent) -> frozenset:
    # Multiset key by object identity.  Every formula reachable during one
    # evaluation is a subterm of the input sequent and stays alive, so ids
    # are stable; distinct-but-equal objects merely miss a cache hit.
    counts: dict[int, int] = {}
    for f in seq:
        i = id(f)
        counts[i] = counts.get(i, 0) + 1
    return frozenset(counts.items())


def eval_circuit(seq: Sequent, stats: SearchStats | None = None) -> bool:
    """Circuit value of the search tree, computed one branch at a time.

    The value of a sequent is a function of its multiset, so repeated
    sub-multisets (common in iterated-diamond expansions) are evaluated
    once and answered from a memo afterwards.
    """
    seq = _require_searchable(seq)
    st = stats if stats is not None else SearchStats()
    st.depth_bound = seq_size(seq)

    stack: list[_Frame] = []
    memo: dict[frozenset, bool] = {}
    value = False

    def push(s: Sequent) -> bool:
        nonlocal value
        st.nodes += 1
        key = _state_key(s)
        if key in memo:
            value = memo[key]
            return False
        kind, _, children = _classify(s)
        stack.append(_Frame(s, kind, children, key))
        st.peak_path = max(st.peak_path, len(stack))
        return True

    if push(seq):
        while stack:
            frame = stack[-1]
            if frame.kind == "ax" or frame.kind == "fail":
                value = frame.kind == "ax"
                memo[frame.key] = value
                stack.pop()
                continue
            if frame.idx > 0:
                settled = (frame.idx == len(frame.children)
                           or (frame.kind == "and" and not value)
                           or (frame.kind == "weak" and value))
                if settled:
                    memo[frame.key] = value
                    stack.pop()
                    continue
            frame.idx += 1
            push(frame.children[frame.idx - 1])
    return value


def prove(seq: Sequent) -> Proved | Refuted:
    """Decide derivability; extract a derivation or a falsifying path."""
    seq = _require_searchable(seq)
    if eval_circuit(seq):
        return Proved(_extract(seq))
    return Refuted(_falsifying_path(seq))


def _extract(seq: Sequent) -> Derivation:
    kind, pos, children = _classify(seq)
    if kind == "ax":
        return ax_leaf(seq)
    if kind == "or":
        f = seq[pos]
        return or_intro(_extract(children[0]), f.left, f.right)
    if kind == "and":
        f = seq[pos]
        return and_intro(_extract(children[0]), _extract(children[1]),
                         f.left, f.right)
    if kind == "gen" or eval_circuit(children[0]):
        return _extract_gen(seq, pos, children[0])
    # second alternative of a box-choice node: the sequent without the box
    return weaken(_extract(children[1]), (seq[pos],))


def _extract_gen(seq: Sequent, j: int, premise: Sequent) -> Derivation:
    box = seq[j]
    sub = _extract(premise)
    # sub's endsequent is a permutation of the premise; put the single box
    # polarity on a copy of the box body, diamonds everywhere else
    chis = [0] * len(sub.sequent)
    chis[sub.sequent.index(box.body)] = 1
    principal = {j} | {i for i, f in enumerate(seq)
                       if isinstance(f, Dia) and f.prog == box.prog}
    context = tuple(f for i, f in enumerate(seq) if i not in principal)
    return gen_intro(sub, box.prog, tuple(chis), context)


def _falsifying_path(seq: Sequent) -> str:
    """One maximal path of the search tree along which every node fails."""
    lines = []
    current = seq
    while True:
        kind, pos, children = _classify(current)
        tag = kind if pos < 0 else f"{kind}@{pos}"
        lines.append(f"{tag} {render_sequent(current)}")
        if kind == "fail":
            return "\n".join(lines)
        if kind == "and" and eval_circuit(children[0]):
            current = children[1]
        else:
            current = children[0]
