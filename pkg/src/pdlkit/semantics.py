"""Kripke frames, evaluation, bounded countermodel search, tautology checking.

This module is the toolkit's independent oracle: nothing here knows about
derivations or proof search, so calculus-level results can be cross-checked
against plain model theory.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .formula import (
    Alt, And, Atom, Box, Comp, Dia, Lit, Or, Sequent, SeqFormula, Star,
    classify_fragment, interpret_into_L00, is_propositional, variables,
)

Edge = tuple[int, int]


@dataclass
class KripkeFrame:
    """Finite frame: worlds 0..n-1, labeled edges, and a valuation."""

    worlds: int
    access: dict[str, frozenset[Edge]] = field(default_factory=dict)
    valuation: dict[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        self.access = {p: frozenset(map(tuple, es)) for p, es in self.access.items()}
        self.valuation = {x: frozenset(ws) for x, ws in self.valuation.items()}
        for p, es in self.access.items():
            for u, v in es:
                if not (0 <= u < self.worlds and 0 <= v < self.worlds):
                    raise ValueError(f"edge {(u, v)} of {p} is out of range")
        for x, ws in self.valuation.items():
            for w in ws:
                if not 0 <= w < self.worlds:
                    raise ValueError(f"world {w} in valuation of {x} is out of range")


def frame_to_json(frame: KripkeFrame) -> dict:
    return {
        "worlds": frame.worlds,
        "access": {p: sorted(map(list, es)) for p, es in frame.access.items()},
        "valuation": {x: sorted(ws) for x, ws in frame.valuation.items()},
    }


def frame_from_json(d: dict) -> KripkeFrame:
    return KripkeFrame(d["worlds"],
                       {p: frozenset(map(tuple, es))
                        for p, es in d.get("access", {}).items()},
                       {x: frozenset(ws)
                        for x, ws in d.get("valuation", {}).items()})


def _relation(frame: KripkeFrame, prog) -> frozenset[Edge]:
    if isinstance(prog, Atom):
        return frame.access.get(prog.name, frozenset())
    if isinstance(prog, Alt):
        return _relation(frame, prog.left) | _relation(frame, prog.right)
    if isinstance(prog, Comp):
        left = _relation(frame, prog.left)
        right = _relation(frame, prog.right)
        return frozenset((u, w) for u, v in left for v2, w in right if v == v2)
    # reflexive-transitive closure
    rel = set((w, w) for w in range(frame.worlds))
    step = _relation(frame, prog.body)
    while True:
        grown = rel | set((u, w) for u, v in rel for v2, w in step if v == v2)
        if grown == rel:
            return frozenset(rel)
        rel = grown


def eval_formula(frame: KripkeFrame, world: int, f: SeqFormula) -> bool:
    """Standard satisfaction at a world."""
    if not 0 <= world < frame.worlds:
        raise ValueError(f"world {world} not in frame")
    if isinstance(f, Lit):
        value = world in frame.valuation.get(f.name, frozenset())
        return value != f.neg
    if isinstance(f, Or):
        return eval_formula(frame, world, f.left) or eval_formula(frame, world, f.right)
    if isinstance(f, And):
        return eval_formula(frame, world, f.left) and eval_formula(frame, world, f.right)
    rel = _relation(frame, f.prog)
    succs = [v for u, v in rel if u == world]
    if isinstance(f, Dia):
        return any(eval_formula(frame, v, f.body) for v in succs)
    return all(eval_formula(frame, v, f.body) for v in succs)


# ---------------------------------------------------------------------------
# Propositional validity
# ---------------------------------------------------------------------------

def _eval_prop(f: SeqFormula, assign: dict[str, bool]) -> bool:
    if isinstance(f, Lit):
        return assign[f.name] != f.neg
    if isinstance(f, Or):
        return _eval_prop(f.left, assign) or _eval_prop(f.right, assign)
    return _eval_prop(f.left, assign) and _eval_prop(f.right, assign)


def taut_check(f: SeqFormula) -> bool:
    """Classical tautology test for purely propositional formulas."""
    if not is_propositional(f):
        raise ValueError("taut_check needs a propositional formula")
    names = sorted(variables(f))
    if len(names) > 20:
        # split on one variable to keep the table bounded
        head = names[0]
        for value in (False, True):
            if not _taut_under(f, {head: value}):
                return False
        return True
    assign: dict[str, bool] = {}
    for bits in itertools.product((False, True), repeat=len(names)):
        assign = dict(zip(names, bits))
        if not _eval_prop(f, assign):
            return False
    return True


def _taut_under(f: SeqFormula, fixed: dict[str, bool]) -> bool:
    names = sorted(v for v in variables(f) if v not in fixed)
    if len(names) > 20:
        head = names[0]
        return all(_taut_under(f, {**fixed, head: value})
                   for value in (False, True))
    for bits in itertools.product((False, True), repeat=len(names)):
        assign = {**fixed, **dict(zip(names, bits))}
        if not _eval_prop(f, assign):
            return False
    return True


# ---------------------------------------------------------------------------
# Bounded countermodel search
# ---------------------------------------------------------------------------

@dataclass
class Verdict:
    valid: bool
    authoritative: bool
    frame: KripkeFrame | None = None
    world: int | None = None

    def __bool__(self) -> bool:
        return self.valid


_CANDIDATE_CAP = 12  # variables + modal subformulas; 2^12 assignments


def _closure(fs: list[SeqFormula]) -> list[SeqFormula]:
    seen: dict[SeqFormula, None] = {}

    def add(f: SeqFormula) -> None:
        if f in seen:
            return
        if isinstance(f, (Or, And)):
            add(f.left)
            add(f.right)
        elif isinstance(f, (Dia, Box)):
            add(f.body)
        seen[f] = None  # children first: the list is in dependency order

    for f in fs:
        add(f)
    return list(seen)


def _modal_depth(f: SeqFormula) -> int:
    if isinstance(f, Lit):
        return 0
    if isinstance(f, (Or, And)):
        return max(_modal_depth(f.left), _modal_depth(f.right))
    return 1 + _modal_depth(f.body)


class _Fixpoint:
    """Realizable truth assignments over the closure, indexed by tree depth.

    An assignment (an int, bit i = truth of closure[i]) is realizable at
    depth k if some world of a tree frame of height <= k makes exactly those
    closure formulas true.  Depth 0 worlds are childless: boxes true,
    diamonds false.  A step assigns each program the maximal set of allowed
    children and checks every existential need has a witness in it.
    """

    def __init__(self, fs: list[SeqFormula]):
        self.fs = fs
        self.closure = _closure(fs)
        self.index = {f: i for i, f in enumerate(self.closure)}
        self.vars = sorted({v for f in fs for v in variables(f)})
        self.modals = [f for f in self.closure if isinstance(f, (Dia, Box))]
        self.progs = sorted({f.prog.name for f in self.modals})
        self.by_prog = {
            p: [f for f in self.modals if f.prog.name == p] for p in self.progs}
        self.cost = len(self.vars) + len(self.modals)
        self.levels: list[set[int]] = []

    def _candidates(self) -> list[int]:
        out = []
        for var_bits in itertools.product((0, 1), repeat=len(self.vars)):
            var_val = dict(zip(self.vars, var_bits))
            for modal_bits in itertools.product((0, 1), repeat=len(self.modals)):
                modal_val = dict(zip(self.modals, modal_bits))
                sigma = 0
                for i, f in enumerate(self.closure):
                    if isinstance(f, Lit):
                        value = var_val[f.name] ^ f.neg
                    elif isinstance(f, Or):
                        value = ((sigma >> self.index[f.left]) |
                                 (sigma >> self.index[f.right])) & 1
                    elif isinstance(f, And):
                        value = ((sigma >> self.index[f.left]) &
                                 (sigma >> self.index[f.right])) & 1
                    else:
                        value = modal_val[f]
                    sigma |= value << i
                out.append(sigma)
        return out

    def _needs(self, sigma: int, p: str):
        """Masks and witness demands this assignment places on p-children."""
        all_one = 0   # bodies that every child must satisfy
        all_zero = 0  # bodies that no child may satisfy
        witness_one = []
        witness_zero = []
        for f in self.by_prog[p]:
            body = 1 << self.index[f.body]
            value = (sigma >> self.index[f]) & 1
            if isinstance(f, Box):
                if value:
                    all_one |= body
                else:
                    witness_zero.append(body)
            elif value:
                witness_one.append(body)
            else:
                all_zero |= body
        return all_one, all_zero, witness_one, witness_zero

    def _realizable(self, sigma: int, prev: set[int]) -> bool:
        for p in self.progs:
            all_one, all_zero, witness_one, witness_zero = self._needs(sigma, p)
            allowed = [c for c in prev
                       if (c & all_one) == all_one and (c & all_zero) == 0]
            for body in witness_one:
                if not any(c & body for c in allowed):
                    return False
            for body in witness_zero:
                if not any((c & body) == 0 for c in allowed):
                    return False
        return True

    def run(self, depth_bound: int) -> bool:
        """Compute levels up to depth_bound; True if they stabilized."""
        candidates = self._candidates()
        base = {s for s in candidates
                if all(((s >> self.index[f]) & 1) == isinstance(f, Box)
                       for f in self.modals)}
        self.levels = [base]
        current = base
        for _ in range(depth_bound):
            grown = {s for s in candidates
                     if s in current or self._realizable(s, current)}
            if grown == current:
                return True
            self.levels.append(grown)
            current = grown
        return depth_bound >= max((_modal_depth(f) for f in self.fs), default=0)

    def falsifier(self) -> int | None:
        mask = 0
        for f in self.fs:
            mask |= 1 << self.index[f]
        for sigma in sorted(self.levels[-1]):
            if (sigma & mask) == 0:
                return sigma
        return None

    def extract(self, sigma: int) -> tuple[KripkeFrame, int]:
        """Build a tree frame whose root realizes sigma."""
        level = next(k for k, lvl in enumerate(self.levels) if sigma in lvl)
        worlds: list[int] = []
        edges: dict[str, set[Edge]] = {p: set() for p in self.progs}
        valuation: dict[str, set[int]] = {x: set() for x in self.vars}

        def build(s: int, k: int) -> int:
            w = len(worlds)
            worlds.append(s)
            for x in self.vars:
                if Lit(x) in self.index:
                    value = (s >> self.index[Lit(x)]) & 1
                else:  # the variable occurs only negated
                    value = 1 - ((s >> self.index[Lit(x, neg=True)]) & 1)
                if value:
                    valuation[x].add(w)
            if k == 0:
                return w
            prev = self.levels[k - 1]
            for p in self.progs:
                all_one, all_zero, witness_one, witness_zero = self._needs(s, p)
                allowed = [c for c in sorted(prev)
                           if (c & all_one) == all_one and (c & all_zero) == 0]
                picked: dict[int, None] = {}
                for body in witness_one:
                    picked[next(c for c in allowed if c & body)] = None
                for body in witness_zero:
                    picked[next(c for c in allowed if not c & body)] = None
                for child in picked:
                    child_level = next(
                        j for j, lvl in enumerate(self.levels) if child in lvl)
                    v = build(child, min(child_level, k - 1))
                    edges[p].add((w, v))
            return w

        build(sigma, level)
        frame = KripkeFrame(
            len(worlds),
            {p: frozenset(es) for p, es in edges.items()},
            {x: frozenset(ws) for x, ws in valuation.items()})
        return frame, 0


def _starfree_search(seq: Sequent, depth_bound: int) -> Verdict | None:
    fs = [interpret_into_L00(f) for f in seq]
    engine = _Fixpoint(fs)
    if engine.cost > _CANDIDATE_CAP:
        return None
    authoritative = engine.run(depth_bound)
    sigma = engine.falsifier()
    if sigma is None:
        return Verdict(True, authoritative)
    frame, world = engine.extract(sigma)
    for f in seq:
        assert not eval_formula(frame, world, f)
    return Verdict(False, True, frame, world)


def _tree_frames(size_bound: int, progs: list[str]):
    """Rooted labeled trees with at most one extra edge, smallest first."""
    for n in range(1, size_bound + 1):
        parent_space = [
            [(parent, p) for parent in range(i) for p in progs]
            for i in range(1, n)]
        for shape in itertools.product(*parent_space):
            base: dict[str, set[Edge]] = {p: set() for p in progs}
            for child, (parent, p) in enumerate(shape, start=1):
                base[p].add((parent, child))
            yield n, base
            for u in range(n):
                for v in range(n):
                    for p in progs:
                        if (u, v) in base[p]:
                            continue
                        extra = {q: set(es) for q, es in base.items()}
                        extra[p].add((u, v))
                        yield n, extra


def _frame_search(seq: Sequent, size_bound: int, budget: int) -> Verdict:
    progs = sorted({name for f in seq for name in _prog_names(f)}) or ["p"]
    names = sorted({v for f in seq for v in variables(f)})
    spent = 0
    for n, access in _tree_frames(size_bound, progs):
        for bits in itertools.product((False, True), repeat=n * len(names)):
            valuation = {
                x: frozenset(w for w in range(n) if bits[i * n + w])
                for i, x in enumerate(names)}
            frame = KripkeFrame(n, {p: frozenset(es) for p, es in access.items()},
                                valuation)
            spent += n * max(len(seq), 1)
            if all(not eval_formula(frame, 0, f) for f in seq):
                return Verdict(False, False, frame, 0)
            if spent >= budget:
                return Verdict(True, False)
    return Verdict(True, False)


def _prog_names(f: SeqFormula) -> set[str]:
    if isinstance(f, Lit):
        return set()
    if isinstance(f, (Or, And)):
        return _prog_names(f.left) | _prog_names(f.right)
    out = set()
    stack = [f.prog]
    while stack:
        p = stack.pop()
        if isinstance(p, Atom):
            out.add(p.name)
        elif isinstance(p, Star):
            stack.append(p.body)
        else:
            stack.extend((p.left, p.right))
    return out | _prog_names(f.body)


def sequent_valid_bounded(seq: Sequent, size_bound: int = 3,
                          depth_bound: int = 4,
                          budget: int = 2_000_000) -> Verdict:
    """Search for a world falsifying every formula of the sequent.

    Star-free sequents go through an exact assignment-level fixpoint and the
    verdict is authoritative whenever the depth bound covers the modal depth
    (or the fixpoint stabilizes early).  Sequents with stars fall back to
    budgeted enumeration of small tree frames with a back edge; a Valid
    verdict there only means "no countermodel within bounds".
    """
    if size_bound < 1 or depth_bound < 0:
        raise ValueError("bounds must be positive")
    star_free = all("L_0" in classify_fragment(f) for f in seq)
    if star_free:
        verdict = _starfree_search(seq, depth_bound)
        if verdict is not None:
            return verdict
    verdict = _frame_search(seq, size_bound, budget)
    if verdict.frame is not None:
        for f in seq:
            assert not eval_formula(verdict.frame, verdict.world, f)
    return verdict
