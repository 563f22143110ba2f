"""Space-bounded alternating machines rendered as modal formulas.

A machine description compiles into a formula over one program whose
satisfying frames walk through legal configurations (one world per
configuration, one tape cell per variable block), plus a dual disjunctive
rendering of the formula's negation.  A reference simulator and a
computation-frame search keep both encodings honest.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .formula import (
    And, Atom, BdnfShape, Box, Dia, Lit, Or, SeqFormula, Star, const_false,
    const_true, fold_and, fold_or, seq_negate,
)
from .semantics import KripkeFrame, eval_formula

LEND = "lend"
REND = "rend"
# Cells away from the head carry one of two pseudo-states instead of a real
# one: hl where the head lies somewhere to the left, hr where it lies to the
# right.  They live in the same per-cell "exactly one annotation" block as
# the machine states.
HEAD_LEFT = "hl"
HEAD_RIGHT = "hr"
PROGRAM = Atom("next")
ACC = "acc"

# (successor state, written symbol, head offset)
Move = tuple[str, str, int]

_TOKEN = re.compile(r"[A-Za-z0-9_]+\Z")


class GraphBound(RuntimeError):
    """Raised when the reachable configuration graph exceeds its budget."""


@dataclass(frozen=True)
class AtmSpec:
    """One alternating machine plus its input and an explicit space bound.

    Tape cells are numbered 0..space+1; the two outer cells hold reserved
    endmarker symbols and the input sits in cells 1..len(input), padded to
    the right with blanks.  Every state is either universal or existential;
    a universal configuration with no applicable move accepts, a stuck
    existential one rejects.
    """

    alphabet: tuple[str, ...]
    blank: str
    states: tuple[str, ...]
    start: str
    universal: frozenset[str]
    existential: frozenset[str]
    delta: Mapping[tuple[str, str], tuple[Move, ...]]
    input: tuple[str, ...]
    space: int

    def __post_init__(self):
        for name in self.alphabet + self.states:
            if not _TOKEN.match(name):
                raise ValueError(f"name {name!r} will not render as a variable")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate tape symbols")
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state names")
        for used in (LEND, REND):
            if used in self.alphabet:
                raise ValueError(f"symbol {used!r} is reserved for the endmarkers")
        for used in (HEAD_LEFT, HEAD_RIGHT):
            if used in self.states:
                raise ValueError(
                    f"state {used!r} is reserved for the head annotations")
        if self.blank not in self.alphabet:
            raise ValueError(f"blank {self.blank!r} missing from the alphabet")
        if self.start not in self.states:
            raise ValueError(f"start state {self.start!r} missing from the states")
        if self.universal & self.existential:
            raise ValueError("universal and existential states overlap")
        if self.universal | self.existential != set(self.states):
            raise ValueError("universal and existential states must partition the states")
        if self.space < 1:
            raise ValueError("space bound must be at least 1")
        if len(self.input) > self.space:
            raise ValueError("input does not fit in the given space")
        for a in self.input:
            if a not in self.alphabet:
                raise ValueError(f"input symbol {a!r} missing from the alphabet")
        full = set(self.full_alphabet)
        for (q, a), moves in self.delta.items():
            if q not in self.states:
                raise ValueError(f"transition from unknown state {q!r}")
            if a not in full:
                raise ValueError(f"transition on unknown symbol {a!r}")
            for p, b, d in moves:
                if p not in self.states:
                    raise ValueError(f"transition into unknown state {p!r}")
                if b not in full:
                    raise ValueError(f"transition writes unknown symbol {b!r}")
                if d not in (-1, 0, 1):
                    raise ValueError(f"head offset {d!r} is not one of -1, 0, +1")

    @property
    def n(self) -> int:
        return len(self.input)

    @property
    def cells(self) -> range:
        return range(self.space + 2)

    @property
    def full_alphabet(self) -> tuple[str, ...]:
        return (LEND,) + self.alphabet + (REND,)

    @property
    def annotations(self) -> tuple[str, ...]:
        return self.states + (HEAD_LEFT, HEAD_RIGHT)

    def moves(self, q: str, a: str) -> tuple[Move, ...]:
        return self.delta.get((q, a), ())

    @classmethod
    def from_json(cls, d: dict) -> "AtmSpec":
        delta: dict[tuple[str, str], tuple[Move, ...]] = {}
        for key, moves in d.get("delta", {}).items():
            parts = key.split(",")
            if len(parts) != 2:
                raise ValueError(f"delta key {key!r} is not 'state,symbol'")
            delta[(parts[0], parts[1])] = tuple(
                (p, b, int(off)) for p, b, off in moves)
        return cls(
            alphabet=tuple(d["alphabet"]),
            blank=d["blank"],
            states=tuple(d["states"]),
            start=d["start"],
            universal=frozenset(d.get("universal", [])),
            existential=frozenset(d.get("existential", [])),
            delta=delta,
            input=tuple(d.get("input", ())),
            space=int(d["space"]),
        )

    def to_json(self) -> dict:
        return {
            "alphabet": list(self.alphabet),
            "blank": self.blank,
            "states": list(self.states),
            "start": self.start,
            "universal": sorted(self.universal),
            "existential": sorted(self.existential),
            "delta": {f"{q},{a}": [list(mv) for mv in moves]
                      for (q, a), moves in sorted(self.delta.items())},
            "input": list(self.input),
            "space": self.space,
        }


def sym_var(i: int, a: str) -> str:
    return f"sym{i}_{a}"


def state_var(i: int, q: str) -> str:
    return f"st{i}_{q}"


def _conj(parts: Iterable[SeqFormula]) -> SeqFormula:
    return fold_and(list(parts)) or const_true()


def _disj(parts: Iterable[SeqFormula]) -> SeqFormula:
    return fold_or(list(parts)) or const_false()


def _legal_moves(m: AtmSpec, i: int, q: str, a: str) -> list[Move]:
    # Moves that would carry the head off the tape are dropped everywhere,
    # on the encoding side and in the simulator alike.
    return [(p, b, d) for p, b, d in m.moves(q, a) if 0 <= i + d <= m.space + 1]


def start_formula(m: AtmSpec) -> SeqFormula:
    """Initial configuration: head on cell 0, input written, rest blank."""
    parts: list[SeqFormula] = [Lit(state_var(0, m.start))]
    for i in range(1, m.n + 1):
        parts.append(Lit(sym_var(i, m.input[i - 1])))
    for i in range(m.n + 1, m.space + 1):
        parts.append(Lit(sym_var(i, m.blank)))
    return _conj(parts)


def config_formula(m: AtmSpec, repair: bool = False) -> SeqFormula:
    """Well-formedness of a single configuration world.

    Each cell carries exactly one symbol and exactly one annotation (a real
    state or a head-side marker), some cell carries a real state, and the
    side markers propagate outward from it.  With repair=False the right
    endmarker is denied at the last cell, which no honest tape satisfies;
    repair=True asserts it instead.
    """
    gamma = m.full_alphabet
    ann = m.annotations
    parts: list[SeqFormula] = []
    for i in m.cells:
        parts.append(_disj(
            _conj([Lit(sym_var(i, a))]
                  + [Lit(sym_var(i, b), True) for b in gamma if b != a])
            for a in gamma))
    parts.append(Lit(sym_var(0, LEND)))
    parts.append(Lit(sym_var(m.space + 1, REND), not repair))
    parts.append(_disj(Lit(state_var(i, q)) for i in m.cells for q in m.states))
    for i in m.cells:
        parts.append(_disj(
            _conj([Lit(state_var(i, q))]
                  + [Lit(state_var(i, p), True) for p in ann if p != q])
            for q in ann))
    for i in range(m.space + 1):
        for q in m.states + (HEAD_LEFT,):
            parts.append(Or(Lit(state_var(i, q), True),
                            Lit(state_var(i + 1, HEAD_LEFT))))
    # The leftward family starts at cell 1: at cell 0 it would point off
    # the tape, so that instance is dropped.
    for i in range(1, m.space + 2):
        for q in m.states + (HEAD_RIGHT,):
            parts.append(Or(Lit(state_var(i, q), True),
                            Lit(state_var(i - 1, HEAD_RIGHT))))
    return _conj(parts)


def move_formula(m: AtmSpec, repair: bool = False) -> SeqFormula:
    """Frame conditions tying one configuration world to its successors.

    The head cell must see every applicable move realized by some successor
    and every successor realize some applicable move.  The inertia guard for
    cells away from the head is rendered disjunctively when repair=False,
    which makes it vacuous under the one-annotation-per-cell constraint;
    repair=True arms it, so symbols persist wherever the head is absent.
    """
    parts: list[SeqFormula] = []
    for i in m.cells:
        inertia = _conj(Or(Lit(sym_var(i, a), True),
                           Box(PROGRAM, Lit(sym_var(i, a))))
                        for a in m.full_alphabet)
        away = [Lit(state_var(i, HEAD_LEFT), True),
                Lit(state_var(i, HEAD_RIGHT), True)]
        if repair:
            parts.append(Or(_conj(away), inertia))
        else:
            parts.append(_disj(away + [inertia]))
    for i in m.cells:
        for a in m.full_alphabet:
            for q in m.states:
                legal = _legal_moves(m, i, q, a)
                branch: list[SeqFormula] = [
                    Dia(PROGRAM,
                        And(Lit(sym_var(i, b)), Lit(state_var(i + d, p))))
                    for p, b, d in legal]
                branch.append(Box(PROGRAM, _disj(
                    And(Lit(sym_var(i, b)), Lit(state_var(i + d, p)))
                    for p, b, d in legal)))
                parts.append(_disj([Lit(sym_var(i, a), True),
                                    Lit(state_var(i, q), True),
                                    _conj(branch)]))
    return _conj(parts)


def acceptance_formula(m: AtmSpec) -> SeqFormula:
    """Coherence of the acceptance marker with the two state kinds."""
    acc = Lit(ACC)
    nacc = Lit(ACC, True)

    def block(kind: frozenset[str], first: SeqFormula,
              second: SeqFormula) -> SeqFormula:
        guard = _conj(Lit(state_var(i, q), True)
                      for i in m.cells for q in m.states if q in kind)
        return Or(guard, And(first, second))

    eblock = block(m.existential,
                   Or(acc, Box(PROGRAM, nacc)), Or(nacc, Dia(PROGRAM, acc)))
    ublock = block(m.universal,
                   Or(acc, Dia(PROGRAM, nacc)), Or(nacc, Box(PROGRAM, acc)))
    return And(eblock, ublock)


def encode_accepts(m: AtmSpec, repair: bool = False) -> SeqFormula:
    """Acceptance of the machine's input, as a formula over one program.

    The start world is marked accepting and initialized, and every world
    reachable under the program must be a legal configuration, move legally,
    and propagate the acceptance marker.  repair=True makes the frame/run
    correspondence exact (right endmarker asserted, inertia armed); the
    default keeps both conditions as literally rendered.
    """
    closure = _conj([config_formula(m, repair), move_formula(m, repair),
                     acceptance_formula(m)])
    return _conj([Lit(ACC), start_formula(m), Box(Star(PROGRAM), closure)])


def _negated_config(m: AtmSpec, repair: bool) -> SeqFormula:
    gamma = m.full_alphabet
    ann = m.annotations
    parts: list[SeqFormula] = []
    parts.append(_disj(
        _conj(Or(Lit(sym_var(i, a), True),
                 _disj(Lit(sym_var(i, b)) for b in gamma if b != a))
              for a in gamma)
        for i in m.cells))
    parts.append(Or(Lit(sym_var(0, LEND), True),
                    Lit(sym_var(m.space + 1, REND), repair)))
    parts.append(_conj(Lit(state_var(i, q), True)
                       for i in m.cells for q in m.states))
    parts.append(_disj(
        _conj(Or(Lit(state_var(i, q), True),
                 _disj(Lit(state_var(i, p)) for p in ann if p != q))
              for q in ann)
        for i in m.cells))
    # With repair=False the two propagation families keep their literals
    # un-negated, exactly as in the conjunctive rendering above.
    rows: list[SeqFormula] = []
    for i in range(m.space + 1):
        for q in m.states + (HEAD_LEFT,):
            rows.append(And(Lit(state_var(i, q), not repair),
                            Lit(state_var(i + 1, HEAD_LEFT), repair)))
    parts.append(_disj(rows))
    rows = []
    for i in range(1, m.space + 2):
        for q in m.states + (HEAD_RIGHT,):
            rows.append(And(Lit(state_var(i, q), not repair),
                            Lit(state_var(i - 1, HEAD_RIGHT), repair)))
    parts.append(_disj(rows))
    return _disj(parts)


def encode_negation_bdne(m: AtmSpec,
                         repair: bool = False) -> tuple[BdnfShape, SeqFormula]:
    """Negation of encode_accepts as a starred disjunctive shape plus rest.

    Returns (A, Z) with the whole expression reading <next*>A | Z, where Z
    collects the start-world violations and A's rows enumerate the ways a
    reachable world can break a configuration, move, or marker condition.
    repair=True emits an exact dual of encode_accepts(m, repair=True); the
    default keeps the rows' guard literals un-negated, as literally
    rendered, so the two variants disagree on some frames.
    """
    acc = Lit(ACC)
    nacc = Lit(ACC, True)

    def guard(kind: frozenset[str]) -> list[SeqFormula]:
        lits = [Lit(state_var(i, q), not repair)
                for i in m.cells for q in m.states if q in kind]
        if repair:
            return [_disj(lits)]
        return lits

    box_rows: list[tuple[SeqFormula | None, SeqFormula]] = [
        (_conj(guard(m.existential) + [acc]), nacc),
        (_conj(guard(m.universal) + [nacc]), acc),
    ]
    for i in m.cells:
        for a in m.full_alphabet:
            for q in m.states:
                scan = _conj([Lit(sym_var(i, a)),
                              Lit(state_var(i, q), not repair)])
                for p, b, d in _legal_moves(m, i, q, a):
                    box_rows.append((scan, Or(Lit(sym_var(i, b), True),
                                              Lit(state_var(i + d, p), True))))
    dia_rows: list[tuple[SeqFormula | None, SeqFormula]] = [
        (_conj(guard(m.existential) + [nacc]), acc),
        (_conj(guard(m.universal) + [acc]), nacc),
    ]
    for i in m.cells:
        for a in m.full_alphabet:
            both = [Lit(state_var(i, HEAD_LEFT)), Lit(state_var(i, HEAD_RIGHT))]
            if repair:
                side: SeqFormula = And(_disj(both), Lit(sym_var(i, a)))
            else:
                side = _conj(both + [Lit(sym_var(i, a))])
            dia_rows.append((side, Lit(sym_var(i, a), True)))
    for i in m.cells:
        for a in m.full_alphabet:
            for q in m.states:
                mismatch = [Or(Lit(sym_var(i, b), True),
                               Lit(state_var(i + d, p), True))
                            for p, b, d in _legal_moves(m, i, q, a)]
                dia_rows.append((
                    _conj([Lit(sym_var(i, a)),
                           Lit(state_var(i, q), not repair)]),
                    _conj(mismatch) if repair else _disj(mismatch)))
    shape = BdnfShape(PROGRAM, _negated_config(m, repair),
                      tuple(box_rows), tuple(dia_rows))
    z = Or(nacc, seq_negate(start_formula(m)))
    return shape, z


def bdne_formula(m: AtmSpec, repair: bool = False) -> SeqFormula:
    shape, z = encode_negation_bdne(m, repair)
    return Or(Dia(Star(PROGRAM), shape.to_formula()), z)


class AtmVerdict(Enum):
    ACCEPTS = "accepts"
    REJECTS = "rejects"
    BOUND = "bound"


Config = tuple[str, int, tuple[str, ...]]


def start_config(m: AtmSpec) -> Config:
    tape = (LEND,) + m.input + (m.blank,) * (m.space - m.n) + (REND,)
    return (m.start, 0, tape)


def step(m: AtmSpec, c: Config) -> list[Config]:
    q, head, tape = c
    return [(p, head + d, tape[:head] + (b,) + tape[head + 1:])
            for p, b, d in _legal_moves(m, head, q, tape[head])]


def config_graph(m: AtmSpec,
                 max_configs: int = 4096) -> tuple[list[Config], list[list[int]]]:
    """Reachable configurations and their successor indices, breadth-first."""
    root = start_config(m)
    configs = [root]
    index = {root: 0}
    succ: list[list[int]] = []
    k = 0
    while k < len(configs):
        kids = []
        for nxt in step(m, configs[k]):
            j = index.get(nxt)
            if j is None:
                if len(configs) >= max_configs:
                    raise GraphBound(
                        f"more than {max_configs} reachable configurations")
                j = len(configs)
                index[nxt] = j
                configs.append(nxt)
            kids.append(j)
        succ.append(kids)
        k += 1
    return configs, succ


def _fixpoint_marking(m: AtmSpec, configs: list[Config],
                      succ: list[list[int]]) -> set[int]:
    accepted: set[int] = set()
    changed = True
    while changed:
        changed = False
        for k, (q, _, _) in enumerate(configs):
            if k in accepted:
                continue
            kids = succ[k]
            good = (all(j in accepted for j in kids) if q in m.universal
                    else any(j in accepted for j in kids))
            if good:
                accepted.add(k)
                changed = True
    return accepted


def simulate_atm(m: AtmSpec, max_configs: int = 4096) -> AtmVerdict:
    """Alternating acceptance of the machine's input, by explicit search.

    Acceptance is the least fixed point of the usual game reading, so a
    computation that can only cycle forever rejects.
    """
    try:
        configs, succ = config_graph(m, max_configs)
    except GraphBound:
        return AtmVerdict.BOUND
    return (AtmVerdict.ACCEPTS if 0 in _fixpoint_marking(m, configs, succ)
            else AtmVerdict.REJECTS)


def computation_frame(m: AtmSpec, accepted: Iterable[int],
                      max_configs: int = 4096) -> KripkeFrame:
    """The reachable-configuration frame with a chosen acceptance marking."""
    configs, succ = config_graph(m, max_configs)
    edges = frozenset((k, j) for k, kids in enumerate(succ) for j in kids)
    valuation: dict[str, set[int]] = {}

    def mark(var: str, world: int) -> None:
        valuation.setdefault(var, set()).add(world)

    for k, (q, head, tape) in enumerate(configs):
        for i, a in enumerate(tape):
            mark(sym_var(i, a), k)
        mark(state_var(head, q), k)
        for i in range(head + 1, m.space + 2):
            mark(state_var(i, HEAD_LEFT), k)
        for i in range(head):
            mark(state_var(i, HEAD_RIGHT), k)
    for k in accepted:
        mark(ACC, k)
    return KripkeFrame(len(configs), {PROGRAM.name: edges},
                       {x: frozenset(ws) for x, ws in valuation.items()})


def _cyclic(succ: list[list[int]]) -> bool:
    state = [0] * len(succ)

    def visit(k: int) -> bool:
        if state[k] == 1:
            return True
        if state[k] == 2:
            return False
        state[k] = 1
        hit = any(visit(j) for j in succ[k])
        state[k] = 2
        return hit

    return visit(0) if succ else False


def accepting_frame_search(m: AtmSpec, repair: bool = True,
                           max_configs: int = 4096) -> KripkeFrame | None:
    """Bounded model search for encode_accepts over computation frames.

    Only frames whose worlds are the reachable configurations are tried.  On
    a cycle-free graph the acceptance marking is forced bottom-up, so the
    single candidate checked here exhausts the family; cyclic graphs would
    need a wider search and raise GraphBound instead.
    """
    configs, succ = config_graph(m, max_configs)
    if _cyclic(succ):
        raise GraphBound("configuration graph has a cycle; the marking is not forced")
    marking = _fixpoint_marking(m, configs, succ)
    frame = computation_frame(m, marking, max_configs)
    if eval_formula(frame, 0, encode_accepts(m, repair)):
        return frame
    return None
