"""Machine encodings cross-checked against the reference simulator."""

import itertools
import json
import random

import pytest

from pdlkit.atm import (
    ACC, HEAD_LEFT, HEAD_RIGHT, LEND, PROGRAM, REND, AtmSpec, AtmVerdict,
    GraphBound, accepting_frame_search, bdne_formula, computation_frame,
    config_formula, config_graph, encode_accepts, encode_negation_bdne,
    simulate_atm, start_config, state_var, step, sym_var,
)
from pdlkit.atm import _fixpoint_marking, _legal_moves
from pdlkit.formula import (
    Lit, _and_leaves, is_propositional, parse, recognize_bdnf, render,
    seq_negate, variables,
)
from pdlkit.prover import seq_size
from pdlkit.semantics import KripkeFrame, eval_formula


def immediate():
    """Universal start state with no moves: accepts at once."""
    return AtmSpec(alphabet=("_",), blank="_", states=("s",), start="s",
                   universal=frozenset({"s"}), existential=frozenset(),
                   delta={}, input=(), space=1)


def branching(universal_start):
    """Start state forks into an accepting halt and a rejecting halt."""
    kinds = ({"s", "ok"}, {"bad"}) if universal_start else ({"ok"}, {"s", "bad"})
    return AtmSpec(alphabet=("_",), blank="_", states=("s", "ok", "bad"),
                   start="s", universal=frozenset(kinds[0]),
                   existential=frozenset(kinds[1]),
                   delta={("s", LEND): (("ok", LEND, 0), ("bad", LEND, 0))},
                   input=(), space=1)


def parity(bits, space=2):
    """Scans the tape once and accepts iff it saw an odd number of ones."""
    delta = {
        ("s", LEND): (("even", LEND, 1),),
        ("even", "0"): (("even", "0", 1),),
        ("even", "1"): (("odd", "1", 1),),
        ("odd", "0"): (("odd", "0", 1),),
        ("odd", "1"): (("even", "1", 1),),
        ("even", "_"): (("even", "_", 1),),
        ("odd", "_"): (("odd", "_", 1),),
        ("even", REND): (),
        ("odd", REND): (),
    }
    return AtmSpec(alphabet=("0", "1", "_"), blank="_",
                   states=("s", "even", "odd"), start="s",
                   universal=frozenset({"odd"}),
                   existential=frozenset({"s", "even"}),
                   delta=delta, input=tuple(bits), space=space)


def bouncer():
    """Walks to the right endmarker, back to the left one, then accepts."""
    delta = {
        ("go", LEND): (("go", LEND, 1),),
        ("go", "_"): (("go", "_", 1),),
        ("go", REND): (("back", REND, -1),),
        ("back", "_"): (("back", "_", -1),),
        ("back", LEND): (("fin", LEND, 0),),
    }
    return AtmSpec(alphabet=("_",), blank="_", states=("go", "back", "fin"),
                   start="go", universal=frozenset({"fin"}),
                   existential=frozenset({"go", "back"}),
                   delta=delta, input=(), space=2)


def spinner():
    """Existential self-loop: can only cycle, so it rejects."""
    return AtmSpec(alphabet=("_",), blank="_", states=("s",), start="s",
                   universal=frozenset(), existential=frozenset({"s"}),
                   delta={("s", LEND): (("s", LEND, 0),)}, input=(), space=1)


TOYS = [immediate(), branching(True), branching(False),
        parity("01"), parity("11"), parity("10"), bouncer()]


def test_validation_rejects_bad_specs():
    good = parity("01").to_json()

    def broken(**patch):
        return AtmSpec.from_json({**good, **patch})

    with pytest.raises(ValueError, match="blank"):
        broken(blank="x")
    with pytest.raises(ValueError, match="start state"):
        broken(start="nope")
    with pytest.raises(ValueError, match="partition"):
        broken(universal=[])
    with pytest.raises(ValueError, match="overlap"):
        broken(universal=["odd", "even"])
    with pytest.raises(ValueError, match="reserved for the endmarkers"):
        broken(alphabet=["0", "1", "_", LEND])
    with pytest.raises(ValueError, match="reserved for the head"):
        broken(states=["s", "even", "odd", HEAD_LEFT],
               existential=["s", "even", HEAD_LEFT])
    with pytest.raises(ValueError, match="not fit"):
        broken(space=1)
    with pytest.raises(ValueError, match="render as a variable"):
        broken(alphabet=["0", "1", "_", "a-b"])
    with pytest.raises(ValueError, match="head offset"):
        broken(delta={"s,lend": [["even", "lend", 2]]})
    with pytest.raises(ValueError, match="unknown symbol"):
        broken(delta={"s,zap": [["even", "lend", 1]]})
    with pytest.raises(ValueError, match="'state,symbol'"):
        broken(delta={"s": []})
    with pytest.raises(ValueError, match="duplicate tape symbols"):
        broken(alphabet=["0", "1", "_", "0"])
    with pytest.raises(ValueError, match="input symbol"):
        broken(input="02")


def test_json_round_trip():
    m = parity("01")
    again = AtmSpec.from_json(json.loads(json.dumps(m.to_json())))
    assert again == m
    assert AtmSpec.from_json({**m.to_json(), "input": "01"}) == m


def test_start_config_layout():
    assert start_config(parity("01")) == ("s", 0, (LEND, "0", "1", REND))
    assert start_config(bouncer()) == ("go", 0, (LEND, "_", "_", REND))


def test_step_drops_offtape_moves():
    m = AtmSpec(alphabet=("_",), blank="_", states=("s",), start="s",
                universal=frozenset(), existential=frozenset({"s"}),
                delta={("s", LEND): (("s", LEND, -1),)}, input=(), space=1)
    assert step(m, start_config(m)) == []
    assert simulate_atm(m) is AtmVerdict.REJECTS


def test_simulate_verdicts():
    assert simulate_atm(immediate()) is AtmVerdict.ACCEPTS
    assert simulate_atm(branching(True)) is AtmVerdict.REJECTS
    assert simulate_atm(branching(False)) is AtmVerdict.ACCEPTS
    assert simulate_atm(parity("01")) is AtmVerdict.ACCEPTS
    assert simulate_atm(parity("11")) is AtmVerdict.REJECTS
    assert simulate_atm(parity("10")) is AtmVerdict.ACCEPTS
    assert simulate_atm(parity("00")) is AtmVerdict.REJECTS
    assert simulate_atm(bouncer()) is AtmVerdict.ACCEPTS
    assert simulate_atm(spinner()) is AtmVerdict.REJECTS


def test_simulate_reports_bound():
    assert simulate_atm(parity("01"), max_configs=2) is AtmVerdict.BOUND
    with pytest.raises(GraphBound, match="reachable configurations"):
        config_graph(parity("01"), max_configs=2)


def test_search_raises_on_cycles():
    with pytest.raises(GraphBound, match="cycle"):
        accepting_frame_search(spinner())


def test_encoding_parses_back():
    m = immediate()
    f = encode_accepts(m)
    assert parse(render(f)) == f
    g = bdne_formula(m, repair=True)
    assert parse(render(g)) == g


def test_repair_flips_right_endmarker():
    m = parity("01")
    last = sym_var(m.space + 1, REND)
    assert Lit(last, True) in _and_leaves(config_formula(m))
    assert Lit(last) in _and_leaves(config_formula(m, repair=True))


def test_encoding_size_grows_linearly():
    sizes = [seq_size((encode_accepts(parity("01", space=n)),))
             for n in range(4, 9)]
    diffs = {sizes[i + 1] - sizes[i] for i in range(len(sizes) - 1)}
    assert len(diffs) == 1


def test_search_agrees_with_simulator():
    for m in TOYS:
        verdict = simulate_atm(m)
        assert verdict is not AtmVerdict.BOUND
        found = accepting_frame_search(m) is not None
        assert found == (verdict is AtmVerdict.ACCEPTS)


def test_search_verifies_with_the_model_checker():
    frame = accepting_frame_search(parity("01"))
    assert frame is not None
    assert eval_formula(frame, 0, encode_accepts(parity("01"), repair=True))


def test_only_the_forced_marking_satisfies():
    # Exhausting every acceptance marking of the computation frame shows the
    # search family has exactly one model for an accepted input and none for
    # a rejected one.
    for bits, expect in (("01", True), ("11", False)):
        m = parity(bits)
        configs, succ = config_graph(m)
        forced = _fixpoint_marking(m, configs, succ)
        f = encode_accepts(m, repair=True)
        sats = []
        for r in range(len(configs) + 1):
            for sub in itertools.combinations(range(len(configs)), r):
                if eval_formula(computation_frame(m, sub), 0, f):
                    sats.append(set(sub))
        assert sats == ([forced] if expect else [])


def test_literal_encoding_rejects_honest_tapes():
    # The denied right endmarker means no frame built from real tapes can
    # model the unrepaired formula.
    assert accepting_frame_search(parity("01"), repair=False) is None
    assert accepting_frame_search(parity("01"), repair=True) is not None


def test_negation_passes_the_shape_recognizer():
    for m in (immediate(), parity("01")):
        for repair in (False, True):
            shape, z = encode_negation_bdne(m, repair)
            got = recognize_bdnf(shape.to_formula())
            assert (got.s, got.t, got.prog) == (shape.s, shape.t, PROGRAM)
            assert is_propositional(z)


def test_negation_z_names_the_start_violations():
    m = parity("01")
    shape, z = encode_negation_bdne(m)
    assert shape.prog == PROGRAM
    assert Lit(ACC, True) in _and_leaves(z) or z.left == Lit(ACC, True)


def test_negation_row_counts():
    m = parity("01")
    cells = m.space + 2
    gamma = len(m.full_alphabet)
    states = len(m.states)
    moves_in_range = sum(len(_legal_moves(m, i, q, a)) for i in m.cells
                         for a in m.full_alphabet for q in m.states)
    shape, _ = encode_negation_bdne(m)
    assert shape.s == 2 + moves_in_range
    assert shape.t == 2 + cells * gamma + cells * gamma * states
    # Every move here shifts the head, so each loses exactly one cell of
    # range against the position-count product.
    total_moves = sum(len(mv) for mv in m.delta.values())
    on_tape = sum(1 for mv in m.delta.values() for _, _, d in mv if d == 0)
    assert moves_in_range == cells * total_moves - (total_moves - on_tape)


def test_repaired_negation_is_an_exact_dual():
    rng = random.Random(7)
    for m in (immediate(), parity("01")):
        f = seq_negate(encode_accepts(m, repair=True))
        g = bdne_formula(m, repair=True)
        names = sorted(variables(f) | variables(g))
        for _ in range(150):
            worlds = rng.randint(1, 3)
            edges = frozenset((u, v) for u in range(worlds)
                              for v in range(worlds) if rng.random() < 0.4)
            frame = KripkeFrame(
                worlds, {PROGRAM.name: edges},
                {x: frozenset(w for w in range(worlds) if rng.random() < 0.5)
                 for x in names})
            w = rng.randrange(worlds)
            assert eval_formula(frame, w, f) == eval_formula(frame, w, g)


def test_repaired_negation_agrees_on_computation_frames():
    for m in (immediate(), branching(True)):
        f = seq_negate(encode_accepts(m, repair=True))
        g = bdne_formula(m, repair=True)
        configs, _ = config_graph(m)
        for r in range(len(configs) + 1):
            for sub in itertools.combinations(range(len(configs)), r):
                frame = computation_frame(m, sub)
                assert eval_formula(frame, 0, f) == eval_formula(frame, 0, g)


def _blank_tailed_frame():
    """One accepting world whose last cell holds a blank, not an endmarker."""
    marks = [sym_var(0, LEND), sym_var(1, "_"), sym_var(2, "_"),
             state_var(0, "s"), state_var(1, HEAD_LEFT),
             state_var(2, HEAD_LEFT), ACC]
    return KripkeFrame(1, {PROGRAM.name: frozenset()},
                       {v: frozenset({0}) for v in marks})


def test_literal_rows_overfire_on_a_crafted_frame():
    # With the guard literals kept un-negated, the first box row degenerates
    # to acc & [next]~acc for a machine without existential states and fires
    # where the exact dual would not.  The repaired pair stays aligned.
    m = immediate()
    frame = _blank_tailed_frame()
    assert eval_formula(frame, 0, seq_negate(encode_accepts(m))) is False
    assert eval_formula(frame, 0, bdne_formula(m)) is True
    assert eval_formula(frame, 0, seq_negate(encode_accepts(m, repair=True)))
    assert eval_formula(frame, 0, bdne_formula(m, repair=True))


def test_negation_size_stays_quadratic():
    worst = 0.0
    for n in range(2, 9):
        m = parity("01", space=n)
        acc = seq_size((encode_accepts(m),))
        bde = seq_size((bdne_formula(m),))
        worst = max(worst, bde / acc ** 2)
        assert bde <= 2 * acc
    assert worst <= 0.005


def _random_machine(rng):
    alphabet = ("a", "b")[:rng.randint(1, 2)]
    states = ("q0", "q1")[:rng.randint(1, 2)]
    full = (LEND,) + alphabet + (REND,)
    delta = {}
    for q in states:
        for a in full:
            if rng.random() < 0.6:
                delta[(q, a)] = tuple(
                    (rng.choice(states), rng.choice(full), rng.choice((-1, 0, 1)))
                    for _ in range(rng.randint(0, 2)))
    cut = rng.randint(0, len(states))
    space = rng.randint(1, 2)
    return AtmSpec(alphabet=alphabet, blank=alphabet[0], states=states,
                   start=states[0], universal=frozenset(states[:cut]),
                   existential=frozenset(states[cut:]), delta=delta,
                   input=tuple(rng.choice(alphabet)
                               for _ in range(rng.randint(0, space))),
                   space=space)


def test_random_machines_keep_the_shape():
    rng = random.Random(3)
    for _ in range(15):
        m = _random_machine(rng)
        cells = m.space + 2
        gamma = len(m.full_alphabet)
        for repair in (False, True):
            shape, z = encode_negation_bdne(m, repair)
            got = recognize_bdnf(shape.to_formula())
            assert (got.s, got.t) == (shape.s, shape.t)
            assert is_propositional(z)
            assert shape.t == 2 + cells * gamma + cells * gamma * len(m.states)
