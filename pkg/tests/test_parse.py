from __future__ import annotations

import random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import BUNDLED, components, load, model_text, system
from iosa.parse import ParseError, parse_automaton, parse_model, serialize, serialize_model
from iosa.sim.query import MEAN_TIME_TO, STEADY_FRACTION, TRANSIENT_REACH, And, Fired, InState, Not
from randmodels import random_system


def test_i1_encoding():
    i1 = load("fig2").automata["I1"]
    assert len(i1.states) == 3
    assert len(i1.transitions) == 2
    assert list(i1.clocks) == ["x"]
    assert i1.initial_clocks == {"x"}
    assert str(i1.labels["c"]) == "c!!"


def test_system_block_order():
    model = load("fig2")
    assert model.system == ("I1", "I2", "I3")
    assert [a.name for a in model.system_automata()] == ["I1", "I2", "I3"]


def test_missing_system_block_uses_file_order():
    model = parse_model("automaton B { init s0; } automaton A { init t0; }")
    assert model.system is None
    assert [a.name for a in model.system_automata()] == ["B", "A"]


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_roundtrip(name):
    model = load(name)
    once = serialize_model(model)
    again = parse_model(once)
    assert serialize_model(again) == once
    assert again.automata == model.automata
    assert again.system == model.system
    assert again.queries == model.queries


def test_serialize_then_parse_i2():
    i2 = load("fig2").automata["I2"]
    assert parse_automaton(serialize(i2)) == i2


def test_serialize_is_stable():
    i3 = load("fig2").automata["I3"]
    assert serialize(i3) == serialize(i3)


def test_composed_fig3_reparses_to_ten_states():
    text = serialize(system("fig2"))
    back = parse_automaton(text)
    assert len(back.states) == 10
    assert "s0|s3|s6" in back.states


def test_golden_file_is_canonical():
    text = model_text("fig3.golden.iosa")
    assert serialize(parse_automaton(text)) == text


def test_undeclared_clock_names_clock_and_position():
    src = "automaton A {\n  init s0;\n  s0 --{w}, a!, {}--> s1;\n}\n"
    with pytest.raises(ParseError) as info:
        parse_model(src)
    err = info.value
    assert "'w'" in err.message
    assert (err.line, err.column) == (3, 9)


@pytest.mark.parametrize(
    "src, fragment",
    [
        ("automaton A { states {s0, s0}; init s0; }", "duplicate state"),
        ("automaton A { states {s0}; init s0; s0 --{}, a!!, {}--> s1; }", "undeclared state"),
        ("clock x ~ uniform(2, 1); automaton A { init s0; }", "uniform"),
        ("clock x ~ exponential(0); automaton A { init s0; }", "rate"),
        ("clock x ~ pareto(1); automaton A { init s0; }", "unknown distribution"),
        ("automaton A { init s0; s0 --{}, a!, {}--> s1; s1 --{}, a?, {}--> s0; }", "declared as a!"),
        ("automaton A { actions {a!}; init s0; s0 --{}, b!!, {}--> s0; }", "undeclared action"),
        ("automaton A { s0 --{}, a!!, {}--> s0; }", "init"),
        ("automaton A { init s0; } automaton A { init s0; }", "duplicate automaton"),
        ("automaton A { init s0; } system = A || B;", "unknown automaton"),
        ("automaton A { init s0 }", "expected ';'"),
        ("automaton A { init s0; } query q = steady_fraction(A.s0);", "horizon"),
        ("automaton A { init s0; } query q = median(A.s0, 1);", "query"),
        ("clock x ~ exponential(1.0); automaton A { clock x ~ exponential(2.0); init s0; }", "x"),
        ("automaton A { init s|0; }", "|"),
    ],
)
def test_rejections(src, fragment):
    with pytest.raises(ParseError) as info:
        parse_model(src)
    assert fragment in str(info.value)
    assert info.value.line >= 1 and info.value.column >= 1


def test_invalid_utf8_reports_position():
    with pytest.raises(ParseError) as info:
        parse_model(b"automaton A {\n  init \xff;\n}")
    assert info.value.line == 2


def test_comments_and_pragma():
    a = parse_automaton(
        "// leading comment\nautomaton A { #complete-inputs\n init s0; // trailing\n"
        " s0 --{}, go?, {}--> s1; }"
    )
    assert a.complete_inputs
    assert a.inputs == {"go"}


def test_global_clocks_attach_where_referenced():
    model = load("fig2")
    assert list(model.automata["I1"].clocks) == ["x"]
    assert list(model.automata["I3"].clocks) == ["z"]


def test_queries():
    q = load("fig2").queries
    absorb = q["absorb"]
    assert absorb.kind == MEAN_TIME_TO and absorb.horizon is None
    assert isinstance(absorb.predicate, And)
    assert q["fired_e"].kind == TRANSIENT_REACH
    assert q["fired_e"].predicate == Fired("e")
    assert q["fired_e"].horizon == float("inf")
    circuit = load("circuit").queries["o_high"]
    assert circuit.kind == STEADY_FRACTION
    assert (circuit.horizon, circuit.warmup) == (2000.0, 50.0)


def test_predicate_precedence():
    m = parse_model(
        "automaton A { init s0; } query q = transient_reach(!A.s0 || A.s1 && @go, 5);"
    )
    pred = m.queries["q"].predicate
    assert pred.text() == "!A.s0 || (A.s1 && @go)"
    assert isinstance(pred.left, Not) and pred.left.operand == InState("A", "s0")


# generated models


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**32 - 1))
def test_roundtrip_random_automata(seed):
    rng = random.Random(seed)
    for a in random_system(rng, rng.randint(1, 3), closed=rng.random() < 0.5):
        assert parse_automaton(serialize(a)) == a


def test_roundtrip_compositions():
    for name in ("fig2", "fig6", "circuit"):
        composed = system(name)
        assert parse_automaton(serialize(composed)) == composed
    for a in components("circuit"):
        assert parse_automaton(serialize(a)) == a


# totality: every input either parses or yields a positioned diagnostic


def _total(data) -> None:
    try:
        parse_model(data)
    except ParseError as exc:
        assert exc.line >= 1 and exc.column >= 1


@settings(max_examples=400, deadline=None)
@given(st.binary(max_size=200))
def test_fuzz_bytes(data):
    _total(data)


_PIECES = [
    "automaton", "A", "B", "{", "}", "(", ")", ";", ",", "init", "clocks", "clock", "x",
    "~", "exponential", "uniform", "1.0", "0", "-2", "inf", "s0", "s1", "s0|s1", "--", "-->",
    "a!", "b!!", "c?", "d??", "tau", "states", "actions", "#complete-inputs", "system", "=",
    "||", "&&", "!", "@a", "query", "q", "transient_reach", "steady_fraction", "mean_time_to",
    "true", ".", "//", "\n", " ",
]


@settings(max_examples=600, deadline=None)
@given(st.lists(st.sampled_from(_PIECES), max_size=60))
def test_fuzz_token_soup(pieces):
    _total(" ".join(pieces))


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=120))
def test_fuzz_text(text):
    _total(text)


def test_deep_nesting_is_a_diagnostic():
    src = "automaton A { init s0; } query q = transient_reach(" + "!" * 5000 + "A.s0, 1);"
    _total(src)
    src = "automaton A { init s0; } query q = transient_reach(" + "(" * 3000 + "A.s0"
    _total(src)
