from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from tickmc.dsl import (
    format_config, load_model, parse_config, parse_model, parse_properties, pretty_print,
)
from tickmc.errors import ParseError
from tickmc.model import (
    TRUE, And, BinOp, Branch, ConstantDef, ConstRef, EnumDomain, MachineDef, Network, Not, Or,
    SharedVar, Transition, VarAtom, num,
)
from tickmc.uvc import bundled_text

from helpers import uvc_network

HUMAN_ONLY = """
domain HumanZone {outOfRange, inGreen, inYellow, inRed}
var shuman : HumanZone = outOfRange;
const N_ticks : count = 4;
horizon N_ticks;
machine HumanSTM {
  initial OutOfRange;
  state OutOfRange, InGreenZone, InYellowZone, InRedZone;
  from OutOfRange goto [1] InGreenZone set shuman := inGreen;
}
"""


def test_small_model():
    net = load_model(HUMAN_ONLY)
    assert len(net.machines) == 1 and len(net.domains) == 1
    assert net.machines[0].initial == "OutOfRange"


def test_missing_state_identifier():
    res = parse_model("machine M { state }", "m.psm")
    assert not res.ok
    d = res.diagnostics[0]
    assert d.span.line == 1
    assert "expected state identifier" in d.message


def test_bundled_model_shape():
    net = load_model(bundled_text("uvc.psm"))
    # the tick relay is built into the semantics, not declared as a machine
    assert [m.name for m in net.machines] == ["HumanSTM", "ODSSTM", "RobotSTM"]
    assert set(net.shared_vars) == {"shuman", "sods", "srobot"}
    assert net.horizon == "N_ticks"
    assert net == uvc_network()


def test_duplicate_definition():
    with pytest.raises(ParseError):
        load_model(HUMAN_ONLY + "\ndomain HumanZone { a }\n")


def test_syntax_error_has_expected_tokens():
    res = parse_model("domain D { a b }")
    assert not res.ok
    assert "expected" in res.diagnostics[0].message


def test_bundled_queries():
    props = parse_properties(bundled_text("uvc.pprop"))
    p1, p2 = props.queries
    assert p1.id == "P1" and p1.kind == "probability"
    assert p1.tick_mode == "exact" and p1.is_parametric and p1.config == "C1"
    assert [(a.var, a.value) for a in p1.predicate] == [("shuman", "inRed"),
                                                       ("srobot", "transitionRow")]
    assert p2.kind == "deadlockFreedom" and p2.config == "C1"
    assert props.imports == ("uvc",)


def test_cumulative_query():
    (q,) = parse_properties("prob property Q:\n  Prob=? of [Finally ticks <= 5]").queries
    assert q.tick_mode == "cumulative" and q.tick_value == 5 and q.predicate == ()


def test_query_syntax_error():
    with pytest.raises(ParseError):
        parse_properties("prob property Q: Prob=? of [Eventually x==y]")


def test_config_c1():
    cfgs = parse_config(bundled_text("uvc.pcfg"))
    c1 = next(c for c in cfgs if c.name == "C1")
    assert len(c1.bindings) == 8
    assert c1.bindings["p_ods_yellow"] == Fraction(7, 10)
    assert c1.bindings["p_ods_green"] == Fraction(2, 5)


def test_config_empty():
    assert parse_config("") == []
    assert parse_config("// nothing\n") == []


def test_config_duplicate_constant():
    with pytest.raises(ParseError):
        parse_config("config X { p_ods_green = 0.4; p_ods_green = 0.5; }")


def test_config_round_trip():
    for cfg in parse_config(bundled_text("uvc.pcfg")):
        assert parse_config(format_config(cfg)) == [cfg]


def test_uvc_round_trip():
    text = pretty_print(uvc_network())
    assert load_model(text) == uvc_network()
    assert pretty_print(load_model(text)) == text


def test_minimal_canonical_form():
    text = """machine M { initial S; state S; }
const N : count = 0;
horizon N;
"""
    once = pretty_print(load_model(text))
    assert pretty_print(load_model(once)) == once
    assert once == pretty_print(load_model(text))


def test_declaration_order_is_canonicalised():
    a = """domain B { y } domain A { x }
var v : A = x; var u : B = y;
const q : probability; const N : count = 1;
horizon N;
machine M { initial S; state S; }"""
    b = """const N : count = 1; const q : probability;
var u : B = y;
domain A { x } domain B { y }
var v : A = x;
horizon N;
machine M { state S; initial S; }"""
    assert pretty_print(load_model(a)) == pretty_print(load_model(b))


# --- property-based -------------------------------------------------------

IDENT = st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True).filter(
    lambda s: s not in {"domain", "var", "const", "horizon", "machine", "initial", "state",
                        "from", "when", "goto", "set", "or", "and", "not", "true",
                        "probability", "count", "ratio"})


@st.composite
def networks(draw):
    values = draw(st.lists(IDENT, min_size=1, max_size=3, unique=True))
    var_names = draw(st.lists(IDENT.map(lambda s: "v_" + s), min_size=1, max_size=2,
                              unique=True))
    consts = draw(st.lists(IDENT.map(lambda s: "c_" + s), min_size=0, max_size=2, unique=True))
    states = draw(st.lists(IDENT.map(lambda s: "S" + s), min_size=1, max_size=3, unique=True))
    atom = st.builds(VarAtom, st.sampled_from(var_names), st.sampled_from(["==", "!="]),
                     st.sampled_from(values))
    guard = st.one_of(
        st.just(TRUE), atom, atom.map(Not),
        st.lists(atom, min_size=2, max_size=3).map(lambda xs: And(tuple(xs))),
        st.lists(atom, min_size=2, max_size=3).map(lambda xs: Or(tuple(xs))),
    )
    leaf = st.one_of(st.integers(0, 100).map(lambda k: num(Fraction(k, 100))),
                     st.sampled_from(consts).map(ConstRef) if consts else st.nothing())
    weight = st.one_of(leaf, st.builds(BinOp, st.sampled_from("+-*/"), leaf, leaf))
    updates = st.lists(st.tuples(st.sampled_from(var_names), st.sampled_from(values)),
                       max_size=2, unique_by=lambda u: u[0]).map(tuple)
    branch = st.builds(Branch, weight, st.sampled_from(states), updates)
    transition = st.builds(Transition, st.sampled_from(states), guard,
                           st.lists(branch, min_size=1, max_size=3).map(tuple))
    machine = MachineDef("M", draw(st.sampled_from(states)), tuple(states),
                         tuple(draw(st.lists(transition, max_size=4))))
    return Network(
        domains={"D": EnumDomain("D", tuple(values))},
        shared_vars={v: SharedVar(v, "D", draw(st.sampled_from(values))) for v in var_names},
        constants={**{c: ConstantDef(c, "probability") for c in consts},
                   "N": ConstantDef("N", "count", Fraction(draw(st.integers(0, 9))))},
        machines=(machine,),
        horizon="N",
    )


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(networks())
def test_round_trip_random_networks(net):
    text = pretty_print(net)
    assert load_model(text) == net


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=200))
def test_parse_model_never_raises(text):
    res = parse_model(text)
    assert res.ok or res.diagnostics


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(["machine", "M", "{", "}", "state", "S", ";", "from", "goto",
                                 "[", "]", "0.5", "or", "when", "x", "==", "(", ")", "set",
                                 ":=", "domain", "var", ":", "=", "horizon", "initial", ","]),
                max_size=40))
def test_parse_model_token_soup(tokens):
    res = parse_model(" ".join(tokens))
    assert res.ok or all(d.span is not None for d in res.diagnostics)


def test_deep_nesting_is_a_diagnostic():
    text = "machine M { initial S; state S; from S when " + "(" * 5000 + "x == a" + \
        ")" * 5000 + " goto [1] S; }"
    assert not parse_model(text).ok
