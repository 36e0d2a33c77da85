"""Shared fixtures-as-functions for the test modules."""

import functools

from tickmc.composer import compose, from_json
from tickmc.dsl import load_model, parse_properties
from tickmc.model import bind_constants, with_bindings
from tickmc.uvc import build_uvc_network, bundled_path, bundled_text, scenario_table

COIN_PAIR = """
domain Face { heads, tails }
var a : Face = heads;
var b : Face = heads;
const N : count = 1;
horizon N;
machine A {
  initial H;
  state H, T;
  from H goto [0.5] H set a := heads or [0.5] T set a := tails;
  from T goto [1] T;
}
machine B {
  initial H;
  state H, T;
  from H goto [0.5] H set b := heads or [0.5] T set b := tails;
  from T goto [1] T;
}
"""

TRIVIAL = """
domain D { only }
var x : D = only;
const N : count = 0;
horizon N;
machine M { initial S; state S; }
"""


def two_state_chain():
    """A -> A 0.5, A -> B 0.5, B absorbing; horizon 2."""
    return from_json({
        "initial": 0, "horizon": 2,
        "states": [
            {"index": 0, "machineStates": {"M": "A"}, "valuation": {"x": "a"}, "ticks": 0},
            {"index": 1, "machineStates": {"M": "B"}, "valuation": {"x": "b"}, "ticks": 0},
        ],
        "edges": [{"from": 0, "to": 0, "p": 0.5}, {"from": 0, "to": 1, "p": 0.5},
                  {"from": 1, "to": 1, "p": 1.0}],
    })


@functools.lru_cache(maxsize=None)
def uvc_network():
    return build_uvc_network()


@functools.lru_cache(maxsize=None)
def scenarios(horizon=30):
    return {c.name: c for c in scenario_table(horizon)}


def scenario(name, horizon=30):
    return scenarios(horizon)[name]


@functools.lru_cache(maxsize=None)
def concrete(name, horizon=30):
    return bind_constants(uvc_network(), scenario(name, horizon))


@functools.lru_cache(maxsize=None)
def uvc_chain(name, horizon=30):
    return compose(concrete(name, horizon))


@functools.lru_cache(maxsize=None)
def uvc_queries():
    return parse_properties(bundled_text("uvc.pprop"))


def p1(mode="exact"):
    return uvc_queries().query("P1").with_mode(mode)


def uvc_files():
    return {k: str(bundled_path(f"uvc.{k}")) for k in ("psm", "pprop", "pcfg")}
