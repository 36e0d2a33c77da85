import math
from fractions import Fraction

import pytest

from tickmc.dsl import parse_config
from tickmc.model import bind_constants
from tickmc.uvc import (
    assess, bundled_text, classify_config, hazard_registry, mitigate, risk_matrix_level,
    risk_reduction_and_sil, scenario_config, scenario_table,
)
from tickmc.uvc.case import OPEN_CONSTANTS
from tickmc.uvc.risk import OCCURRENCES, RISK_MATRIX, SEVERITIES

from helpers import uvc_network


def test_aware_normal_bindings():
    b = scenario_config("aware", "normal").bindings
    assert (b["p_approach_robot"], b["p_approach_yellow"], b["p_approach_red"]) == \
        (Fraction(1, 2), Fraction(1, 2), Fraction(3, 10))
    assert (b["p_ods_yellow"], b["p_ods_green"]) == (Fraction(7, 10), Fraction(2, 5))
    assert b["p_aware_of_risk"] == Fraction(1, 100)
    assert b["p_transition_ratio"] == 10


def test_failure_profile_zero():
    b = scenario_config("lessAware", "failure").bindings
    assert b["p_ods_green"] == 0 and b["p_ods_yellow"] == 0


def test_table_complete():
    table = scenario_table()
    assert len(table) == 9 and len({c.name for c in table}) == 9
    for cfg in table:
        assert set(cfg.bindings) == set(OPEN_CONSTANTS)
        bind_constants(uvc_network(), cfg)
        level, profile = classify_config(cfg)
        assert cfg.name == f"{level}_{profile}"


def test_bundled_configs_match_table():
    bundled = {c.name: c for c in parse_config(bundled_text("uvc.pcfg"))}
    for cfg in scenario_table():
        assert bundled[cfg.name].bindings == cfg.bindings
    assert classify_config(bundled["C1"]) == ("aware", "normal")


def test_unknown_names():
    with pytest.raises(KeyError):
        scenario_config("reckless", "normal")


def test_risk_matrix_cells():
    assert risk_matrix_level("critical", "probable") == ("intolerable", False)
    assert risk_matrix_level("negligible", "improbable") == ("low", True)
    assert risk_matrix_level("critical", "remote") == ("medium", True)
    with pytest.raises(ValueError):
        risk_matrix_level("critical", "sometimes")


def test_risk_matrix_frozen():
    assert RISK_MATRIX == {
        "negligible": ("low", "low", "low", "medium", "medium"),
        "marginal": ("low", "low", "medium", "high", "high"),
        "critical": ("low", "medium", "high", "intolerable", "intolerable"),
        "catastrophic": ("medium", "high", "intolerable", "intolerable", "intolerable"),
    }
    order = ("low", "medium", "high", "intolerable")
    # risk never decreases with severity or occurrence
    for s in SEVERITIES:
        ranks = [order.index(RISK_MATRIX[s][i]) for i in range(len(OCCURRENCES))]
        assert ranks == sorted(ranks)
    for i in range(len(OCCURRENCES)):
        ranks = [order.index(RISK_MATRIX[s][i]) for s in SEVERITIES]
        assert ranks == sorted(ranks)


def test_hazard_registry():
    fg5 = hazard_registry()["F-G5"]
    assert (fg5.severity, fg5.occurrence) == ("critical", "probable")
    assert assess(fg5).risk_class == "intolerable" and not assess(fg5).tolerable


@pytest.mark.parametrize("pb,pm,rrf,band", [
    (0.12, 0.012, 10, "SIL1"),
    (0.12, 0.0012, 100, "SIL2"),
    (0.12, 0.12, 1, "none"),
    (0.5, 0.00005, 10_000, "SIL4"),
    (0.5, 0.02, 25, "SIL1"),
])
def test_sil_bands(pb, pm, rrf, band):
    red = risk_reduction_and_sil(pb, pm)
    assert red.rrf == pytest.approx(rrf, rel=1e-12)
    assert red.band == band


def test_sil_edges():
    assert risk_reduction_and_sil(0.3, 0.0).rrf == math.inf
    assert risk_reduction_and_sil(0.3, 0.0).sil == 4
    with pytest.raises(ValueError):
        risk_reduction_and_sil(0.0, 0.1)
    with pytest.raises(ValueError):
        risk_reduction_and_sil(-1.0, 0.1)


def test_mitigation_lowers_occurrence():
    fg5 = hazard_registry()["F-G5"]
    assert mitigate(fg5, 10).occurrence == "occasional"
    assert assess(mitigate(fg5, 100)).tolerable
    assert mitigate(fg5, 1.5) == fg5
