"""The UVC light-treatment case study: model, scenarios and risk analysis."""

from importlib import resources

from .case import (
    AWARENESS_LEVELS,
    ODS_PROFILES,
    AwarenessLevel,
    OdsProfile,
    ZoneModel,
    build_uvc_network,
    classify_config,
    scenario_config,
    scenario_table,
)
from .risk import (
    Hazard,
    RiskAssessment,
    RiskReduction,
    assess,
    hazard_registry,
    mitigate,
    risk_matrix_level,
    risk_reduction_and_sil,
)


def bundled_text(name: str) -> str:
    """Text of a bundled file: ``uvc.psm``, ``uvc.pprop`` or ``uvc.pcfg``."""
    return resources.files(__package__).joinpath("data", name).read_text(encoding="utf-8")


def bundled_path(name: str):
    return resources.files(__package__).joinpath("data", name)


__all__ = [
    "AWARENESS_LEVELS",
    "ODS_PROFILES",
    "AwarenessLevel",
    "Hazard",
    "OdsProfile",
    "RiskAssessment",
    "RiskReduction",
    "ZoneModel",
    "assess",
    "build_uvc_network",
    "bundled_path",
    "bundled_text",
    "classify_config",
    "hazard_registry",
    "mitigate",
    "risk_matrix_level",
    "risk_reduction_and_sil",
    "scenario_config",
    "scenario_table",
]
