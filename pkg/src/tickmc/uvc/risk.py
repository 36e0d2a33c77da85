"""Hazard registry, risk matrix and SIL banding for the row-transition hazard.

Risk matrix (rows: severity, columns: occurrence). Only the (critical,
probable) cell comes from the hazard analysis; the rest is the usual
four-class convention.

    severity \\ occurrence  improbable  remote   occasional   probable     frequent
    negligible             low         low      low          medium       medium
    marginal               low         low      medium       high         high
    critical               low         medium   high         intolerable  intolerable
    catastrophic           medium      high     intolerable  intolerable  intolerable

Classes ``low`` and ``medium`` are tolerable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

SEVERITIES = ("negligible", "marginal", "critical", "catastrophic")
OCCURRENCES = ("improbable", "remote", "occasional", "probable", "frequent")
RISK_CLASSES = ("low", "medium", "high", "intolerable")
TOLERABLE = frozenset({"low", "medium"})

RISK_MATRIX: dict[str, tuple[str, ...]] = {
    "negligible": ("low", "low", "low", "medium", "medium"),
    "marginal": ("low", "low", "medium", "high", "high"),
    "critical": ("low", "medium", "high", "intolerable", "intolerable"),
    "catastrophic": ("medium", "high", "intolerable", "intolerable", "intolerable"),
}

# Relative slack when an RRF lands on a decade boundary through rounding
# (0.12 / 0.012 is 9.999999999999998 in binary floating point).
_BAND_RTOL = 1e-9


@dataclass(frozen=True)
class Hazard:
    code: str
    situation: str
    failure: str
    effect: str
    consequence: str
    severity: str
    occurrence: str

    def __post_init__(self):
        if self.severity not in SEVERITIES:
            raise ValueError(f"unknown severity '{self.severity}'")
        if self.occurrence not in OCCURRENCES:
            raise ValueError(f"unknown occurrence '{self.occurrence}'")


@dataclass(frozen=True)
class RiskAssessment:
    hazard: str
    risk_class: str
    tolerable: bool


@dataclass(frozen=True)
class RiskReduction:
    rrf: float
    sil: int | None  # 1..4, None below a factor of 10

    @property
    def band(self) -> str:
        return f"SIL{self.sil}" if self.sil else "none"


F_G5 = Hazard(
    code="F-G5",
    situation="Robot at the end of the rows when a worker is approaching laterally",
    failure="Robot detects the human only when they are too close",
    effect="Robot stops the UVC light too late",
    consequence="Human is injured by the UVC light",
    severity="critical",
    occurrence="probable",
)


def hazard_registry() -> dict[str, Hazard]:
    return {F_G5.code: F_G5}


def risk_matrix_level(severity: str, occurrence: str) -> tuple[str, bool]:
    """Risk class and tolerability of a (severity, occurrence) cell."""
    try:
        row = RISK_MATRIX[severity]
        risk = row[OCCURRENCES.index(occurrence)]
    except (KeyError, ValueError):
        raise ValueError(f"no risk-matrix cell for ({severity!r}, {occurrence!r})") from None
    return risk, risk in TOLERABLE


def assess(hazard: Hazard) -> RiskAssessment:
    risk, tolerable = risk_matrix_level(hazard.severity, hazard.occurrence)
    return RiskAssessment(hazard.code, risk, tolerable)


def risk_reduction_and_sil(p_baseline: float, p_mitigated: float) -> RiskReduction:
    """Risk reduction factor between two occurrence probabilities and its SIL band.

    Each decade of reduction is one SIL: [10, 100) is SIL 1 up to >= 10^4 for
    SIL 4. A mitigated probability of zero gives an infinite factor, capped at
    SIL 4.
    """
    if not p_baseline > 0:
        raise ValueError(f"baseline probability must be positive, got {p_baseline!r}")
    if p_mitigated < 0:
        raise ValueError(f"mitigated probability must be non-negative, got {p_mitigated!r}")
    if p_mitigated == 0:
        return RiskReduction(math.inf, 4)
    rrf = p_baseline / p_mitigated
    decades = math.floor(math.log10(rrf * (1 + _BAND_RTOL)))
    sil = min(4, decades) if decades >= 1 else None
    return RiskReduction(rrf, sil)


def mitigate(hazard: Hazard, rrf: float) -> Hazard:
    """Lower the hazard's occurrence by one band per decade of risk reduction."""
    if rrf < 1:
        return hazard
    bands = 4 if math.isinf(rrf) else math.floor(math.log10(rrf * (1 + _BAND_RTOL)))
    i = max(0, OCCURRENCES.index(hazard.occurrence) - bands)
    return replace(hazard, occurrence=OCCURRENCES[i])
