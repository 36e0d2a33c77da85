"""The UVC row-transition study: human, object detection system (ODS) and robot.

The human walks inward through the zones (out of range, green, yellow, red)
with awareness-dependent approach probabilities. The ODS reports a detection
with a zone-dependent accuracy. The robot treats along a row, occasionally
transitions between rows, and pauses while the ODS reports a human.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..model import (
    BinOp,
    Branch,
    ConstantDef,
    ConstRef,
    EnumDomain,
    MachineDef,
    Network,
    Or,
    ScenarioConfig,
    SharedVar,
    TRUE,
    Transition,
    VarAtom,
    num,
)

ZONES = ("outOfRange", "inGreen", "inYellow", "inRed")
ZONE_DISTANCES = {
    "outOfRange": "outside the operational area",
    "inGreen": "> 7 m",
    "inYellow": "3-7 m",
    "inRed": "0-3 m",
}

P_AWARE_OF_RISK = Fraction("0.01")
P_TRANSITION_RATIO = 10
DEFAULT_HORIZON = 30

OPEN_CONSTANTS = (
    "p_approach_robot", "p_approach_yellow", "p_approach_red", "p_aware_of_risk",
    "p_ods_green", "p_ods_yellow", "p_transition_ratio", "N_ticks",
)


@dataclass(frozen=True)
class ZoneModel:
    zones: tuple[str, ...] = ZONES

    def inward(self, zone: str) -> str | None:
        i = self.zones.index(zone)
        return self.zones[i + 1] if i + 1 < len(self.zones) else None


@dataclass(frozen=True)
class AwarenessLevel:
    name: str
    p_approach_robot: Fraction
    p_approach_yellow: Fraction
    p_approach_red: Fraction


@dataclass(frozen=True)
class OdsProfile:
    name: str
    p_ods_green: Fraction
    p_ods_yellow: Fraction


AWARENESS_LEVELS = (
    AwarenessLevel("deliberate", Fraction(1), Fraction(1), Fraction(1)),
    AwarenessLevel("aware", Fraction("0.5"), Fraction("0.5"), Fraction("0.3")),
    AwarenessLevel("lessAware", Fraction("0.7"), Fraction("0.7"), Fraction("0.5")),
)

ODS_PROFILES = (
    OdsProfile("highPerformance", Fraction("0.99"), Fraction("0.99")),
    OdsProfile("normal", Fraction("0.4"), Fraction("0.7")),
    OdsProfile("failure", Fraction(0), Fraction(0)),
)

# Ordered from least to most careful human; used by dominance checks.
AWARENESS_RISK_ORDER = ("deliberate", "lessAware", "aware")
# Ordered from worst to best detector.
ODS_QUALITY_ORDER = ("failure", "normal", "highPerformance")


def awareness(name: str) -> AwarenessLevel:
    for level in AWARENESS_LEVELS:
        if level.name == name:
            return level
    raise KeyError(name)


def ods_profile(name: str) -> OdsProfile:
    for profile in ODS_PROFILES:
        if profile.name == name:
            return profile
    raise KeyError(name)


def scenario_name(level: AwarenessLevel | str, profile: OdsProfile | str) -> str:
    a = level if isinstance(level, str) else level.name
    o = profile if isinstance(profile, str) else profile.name
    return f"{a}_{o}"


def scenario_config(level: AwarenessLevel | str, profile: OdsProfile | str,
                    horizon: int = DEFAULT_HORIZON, name: str | None = None) -> ScenarioConfig:
    level = awareness(level) if isinstance(level, str) else level
    profile = ods_profile(profile) if isinstance(profile, str) else profile
    bindings = {
        "p_approach_robot": level.p_approach_robot,
        "p_approach_yellow": level.p_approach_yellow,
        "p_approach_red": level.p_approach_red,
        "p_aware_of_risk": P_AWARE_OF_RISK,
        "p_ods_green": profile.p_ods_green,
        "p_ods_yellow": profile.p_ods_yellow,
        "p_transition_ratio": Fraction(P_TRANSITION_RATIO),
        "N_ticks": Fraction(horizon),
    }
    return ScenarioConfig(name or scenario_name(level, profile), bindings)


def scenario_table(horizon: int = DEFAULT_HORIZON) -> list[ScenarioConfig]:
    """The nine awareness x ODS configurations."""
    return [scenario_config(level, profile, horizon)
            for level in AWARENESS_LEVELS for profile in ODS_PROFILES]


def classify_config(cfg: ScenarioConfig) -> tuple[str | None, str | None]:
    """Recover (awareness, ODS profile) names from a config's bindings."""
    b = cfg.bindings
    level = next((lv.name for lv in AWARENESS_LEVELS
                  if (b.get("p_approach_robot"), b.get("p_approach_yellow"),
                      b.get("p_approach_red"))
                  == (lv.p_approach_robot, lv.p_approach_yellow, lv.p_approach_red)), None)
    profile = next((p.name for p in ODS_PROFILES
                    if (b.get("p_ods_green"), b.get("p_ods_yellow"))
                    == (p.p_ods_green, p.p_ods_yellow)), None)
    return level, profile


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------


def _c(name: str) -> ConstRef:
    return ConstRef(name)


def _one_minus(expr) -> BinOp:
    return BinOp("-", num(1), expr)


def _human() -> MachineDef:
    states = ("OutOfRange", "InGreenZone", "InYellowZone", "InRedZone")
    steps = [
        ("OutOfRange", "p_approach_robot", "InGreenZone", "inGreen"),
        ("InGreenZone", "p_approach_yellow", "InYellowZone", "inYellow"),
        ("InYellowZone", "p_approach_red", "InRedZone", "inRed"),
        # in the red zone the only move is a retreat driven by risk awareness
        ("InRedZone", "p_aware_of_risk", "InYellowZone", "inYellow"),
    ]
    transitions = tuple(
        Transition(src, TRUE, (
            Branch(_c(p), dst, (("shuman", zone),)),
            Branch(_one_minus(_c(p)), src),
        ))
        for src, p, dst, zone in steps
    )
    return MachineDef("HumanSTM", "OutOfRange", states, transitions)


def _ods() -> MachineDef:
    states = ("NoHumanDetected", "HumanDetectedInGreen", "HumanDetectedInYellow")
    miss = ("sods", "noHumanDetected")
    transitions = []
    for src in states:
        transitions += [
            Transition(src, VarAtom("shuman", "==", "outOfRange"), (
                Branch(num(1), "NoHumanDetected", (miss,)),
            )),
            Transition(src, VarAtom("shuman", "==", "inGreen"), (
                Branch(_c("p_ods_green"), "HumanDetectedInGreen",
                       (("sods", "humanDetectedInGreen"),)),
                Branch(_one_minus(_c("p_ods_green")), "NoHumanDetected", (miss,)),
            )),
            # no red-detection state: a human in red is reported as in yellow
            Transition(src, Or((VarAtom("shuman", "==", "inYellow"),
                                VarAtom("shuman", "==", "inRed"))), (
                Branch(_c("p_ods_yellow"), "HumanDetectedInYellow",
                       (("sods", "humanDetectedInYellow"),)),
                Branch(_one_minus(_c("p_ods_yellow")), "NoHumanDetected", (miss,)),
            )),
        ]
    return MachineDef("ODSSTM", "NoHumanDetected", states, tuple(transitions))


def _robot() -> MachineDef:
    states = ("MoveAlongRow", "TransitionBetweenRows", "PausedFromRow", "PausedFromTransition")
    seen = VarAtom("sods", "!=", "noHumanDetected")
    clear = VarAtom("sods", "==", "noHumanDetected")
    exit_row = BinOp("/", num(1), _c("p_transition_ratio"))
    transitions = (
        Transition("MoveAlongRow", seen, (
            Branch(num(1), "PausedFromRow", (("srobot", "paused"),)),
        )),
        Transition("MoveAlongRow", clear, (
            Branch(exit_row, "TransitionBetweenRows", (("srobot", "transitionRow"),)),
            Branch(_one_minus(exit_row), "MoveAlongRow"),
        )),
        Transition("TransitionBetweenRows", seen, (
            Branch(num(1), "PausedFromTransition", (("srobot", "paused"),)),
        )),
        Transition("TransitionBetweenRows", clear, (
            Branch(num(1), "MoveAlongRow", (("srobot", "moveAlongRow"),)),
        )),
        Transition("PausedFromRow", clear, (
            Branch(num(1), "MoveAlongRow", (("srobot", "moveAlongRow"),)),
        )),
        Transition("PausedFromRow", seen, (Branch(num(1), "PausedFromRow"),)),
        Transition("PausedFromTransition", clear, (
            Branch(num(1), "TransitionBetweenRows", (("srobot", "transitionRow"),)),
        )),
        Transition("PausedFromTransition", seen, (Branch(num(1), "PausedFromTransition"),)),
    )
    return MachineDef("RobotSTM", "MoveAlongRow", states, transitions)


def build_uvc_network() -> Network:
    """The case-study network with all eight constants left open.

    Update order within a tick is human, ODS, robot.
    """
    domains = {
        "HumanZone": EnumDomain("HumanZone", ZONES),
        "OdsStatus": EnumDomain("OdsStatus", ("noHumanDetected", "humanDetectedInGreen",
                                              "humanDetectedInYellow")),
        "RobotStatus": EnumDomain("RobotStatus", ("moveAlongRow", "transitionRow", "paused")),
    }
    shared = {
        "shuman": SharedVar("shuman", "HumanZone", "outOfRange"),
        "sods": SharedVar("sods", "OdsStatus", "noHumanDetected"),
        "srobot": SharedVar("srobot", "RobotStatus", "moveAlongRow"),
    }
    kinds = {"p_transition_ratio": "ratio", "N_ticks": "count"}
    constants = {name: ConstantDef(name, kinds.get(name, "probability"))
                 for name in OPEN_CONSTANTS}
    return Network(domains=domains, shared_vars=shared, constants=constants,
                   machines=(_human(), _ods(), _robot()), horizon="N_ticks")
