"""In-memory representation of tick-synchronized probabilistic state machines.

A :class:`Network` is a set of machines that read and write enumerated shared
variables. Every transition is triggered by the global tick, may be guarded by
a predicate over the shared variables, and resolves through a probabilistic
choice whose branch weights are arithmetic expressions over named constants.

Networks are immutable. Analysis needs every constant resolved, which is what
:func:`bind_constants` produces (a :class:`ConcreteNetwork`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .errors import (
    EvaluationError,
    OutOfRangeError,
    UnboundConstantError,
    ValidationError,
)

WEIGHT_TOLERANCE = 1e-9

CONSTANT_KINDS = ("probability", "count", "ratio")

Number = Union[Fraction, float]


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    location: str = ""
    span: SourceSpan | None = None

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        loc = f" [{self.location}]" if self.location else ""
        return f"{where}{self.severity}: {self.message}{loc}"


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class ConstRef:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "ProbExpr"
    right: "ProbExpr"


ProbExpr = Union[Num, ConstRef, BinOp]


@dataclass(frozen=True)
class VarAtom:
    var: str
    op: str  # "==" | "!="
    value: str


@dataclass(frozen=True)
class TrueGuard:
    pass


@dataclass(frozen=True)
class Not:
    operand: "GuardExpr"


@dataclass(frozen=True)
class And:
    operands: tuple["GuardExpr", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["GuardExpr", ...]


GuardExpr = Union[VarAtom, TrueGuard, Not, And, Or]

TRUE = TrueGuard()


def num(value) -> Num:
    """Literal helper accepting ints, Fractions or decimal strings."""
    return Num(Fraction(value))


def guard_vars(expr: GuardExpr) -> set[str]:
    if isinstance(expr, VarAtom):
        return {expr.var}
    if isinstance(expr, Not):
        return guard_vars(expr.operand)
    if isinstance(expr, (And, Or)):
        out: set[str] = set()
        for part in expr.operands:
            out |= guard_vars(part)
        return out
    return set()


def guard_atoms(expr: GuardExpr) -> list[VarAtom]:
    if isinstance(expr, VarAtom):
        return [expr]
    if isinstance(expr, Not):
        return guard_atoms(expr.operand)
    if isinstance(expr, (And, Or)):
        return [a for part in expr.operands for a in guard_atoms(part)]
    return []


def expr_constants(expr: ProbExpr) -> set[str]:
    if isinstance(expr, ConstRef):
        return {expr.name}
    if isinstance(expr, BinOp):
        return expr_constants(expr.left) | expr_constants(expr.right)
    return set()


def evaluate_expression(expr, valuation: Mapping[str, str] | None = None,
                        bindings: Mapping[str, Number] | None = None):
    """Evaluate a guard (to ``bool``) or a weight expression (to a number).

    Weight arithmetic stays in :class:`~fractions.Fraction` while every
    operand is rational and falls back to ``float`` as soon as one is not.
    """
    valuation = valuation or {}
    bindings = bindings or {}
    if isinstance(expr, TrueGuard):
        return True
    if isinstance(expr, VarAtom):
        try:
            current = valuation[expr.var]
        except KeyError:
            raise EvaluationError(f"unknown variable '{expr.var}'") from None
        return (current == expr.value) == (expr.op == "==")
    if isinstance(expr, Not):
        return not evaluate_expression(expr.operand, valuation, bindings)
    if isinstance(expr, And):
        return all(evaluate_expression(p, valuation, bindings) for p in expr.operands)
    if isinstance(expr, Or):
        return any(evaluate_expression(p, valuation, bindings) for p in expr.operands)
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, ConstRef):
        try:
            value = bindings[expr.name]
        except KeyError:
            raise EvaluationError(f"unknown constant '{expr.name}'") from None
        if value is None:
            raise UnboundConstantError(expr.name)
        return value
    if isinstance(expr, BinOp):
        lhs = evaluate_expression(expr.left, valuation, bindings)
        rhs = evaluate_expression(expr.right, valuation, bindings)
        if expr.op == "+":
            return lhs + rhs
        if expr.op == "-":
            return lhs - rhs
        if expr.op == "*":
            return lhs * rhs
        if expr.op == "/":
            if rhs == 0:
                raise EvaluationError("division by zero")
            return lhs / rhs
        raise EvaluationError(f"unknown operator '{expr.op}'")
    raise EvaluationError(f"cannot evaluate {expr!r}")


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnumDomain:
    name: str
    values: tuple[str, ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SharedVar:
    name: str
    domain: str
    initial: str
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ConstantDef:
    name: str
    kind: str = "probability"
    value: Number | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Branch:
    weight: ProbExpr
    target: str
    updates: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Transition:
    source: str
    guard: GuardExpr
    branches: tuple[Branch, ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MachineDef:
    name: str
    initial: str
    states: tuple[str, ...]
    transitions: tuple[Transition, ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    @property
    def writes(self) -> frozenset[str]:
        return frozenset(var for t in self.transitions for b in t.branches
                         for var, _ in b.updates)

    def transitions_from(self, state: str) -> list[Transition]:
        return [t for t in self.transitions if t.source == state]


@dataclass(frozen=True)
class Network:
    """Machines plus the shared declarations they refer to.

    ``machines`` is ordered: within a tick, machines update in this order and
    each one sees the writes of the machines before it.
    """

    domains: Mapping[str, EnumDomain] = field(default_factory=dict)
    shared_vars: Mapping[str, SharedVar] = field(default_factory=dict)
    constants: Mapping[str, ConstantDef] = field(default_factory=dict)
    machines: tuple[MachineDef, ...] = ()
    horizon: str | None = None

    def machine(self, name: str) -> MachineDef:
        for m in self.machines:
            if m.name == name:
                return m
        raise KeyError(name)

    def domain_of(self, var: str) -> EnumDomain:
        return self.domains[self.shared_vars[var].domain]

    def initial_valuation(self) -> dict[str, str]:
        return {name: v.initial for name, v in self.shared_vars.items()}

    def default_bindings(self) -> dict[str, Number | None]:
        return {name: c.value for name, c in self.constants.items()}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    bindings: Mapping[str, Number] = field(default_factory=dict)
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ConcreteNetwork:
    """A validated network whose constants are all resolved.

    ``weights[m][k]`` holds the evaluated branch weights of transition ``k`` of
    machine ``m``.
    """

    network: Network
    config: str
    bindings: Mapping[str, Number]
    weights: tuple[tuple[tuple[Number, ...], ...], ...]

    @property
    def horizon(self) -> int:
        return int(self.bindings[self.network.horizon])

    @property
    def machines(self) -> tuple[MachineDef, ...]:
        return self.network.machines


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _sum_weights(weights: Sequence[Number]) -> Number:
    if all(isinstance(w, Fraction) for w in weights):
        return sum(weights, Fraction(0))
    return math.fsum(float(w) for w in weights)


def weights_sum_to_one(weights: Sequence[Number]) -> bool:
    total = _sum_weights(weights)
    if isinstance(total, Fraction):
        return total == 1
    return abs(total - 1.0) <= WEIGHT_TOLERANCE


def _fmt_number(value: Number) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{float(value):g}"
    return f"{value:g}"


def _check_constant_value(c: ConstantDef, value) -> str | None:
    if c.kind == "probability" and not (0 <= value <= 1):
        return "a probability in [0, 1]"
    if c.kind == "count" and (value < 0 or value != int(value)):
        return "a non-negative integer"
    if c.kind == "ratio" and value < 0:
        return "a non-negative number"
    return None


def validate_network(net: Network, bindings: Mapping[str, Number] | None = None
                     ) -> list[Diagnostic]:
    """Check every structural invariant of ``net`` and return diagnostics.

    Branch weights are checked only where every constant they mention has a
    value, either from its declaration or from ``bindings``. An empty list
    (or one holding only warnings) means the network is usable.
    """
    diags: list[Diagnostic] = []

    def error(msg, location="", span=None):
        diags.append(Diagnostic("error", msg, location, span))

    def warning(msg, location="", span=None):
        diags.append(Diagnostic("warning", msg, location, span))

    for d in net.domains.values():
        if not d.values:
            error(f"domain '{d.name}' has no values", f"domain {d.name}", d.span)
        seen = set()
        for v in d.values:
            if v in seen:
                error(f"duplicate value '{v}' in domain '{d.name}'", f"domain {d.name}", d.span)
            seen.add(v)

    for v in net.shared_vars.values():
        dom = net.domains.get(v.domain)
        if dom is None:
            error(f"shared variable '{v.name}' has unknown domain '{v.domain}'",
                  f"var {v.name}", v.span)
        elif v.initial not in dom.values:
            error(f"initial value '{v.initial}' of '{v.name}' is not in domain '{dom.name}'",
                  f"var {v.name}", v.span)

    values: dict[str, Number | None] = net.default_bindings()
    if bindings:
        values.update({k: v for k, v in bindings.items() if k in values})
    for c in net.constants.values():
        if c.kind not in CONSTANT_KINDS:
            error(f"constant '{c.name}' has unknown kind '{c.kind}'", f"const {c.name}", c.span)
            continue
        value = values.get(c.name)
        if value is not None:
            expected = _check_constant_value(c, value)
            if expected:
                error(f"constant '{c.name}' = {_fmt_number(value)} must be {expected}",
                      f"const {c.name}", c.span)

    if net.horizon is None:
        error("network declares no tick horizon")
    elif net.horizon not in net.constants:
        error(f"horizon refers to unknown constant '{net.horizon}'")
    elif net.constants[net.horizon].kind != "count":
        error(f"horizon constant '{net.horizon}' must be of kind count")

    names = [m.name for m in net.machines]
    for name in sorted({n for n in names if names.count(n) > 1}):
        error(f"machine '{name}' is defined more than once", f"machine {name}")
    if not net.machines:
        error("network has no machines")

    writers: dict[str, list[str]] = {}
    for m in net.machines:
        for var in m.writes:
            writers.setdefault(var, []).append(m.name)
    for var, ms in sorted(writers.items()):
        if len(ms) > 1:
            error(f"shared variable written by multiple machines: '{var}' ({', '.join(ms)})",
                  f"var {var}")

    for m in net.machines:
        _validate_machine(net, m, values, error, warning)
    return diags


def _validate_machine(net, m: MachineDef, values, error, warning) -> None:
    where = f"machine {m.name}"
    if not m.states:
        error(f"machine '{m.name}' has no states", where, m.span)
    dup = sorted({s for s in m.states if m.states.count(s) > 1})
    for s in dup:
        error(f"state '{s}' is declared more than once", where, m.span)
    if m.initial not in m.states:
        error(f"initial state '{m.initial}' is not a state of '{m.name}'", where, m.span)

    for idx, t in enumerate(m.transitions):
        loc = f"{where}, state {t.source}, transition #{idx + 1}"
        if t.source not in m.states:
            error(f"unknown source state '{t.source}'", loc, t.span)
        for atom in guard_atoms(t.guard):
            if atom.var not in net.shared_vars:
                error(f"guard refers to unknown variable '{atom.var}'", loc, t.span)
            elif atom.value not in net.domain_of(atom.var).values:
                error(f"guard compares '{atom.var}' with '{atom.value}', "
                      f"which is not in its domain", loc, t.span)
        if not t.branches:
            error("transition has no branches", loc, t.span)
        for b in t.branches:
            if b.target not in m.states:
                error(f"unknown target state '{b.target}'", loc, t.span)
            for var, val in b.updates:
                if var not in net.shared_vars:
                    error(f"update of unknown variable '{var}'", loc, t.span)
                elif val not in net.domain_of(var).values:
                    error(f"value '{val}' is not in the domain of '{var}'", loc, t.span)
            for name in expr_constants(b.weight):
                if name not in net.constants:
                    error(f"weight refers to unknown constant '{name}'", loc, t.span)
        _validate_weights(t, values, loc, error)

    _validate_guard_partition(net, m, error, warning)


def _validate_weights(t: Transition, values, loc, error) -> None:
    needed = set().union(*(expr_constants(b.weight) for b in t.branches)) if t.branches else set()
    if any(values.get(n) is None for n in needed):
        return
    try:
        weights = [evaluate_expression(b.weight, bindings=values) for b in t.branches]
    except Exception as exc:  # division by zero and friends become diagnostics
        error(f"branch weight cannot be evaluated: {exc}", loc, t.span)
        return
    for w in weights:
        if w < 0 or w > 1:
            error(f"branch weight {_fmt_number(w)} is outside [0, 1]", loc, t.span)
    if not weights_sum_to_one(weights):
        error(f"branch weights sum to {_fmt_number(_sum_weights(weights))}", loc, t.span)


def _validate_guard_partition(net, m: MachineDef, error, warning) -> None:
    """Exhaustively check that guards leaving a state never overlap."""
    for state in m.states:
        outgoing = m.transitions_from(state)
        if not outgoing:
            continue
        vars_ = sorted(set().union(*(guard_vars(t.guard) for t in outgoing)))
        if any(v not in net.shared_vars or net.shared_vars[v].domain not in net.domains
               for v in vars_):
            continue  # already reported
        domains = [net.domain_of(v).values for v in vars_]
        overlap = uncovered = None
        for combo in itertools.product(*domains):
            valuation = dict(zip(vars_, combo))
            enabled = [t for t in outgoing if evaluate_expression(t.guard, valuation)]
            if len(enabled) > 1 and overlap is None:
                overlap = valuation
            if not enabled and uncovered is None:
                uncovered = valuation
        loc = f"machine {m.name}, state {state}"
        if overlap is not None:
            desc = ", ".join(f"{k}={v}" for k, v in overlap.items())
            error(f"guards of transitions from '{state}' overlap (e.g. {desc})", loc)
        if uncovered is not None:
            desc = ", ".join(f"{k}={v}" for k, v in uncovered.items())
            warning(f"no transition from '{state}' is enabled when {desc}; "
                    f"the machine idles", loc)


def check_network(net: Network, bindings=None) -> list[Diagnostic]:
    """Like :func:`validate_network` but raise on any error diagnostic."""
    diags = validate_network(net, bindings)
    errors = [d for d in diags if d.is_error]
    if errors:
        raise ValidationError(errors)
    return diags


# ---------------------------------------------------------------------------
# Binding
# ---------------------------------------------------------------------------


def bind_constants(net: Network | ConcreteNetwork, cfg: ScenarioConfig) -> ConcreteNetwork:
    """Resolve every constant of ``net`` using ``cfg`` and evaluate all weights.

    Raises :class:`UnboundConstantError` if a constant has neither a declared
    value nor a binding, :class:`OutOfRangeError` if a bound value violates its
    kind, and :class:`ValidationError` for any structural problem.
    """
    if isinstance(net, ConcreteNetwork):
        base = net.network
        resolved = dict(net.bindings)
    else:
        base = net
        resolved = base.default_bindings()
    for name, value in cfg.bindings.items():
        if name in resolved:
            resolved[name] = value

    for c in base.constants.values():
        value = resolved.get(c.name)
        if value is None:
            raise UnboundConstantError(c.name)
        expected = _check_constant_value(c, value)
        if expected:
            raise OutOfRangeError(c.name, _fmt_number(value), expected)
    if base.horizon in base.constants:
        resolved[base.horizon] = int(resolved[base.horizon])

    check_network(base, resolved)

    weights = tuple(
        tuple(tuple(evaluate_expression(b.weight, bindings=resolved) for b in t.branches)
              for t in m.transitions)
        for m in base.machines
    )
    return ConcreteNetwork(network=base, config=cfg.name, bindings=resolved, weights=weights)


def with_bindings(cfg: ScenarioConfig, **overrides) -> ScenarioConfig:
    """Copy of ``cfg`` with some bindings replaced (e.g. a different horizon)."""
    merged = dict(cfg.bindings)
    merged.update({k: Fraction(v) if isinstance(v, (int, str)) else v
                   for k, v in overrides.items()})
    return ScenarioConfig(cfg.name, merged)


def iter_valuations(net: Network, vars_: Iterable[str]):
    """All assignments of the given shared variables, in domain order."""
    vars_ = list(vars_)
    for combo in itertools.product(*(net.domain_of(v).values for v in vars_)):
        yield dict(zip(vars_, combo))
