"""Canonical text form of networks and configs."""

from __future__ import annotations

from fractions import Fraction

from ..model import (
    And,
    BinOp,
    ConstRef,
    Network,
    Not,
    Num,
    Or,
    ScenarioConfig,
    TrueGuard,
    VarAtom,
)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_number(value) -> str:
    """Exact decimal text for terminating fractions, ``repr`` for floats."""
    if isinstance(value, float):
        return repr(value)
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    sign = "-" if value < 0 else ""
    value = abs(value)
    d = value.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return sign + repr(float(value))
    places = max(twos, fives)
    scaled = value.numerator * 10**places // value.denominator
    digits = str(scaled).rjust(places + 1, "0")
    whole, frac = digits[:-places], digits[-places:].rstrip("0")
    return f"{sign}{whole}.{frac}"


def format_prob(expr) -> str:
    if isinstance(expr, Num):
        return format_number(expr.value)
    if isinstance(expr, ConstRef):
        return expr.name
    prec = _PREC[expr.op]
    left = format_prob(expr.left)
    right = format_prob(expr.right)
    if isinstance(expr.left, BinOp) and _PREC[expr.left.op] < prec:
        left = f"({left})"
    if isinstance(expr.right, BinOp) and _PREC[expr.right.op] <= prec:
        right = f"({right})"
    return f"{left} {expr.op} {right}"


def _guard_prec(g) -> int:
    if isinstance(g, Or):
        return 1
    if isinstance(g, And):
        return 2
    if isinstance(g, Not):
        return 3
    return 4


def format_guard(g) -> str:
    if isinstance(g, TrueGuard):
        return "true"
    if isinstance(g, VarAtom):
        return f"{g.var} {g.op} {g.value}"
    if isinstance(g, Not):
        inner = format_guard(g.operand)
        if _guard_prec(g.operand) < 3:
            inner = f"({inner})"
        return f"not {inner}"
    word = " or " if isinstance(g, Or) else " and "
    prec = _guard_prec(g)
    parts = []
    for part in g.operands:
        text = format_guard(part)
        if _guard_prec(part) <= prec:
            text = f"({text})"
        parts.append(text)
    return word.join(parts)


def pretty_print(net: Network) -> str:
    """Canonical text for ``net``.

    Domains, shared variables and constants are sorted by name; machines keep
    their order because it is the per-tick update order.
    """
    out: list[str] = []
    for name in sorted(net.domains):
        d = net.domains[name]
        out.append(f"domain {d.name} {{ {', '.join(d.values)} }}")
    if net.domains:
        out.append("")
    for name in sorted(net.shared_vars):
        v = net.shared_vars[name]
        out.append(f"var {v.name} : {v.domain} = {v.initial};")
    if net.shared_vars:
        out.append("")
    for name in sorted(net.constants):
        c = net.constants[name]
        value = "" if c.value is None else f" = {format_number(c.value)}"
        out.append(f"const {c.name} : {c.kind}{value};")
    if net.constants:
        out.append("")
    if net.horizon is not None:
        out.append(f"horizon {net.horizon};")
        out.append("")
    for m in net.machines:
        out.append(f"machine {m.name} {{")
        out.append(f"  initial {m.initial};")
        out.append(f"  state {', '.join(m.states)};")
        for t in m.transitions:
            head = f"  from {t.source}"
            if not isinstance(t.guard, TrueGuard):
                head += f" when {format_guard(t.guard)}"
            branches = []
            for b in t.branches:
                text = f"[{format_prob(b.weight)}] {b.target}"
                if b.updates:
                    text += " set " + ", ".join(f"{var} := {val}" for var, val in b.updates)
                branches.append(text)
            out.append(head + " goto " + "\n      or ".join(branches) + ";")
        out.append("}")
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


def format_config(cfg: ScenarioConfig) -> str:
    lines = [f"config {cfg.name} {{"]
    for name in sorted(cfg.bindings):
        lines.append(f"  {name} = {format_number(cfg.bindings[name])};")
    lines.append("}")
    return "\n".join(lines) + "\n"
