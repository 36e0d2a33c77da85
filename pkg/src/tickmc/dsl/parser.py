"""Recursive-descent parsers for model (.psm), property (.pprop) and config (.pcfg) files."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..engine import Query
from ..errors import ParseError
from ..model import (
    And,
    BinOp,
    Branch,
    ConstantDef,
    ConstRef,
    Diagnostic,
    EnumDomain,
    MachineDef,
    Network,
    Not,
    Num,
    Or,
    ScenarioConfig,
    SharedVar,
    TRUE,
    Transition,
    VarAtom,
    CONSTANT_KINDS,
)
from .lexer import TokenStream

KEYWORDS = frozenset({
    "domain", "var", "const", "horizon", "machine", "initial", "state",
    "from", "when", "goto", "or", "and", "not", "set", "true",
})

TICK_COUNTER_NAMES = ("ticks", "uvs")


@dataclass
class ModelParse:
    network: Network | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.network is not None


@dataclass(frozen=True)
class PropertyFile:
    queries: tuple[Query, ...]
    imports: tuple[str, ...] = ()

    def query(self, name: str) -> Query:
        for q in self.queries:
            if q.id == name:
                return q
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


class _ModelParser:
    def __init__(self, text: str, file: str):
        self.ts = TokenStream(text, file)
        self.file = file
        self.domains: dict[str, EnumDomain] = {}
        self.vars: dict[str, SharedVar] = {}
        self.consts: dict[str, ConstantDef] = {}
        self.machines: list[MachineDef] = []
        self.horizon: str | None = None
        self.diags: list[Diagnostic] = []

    def duplicate(self, what: str, tok) -> None:
        self.diags.append(Diagnostic("error", f"duplicate definition of {what} '{tok.text}'",
                                     span=tok.span(self.file)))

    def ident(self, what: str):
        return self.ts.expect_id(what, KEYWORDS)

    def parse(self) -> Network | None:
        ts = self.ts
        while not ts.at_eof():
            if ts.at("domain"):
                self.domain_decl()
            elif ts.at("var"):
                self.var_decl()
            elif ts.at("const"):
                self.const_decl()
            elif ts.at("horizon"):
                self.horizon_decl()
            elif ts.at("machine"):
                self.machine_decl()
            else:
                ts.fail("expected 'domain', 'var', 'const', 'horizon' or 'machine', "
                        f"found {ts.current.describe()}")
        if any(d.is_error for d in self.diags):
            return None
        return Network(domains=self.domains, shared_vars=self.vars, constants=self.consts,
                       machines=tuple(self.machines), horizon=self.horizon)

    def domain_decl(self) -> None:
        ts = self.ts
        kw = ts.expect("domain")
        name = self.ident("domain name")
        ts.expect("{")
        values = [self.ident("domain value").text]
        while ts.accept(","):
            if ts.at("}"):
                break
            values.append(self.ident("domain value").text)
        ts.expect("}")
        ts.accept(";")
        if name.text in self.domains:
            self.duplicate("domain", name)
            return
        self.domains[name.text] = EnumDomain(name.text, tuple(values), kw.span(self.file))

    def var_decl(self) -> None:
        ts = self.ts
        kw = ts.expect("var")
        name = self.ident("variable name")
        ts.expect(":")
        domain = self.ident("domain name")
        ts.expect("=")
        initial = self.ident("initial value")
        ts.expect(";")
        if name.text in self.vars:
            self.duplicate("shared variable", name)
            return
        self.vars[name.text] = SharedVar(name.text, domain.text, initial.text, kw.span(self.file))

    def const_decl(self) -> None:
        ts = self.ts
        kw = ts.expect("const")
        name = self.ident("constant name")
        kind = "probability"
        value = None
        if ts.accept(":"):
            kind_tok = self.ident("constant kind")
            if kind_tok.text not in CONSTANT_KINDS:
                ts.fail(f"expected one of {', '.join(CONSTANT_KINDS)}, found '{kind_tok.text}'",
                        kind_tok)
            kind = kind_tok.text
        if ts.accept("="):
            value = Fraction(ts.expect_number("constant value").text)
        ts.expect(";")
        if name.text in self.consts:
            self.duplicate("constant", name)
            return
        self.consts[name.text] = ConstantDef(name.text, kind, value, kw.span(self.file))

    def horizon_decl(self) -> None:
        ts = self.ts
        kw = ts.expect("horizon")
        name = self.ident("horizon constant")
        ts.expect(";")
        if self.horizon is not None:
            self.diags.append(Diagnostic("error", "horizon declared more than once",
                                         span=kw.span(self.file)))
            return
        self.horizon = name.text

    def machine_decl(self) -> None:
        ts = self.ts
        kw = ts.expect("machine")
        name = self.ident("machine name")
        ts.expect("{")
        initial = None
        states: list[str] = []
        transitions: list[Transition] = []
        while not ts.at("}"):
            if ts.at("initial"):
                init_kw = ts.advance()
                tok = self.ident("initial state identifier")
                ts.expect(";")
                if initial is not None:
                    self.diags.append(Diagnostic("error", "initial state declared more than once",
                                                 span=init_kw.span(self.file)))
                initial = tok.text
            elif ts.at("state"):
                ts.advance()
                while True:
                    tok = self.ident("state identifier")
                    if tok.text in states:
                        self.duplicate("state", tok)
                    else:
                        states.append(tok.text)
                    if not ts.accept(","):
                        break
                ts.expect(";")
            elif ts.at("from"):
                transitions.append(self.transition())
            else:
                ts.fail(f"expected 'initial', 'state', 'from' or '}}', found {ts.current.describe()}")
        ts.expect("}")
        if initial is None:
            self.diags.append(Diagnostic("error", f"machine '{name.text}' has no initial state",
                                         span=name.span(self.file)))
            initial = ""
        if not states:
            self.diags.append(Diagnostic("error", f"machine '{name.text}' declares no states",
                                         span=name.span(self.file)))
        if any(m.name == name.text for m in self.machines):
            self.duplicate("machine", name)
            return
        self.machines.append(MachineDef(name.text, initial, tuple(states), tuple(transitions),
                                        kw.span(self.file)))

    def transition(self) -> Transition:
        ts = self.ts
        kw = ts.expect("from")
        source = self.ident("source state").text
        guard = TRUE
        if ts.accept("when"):
            guard = self.guard()
        ts.expect("goto")
        branches = [self.branch()]
        while ts.accept("or"):
            branches.append(self.branch())
        ts.expect(";")
        return Transition(source, guard, tuple(branches), kw.span(self.file))

    def branch(self) -> Branch:
        ts = self.ts
        ts.expect("[")
        weight = self.prob_expr()
        ts.expect("]")
        target = self.ident("target state").text
        updates = []
        if ts.accept("set"):
            while True:
                var = self.ident("shared variable").text
                ts.expect(":=")
                val = self.ident("value").text
                updates.append((var, val))
                if not ts.accept(","):
                    break
        return Branch(weight, target, tuple(updates))

    # guards: or < and < not < atom

    def guard(self):
        parts = [self.guard_and()]
        while self.ts.at("or") or self.ts.at("||"):
            self.ts.advance()
            parts.append(self.guard_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def guard_and(self):
        parts = [self.guard_not()]
        while self.ts.at("and") or self.ts.at("&&") or self.ts.at("/\\"):
            self.ts.advance()
            parts.append(self.guard_not())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def guard_not(self):
        ts = self.ts
        if ts.accept("not") or ts.accept("!"):
            return Not(self.guard_not())
        if ts.accept("("):
            inner = self.guard()
            ts.expect(")")
            return inner
        if ts.accept("true"):
            return TRUE
        var = self.ident("variable in guard").text
        op = ts.expect("==", "!=").text
        value = self.ident("value in guard").text
        return VarAtom(var, op, value)

    # weights: + - < * / < atom

    def prob_expr(self):
        ts = self.ts
        left = self.prob_term()
        while ts.at("+") or ts.at("-"):
            op = ts.advance().text
            left = BinOp(op, left, self.prob_term())
        return left

    def prob_term(self):
        ts = self.ts
        left = self.prob_factor()
        while ts.at("*") or ts.at("/"):
            op = ts.advance().text
            left = BinOp(op, left, self.prob_factor())
        return left

    def prob_factor(self):
        ts = self.ts
        if ts.accept("("):
            inner = self.prob_expr()
            ts.expect(")")
            return inner
        if ts.current.kind == "number":
            return Num(Fraction(ts.advance().text))
        return ConstRef(self.ident("number or constant").text)


def parse_model(text: str, file: str = "<model>") -> ModelParse:
    """Parse model text. Never raises for bad input; problems come back as diagnostics."""
    parser = None
    try:
        parser = _ModelParser(text, file)
        net = parser.parse()
        return ModelParse(net, parser.diags)
    except ParseError as exc:
        earlier = parser.diags if parser is not None else []
        return ModelParse(None, earlier + exc.diagnostics)
    except RecursionError:
        tok = parser.ts.current if parser is not None else None
        span = tok.span(file) if tok is not None else None
        return ModelParse(None, [Diagnostic("error", "expression nested too deeply", span=span)])


def load_model(text: str, file: str = "<model>") -> Network:
    """Parse model text, raising :class:`ParseError` on any error diagnostic."""
    result = parse_model(text, file)
    errors = [d for d in result.diagnostics if d.is_error]
    if errors:
        raise ParseError(errors)
    return result.network


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------


def _qualified_name(ts: TokenStream) -> str:
    """Read ``a::b::c`` and keep the last segment (paths name model elements)."""
    name = ts.expect_id("name").text
    while ts.at("::"):
        ts.advance()
        name = ts.expect_id("name").text
    return name


def _parse_query(ts: TokenStream, file: str) -> Query:
    start = ts.expect("prob")
    ts.expect("property")
    qid = ts.expect_id("property name").text
    ts.expect(":")
    if ts.accept("not"):
        ts.expect("Exists")
        ts.expect("[")
        ts.expect("Finally")
        ts.expect("deadlock")
        ts.expect("]")
        kind = "deadlockFreedom"
        predicate: tuple[VarAtom, ...] = ()
        tick_mode = tick_value = None
    else:
        ts.expect("Prob")
        ts.expect("=")
        ts.expect("?")
        ts.expect("of")
        ts.expect("[")
        ts.expect("Finally")
        kind = "probability"
        atoms = []
        tick_mode = tick_value = None
        while True:
            name_tok = ts.current
            name = _qualified_name(ts)
            if name in TICK_COUNTER_NAMES:
                op = ts.expect("==", "<=").text
                if tick_mode is not None:
                    ts.fail("only one tick condition is allowed per property", name_tok)
                tick_mode = "exact" if op == "==" else "cumulative"
                if ts.current.kind == "number":
                    tick_value = int(ts.advance().text)
                else:
                    param = ts.expect_id("tick parameter")
                    if param.text != "t":
                        ts.fail(f"tick parameter must be 't', found '{param.text}'", param)
            else:
                op = ts.expect("==", "!=").text
                value = ts.expect_id("value").text
                atoms.append(VarAtom(name, op, value))
            if not (ts.accept("/\\") or ts.accept("and") or ts.accept("&&")):
                break
        ts.expect("]")
        predicate = tuple(atoms)
    cfg = None
    if ts.accept("with"):
        ts.expect("constants", "constant")
        cfg = ts.expect_id("configuration name").text
    ts.accept(";")
    return Query(id=qid, kind=kind, predicate=predicate, tick_mode=tick_mode,
                 tick_value=tick_value, config=cfg, span=start.span(file))


def parse_properties(text: str, file: str = "<properties>") -> PropertyFile:
    ts = TokenStream(text, file)
    imports: list[str] = []
    queries: list[Query] = []
    seen: set[str] = set()
    while not ts.at_eof():
        if ts.at("import"):
            ts.advance()
            parts = [ts.expect_id("module name").text]
            while ts.accept("::"):
                if ts.accept("*"):
                    break
                parts.append(ts.expect_id("name").text)
            ts.accept(";")
            imports.append("::".join(parts))
        elif ts.at("prob"):
            tok = ts.peek(2)
            q = _parse_query(ts, file)
            if q.id in seen:
                raise ParseError([Diagnostic("error", f"duplicate definition of property '{q.id}'",
                                             span=tok.span(file))])
            seen.add(q.id)
            queries.append(q)
        else:
            ts.fail(f"expected 'import' or 'prob', found {ts.current.describe()}")
    return PropertyFile(tuple(queries), tuple(imports))


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------


def parse_config(text: str, file: str = "<config>") -> list[ScenarioConfig]:
    ts = TokenStream(text, file)
    configs: list[ScenarioConfig] = []
    while not ts.at_eof():
        kw = ts.expect("config")
        name = ts.expect_id("configuration name")
        if any(c.name == name.text for c in configs):
            raise ParseError([Diagnostic("error", f"duplicate definition of config '{name.text}'",
                                         span=name.span(file))])
        ts.expect("{")
        bindings: dict[str, Fraction] = {}
        while not ts.at("}"):
            const = ts.expect_id("constant name")
            ts.expect("=")
            negative = ts.accept("-") is not None
            value = Fraction(ts.expect_number("constant value").text)
            ts.expect(";")
            if const.text in bindings:
                raise ParseError([Diagnostic(
                    "error", f"duplicate constant '{const.text}' in config '{name.text}'",
                    span=const.span(file))])
            bindings[const.text] = -value if negative else value
        ts.expect("}")
        ts.accept(";")
        configs.append(ScenarioConfig(name.text, bindings, kw.span(file)))
    return configs
