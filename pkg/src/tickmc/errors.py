"""Exception hierarchy shared by every tickmc module."""

from __future__ import annotations


class TickmcError(Exception):
    """Base class for all errors raised by tickmc."""


class ModelError(TickmcError):
    """A network is malformed or cannot be analysed as given."""


class EvaluationError(ModelError):
    """An expression could not be evaluated (unknown name, division by zero)."""


class UnboundConstantError(ModelError):
    def __init__(self, name: str):
        super().__init__(f"constant '{name}' is not bound by the configuration")
        self.name = name


class OutOfRangeError(ModelError):
    def __init__(self, name: str, value, expected: str):
        super().__init__(f"constant '{name}' = {value} is out of range ({expected})")
        self.name = name
        self.value = value


class ValidationError(ModelError):
    """Raised when a network with error-severity diagnostics is used for analysis."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = [str(d) for d in self.diagnostics]
        super().__init__("network failed validation:\n  " + "\n  ".join(lines))


class ParseError(TickmcError):
    """Syntax or definition error in a model, property or config file."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class AnalysisError(TickmcError):
    """A query could not be evaluated on a composed chain."""


class StateSpaceOverflow(AnalysisError):
    def __init__(self, cap: int):
        super().__init__(f"state space exceeds the cap of {cap} states")
        self.cap = cap
