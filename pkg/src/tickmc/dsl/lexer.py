"""Tokenizer shared by the model, property and config grammars."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError
from ..model import Diagnostic, SourceSpan

# Longest first, so that "::" wins over ":" and ":=" over ":".
SYMBOLS = (
    "/\\", "\\/", "::", ":=", "==", "!=", "<=", "&&", "||",
    "{", "}", "(", ")", "[", "]", ";", ",", ":", "=", "+", "-", "*", "/", "?", "!", "<",
)


@dataclass(frozen=True)
class Token:
    kind: str  # "id", "number", "symbol", "eof"
    text: str
    line: int
    column: int

    def span(self, file: str) -> SourceSpan:
        return SourceSpan(file, self.line, self.column, max(1, len(self.text)))

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        return f"'{self.text}'"


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    """Split ``text`` into tokens; ``//`` comments and whitespace are skipped.

    Identifiers are ASCII letters, digits and underscores starting with a
    letter. Numbers are unsigned decimals (``3``, ``0.25``).
    """
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r\f\v\ufeff":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isascii() and ch.isalpha():
            j = i + 1
            while j < n and text[j].isascii() and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("id", text[i:j], line, start_col))
        elif ch.isascii() and ch.isdigit():
            j = i + 1
            while j < n and text[j].isascii() and text[j].isdigit():
                j += 1
            if j + 1 < n and text[j] == "." and text[j + 1].isascii() and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isascii() and text[j].isdigit():
                    j += 1
            tokens.append(Token("number", text[i:j], line, start_col))
        else:
            sym = next((s for s in SYMBOLS if text.startswith(s, i)), None)
            if sym is None:
                span = SourceSpan(file, line, start_col, 1)
                raise ParseError([Diagnostic("error", f"unexpected character {ch!r}", span=span)])
            j = i + len(sym)
            tokens.append(Token("symbol", sym, line, start_col))
        col += j - i
        i = j
    tokens.append(Token("eof", "", line, col))
    return tokens


class TokenStream:
    """Cursor over a token list with expectation helpers for recursive descent."""

    def __init__(self, text: str, file: str = "<input>"):
        self.file = file
        self.tokens = tokenize(text, file)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        tok = self.current
        return tok.kind in ("symbol", "id") and tok.text == text

    def at_eof(self) -> bool:
        return self.current.kind == "eof"

    def advance(self) -> Token:
        tok = self.current
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            return self.advance()
        return None

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.current
        raise ParseError([Diagnostic("error", message, span=tok.span(self.file))])

    def expect(self, *texts: str) -> Token:
        for text in texts:
            if self.at(text):
                return self.advance()
        wanted = " or ".join(f"'{t}'" for t in texts)
        self.fail(f"expected {wanted}, found {self.current.describe()}")

    def expect_id(self, what: str = "identifier", reserved=frozenset()) -> Token:
        tok = self.current
        if tok.kind != "id" or tok.text in reserved:
            self.fail(f"expected {what}, found {tok.describe()}")
        return self.advance()

    def expect_number(self, what: str = "number") -> Token:
        tok = self.current
        if tok.kind != "number":
            self.fail(f"expected {what}, found {tok.describe()}")
        return self.advance()
