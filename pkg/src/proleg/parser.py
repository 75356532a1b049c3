"""Surface syntax for PROLEG rule bases and case fact files.

The grammar, in brief::

    program    := (annotation | statement | comment)*
    annotation := '#source' QUOTED_STRING | '#id' IDENT
    statement  := rule | exceptiondecl
    rule       := atom '<=' atomlist? '.'
    exceptiondecl := 'exception' '(' atom ',' atom ')' '.'
    atomlist   := atom (',' atom)*
    atom       := IDENT ( '(' term (',' term)* ')' )?
    term       := IDENT ('(' term (',' term)* ')')? | VARIABLE | INTEGER
                | QUOTED_STRING

``%`` starts a line comment. An annotation line applies to the next
statement. Rules are given ids ``r1, r2, ...`` in textual order unless
an ``#id`` annotation overrides the default. Syntax errors are
collected rather than aborting at the first problem; the parser skips
to the next ``.`` and carries on.

Fact files use the same atom grammar, one ground atom per statement.

The tokenizer also knows the operators of the restricted Prolog dialect
(``:-``, ``?-``, ``\\+``, ``;``, ``!``) so the converter can share it;
the PROLEG grammar simply rejects those tokens.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ast import (
    Atom,
    Compound,
    Constant,
    ExceptionDecl,
    FactBase,
    Integer,
    Program,
    Rule,
    SourceRef,
    Term,
    Text,
    Variable,
    escape_text,
    is_ground,
)

# Token kinds.
IDENT = "ident"
VAR = "variable"
INT = "integer"
STRING = "string"
ANNOT = "annotation"
PUNCT = "punct"
BADCHAR = "badchar"
EOF = "eof"

# Longest match first; the Prolog-dialect operators are lexed here too.
_SYMBOLS = ("<=", ":-", "?-", "\\+", "(", ")", ",", ".", ";", "!")

_STRING_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


@dataclass(frozen=True)
class ParseError:
    """A syntax problem at a 1-based line/column position."""

    line: int
    column: int
    message: str
    snippet: str = ""

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class ParseFailure(Exception):
    """Raised when parsing fails; carries every collected ParseError."""

    def __init__(self, errors: list[ParseError]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    line: int
    column: int


def tokenize(text: str) -> tuple[list[Token], list[ParseError]]:
    """Split source text into tokens, collecting lexical errors."""
    tokens: list[Token] = []
    errors: list[ParseError] = []
    lines = text.splitlines()
    i = 0
    line = 1
    col = 1
    n = len(text)

    def snippet_at(ln: int) -> str:
        return lines[ln - 1].strip() if 0 < ln <= len(lines) else ""

    def advance(count: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(count):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance()
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                advance()
            continue
        if ch == '"':
            start_line, start_col = line, col
            advance()
            value = []
            closed = False
            while i < n and text[i] != "\n":
                c = text[i]
                if c == '"':
                    advance()
                    closed = True
                    break
                if c == "\\" and i + 1 < n:
                    advance()
                    value.append(_STRING_UNESCAPES.get(text[i], text[i]))
                    advance()
                else:
                    value.append(c)
                    advance()
            if not closed:
                errors.append(
                    ParseError(start_line, start_col, "unterminated string", snippet_at(start_line))
                )
            else:
                tokens.append(Token(STRING, "".join(value), start_line, start_col))
            continue
        if ch == "#":
            start_line, start_col = line, col
            advance()
            name = []
            while i < n and (text[i].isalnum() or text[i] == "_"):
                name.append(text[i])
                advance()
            word = "".join(name)
            if word in ("source", "id"):
                tokens.append(Token(ANNOT, word, start_line, start_col))
            else:
                errors.append(
                    ParseError(
                        start_line, start_col, f"unknown annotation '#{word}'", snippet_at(start_line)
                    )
                )
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            start_line, start_col = line, col
            digits = [ch]
            advance()
            while i < n and text[i].isdigit():
                digits.append(text[i])
                advance()
            tokens.append(Token(INT, int("".join(digits)), start_line, start_col))
            continue
        if ch.isalpha() or ch == "_":
            start_line, start_col = line, col
            word = [ch]
            advance()
            while i < n and (text[i].isalnum() or text[i] == "_"):
                word.append(text[i])
                advance()
            name = "".join(word)
            kind = VAR if name[0].isupper() or name[0] == "_" else IDENT
            tokens.append(Token(kind, name, start_line, start_col))
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token(PUNCT, sym, line, col))
                advance(len(sym))
                break
        else:
            # Not an error yet: a statement the parser skips (say, a Prolog
            # directive) may legitimately contain characters we cannot lex.
            tokens.append(Token(BADCHAR, ch, line, col))
            advance()
    tokens.append(Token(EOF, None, line, col))
    return tokens, errors


class _Abort(Exception):
    """Internal signal: a statement could not be parsed; recover and go on."""


class _TokenStream:
    def __init__(self, text: str):
        self.tokens, self.errors = tokenize(text)
        self._lines = text.splitlines()
        self.pos = 0

    def peek(self, offset: int = 0) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def at_punct(self, symbol: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind == PUNCT and tok.value == symbol

    def snippet(self, line: int) -> str:
        return self._lines[line - 1].strip() if 0 < line <= len(self._lines) else ""

    def error(self, tok: Token, message: str) -> ParseError:
        err = ParseError(tok.line, tok.column, message, self.snippet(tok.line))
        self.errors.append(err)
        return err

    def fail(self, tok: Token, message: str) -> "_Abort":
        self.error(tok, message)
        return _Abort()

    def expect_punct(self, symbol: str, context: str) -> Token:
        tok = self.peek()
        if not self.at_punct(symbol):
            raise self.fail(tok, f"expected '{symbol}' {context}")
        return self.advance()

    def recover_statement(self) -> None:
        """Skip past the next '.' (or to end of input)."""
        while self.peek().kind != EOF:
            tok = self.advance()
            if tok.kind == PUNCT and tok.value == ".":
                return


def _parse_term(ts: _TokenStream) -> Term:
    tok = ts.peek()
    if tok.kind == IDENT:
        ts.advance()
        if ts.at_punct("("):
            ts.advance()
            args = [_parse_term(ts)]
            while ts.at_punct(","):
                ts.advance()
                args.append(_parse_term(ts))
            ts.expect_punct(")", "to close argument list")
            return Compound(tok.value, tuple(args))
        return Constant(tok.value)
    if tok.kind == VAR:
        ts.advance()
        return Variable(tok.value)
    if tok.kind == INT:
        ts.advance()
        return Integer(tok.value)
    if tok.kind == STRING:
        ts.advance()
        return Text(tok.value)
    if tok.kind == BADCHAR:
        raise ts.fail(tok, f"unexpected character {tok.value!r}")
    raise ts.fail(tok, "expected a term")


def _parse_atom(ts: _TokenStream) -> Atom:
    tok = ts.peek()
    if tok.kind == BADCHAR:
        raise ts.fail(tok, f"unexpected character {tok.value!r}")
    if tok.kind != IDENT:
        raise ts.fail(tok, "expected a predicate name")
    ts.advance()
    args: list[Term] = []
    if ts.at_punct("("):
        ts.advance()
        args.append(_parse_term(ts))
        while ts.at_punct(","):
            ts.advance()
            args.append(_parse_term(ts))
        ts.expect_punct(")", "to close argument list")
    return Atom(tok.value, tuple(args))


def _term_as_atom(term: Term, ts: _TokenStream, tok: Token) -> Atom:
    if isinstance(term, Constant):
        return Atom(term.name)
    if isinstance(term, Compound):
        return Atom(term.functor, term.args)
    raise ts.fail(tok, "exception arguments must be atoms")


def parse_program(source: str) -> Program:
    """Parse PROLEG source text into a Program.

    Raises ParseFailure with every collected error when the text does
    not parse; rule and exception order follows the text.
    """
    ts = _TokenStream(source)
    rules: list[Rule] = []
    exceptions: list[ExceptionDecl] = []
    pending_source: Optional[SourceRef] = None
    pending_id: Optional[str] = None
    pending_tok: Optional[Token] = None
    used_ids: set[str] = set()
    rule_count = 0

    while ts.peek().kind != EOF:
        tok = ts.peek()
        try:
            if tok.kind == ANNOT:
                ts.advance()
                pending_tok = tok
                if tok.value == "source":
                    value = ts.peek()
                    if value.kind != STRING:
                        raise ts.fail(value, "expected a quoted citation after '#source'")
                    ts.advance()
                    if not value.value:
                        raise ts.fail(value, "'#source' citation must be non-empty")
                    pending_source = SourceRef(value.value)
                else:
                    value = ts.peek()
                    if value.kind != IDENT:
                        raise ts.fail(value, "expected an identifier after '#id'")
                    ts.advance()
                    pending_id = value.value
                continue
            if tok.kind == IDENT and tok.value == "exception" and ts.at_punct("(", 1):
                atom = _parse_atom(ts)
                if len(atom.args) != 2:
                    raise ts.fail(tok, "exception declarations take exactly two arguments")
                ts.expect_punct(".", "after exception declaration")
                if pending_id is not None:
                    ts.error(tok, "'#id' applies to rules, not exception declarations")
                    pending_id = None
                head = _term_as_atom(atom.args[0], ts, tok)
                exc = _term_as_atom(atom.args[1], ts, tok)
                exceptions.append(ExceptionDecl(head, exc, source=pending_source, line=tok.line))
                pending_source = None
                pending_tok = None
                continue
            if tok.kind == IDENT:
                if tok.value == "exception":
                    raise ts.fail(tok, "'exception' is reserved for exception declarations")
                head = _parse_atom(ts)
                ts.expect_punct("<=", "after rule head")
                body: list[Atom] = []
                if not ts.at_punct("."):
                    body.append(_parse_atom(ts))
                    while ts.at_punct(","):
                        ts.advance()
                        body.append(_parse_atom(ts))
                ts.expect_punct(".", "after rule body")
                rule_count += 1
                rule_id = pending_id if pending_id is not None else f"r{rule_count}"
                if rule_id in used_ids:
                    ts.error(tok, f"duplicate rule id '{rule_id}'")
                else:
                    used_ids.add(rule_id)
                    rules.append(
                        Rule(rule_id, head, tuple(body), source=pending_source, line=tok.line)
                    )
                pending_source = None
                pending_id = None
                pending_tok = None
                continue
            if tok.kind == BADCHAR:
                raise ts.fail(tok, f"unexpected character {tok.value!r}")
            raise ts.fail(tok, "expected a rule or exception declaration")
        except _Abort:
            ts.recover_statement()
            pending_source = None
            pending_id = None
            pending_tok = None
    if pending_tok is not None:
        ts.error(pending_tok, "annotation is not followed by a statement")
    if ts.errors:
        raise ParseFailure(ts.errors)
    return Program(tuple(rules), tuple(exceptions))


def parse_facts(source: str) -> FactBase:
    """Parse a sequence of ground atoms, each terminated by '.'."""
    ts = _TokenStream(source)
    facts: set[Atom] = set()
    while ts.peek().kind != EOF:
        tok = ts.peek()
        try:
            if tok.kind == ANNOT:
                raise ts.fail(tok, "annotations are not allowed in fact files")
            atom = _parse_atom(ts)
            ts.expect_punct(".", "after fact")
            if not is_ground(atom):
                ts.error(tok, "facts must be ground")
            else:
                facts.add(atom)
        except _Abort:
            ts.recover_statement()
    if ts.errors:
        raise ParseFailure(ts.errors)
    return FactBase(frozenset(facts))


def parse_atom(source: str) -> Atom:
    """Parse a single atom, e.g. a query; the whole input must be consumed."""
    ts = _TokenStream(source)
    try:
        atom = _parse_atom(ts)
    except _Abort:
        raise ParseFailure(ts.errors) from None
    trailing = ts.peek()
    if trailing.kind != EOF:
        ts.error(trailing, "unexpected input after atom")
    if ts.errors:
        raise ParseFailure(ts.errors)
    return atom


def serialize(program: Program) -> str:
    """Emit canonical text: one statement per line, annotations ahead of
    their statement, comments dropped. Parsing the output reproduces a
    structurally equal Program.

    ``#id`` lines appear only where a rule's id differs from the
    position-derived default. Source notes have no surface form and are
    dropped.
    """
    lines: list[str] = []
    for index, rule in enumerate(program.rules, start=1):
        if rule.source is not None:
            lines.append(f'#source "{escape_text(rule.source.citation)}"')
        if rule.id != f"r{index}":
            lines.append(f"#id {rule.id}")
        if rule.body:
            body = ", ".join(str(a) for a in rule.body)
            lines.append(f"{rule.head} <= {body}.")
        else:
            lines.append(f"{rule.head} <=.")
    for decl in program.exceptions:
        if decl.source is not None:
            lines.append(f'#source "{escape_text(decl.source.citation)}"')
        lines.append(f"exception({decl.head}, {decl.exception}).")
    return "".join(line + "\n" for line in lines)


def range_restriction_warnings(program: Program) -> list[str]:
    """Warnings for rules whose head variables do not all occur in the body.

    Such rules parse and evaluate fine; the warning flags likely typos.
    """
    warnings = []
    for rule in program.rules:
        if not rule.is_range_restricted:
            where = f" (line {rule.line})" if rule.line is not None else ""
            warnings.append(f"rule {rule.id}{where} is not range-restricted")
    return warnings
