"""Lexer and recursive-descent parser for Radiant programs.

Block structure is keyword driven; whitespace and indentation carry no
meaning.  Syntax errors become error diagnostics and the parser resumes at
the next ``Activity`` or pattern keyword, so one pass reports several
independent mistakes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from radiant.lang.ast import (
    ActivityDecl,
    Case,
    Condition,
    ConditionType,
    Diagnostic,
    Label,
    NumberLiteral,
    Pattern,
    PatternKind,
    ProcessDecl,
    Span,
    TimeConstraint,
    normalize_unit,
)

PATTERN_KEYWORDS = {"Start", "Intermediate", "End"}
STRUCTURE_KEYWORDS = {"Process", "Activity", "Case", "In", "sensor", "within", "to"} | PATTERN_KEYWORDS
CONDITION_KEYWORDS = {t.value for t in ConditionType}
KEYWORDS = STRUCTURE_KEYWORDS | CONDITION_KEYWORDS

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<colon>:)
  | (?P<semi>;)
  | (?P<bad>.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | number | colon | semi | eof
    text: str
    line: int
    column: int

    @property
    def span(self) -> Span:
        return Span(self.line, self.column, max(len(self.text), 1))

    def is_kw(self, *words: str) -> bool:
        return self.kind == "keyword" and self.text in words


def tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        value = m.group()
        col = m.start() - line_start + 1
        if kind == "ws":
            pass
        elif kind == "comment":
            pass
        elif kind == "bad":
            diags.append(Diagnostic("error", f"unexpected character {value!r}", Span(line, col, 1)))
        elif kind == "ident":
            tokens.append(Token("keyword" if value in KEYWORDS else "ident", value, line, col))
        else:
            tokens.append(Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + value.rfind("\n") + 1
    tokens.append(Token("eof", "", line, len(text) - line_start + 1))
    return tokens, diags


class _SyntaxError(Exception):
    def __init__(self, message: str, token: Token):
        super().__init__(message)
        self.message = message
        self.token = token


def _describe(tok: Token) -> str:
    return "end of input" if tok.kind == "eof" else repr(tok.text)


class Parser:
    def __init__(self, text: str):
        self.tokens, self.diagnostics = tokenize(text)
        self.pos = 0
        self.lines = text.split("\n")

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect_kw(self, word: str) -> Token:
        if not self.tok.is_kw(word):
            raise _SyntaxError(f"expected '{word}', found {_describe(self.tok)}", self.tok)
        return self.advance()

    def expect(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            hint = ""
            if kind == "ident" and self.tok.kind == "keyword":
                hint = f" ('{self.tok.text}' is a reserved word)"
            raise _SyntaxError(f"expected {what}, found {_describe(self.tok)}{hint}", self.tok)
        return self.advance()

    def error(self, message: str, span: Span) -> None:
        self.diagnostics.append(Diagnostic("error", message, self._clip(span)))

    def warning(self, message: str, span: Span) -> None:
        self.diagnostics.append(Diagnostic("warning", message, self._clip(span)))

    def _clip(self, span: Span) -> Span:
        # Keep spans within the input, e.g. for the EOF token.
        line = min(max(span.line, 1), len(self.lines))
        width = len(self.lines[line - 1])
        column = min(max(span.column, 1), width + 1)
        length = max(1, min(span.length, width - column + 1)) if width >= column else 1
        return Span(line, column, length)

    def at_pattern_start(self) -> bool:
        return self.tok.text in PATTERN_KEYWORDS and self.tok.kind == "keyword"

    def sync(self, stops: set[str]) -> None:
        while self.tok.kind != "eof" and not (self.tok.kind == "keyword" and self.tok.text in stops):
            self.advance()

    # grammar

    def parse(self) -> ProcessDecl | None:
        if self.tok.kind == "eof":
            self.error("empty program: expected 'Process'", self.tok.span)
            return None
        try:
            self.expect_kw("Process")
            name_tok = self.expect("ident", "process name")
            self.expect("colon", "':' after process name")
        except _SyntaxError as exc:
            self.error(exc.message, exc.token.span)
            return None

        activities: list[ActivityDecl] = []
        clean = True
        while self.tok.kind != "eof":
            if self.tok.is_kw("Activity"):
                activity, ok = self.parse_activity()
                clean = clean and ok
                if activity is not None:
                    activities.append(activity)
            else:
                self.error(f"expected 'Activity', found {_describe(self.tok)}", self.tok.span)
                clean = False
                self.advance()
                self.sync({"Activity"})

        if not activities and clean:
            self.error("process requires at least one activity", name_tok.span)
        seen: set[str] = set()
        for activity in activities:
            if activity.name in seen:
                self.error(f"duplicate activity name {activity.name!r}", activity.span)
            seen.add(activity.name)
        return ProcessDecl(name_tok.text, tuple(activities), span=name_tok.span)

    def parse_activity(self) -> tuple[ActivityDecl | None, bool]:
        head = self.advance()
        try:
            name_tok = self.expect("ident", "activity name")
            self.expect("colon", "':' after activity name")
        except _SyntaxError as exc:
            self.error(exc.message, exc.token.span)
            self.sync({"Activity"})
            return None, False

        ok = True
        patterns: list[Pattern] = []
        while self.tok.kind != "eof" and not self.tok.is_kw("Activity"):
            if self.at_pattern_start():
                pattern, pattern_ok = self.parse_pattern()
                ok = ok and pattern_ok
                if pattern is not None:
                    patterns.append(pattern)
            else:
                self.error(f"expected 'Start:', 'Intermediate:' or 'End:', found {_describe(self.tok)}", self.tok.span)
                ok = False
                self.advance()
                self.sync({"Activity"} | PATTERN_KEYWORDS)

        span = name_tok.span
        kinds = [p.kind for p in patterns]
        starts = [p for p in patterns if p.kind is PatternKind.START]
        ends = [p for p in patterns if p.kind is PatternKind.END]
        if ok:
            if len(starts) != 1:
                ok = False
                self.error(f"activity {name_tok.text!r} requires exactly one 'Start:' pattern", (starts[1].span if len(starts) > 1 else span))
            if len(ends) != 1:
                ok = False
                self.error(f"activity {name_tok.text!r} requires exactly one 'End:' pattern", (ends[1].span if len(ends) > 1 else span))
            if ok and (kinds[0] is not PatternKind.START or kinds[-1] is not PatternKind.END):
                ok = False
                self.error(f"activity {name_tok.text!r}: patterns must run Start, Intermediate..., End", span)
        if not ok:
            return None, False
        return ActivityDecl(name_tok.text, starts[0], tuple(patterns[1:-1]), ends[0], span=Span(head.line, head.column, len(head.text))), True

    def parse_pattern(self) -> tuple[Pattern | None, bool]:
        kw = self.advance()
        kind = PatternKind(kw.text)
        if self.tok.kind != "colon":
            self.error(f"expected ':' after '{kw.text}'", self.tok.span)
            self.sync({"Activity", "Case"} | PATTERN_KEYWORDS)
            if not self.tok.is_kw("Case"):
                return None, False
        else:
            self.advance()

        ok = True
        bare: list[Condition] = []
        cases: list[Case] = []
        while self.tok.is_kw("In", "Case"):
            try:
                if self.tok.is_kw("In"):
                    # A case swallows every following condition, so bare ones can only lead.
                    bare.append(self.parse_condition())
                else:
                    cases.append(self.parse_case())
            except _SyntaxError as exc:
                self.error(exc.message, exc.token.span)
                ok = False
                self.sync({"Activity", "Case"} | PATTERN_KEYWORDS)

        if not bare and not cases:
            if ok:
                self.error(f"'{kw.text}:' pattern requires at least one condition", kw.span)
            return None, False
        if bare and cases:
            self.warning(
                f"'{kw.text}:' mixes bare conditions with 'Case:' blocks; the leading conditions form an "
                "implicit first case (write an explicit 'Case:')",
                kw.span,
            )
            cases.insert(0, Case(tuple(bare)))
        elif bare:
            cases = [Case(tuple(bare))]
        if not ok:
            return None, False
        return Pattern(kind, tuple(cases), span=kw.span), True

    def parse_case(self) -> Case:
        kw = self.advance()
        self.expect("colon", "':' after 'Case'")
        conditions = []
        while self.tok.is_kw("In"):
            conditions.append(self.parse_condition())
        if not conditions:
            raise _SyntaxError("'Case:' requires at least one condition", kw)
        return Case(tuple(conditions))

    def parse_condition(self) -> Condition:
        head = self.expect_kw("In")
        station = self.expect("ident", "station id").text
        self.expect_kw("sensor")
        sensor = self.expect("ident", "sensor id").text
        type_tok = self.tok
        if not (type_tok.kind == "keyword" and type_tok.text in CONDITION_KEYWORDS):
            raise _SyntaxError(f"expected a condition type, found {_describe(type_tok)}", type_tok)
        self.advance()
        ctype = ConditionType(type_tok.text)

        operands = []
        if ctype.arity >= 1:
            operands.append(self.parse_operand())
        if ctype.arity == 2:
            self.expect_kw("to")
            operands.append(self.parse_operand())

        constraint = None
        while self.tok.is_kw("within"):
            within = self.tok
            tc = self.parse_time_constraint()
            if not ctype.is_change:
                raise _SyntaxError(f"'within' is only allowed on change conditions, not '{ctype.value}'", within)
            if constraint is not None:
                raise _SyntaxError("at most one time constraint per condition", within)
            constraint = tc

        end = self.expect("semi", "';' to end the condition")
        length = end.column - head.column + 1 if end.line == head.line else len(head.text)
        return Condition(station, sensor, ctype, tuple(operands), constraint, span=Span(head.line, head.column, length))

    def parse_operand(self):
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return NumberLiteral(_number(tok.text))
        if tok.kind == "ident":
            self.advance()
            return Label(tok.text)
        raise _SyntaxError(f"expected a number or label, found {_describe(tok)}", tok)

    def parse_time_constraint(self) -> TimeConstraint:
        self.advance()
        amount_tok = self.expect("number", "time amount")
        if not re.fullmatch(r"\d+", amount_tok.text):
            raise _SyntaxError("time amount must be a positive integer", amount_tok)
        amount = int(amount_tok.text)
        if amount <= 0:
            raise _SyntaxError("time amount must be greater than zero", amount_tok)
        unit_tok = self.expect("ident", "time unit")
        unit = normalize_unit(unit_tok.text)
        if unit is None:
            raise _SyntaxError(
                f"unknown time unit {unit_tok.text!r} (use milliseconds, seconds, minutes or hours)", unit_tok
            )
        return TimeConstraint(amount, unit)


def _number(text: str) -> int | float:
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    return float(text)


def parse_radiant(text: str) -> tuple[ProcessDecl | None, list[Diagnostic]]:
    """Parse a Radiant program into a process AST plus diagnostics.

    The AST is ``None`` only when not even the ``Process`` header parsed.  Any
    error-severity diagnostic means the AST is incomplete.
    """
    parser = Parser(text)
    proc = parser.parse()
    diags = sorted(parser.diagnostics, key=lambda d: (d.span.line, d.span.column))
    return proc, diags


def has_errors(diagnostics) -> bool:
    return any(d.severity == "error" for d in diagnostics)
