from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class PatternKind(str, Enum):
    START = "Start"
    INTERMEDIATE = "Intermediate"
    END = "End"


class ConditionType(str, Enum):
    CHANGES_FROM = "changes_from"
    IS_CHANGING = "is_changing"
    IN_RANGE = "in_range"
    IS_EQUAL = "is_equal"
    IS_LOWER = "is_lower"
    IS_LOWER_OR_EQUAL = "is_lower_or_equal"
    IS_HIGHER = "is_higher"
    IS_HIGHER_OR_EQUAL = "is_higher_or_equal"
    IS_INCREASING = "is_increasing"
    IS_DECREASING = "is_decreasing"

    @property
    def arity(self) -> int:
        return ARITY[self]

    @property
    def is_change(self) -> bool:
        return self in CHANGE_FAMILY


ARITY = {
    ConditionType.CHANGES_FROM: 2,
    ConditionType.IN_RANGE: 2,
    ConditionType.IS_CHANGING: 0,
    ConditionType.IS_INCREASING: 0,
    ConditionType.IS_DECREASING: 0,
    ConditionType.IS_EQUAL: 1,
    ConditionType.IS_LOWER: 1,
    ConditionType.IS_LOWER_OR_EQUAL: 1,
    ConditionType.IS_HIGHER: 1,
    ConditionType.IS_HIGHER_OR_EQUAL: 1,
}

CHANGE_FAMILY = frozenset(
    {
        ConditionType.CHANGES_FROM,
        ConditionType.IS_CHANGING,
        ConditionType.IS_INCREASING,
        ConditionType.IS_DECREASING,
    }
)

TIME_UNITS = {
    "milliseconds": 1,
    "seconds": 1_000,
    "minutes": 60_000,
    "hours": 3_600_000,
}


def normalize_unit(word: str) -> str | None:
    """Map ``second``/``seconds`` etc. to the canonical plural unit name."""
    plural = word if word.endswith("s") else word + "s"
    return plural if plural in TIME_UNITS else None


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    length: int


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    span: Span

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.span.line}:{self.span.column}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class NumberLiteral:
    value: int | float


@dataclass(frozen=True)
class Label:
    name: str


Operand = NumberLiteral | Label


@dataclass(frozen=True)
class TimeConstraint:
    amount: int
    unit: str

    @property
    def millis(self) -> int:
        return self.amount * TIME_UNITS[self.unit]


@dataclass(frozen=True)
class Condition:
    station: str
    sensor: str
    ctype: ConditionType
    operands: tuple[Operand, ...] = ()
    time_constraint: TimeConstraint | None = None
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Case:
    conditions: tuple[Condition, ...]


@dataclass(frozen=True)
class Pattern:
    kind: PatternKind
    cases: tuple[Case, ...]
    span: Span | None = field(default=None, compare=False, repr=False)

    @property
    def conditions(self) -> list[Condition]:
        return [c for case in self.cases for c in case.conditions]


@dataclass(frozen=True)
class ActivityDecl:
    name: str
    start: Pattern
    intermediates: tuple[Pattern, ...]
    end: Pattern
    span: Span | None = field(default=None, compare=False, repr=False)

    @property
    def patterns(self) -> list[Pattern]:
        return [self.start, *self.intermediates, self.end]


@dataclass(frozen=True)
class ProcessDecl:
    name: str
    activities: tuple[ActivityDecl, ...]
    span: Span | None = field(default=None, compare=False, repr=False)

    def activity(self, name: str) -> ActivityDecl | None:
        for a in self.activities:
            if a.name == name:
                return a
        return None
