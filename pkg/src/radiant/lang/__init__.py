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
)
from radiant.lang.parser import has_errors, parse_radiant, tokenize
from radiant.lang.printer import pretty_print
from radiant.lang.validate import validate

__all__ = [
    "ActivityDecl",
    "Case",
    "Condition",
    "ConditionType",
    "Diagnostic",
    "Label",
    "NumberLiteral",
    "Pattern",
    "PatternKind",
    "ProcessDecl",
    "Span",
    "TimeConstraint",
    "has_errors",
    "parse_radiant",
    "pretty_print",
    "tokenize",
    "validate",
]
