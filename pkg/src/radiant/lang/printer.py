from __future__ import annotations

from radiant.lang.ast import Condition, Label, NumberLiteral, Pattern, ProcessDecl

INDENT = "  "


def format_operand(op) -> str:
    if isinstance(op, Label):
        return op.name
    value = op.value
    if isinstance(value, float) and value.is_integer() and abs(value) < 1e15:
        # Keep the float form so the literal re-parses as a float.
        return f"{value:.1f}"
    return repr(value)


def format_condition(cond: Condition) -> str:
    parts = ["In", cond.station, "sensor", cond.sensor, cond.ctype.value]
    ops = [format_operand(o) for o in cond.operands]
    if len(ops) == 2:
        parts += [ops[0], "to", ops[1]]
    else:
        parts += ops
    if cond.time_constraint is not None:
        parts += ["within", str(cond.time_constraint.amount), cond.time_constraint.unit]
    return " ".join(parts) + ";"


def _pattern_lines(pattern: Pattern, depth: int) -> list[str]:
    lines = [INDENT * depth + f"{pattern.kind.value}:"]
    if len(pattern.cases) == 1:
        lines += [INDENT * (depth + 1) + format_condition(c) for c in pattern.cases[0].conditions]
        return lines
    for case in pattern.cases:
        lines.append(INDENT * (depth + 1) + "Case:")
        lines += [INDENT * (depth + 2) + format_condition(c) for c in case.conditions]
    return lines


def pretty_print(proc: ProcessDecl) -> str:
    """Render a process in canonical layout.

    ``Case:`` blocks are written only for patterns with more than one case.
    """
    lines = [f"Process {proc.name}:"]
    for activity in proc.activities:
        lines.append(INDENT + f"Activity {activity.name}:")
        for pattern in activity.patterns:
            lines += _pattern_lines(pattern, 2)
    return "\n".join(lines) + "\n"
