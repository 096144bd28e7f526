"""Value-level validation of literals against parameter definitions."""

from __future__ import annotations

from typing import Any

from schemagate import checks
from schemagate.schema.defs import Diagnostic, ParameterDefinition, error
from schemagate.schema.types import Kind, SemanticType, render_semantic_type


def check_literal_type(value: Any, stype: SemanticType) -> bool:
    """True iff the literal is a member of the semantic type.

    Booleans are not integers here, ints are acceptable numbers, and
    dataframe literals are table values (or their document form).
    """
    kind = stype.kind
    if kind is Kind.STRING or kind is Kind.MODEL_REF or kind is Kind.DATASET_REF:
        return isinstance(value, str)
    if kind is Kind.INTEGER:
        return isinstance(value, int) and not isinstance(value, bool)
    if kind is Kind.NUMBER:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind is Kind.BOOLEAN:
        return isinstance(value, bool)
    if kind is Kind.LIST:
        if not isinstance(value, (list, tuple)):
            return False
        assert stype.element is not None
        return all(check_literal_type(item, stype.element) for item in value)
    if kind is Kind.DICT:
        if not isinstance(value, dict):
            return False
        if stype.keys is not None:
            return set(value.keys()) == set(stype.keys)
        return True
    if kind is Kind.DATAFRAME:
        columns = _table_columns(value)
        if columns is None:
            return False
        declared = stype.column_set
        return declared is None or declared <= set(columns)
    return False


def _table_columns(value: Any) -> list[str] | None:
    columns = getattr(value, "columns", None)
    if columns is not None and not isinstance(value, dict):
        return list(columns)
    if isinstance(value, dict) and "$table" in value:
        inner = value["$table"]
        if isinstance(inner, dict) and isinstance(inner.get("columns"), list):
            return list(inner["columns"])
    return None


def _is_empty(value: Any) -> bool:
    if isinstance(value, str):
        return value == ""
    if isinstance(value, (list, tuple, dict)):
        return len(value) == 0
    return False


def describe_expectation(param: ParameterDefinition) -> str:
    """Human-readable rendering of the expected type plus rules, for prompts."""
    parts = [render_semantic_type(param.type)]
    allowed = param.allowed_values
    if allowed is not None:
        parts.append("one of " + ", ".join(repr(v) for v in allowed))
    for rule in param.rules:
        if rule.rule == "not_empty" and rule.payload:
            parts.append("non-empty")
        elif rule.rule == "min":
            parts.append(f">= {rule.payload}")
        elif rule.rule == "max":
            parts.append(f"<= {rule.payload}")
    return "; ".join(parts)


def validate_value(value: Any, param: ParameterDefinition) -> list[Diagnostic]:
    """Check one supplied literal against a parameter definition.

    Returns an empty list iff the value type-checks, satisfies the allowed
    values when declared, and satisfies every validation rule.  Diagnostics
    are the result; nothing raises.
    """
    location = param.name
    if not check_literal_type(value, param.type):
        return [
            error(
                checks.TYPE_CHECK,
                location,
                f"expected {render_semantic_type(param.type)}, got {type(value).__name__} {value!r}",
            )
        ]

    diagnostics: list[Diagnostic] = []
    for rule in param.rules:
        if rule.rule == "not_empty":
            if rule.payload and _is_empty(value):
                diagnostics.append(error(checks.NOT_EMPTY, location, "value must not be empty"))
        elif rule.rule == "allowed_values":
            if value not in rule.payload:
                allowed = ", ".join(repr(v) for v in rule.payload)
                diagnostics.append(
                    error(checks.ALLOWED_VALUES, location, f"{value!r} is not one of: {allowed}")
                )
        elif rule.rule == "min":
            if isinstance(value, (int, float)) and not isinstance(value, bool) and value < rule.payload:
                diagnostics.append(error(checks.MIN, location, f"{value!r} is below the minimum {rule.payload}"))
        elif rule.rule == "max":
            if isinstance(value, (int, float)) and not isinstance(value, bool) and value > rule.payload:
                diagnostics.append(error(checks.MAX, location, f"{value!r} is above the maximum {rule.payload}"))
        # The "required" rule concerns presence and is enforced by callers
        # that know whether a value was supplied at all.
    return diagnostics


__all__ = ["check_literal_type", "validate_value", "describe_expectation"]
