"""Semantic types, the type-expression grammar, and source/target compatibility.

Type expressions follow a closed grammar::

    base | list[base] | dict | dataframe | dataframe{col,...}

with base one of string, number, integer, boolean, model-ref, dataset-ref
(the aliases str, int, float, and bool normalise to the canonical names).
Dataframe column sets make cross-step column errors detectable; the sentinel
``dynamic`` (or an absent column set) means "unchecked".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from schemagate.errors import TypeSyntaxError


class Kind(str, Enum):
    STRING = "string"
    NUMBER = "number"
    INTEGER = "integer"
    BOOLEAN = "boolean"
    LIST = "list"
    DICT = "dict"
    DATAFRAME = "dataframe"
    MODEL_REF = "model-ref"
    DATASET_REF = "dataset-ref"


#: Sentinel column set: the dataframe's columns are not checked.
DYNAMIC = "dynamic"

_BASE_KINDS = {
    "string": Kind.STRING,
    "str": Kind.STRING,
    "number": Kind.NUMBER,
    "float": Kind.NUMBER,
    "integer": Kind.INTEGER,
    "int": Kind.INTEGER,
    "boolean": Kind.BOOLEAN,
    "bool": Kind.BOOLEAN,
    "model-ref": Kind.MODEL_REF,
    "dataset-ref": Kind.DATASET_REF,
}

_COLUMN_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class SemanticType:
    """A value type in the domain type system.

    ``element`` is present exactly for lists.  ``keys`` optionally names the
    entries of a dict.  ``columns`` is either None (unchecked), the string
    ``dynamic`` (explicitly unchecked), or a frozenset of declared column
    names; only dataframes carry it.
    """

    kind: Kind
    element: SemanticType | None = None
    keys: tuple[str, ...] | None = None
    columns: frozenset[str] | str | None = None

    def __post_init__(self) -> None:
        if self.kind is Kind.LIST:
            if self.element is None:
                raise ValueError("list types need exactly one element type")
        elif self.element is not None:
            raise ValueError(f"{self.kind.value} types carry no element type")
        if self.keys is not None and self.kind is not Kind.DICT:
            raise ValueError("only dict types declare keys")
        if self.columns is not None:
            if self.kind is not Kind.DATAFRAME:
                raise ValueError("only dataframe types declare columns")
            if self.columns != DYNAMIC and not self.columns:
                raise ValueError("a declared dataframe column set must be non-empty")

    @property
    def column_set(self) -> frozenset[str] | None:
        """Declared columns, or None when unchecked (absent or dynamic)."""
        if isinstance(self.columns, frozenset):
            return self.columns
        return None


def parse_semantic_type(text: str) -> SemanticType:
    """Parse a type expression.

    Raises TypeSyntaxError naming the offending token and its position.
    """
    if not isinstance(text, str) or not text.strip():
        raise TypeSyntaxError(str(text), "<empty>", 0)
    expr = text.strip()

    if expr in _BASE_KINDS:
        return SemanticType(kind=_BASE_KINDS[expr])
    if expr == "dict":
        return SemanticType(kind=Kind.DICT)
    if expr == "dataframe":
        return SemanticType(kind=Kind.DATAFRAME)

    if expr.startswith("list[") :
        if not expr.endswith("]"):
            raise TypeSyntaxError(text, expr[-1], len(text) - 1)
        inner = expr[5:-1].strip()
        if inner not in _BASE_KINDS:
            raise TypeSyntaxError(text, inner or "<empty>", text.find("[") + 1)
        return SemanticType(kind=Kind.LIST, element=SemanticType(kind=_BASE_KINDS[inner]))

    if expr.startswith("dataframe{"):
        if not expr.endswith("}"):
            raise TypeSyntaxError(text, expr[-1], len(text) - 1)
        body = expr[len("dataframe{"):-1]
        names = [part.strip() for part in body.split(",")]
        offset = text.find("{") + 1
        seen: list[str] = []
        for name in names:
            if not _COLUMN_NAME.match(name):
                raise TypeSyntaxError(text, name or "<empty>", offset)
            if name in seen:
                raise TypeSyntaxError(text, name, offset)
            seen.append(name)
            offset += len(name) + 1
        return SemanticType(kind=Kind.DATAFRAME, columns=frozenset(seen))

    # Report the first token that fails to start a production.
    token = re.split(r"[\[\{]", expr, maxsplit=1)[0] or expr
    raise TypeSyntaxError(text, token, text.find(token[0]) if token else 0)


def render_semantic_type(stype: SemanticType) -> str:
    """Render a type back to its canonical text expression.

    Dict key declarations are not expressible in the text grammar; callers
    rendering documents keep keys in the object form instead.
    """
    if stype.kind is Kind.LIST:
        assert stype.element is not None
        return f"list[{render_semantic_type(stype.element)}]"
    if stype.kind is Kind.DATAFRAME and isinstance(stype.columns, frozenset):
        return "dataframe{" + ",".join(sorted(stype.columns)) + "}"
    return stype.kind.value


def types_compatible(source: SemanticType, target: SemanticType) -> bool:
    """True iff a value of ``source`` may flow into a slot of ``target``.

    Identical kinds match; integer flows into number; list elements must
    match recursively; a dataframe with declared columns S satisfies a target
    declaring T iff T is a subset of S, with dynamic/absent columns unchecked
    on either side.
    """
    if source.kind is not target.kind:
        return source.kind is Kind.INTEGER and target.kind is Kind.NUMBER
    if source.kind is Kind.LIST:
        assert source.element is not None and target.element is not None
        return types_compatible(source.element, target.element)
    if source.kind is Kind.DATAFRAME:
        wanted = target.column_set
        provided = source.column_set
        if wanted is None or provided is None:
            return True
        return wanted <= provided
    return True


def missing_columns(source: SemanticType, target: SemanticType) -> frozenset[str]:
    """Columns the target declares that the source does not provide."""
    wanted = target.column_set
    provided = source.column_set
    if wanted is None or provided is None:
        return frozenset()
    return wanted - provided
