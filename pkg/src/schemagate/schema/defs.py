"""Definition records for tools, workflows, and diagnostics.

All values here are immutable after construction and safe to share across
threads.  Structural invariants that need the whole document (reference
resolution, closed schemas) are enforced by the parsers in ``documents``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping

from schemagate.checks import REGISTERED_CHECKS
from schemagate.schema.types import SemanticType

IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_VERSION = re.compile(r"^(0|[1-9][0-9]*|[0-9])\.(0|[1-9][0-9]*|[0-9])\.(0|[1-9][0-9]*|[0-9])$")

RULE_NAMES = ("not_empty", "allowed_values", "min", "max", "required")


def is_identifier(text: object) -> bool:
    return isinstance(text, str) and bool(IDENTIFIER.match(text))


@dataclass(frozen=True, order=True)
class Version:
    """Semantic version: exactly three dot-separated non-negative integers."""

    major: int
    minor: int
    patch: int

    @classmethod
    def parse(cls, text: str) -> "Version":
        match = _VERSION.match(text) if isinstance(text, str) else None
        if not match:
            raise ValueError(f"not a semantic version: {text!r}")
        return cls(int(match.group(1)), int(match.group(2)), int(match.group(3)))

    @classmethod
    def is_valid(cls, text: object) -> bool:
        return isinstance(text, str) and bool(_VERSION.match(text))

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding: severity, the violated check, and where."""

    severity: str  # "error" | "warning"
    check: str
    location: str
    message: str

    def __post_init__(self) -> None:
        if self.severity not in ("error", "warning"):
            raise ValueError(f"unknown severity {self.severity!r}")
        if self.check not in REGISTERED_CHECKS:
            raise ValueError(f"unregistered check identifier {self.check!r}")

    def to_document(self) -> dict[str, str]:
        return {
            "severity": self.severity,
            "check": self.check,
            "location": self.location,
            "message": self.message,
        }


def error(check: str, location: str, message: str) -> Diagnostic:
    return Diagnostic("error", check, location, message)


@dataclass(frozen=True)
class ValidationRule:
    """A pre-execution constraint on one parameter.

    ``payload`` depends on the rule: the admissible literals for
    allowed_values, a numeric bound for min/max, a boolean for the rest.
    """

    rule: str
    payload: Any

    def __post_init__(self) -> None:
        if self.rule not in RULE_NAMES:
            raise ValueError(f"unknown validation rule {self.rule!r}")
        if self.rule == "allowed_values":
            object.__setattr__(self, "payload", tuple(self.payload))


@dataclass(frozen=True)
class ParameterDefinition:
    """A user-facing parameter with its type, documentation, and rules."""

    name: str
    type: SemanticType
    description: str
    required: bool = False
    default: Any = None
    has_default: bool = False
    examples: tuple[Any, ...] | None = None
    rules: tuple[ValidationRule, ...] = ()

    @property
    def allowed_values(self) -> tuple[Any, ...] | None:
        for rule in self.rules:
            if rule.rule == "allowed_values":
                return rule.payload
        return None

    def rule(self, name: str) -> ValidationRule | None:
        for rule in self.rules:
            if rule.rule == name:
                return rule
        return None


@dataclass(frozen=True)
class IOContract:
    """Typed input and output slots of a tool."""

    inputs: Mapping[str, SemanticType] = field(default_factory=dict)
    outputs: Mapping[str, SemanticType] = field(default_factory=dict)


@dataclass(frozen=True)
class ToolDefinition:
    """A versioned, schema-checked description of an atomic domain tool."""

    id: str
    name: str
    description: str
    version: str
    parameters: tuple[ParameterDefinition, ...] = ()
    io: IOContract = field(default_factory=IOContract)
    dependencies: tuple[str, ...] = ()
    domain_tags: tuple[str, ...] = ()
    provenance: Mapping[str, str] = field(default_factory=dict)
    estimated_duration: float = 0.0
    requires_network: bool = False

    def parameter(self, name: str) -> ParameterDefinition | None:
        for param in self.parameters:
            if param.name == name:
                return param
        return None


@dataclass(frozen=True)
class StepDefinition:
    """One workflow step: a tool invocation with step-local bindings."""

    step_id: str
    tool_id: str
    name: str
    description: str
    parameters: Mapping[str, Any] = field(default_factory=dict)
    dependencies: tuple[str, ...] = ()
    estimated_duration: float = 0.0


@dataclass(frozen=True)
class ParameterMapping:
    """Wires one step's output into another step's input slot."""

    from_step: str
    from_parameter: str
    to_step: str
    to_parameter: str
    description: str = ""


@dataclass(frozen=True)
class EdgeDefinition:
    """A dataflow edge of the workflow graph."""

    edge_id: str
    source_node_id: str
    target_node_id: str
    source_output: str
    target_input: str


@dataclass(frozen=True)
class WorkflowDefinition:
    """A DAG of steps over registered tools, plus user-facing parameters."""

    workflow_id: str
    name: str
    description: str
    version: str
    steps: tuple[StepDefinition, ...]
    parameter_mappings: tuple[ParameterMapping, ...] = ()
    edges: tuple[EdgeDefinition, ...] = ()
    parameters: Mapping[str, ParameterDefinition] = field(default_factory=dict)
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def step(self, step_id: str) -> StepDefinition | None:
        for step in self.steps:
            if step.step_id == step_id:
                return step
        return None

    def step_index(self, step_id: str) -> int:
        for i, step in enumerate(self.steps):
            if step.step_id == step_id:
                return i
        return -1
