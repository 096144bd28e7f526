"""Domain type system, document formats, and value-level validation."""

from schemagate.schema.types import (
    DYNAMIC,
    Kind,
    SemanticType,
    parse_semantic_type,
    render_semantic_type,
    types_compatible,
)
from schemagate.schema.defs import (
    Diagnostic,
    EdgeDefinition,
    IOContract,
    ParameterDefinition,
    ParameterMapping,
    StepDefinition,
    ToolDefinition,
    ValidationRule,
    Version,
    WorkflowDefinition,
)
from schemagate.schema.documents import (
    canonical_json,
    content_hash,
    parse_tool_definition,
    parse_workflow_definition,
    render_tool_document,
    render_workflow_document,
    try_parse_tool_definition,
    try_parse_workflow_definition,
)
from schemagate.schema.values import check_literal_type, validate_value

__all__ = [
    "DYNAMIC",
    "Kind",
    "SemanticType",
    "parse_semantic_type",
    "render_semantic_type",
    "types_compatible",
    "Diagnostic",
    "EdgeDefinition",
    "IOContract",
    "ParameterDefinition",
    "ParameterMapping",
    "StepDefinition",
    "ToolDefinition",
    "ValidationRule",
    "Version",
    "WorkflowDefinition",
    "canonical_json",
    "content_hash",
    "parse_tool_definition",
    "parse_workflow_definition",
    "render_tool_document",
    "render_workflow_document",
    "try_parse_tool_definition",
    "try_parse_workflow_definition",
    "check_literal_type",
    "validate_value",
]
