"""Registered check identifiers.

Every Diagnostic names the check it violates; the set below is the closed
vocabulary shared by document parsing, value validation, workflow-level
validation, and registry admission.
"""

from __future__ import annotations

# Document-structure checks (parsing).
DOCUMENT_STRUCTURE = "document_structure"
UNKNOWN_FIELD = "unknown_field"
MISSING_FIELD = "missing_field"
FIELD_TYPE = "field_type"
IDENTIFIER_FORMAT = "identifier_format"
VERSION_FORMAT = "version_format"
TYPE_SYNTAX = "type_syntax"
DUPLICATE_IDENTIFIER = "duplicate_identifier"
SELF_REFERENCE = "self_reference"
DANGLING_REFERENCE = "dangling_reference"
NONEMPTY_STEPS = "nonempty_steps"
DOCUMENTATION_COMPLETENESS = "documentation_completeness"
PARAMETER_CONSISTENCY = "parameter_consistency"
DOCUMENT_VALIDITY = "document_validity"

# Value-level checks.
TYPE_CHECK = "type_check"
REQUIRED = "required"
NOT_EMPTY = "not_empty"
ALLOWED_VALUES = "allowed_values"
MIN = "min"
MAX = "max"

# Composed-workflow checks.
ACYCLICITY = "acyclicity"
EDGE_TYPE_COMPATIBILITY = "edge_type_compatibility"
PARAMETER_RESOLUTION = "parameter_resolution"
TOOL_AVAILABILITY = "tool_availability"
MAPPING_CONSISTENCY = "mapping_consistency"

# Admission-only checks.
SERVICE_AVAILABILITY = "service_availability"

REGISTERED_CHECKS = frozenset(
    {
        DOCUMENT_STRUCTURE,
        UNKNOWN_FIELD,
        MISSING_FIELD,
        FIELD_TYPE,
        IDENTIFIER_FORMAT,
        VERSION_FORMAT,
        TYPE_SYNTAX,
        DUPLICATE_IDENTIFIER,
        SELF_REFERENCE,
        DANGLING_REFERENCE,
        NONEMPTY_STEPS,
        DOCUMENTATION_COMPLETENESS,
        PARAMETER_CONSISTENCY,
        DOCUMENT_VALIDITY,
        TYPE_CHECK,
        REQUIRED,
        NOT_EMPTY,
        ALLOWED_VALUES,
        MIN,
        MAX,
        ACYCLICITY,
        EDGE_TYPE_COMPATIBILITY,
        PARAMETER_RESOLUTION,
        TOOL_AVAILABILITY,
        MAPPING_CONSISTENCY,
        SERVICE_AVAILABILITY,
    }
)

# The five checks every workflow validation report carries, in report order.
WORKFLOW_CHECKS = (
    ACYCLICITY,
    EDGE_TYPE_COMPATIBILITY,
    PARAMETER_RESOLUTION,
    TOOL_AVAILABILITY,
    MAPPING_CONSISTENCY,
)

# The three tool admission checks.
TOOL_ADMISSION_CHECKS = (
    PARAMETER_CONSISTENCY,
    DOCUMENTATION_COMPLETENESS,
    SERVICE_AVAILABILITY,
)
