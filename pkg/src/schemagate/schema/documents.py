"""Parsing and canonical rendering of tool and workflow documents.

Documents are UTF-8 JSON with snake_case keys; tools carry ``parameters`` as
a list, workflows as a map.  Schemas are closed: unknown fields are errors,
and every violation is collected rather than failing fast, so one round trip
can report the complete defect list.  Canonical rendering writes keys in a
fixed field order with two-space indentation and LF line endings; hashing the
canonical form is how the registry detects drift.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Mapping

from schemagate import checks
from schemagate.errors import DocumentInvalid, TypeSyntaxError
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
    is_identifier,
)
from schemagate.schema.types import DYNAMIC, Kind, SemanticType, parse_semantic_type, render_semantic_type
from schemagate.schema.values import check_literal_type

_TOOL_FIELDS = (
    "id",
    "name",
    "description",
    "version",
    "parameters",
    "input_schema",
    "output_schema",
    "dependencies",
    "domain_tags",
    "provenance",
    "estimated_duration",
    "requires_network",
)
_TOOL_PARAM_FIELDS = ("name", "type", "description", "required", "default", "allowed_values", "examples")
_WORKFLOW_FIELDS = (
    "workflow_id",
    "name",
    "description",
    "version",
    "steps",
    "parameter_mappings",
    "edges",
    "parameters",
    "metadata",
)
_WORKFLOW_PARAM_FIELDS = ("type", "required", "description", "default", "allowed_values", "examples", "validation_rules")
_STEP_FIELDS = ("step_id", "tool_id", "name", "description", "parameters", "dependencies", "estimated_duration")
_MAPPING_FIELDS = ("from_step", "from_parameter", "to_step", "to_parameter", "description")
_EDGE_FIELDS = ("edge_id", "source_node_id", "target_node_id", "source_output", "target_input")
_METADATA_FIELDS = ("complexity", "estimated_duration_minutes", "tags", "categories", "use_cases")
_RULE_ORDER = ("not_empty", "allowed_values", "min", "max", "required")

_DEFAULT_WORKFLOW_VERSION = "1.0.0"


class _Collector:
    def __init__(self) -> None:
        self.diagnostics: list[Diagnostic] = []

    def error(self, check: str, location: str, message: str) -> None:
        self.diagnostics.append(Diagnostic("error", check, location, message))

    @property
    def failed(self) -> bool:
        return any(d.severity == "error" for d in self.diagnostics)


def canonical_json(document: Mapping[str, Any] | list) -> str:
    """Two-space indented JSON with LF line endings and a trailing newline."""
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def content_hash(document: Mapping[str, Any] | str) -> str:
    """SHA-256 of the canonical rendering."""
    text = document if isinstance(document, str) else canonical_json(document)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# shared field helpers


def _reject_unknown(doc: Mapping[str, Any], allowed: tuple[str, ...], prefix: str, col: _Collector) -> None:
    for key in doc:
        if key not in allowed:
            col.error(checks.UNKNOWN_FIELD, _join(prefix, str(key)), f"unknown field {key!r}")


def _join(prefix: str, field: str) -> str:
    return f"{prefix}.{field}" if prefix else field


def _take_identifier(doc: Mapping[str, Any], field: str, prefix: str, col: _Collector) -> str | None:
    value = doc.get(field)
    if value is None:
        col.error(checks.MISSING_FIELD, _join(prefix, field), f"required field {field!r} is missing")
        return None
    if not is_identifier(value):
        col.error(checks.IDENTIFIER_FORMAT, _join(prefix, field), f"{value!r} is not a valid identifier")
        return None
    return value


def _take_text(doc: Mapping[str, Any], field: str, prefix: str, col: _Collector, *, default: str | None = None) -> str:
    value = doc.get(field)
    if value is None:
        if default is not None:
            return default
        col.error(checks.MISSING_FIELD, _join(prefix, field), f"required field {field!r} is missing")
        return ""
    if not isinstance(value, str):
        col.error(checks.FIELD_TYPE, _join(prefix, field), f"{field!r} must be text")
        return ""
    return value


def _take_description(doc: Mapping[str, Any], prefix: str, col: _Collector) -> str:
    value = doc.get("description")
    if not isinstance(value, str) or not value.strip():
        col.error(
            checks.DOCUMENTATION_COMPLETENESS,
            _join(prefix, "description"),
            "a non-empty description is required",
        )
        return value if isinstance(value, str) else ""
    return value


def _take_version(doc: Mapping[str, Any], prefix: str, col: _Collector, *, default: str | None = None) -> str:
    value = doc.get("version", default)
    if value is None:
        col.error(checks.MISSING_FIELD, _join(prefix, "version"), "required field 'version' is missing")
        return ""
    if not Version.is_valid(value):
        col.error(
            checks.VERSION_FORMAT,
            _join(prefix, "version"),
            f"{value!r} is not a semantic version (major.minor.patch)",
        )
        return value if isinstance(value, str) else ""
    return value


def _take_bool(doc: Mapping[str, Any], field: str, prefix: str, col: _Collector, *, default: bool | None = None) -> bool:
    value = doc.get(field)
    if value is None:
        if default is not None:
            return default
        col.error(checks.MISSING_FIELD, _join(prefix, field), f"required field {field!r} is missing")
        return False
    if not isinstance(value, bool):
        col.error(checks.FIELD_TYPE, _join(prefix, field), f"{field!r} must be a boolean")
        return False
    return value


def _take_duration(doc: Mapping[str, Any], field: str, prefix: str, col: _Collector, *, required: bool) -> float:
    value = doc.get(field)
    if value is None:
        if required:
            col.error(checks.MISSING_FIELD, _join(prefix, field), f"required field {field!r} is missing")
        return 0.0
    if not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0:
        col.error(checks.FIELD_TYPE, _join(prefix, field), f"{field!r} must be a non-negative number of minutes")
        return 0.0
    return float(value)


def _take_string_list(doc: Mapping[str, Any], field: str, prefix: str, col: _Collector) -> tuple[str, ...]:
    value = doc.get(field)
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        col.error(checks.FIELD_TYPE, _join(prefix, field), f"{field!r} must be a list of text values")
        return ()
    return tuple(value)


def _parse_type_field(value: Any, location: str, col: _Collector) -> SemanticType | None:
    """Accept the text grammar or the object form {type, columns?, keys?}."""
    if isinstance(value, str):
        try:
            return parse_semantic_type(value)
        except TypeSyntaxError as exc:
            col.error(checks.TYPE_SYNTAX, location, str(exc))
            return None
    if isinstance(value, Mapping):
        for key in value:
            if key not in ("type", "columns", "keys"):
                col.error(checks.UNKNOWN_FIELD, _join(location, str(key)), f"unknown field {key!r} in type object")
        base_text = value.get("type")
        if not isinstance(base_text, str):
            col.error(checks.TYPE_SYNTAX, location, "type object needs a 'type' expression")
            return None
        try:
            base = parse_semantic_type(base_text)
        except TypeSyntaxError as exc:
            col.error(checks.TYPE_SYNTAX, location, str(exc))
            return None
        columns = value.get("columns")
        keys = value.get("keys")
        if columns is not None:
            if base.kind is not Kind.DATAFRAME or base.columns is not None:
                col.error(checks.TYPE_SYNTAX, location, "'columns' only applies to a plain dataframe type")
                return None
            if columns == DYNAMIC:
                base = SemanticType(kind=Kind.DATAFRAME, columns=DYNAMIC)
            elif (
                isinstance(columns, list)
                and columns
                and all(isinstance(c, str) for c in columns)
                and len(set(columns)) == len(columns)
            ):
                base = SemanticType(kind=Kind.DATAFRAME, columns=frozenset(columns))
            else:
                col.error(checks.TYPE_SYNTAX, location, "'columns' must be \"dynamic\" or a non-empty list of distinct names")
                return None
        if keys is not None:
            if base.kind is not Kind.DICT:
                col.error(checks.TYPE_SYNTAX, location, "'keys' only applies to dict types")
                return None
            if not isinstance(keys, list) or not keys or not all(is_identifier(k) for k in keys):
                col.error(checks.TYPE_SYNTAX, location, "'keys' must be a non-empty list of identifiers")
                return None
            if len(set(keys)) != len(keys):
                col.error(checks.TYPE_SYNTAX, location, "'keys' must be distinct")
                return None
            base = SemanticType(kind=Kind.DICT, keys=tuple(keys))
        return base
    col.error(checks.TYPE_SYNTAX, location, f"cannot read a type from {type(value).__name__}")
    return None


# ---------------------------------------------------------------------------
# parameters


def _check_members_type(
    values: list | tuple,
    stype: SemanticType,
    location: str,
    what: str,
    col: _Collector,
) -> bool:
    ok = True
    for i, member in enumerate(values):
        if not check_literal_type(member, stype):
            col.error(
                checks.PARAMETER_CONSISTENCY,
                f"{location}[{i}]",
                f"{what} {member!r} does not match the declared type {render_semantic_type(stype)}",
            )
            ok = False
    return ok


def _parse_allowed_values(value: Any, stype: SemanticType | None, location: str, col: _Collector) -> tuple | None:
    if not isinstance(value, list) or not value:
        col.error(checks.PARAMETER_CONSISTENCY, location, "allowed_values must be a non-empty list")
        return None
    hashable = all(not isinstance(v, (dict, list)) for v in value)
    if hashable and len(set(value)) != len(value):
        col.error(checks.PARAMETER_CONSISTENCY, location, "allowed_values must be distinct")
        return None
    if stype is not None:
        _check_members_type(value, stype, location, "allowed value", col)
    return tuple(value)


def _parse_rules(
    doc: Mapping[str, Any],
    stype: SemanticType | None,
    prefix: str,
    col: _Collector,
) -> list[ValidationRule]:
    """Collect validation rules from the allowed_values field and/or the
    validation_rules block, normalised into one rule list."""
    rules: dict[str, ValidationRule] = {}

    top_allowed = doc.get("allowed_values")
    if top_allowed is not None:
        allowed = _parse_allowed_values(top_allowed, stype, _join(prefix, "allowed_values"), col)
        if allowed is not None:
            rules["allowed_values"] = ValidationRule("allowed_values", allowed)

    block = doc.get("validation_rules")
    if block is not None:
        loc = _join(prefix, "validation_rules")
        if not isinstance(block, Mapping):
            col.error(checks.FIELD_TYPE, loc, "validation_rules must be an object")
            block = {}
        for rule_name, payload in block.items():
            rule_loc = _join(loc, str(rule_name))
            if rule_name not in _RULE_ORDER:
                col.error(checks.UNKNOWN_FIELD, rule_loc, f"unknown validation rule {rule_name!r}")
                continue
            if rule_name == "allowed_values":
                if "allowed_values" in rules:
                    col.error(checks.PARAMETER_CONSISTENCY, rule_loc, "allowed_values declared twice")
                    continue
                allowed = _parse_allowed_values(payload, stype, rule_loc, col)
                if allowed is not None:
                    rules["allowed_values"] = ValidationRule("allowed_values", allowed)
            elif rule_name in ("not_empty", "required"):
                if not isinstance(payload, bool):
                    col.error(checks.FIELD_TYPE, rule_loc, f"{rule_name} takes a boolean")
                    continue
                rules[rule_name] = ValidationRule(rule_name, payload)
            else:  # min / max
                if not isinstance(payload, (int, float)) or isinstance(payload, bool):
                    col.error(checks.FIELD_TYPE, rule_loc, f"{rule_name} takes a numeric bound")
                    continue
                rules[rule_name] = ValidationRule(rule_name, payload)
    return [rules[name] for name in _RULE_ORDER if name in rules]


def _parse_parameter(
    doc: Any,
    prefix: str,
    col: _Collector,
    *,
    name: str | None = None,
    allowed_fields: tuple[str, ...],
) -> ParameterDefinition | None:
    if not isinstance(doc, Mapping):
        col.error(checks.FIELD_TYPE, prefix, "a parameter definition must be an object")
        return None
    _reject_unknown(doc, allowed_fields, prefix, col)

    if name is None:
        name = _take_identifier(doc, "name", prefix, col)
    stype = _parse_type_field(doc.get("type"), _join(prefix, "type"), col) if "type" in doc else None
    if "type" not in doc:
        col.error(checks.MISSING_FIELD, _join(prefix, "type"), "required field 'type' is missing")
    description = _take_description(doc, prefix, col)
    required = _take_bool(doc, "required", prefix, col, default=False)

    rules = _parse_rules(doc, stype, prefix, col)
    effective_required = required or any(r.rule == "required" and r.payload for r in rules)

    has_default = "default" in doc
    default = doc.get("default")
    if has_default and effective_required:
        col.error(
            checks.PARAMETER_CONSISTENCY,
            _join(prefix, "default"),
            "a required parameter must not declare a default",
        )
    if has_default and stype is not None and not check_literal_type(default, stype):
        col.error(
            checks.PARAMETER_CONSISTENCY,
            _join(prefix, "default"),
            f"default {default!r} does not match the declared type {render_semantic_type(stype)}",
        )
    allowed = next((r.payload for r in rules if r.rule == "allowed_values"), None)
    if has_default and allowed is not None and default not in allowed:
        col.error(
            checks.PARAMETER_CONSISTENCY,
            _join(prefix, "default"),
            f"default {default!r} is not one of the allowed values",
        )

    examples = doc.get("examples")
    parsed_examples: tuple | None = None
    if examples is not None:
        if not isinstance(examples, list):
            col.error(checks.FIELD_TYPE, _join(prefix, "examples"), "examples must be a list")
        else:
            if stype is not None:
                _check_members_type(examples, stype, _join(prefix, "examples"), "example", col)
            parsed_examples = tuple(examples)

    if name is None or stype is None:
        return None
    return ParameterDefinition(
        name=name,
        type=stype,
        description=description,
        required=effective_required,
        default=default if has_default else None,
        has_default=has_default,
        examples=parsed_examples,
        rules=tuple(rules),
    )


def _parse_io_schema(doc: Any, prefix: str, col: _Collector) -> dict[str, SemanticType]:
    result: dict[str, SemanticType] = {}
    if doc is None:
        return result
    if not isinstance(doc, Mapping):
        col.error(checks.FIELD_TYPE, prefix, "an I/O schema must be an object of name -> type")
        return result
    for slot, entry in doc.items():
        loc = _join(prefix, str(slot))
        if not is_identifier(slot):
            col.error(checks.IDENTIFIER_FORMAT, loc, f"{slot!r} is not a valid identifier")
            continue
        stype = _parse_type_field(entry, loc, col)
        if stype is not None:
            result[slot] = stype
    return result


# ---------------------------------------------------------------------------
# tool documents


def try_parse_tool_definition(document: Any) -> tuple[ToolDefinition | None, list[Diagnostic]]:
    """Parse a tool document, collecting every violation.

    Returns (definition, []) on success or (None, diagnostics) on failure.
    """
    col = _Collector()
    if not isinstance(document, Mapping):
        col.error(checks.DOCUMENT_STRUCTURE, "", "a tool definition must be a JSON object")
        return None, col.diagnostics
    _reject_unknown(document, _TOOL_FIELDS, "", col)

    tool_id = _take_identifier(document, "id", "", col)
    name = _take_text(document, "name", "", col)
    description = _take_description(document, "", col)
    version = _take_version(document, "", col)

    parameters: list[ParameterDefinition] = []
    raw_params = document.get("parameters", [])
    if not isinstance(raw_params, list):
        col.error(checks.FIELD_TYPE, "parameters", "parameters must be a list")
        raw_params = []
    seen_names: set[str] = set()
    for i, raw in enumerate(raw_params):
        param = _parse_parameter(raw, f"parameters[{i}]", col, allowed_fields=_TOOL_PARAM_FIELDS)
        if param is None:
            continue
        if param.name in seen_names:
            col.error(
                checks.DUPLICATE_IDENTIFIER,
                f"parameters[{i}].name",
                f"duplicate parameter name {param.name!r}",
            )
            continue
        seen_names.add(param.name)
        parameters.append(param)

    inputs = _parse_io_schema(document.get("input_schema"), "input_schema", col)
    outputs = _parse_io_schema(document.get("output_schema"), "output_schema", col)

    dependencies = _take_string_list(document, "dependencies", "", col)
    seen_deps: set[str] = set()
    for i, dep in enumerate(dependencies):
        loc = f"dependencies[{i}]"
        if not is_identifier(dep):
            col.error(checks.IDENTIFIER_FORMAT, loc, f"{dep!r} is not a valid identifier")
        elif tool_id is not None and dep == tool_id:
            col.error(checks.SELF_REFERENCE, loc, "a tool cannot depend on itself")
        elif dep in seen_deps:
            col.error(checks.DUPLICATE_IDENTIFIER, loc, f"duplicate dependency {dep!r}")
        seen_deps.add(dep)

    domain_tags = _take_string_list(document, "domain_tags", "", col)

    provenance_raw = document.get("provenance")
    provenance: dict[str, str] = {}
    if provenance_raw is None:
        col.error(checks.MISSING_FIELD, "provenance", "required field 'provenance' is missing")
    elif not isinstance(provenance_raw, Mapping):
        col.error(checks.FIELD_TYPE, "provenance", "provenance must be an object")
    else:
        for key in provenance_raw:
            if key not in ("origin", "maintainer"):
                col.error(checks.UNKNOWN_FIELD, f"provenance.{key}", f"unknown provenance field {key!r}")
        for key in ("origin", "maintainer"):
            value = provenance_raw.get(key)
            if not isinstance(value, str):
                col.error(checks.MISSING_FIELD, f"provenance.{key}", f"provenance needs a text {key!r}")
            else:
                provenance[key] = value

    estimated_duration = _take_duration(document, "estimated_duration", "", col, required=True)
    requires_network = _take_bool(document, "requires_network", "", col)

    if col.failed:
        return None, col.diagnostics
    assert tool_id is not None
    return (
        ToolDefinition(
            id=tool_id,
            name=name,
            description=description,
            version=version,
            parameters=tuple(parameters),
            io=IOContract(inputs=inputs, outputs=outputs),
            dependencies=dependencies,
            domain_tags=domain_tags,
            provenance=provenance,
            estimated_duration=estimated_duration,
            requires_network=requires_network,
        ),
        col.diagnostics,
    )


def parse_tool_definition(document: Any) -> ToolDefinition:
    """Parse a tool document or raise DocumentInvalid with all diagnostics."""
    tool, diagnostics = try_parse_tool_definition(document)
    if tool is None:
        raise DocumentInvalid(diagnostics, "tool document failed validation")
    return tool


# ---------------------------------------------------------------------------
# workflow documents


def _parse_step(doc: Any, prefix: str, col: _Collector) -> StepDefinition | None:
    if not isinstance(doc, Mapping):
        col.error(checks.FIELD_TYPE, prefix, "a step must be an object")
        return None
    _reject_unknown(doc, _STEP_FIELDS, prefix, col)
    step_id = _take_identifier(doc, "step_id", prefix, col)
    tool_id = _take_identifier(doc, "tool_id", prefix, col)
    name = _take_text(doc, "name", prefix, col, default="")
    description = _take_text(doc, "description", prefix, col, default="")
    raw_params = doc.get("parameters", {})
    if not isinstance(raw_params, Mapping):
        col.error(checks.FIELD_TYPE, _join(prefix, "parameters"), "step parameters must be an object")
        raw_params = {}
    else:
        for key in raw_params:
            if not is_identifier(key):
                col.error(
                    checks.IDENTIFIER_FORMAT,
                    _join(prefix, f"parameters.{key}"),
                    f"{key!r} is not a valid identifier",
                )
    dependencies = _take_string_list(doc, "dependencies", prefix, col)
    estimated_duration = _take_duration(doc, "estimated_duration", prefix, col, required=False)
    if step_id is None or tool_id is None:
        return None
    return StepDefinition(
        step_id=step_id,
        tool_id=tool_id,
        name=name,
        description=description,
        parameters=dict(raw_params),
        dependencies=dependencies,
        estimated_duration=estimated_duration,
    )


def _parse_metadata(doc: Any, col: _Collector) -> dict[str, Any]:
    if doc is None:
        return {}
    if not isinstance(doc, Mapping):
        col.error(checks.FIELD_TYPE, "metadata", "metadata must be an object")
        return {}
    _reject_unknown(doc, _METADATA_FIELDS, "metadata", col)
    result: dict[str, Any] = {}
    for key in _METADATA_FIELDS:
        if key not in doc:
            continue
        value = doc[key]
        loc = f"metadata.{key}"
        if key == "complexity":
            if not isinstance(value, str):
                col.error(checks.FIELD_TYPE, loc, "complexity must be text")
                continue
        elif key == "estimated_duration_minutes":
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                col.error(checks.FIELD_TYPE, loc, "estimated_duration_minutes must be a number")
                continue
        else:
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                col.error(checks.FIELD_TYPE, loc, f"{key} must be a list of text values")
                continue
        result[key] = value
    return result


def try_parse_workflow_definition(document: Any) -> tuple[WorkflowDefinition | None, list[Diagnostic]]:
    """Parse a workflow document, collecting every violation."""
    col = _Collector()
    if not isinstance(document, Mapping):
        col.error(checks.DOCUMENT_STRUCTURE, "", "a workflow definition must be a JSON object")
        return None, col.diagnostics
    _reject_unknown(document, _WORKFLOW_FIELDS, "", col)

    workflow_id = _take_identifier(document, "workflow_id", "", col)
    name = _take_text(document, "name", "", col)
    description = _take_description(document, "", col)
    version = _take_version(document, "", col, default=_DEFAULT_WORKFLOW_VERSION)

    raw_steps = document.get("steps")
    steps: list[StepDefinition] = []
    if raw_steps is None or not isinstance(raw_steps, list) or not raw_steps:
        col.error(checks.NONEMPTY_STEPS, "steps", "a workflow needs at least one step")
        raw_steps = []
    for i, raw in enumerate(raw_steps):
        step = _parse_step(raw, f"steps[{i}]", col)
        if step is not None:
            steps.append(step)

    step_ids: set[str] = set()
    for i, step in enumerate(steps):
        if step.step_id in step_ids:
            col.error(checks.DUPLICATE_IDENTIFIER, f"steps[{i}].step_id", f"duplicate step_id {step.step_id!r}")
        step_ids.add(step.step_id)
    for i, step in enumerate(steps):
        seen: set[str] = set()
        for j, dep in enumerate(step.dependencies):
            loc = f"steps[{i}].dependencies[{j}]"
            if dep == step.step_id:
                col.error(checks.SELF_REFERENCE, loc, "a step cannot depend on itself")
            elif dep in seen:
                col.error(checks.DUPLICATE_IDENTIFIER, loc, f"duplicate dependency {dep!r}")
            elif dep not in step_ids:
                col.error(checks.DANGLING_REFERENCE, loc, f"dependency {dep!r} names no step")
            seen.add(dep)

    mappings: list[ParameterMapping] = []
    raw_mappings = document.get("parameter_mappings", [])
    if not isinstance(raw_mappings, list):
        col.error(checks.FIELD_TYPE, "parameter_mappings", "parameter_mappings must be a list")
        raw_mappings = []
    for i, raw in enumerate(raw_mappings):
        prefix = f"parameter_mappings[{i}]"
        if not isinstance(raw, Mapping):
            col.error(checks.FIELD_TYPE, prefix, "a parameter mapping must be an object")
            continue
        _reject_unknown(raw, _MAPPING_FIELDS, prefix, col)
        from_step = _take_identifier(raw, "from_step", prefix, col)
        from_parameter = _take_identifier(raw, "from_parameter", prefix, col)
        to_step = _take_identifier(raw, "to_step", prefix, col)
        to_parameter = _take_identifier(raw, "to_parameter", prefix, col)
        mapping_description = _take_text(raw, "description", prefix, col, default="")
        if None in (from_step, from_parameter, to_step, to_parameter):
            continue
        if from_step == to_step:
            col.error(checks.SELF_REFERENCE, f"{prefix}.to_step", "a mapping cannot target its own step")
            continue
        for field_name, value in (("from_step", from_step), ("to_step", to_step)):
            if value not in step_ids:
                col.error(checks.DANGLING_REFERENCE, f"{prefix}.{field_name}", f"{value!r} names no step")
        mappings.append(
            ParameterMapping(
                from_step=from_step,
                from_parameter=from_parameter,
                to_step=to_step,
                to_parameter=to_parameter,
                description=mapping_description,
            )
        )

    edges: list[EdgeDefinition] = []
    raw_edges = document.get("edges", [])
    if not isinstance(raw_edges, list):
        col.error(checks.FIELD_TYPE, "edges", "edges must be a list")
        raw_edges = []
    seen_edges: set[str] = set()
    for i, raw in enumerate(raw_edges):
        prefix = f"edges[{i}]"
        if not isinstance(raw, Mapping):
            col.error(checks.FIELD_TYPE, prefix, "an edge must be an object")
            continue
        _reject_unknown(raw, _EDGE_FIELDS, prefix, col)
        edge_id = _take_identifier(raw, "edge_id", prefix, col)
        source = _take_identifier(raw, "source_node_id", prefix, col)
        target = _take_identifier(raw, "target_node_id", prefix, col)
        source_output = _take_identifier(raw, "source_output", prefix, col)
        target_input = _take_identifier(raw, "target_input", prefix, col)
        if None in (edge_id, source, target, source_output, target_input):
            continue
        if edge_id in seen_edges:
            col.error(checks.DUPLICATE_IDENTIFIER, f"{prefix}.edge_id", f"duplicate edge_id {edge_id!r}")
            continue
        seen_edges.add(edge_id)
        if source == target:
            col.error(checks.SELF_REFERENCE, f"{prefix}.target_node_id", "an edge cannot loop onto its source")
            continue
        dangling = False
        for field_name, value in (("source_node_id", source), ("target_node_id", target)):
            if value not in step_ids:
                col.error(checks.DANGLING_REFERENCE, f"{prefix}.{field_name}", f"{value!r} names no step")
                dangling = True
        if dangling:
            continue
        edges.append(
            EdgeDefinition(
                edge_id=edge_id,
                source_node_id=source,
                target_node_id=target,
                source_output=source_output,
                target_input=target_input,
            )
        )

    parameters: dict[str, ParameterDefinition] = {}
    raw_parameters = document.get("parameters", {})
    if not isinstance(raw_parameters, Mapping):
        col.error(checks.FIELD_TYPE, "parameters", "workflow parameters must be an object")
        raw_parameters = {}
    for pname, raw in raw_parameters.items():
        prefix = f"parameters.{pname}"
        if not is_identifier(pname):
            col.error(checks.IDENTIFIER_FORMAT, prefix, f"{pname!r} is not a valid identifier")
            continue
        param = _parse_parameter(raw, prefix, col, name=pname, allowed_fields=_WORKFLOW_PARAM_FIELDS)
        if param is not None:
            parameters[pname] = param

    metadata = _parse_metadata(document.get("metadata"), col)

    if col.failed:
        return None, col.diagnostics
    assert workflow_id is not None
    return (
        WorkflowDefinition(
            workflow_id=workflow_id,
            name=name,
            description=description,
            version=version,
            steps=tuple(steps),
            parameter_mappings=tuple(mappings),
            edges=tuple(edges),
            parameters=parameters,
            metadata=metadata,
        ),
        col.diagnostics,
    )


def parse_workflow_definition(document: Any) -> WorkflowDefinition:
    """Parse a workflow document or raise DocumentInvalid with all diagnostics."""
    workflow, diagnostics = try_parse_workflow_definition(document)
    if workflow is None:
        raise DocumentInvalid(diagnostics, "workflow document failed validation")
    return workflow


# ---------------------------------------------------------------------------
# canonical rendering


def _render_type_text(stype: SemanticType) -> str | dict[str, Any]:
    """Text form where the grammar can express the type, object form otherwise."""
    if stype.kind is Kind.DICT and stype.keys is not None:
        return {"type": "dict", "keys": list(stype.keys)}
    return render_semantic_type(stype)


def _render_type_object(stype: SemanticType) -> dict[str, Any]:
    if stype.kind is Kind.DATAFRAME:
        entry: dict[str, Any] = {"type": "dataframe"}
        if stype.columns == DYNAMIC:
            entry["columns"] = DYNAMIC
        elif isinstance(stype.columns, frozenset):
            entry["columns"] = sorted(stype.columns)
        return entry
    if stype.kind is Kind.DICT and stype.keys is not None:
        return {"type": "dict", "keys": list(stype.keys)}
    return {"type": render_semantic_type(stype)}


def _render_rules(param: ParameterDefinition) -> dict[str, Any]:
    rendered: dict[str, Any] = {}
    by_name = {rule.rule: rule for rule in param.rules}
    for name in _RULE_ORDER:
        if name in by_name:
            payload = by_name[name].payload
            rendered[name] = list(payload) if isinstance(payload, tuple) else payload
    return rendered


def _render_tool_parameter(param: ParameterDefinition) -> dict[str, Any]:
    entry: dict[str, Any] = {
        "name": param.name,
        "type": _render_type_text(param.type),
        "description": param.description,
        "required": param.required,
    }
    if param.has_default:
        entry["default"] = param.default
    allowed = param.allowed_values
    if allowed is not None:
        entry["allowed_values"] = list(allowed)
    if param.examples is not None:
        entry["examples"] = list(param.examples)
    return entry


def _render_workflow_parameter(param: ParameterDefinition) -> dict[str, Any]:
    entry: dict[str, Any] = {
        "type": _render_type_text(param.type),
        "required": param.required,
        "description": param.description,
    }
    if param.has_default:
        entry["default"] = param.default
    rules = _render_rules(param)
    if rules:
        entry["validation_rules"] = rules
    if param.examples is not None:
        entry["examples"] = list(param.examples)
    return entry


def render_tool_document(tool: ToolDefinition) -> dict[str, Any]:
    """Canonical document form of a tool definition."""
    return {
        "id": tool.id,
        "name": tool.name,
        "description": tool.description,
        "version": tool.version,
        "parameters": [_render_tool_parameter(p) for p in tool.parameters],
        "input_schema": {name: _render_type_object(t) for name, t in tool.io.inputs.items()},
        "output_schema": {name: _render_type_object(t) for name, t in tool.io.outputs.items()},
        "dependencies": list(tool.dependencies),
        "domain_tags": list(tool.domain_tags),
        "provenance": {"origin": tool.provenance.get("origin", ""), "maintainer": tool.provenance.get("maintainer", "")},
        "estimated_duration": tool.estimated_duration,
        "requires_network": tool.requires_network,
    }


def render_workflow_document(workflow: WorkflowDefinition) -> dict[str, Any]:
    """Canonical document form of a workflow definition."""
    steps = [
        {
            "step_id": s.step_id,
            "tool_id": s.tool_id,
            "name": s.name,
            "description": s.description,
            "parameters": dict(s.parameters),
            "dependencies": list(s.dependencies),
            "estimated_duration": s.estimated_duration,
        }
        for s in workflow.steps
    ]
    mappings = [
        {
            "from_step": m.from_step,
            "from_parameter": m.from_parameter,
            "to_step": m.to_step,
            "to_parameter": m.to_parameter,
            "description": m.description,
        }
        for m in workflow.parameter_mappings
    ]
    edges = [
        {
            "edge_id": e.edge_id,
            "source_node_id": e.source_node_id,
            "target_node_id": e.target_node_id,
            "source_output": e.source_output,
            "target_input": e.target_input,
        }
        for e in workflow.edges
    ]
    metadata = {key: workflow.metadata[key] for key in _METADATA_FIELDS if key in workflow.metadata}
    return {
        "workflow_id": workflow.workflow_id,
        "name": workflow.name,
        "description": workflow.description,
        "version": workflow.version,
        "steps": steps,
        "parameter_mappings": mappings,
        "edges": edges,
        "parameters": {name: _render_workflow_parameter(p) for name, p in workflow.parameters.items()},
        "metadata": metadata,
    }
