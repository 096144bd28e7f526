"""Platform actions: the closed, schema-validated set of planner operations.

The argument schemas are fixed documents shipped with the engine; the
planner cannot invent actions, and a proposal only reaches execution after
its arguments validate here.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Any, Mapping

from schemagate import checks
from schemagate.schema.defs import Diagnostic, ParameterDefinition, error
from schemagate.schema.documents import try_parse_workflow_definition

PLATFORM_ACTIONS = ("search_workflows", "get_parameters", "list_datasets", "execute_workflow")


def _load_schemas() -> dict[str, dict[str, ParameterDefinition]]:
    raw = json.loads(resources.files("schemagate.data").joinpath("platform_actions.json").read_text("utf-8"))
    schemas: dict[str, dict[str, ParameterDefinition]] = {}
    for action, parameters in raw.items():
        # Wrap each parameter block in a minimal workflow document so the
        # one document parser owns all parameter-schema parsing.
        shell = {
            "workflow_id": "platform_action",
            "name": action,
            "description": f"argument schema for {action}",
            "steps": [
                {"step_id": "noop", "tool_id": "noop", "name": "", "description": ""}
            ],
            "parameters": parameters,
        }
        workflow, diagnostics = try_parse_workflow_definition(shell)
        if workflow is None:  # pragma: no cover - shipped schema must parse
            raise RuntimeError(f"invalid platform action schema {action}: {diagnostics}")
        schemas[action] = dict(workflow.parameters)
    return schemas


_SCHEMAS = _load_schemas()


def action_schema(action: str) -> dict[str, ParameterDefinition] | None:
    return _SCHEMAS.get(action)


def validate_action_arguments(action: str, arguments: Mapping[str, Any]) -> list[Diagnostic]:
    """Check a proposal against its argument schema; unknown actions are errors."""
    from schemagate.schema.values import validate_value

    schema = _SCHEMAS.get(action)
    if schema is None:
        return [error(checks.UNKNOWN_FIELD, "action", f"unknown platform action {action!r}")]
    diagnostics: list[Diagnostic] = []
    for name in arguments:
        if name not in schema:
            diagnostics.append(error(checks.UNKNOWN_FIELD, name, f"{action} takes no argument {name!r}"))
    for name, param in schema.items():
        if name not in arguments:
            if param.required:
                diagnostics.append(error(checks.REQUIRED, name, f"{action} requires {name!r}"))
            continue
        diagnostics.extend(validate_value(arguments[name], param))
    return diagnostics
