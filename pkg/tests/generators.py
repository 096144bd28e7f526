"""Seeded random generators for valid tool and workflow documents."""

from __future__ import annotations

import random
from typing import Any

_WORDS = (
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
    "iota", "kappa", "lambda_", "mu", "nu", "xi", "omicron", "pi", "rho",
    "sigma", "tau", "upsilon",
)
_COLUMNS = ("yield_strength", "creep_life", "hardness", "density", "composition", "elongation")
_TEXT_TYPES = ("string", "integer", "number", "boolean", "list[str]", "list[int]")


def _identifier(rng: random.Random, prefix: str) -> str:
    return f"{prefix}_{rng.choice(_WORDS)}_{rng.randrange(1000)}"


def _version(rng: random.Random) -> str:
    return f"{rng.randrange(10)}.{rng.randrange(10)}.{rng.randrange(10)}"


def _literal_of(rng: random.Random, type_text: str) -> Any:
    if type_text == "string":
        return rng.choice(_WORDS)
    if type_text == "integer":
        return rng.randrange(100)
    if type_text == "number":
        return round(rng.uniform(0, 10), 3)
    if type_text == "boolean":
        return rng.random() < 0.5
    if type_text == "list[str]":
        return [rng.choice(_WORDS) for _ in range(rng.randrange(1, 4))]
    if type_text == "list[int]":
        return [rng.randrange(50) for _ in range(rng.randrange(1, 4))]
    raise AssertionError(type_text)


def _io_type(rng: random.Random) -> dict:
    roll = rng.random()
    if roll < 0.3:
        return {"type": "dataframe", "columns": "dynamic"}
    if roll < 0.45:
        columns = rng.sample(_COLUMNS, rng.randrange(1, 4))
        return {"type": "dataframe", "columns": sorted(columns)}
    if roll < 0.6:
        return {"type": "dict", "keys": sorted(rng.sample(_COLUMNS, rng.randrange(1, 3)))}
    return {"type": rng.choice(_TEXT_TYPES)}


def random_parameter(rng: random.Random) -> dict:
    type_text = rng.choice(_TEXT_TYPES)
    required = rng.random() < 0.5
    param: dict[str, Any] = {
        "name": _identifier(rng, "param"),
        "type": type_text,
        "description": f"generated parameter of type {type_text}",
        "required": required,
    }
    if required:
        param["examples"] = [_literal_of(rng, type_text)]
    else:
        if type_text in ("string", "integer") and rng.random() < 0.5:
            pool = {_literal_of(rng, type_text) for _ in range(4)}
            allowed = sorted(pool, key=str)
            param["allowed_values"] = allowed
            if rng.random() < 0.7:
                param["default"] = rng.choice(allowed)
        elif rng.random() < 0.5:
            param["default"] = _literal_of(rng, type_text)
    return param


def random_tool_document(rng: random.Random) -> dict:
    tool_id = _identifier(rng, "tool")
    parameters = [random_parameter(rng) for _ in range(rng.randrange(0, 4))]
    seen: set[str] = set()
    parameters = [p for p in parameters if not (p["name"] in seen or seen.add(p["name"]))]
    return {
        "id": tool_id,
        "name": tool_id.replace("_", " ").title(),
        "description": f"generated tool {tool_id}",
        "version": _version(rng),
        "parameters": parameters,
        "input_schema": {_identifier(rng, "in"): _io_type(rng) for _ in range(rng.randrange(0, 3))},
        "output_schema": {_identifier(rng, "out"): _io_type(rng) for _ in range(rng.randrange(0, 3))},
        "dependencies": sorted({_identifier(rng, "dep") for _ in range(rng.randrange(0, 3))}),
        "domain_tags": [rng.choice(_WORDS) for _ in range(rng.randrange(0, 3))],
        "provenance": {"origin": rng.choice(_WORDS), "maintainer": f"{rng.choice(_WORDS)}@example.org"},
        "estimated_duration": round(rng.uniform(0, 30), 1),
        "requires_network": rng.random() < 0.5,
    }


def random_workflow_parameter(rng: random.Random) -> dict:
    type_text = rng.choice(_TEXT_TYPES)
    required = rng.random() < 0.5
    entry: dict[str, Any] = {
        "type": type_text,
        "required": required,
        "description": f"generated workflow parameter of type {type_text}",
    }
    rules: dict[str, Any] = {}
    if rng.random() < 0.4:
        rules["not_empty"] = True
    if type_text in ("integer", "number") and rng.random() < 0.4:
        rules["min"] = 0
        rules["max"] = 1000
    if type_text == "string" and rng.random() < 0.4:
        allowed = sorted({rng.choice(_WORDS) for _ in range(3)})
        rules["allowed_values"] = allowed
        if not required:
            entry["default"] = rng.choice(allowed)
    elif not required and rng.random() < 0.5:
        entry["default"] = _literal_of(rng, type_text)
    if rules:
        entry["validation_rules"] = rules
    return entry


def random_workflow_document(rng: random.Random) -> dict:
    workflow_id = _identifier(rng, "wf")
    step_count = rng.randrange(1, 5)
    steps = []
    for i in range(step_count):
        deps = [steps[j]["step_id"] for j in range(i) if rng.random() < 0.4]
        steps.append(
            {
                "step_id": f"step_{i}",
                "tool_id": _identifier(rng, "tool"),
                "name": f"Step {i}",
                "description": f"generated step {i}",
                "parameters": {_identifier(rng, "p"): rng.randrange(10) for _ in range(rng.randrange(0, 3))},
                "dependencies": deps,
                "estimated_duration": float(rng.randrange(0, 10)),
            }
        )
    mappings = []
    edges = []
    for i, step in enumerate(steps):
        for dep in step["dependencies"]:
            if rng.random() < 0.7:
                edges.append(
                    {
                        "edge_id": f"edge_{dep}_{step['step_id']}",
                        "source_node_id": dep,
                        "target_node_id": step["step_id"],
                        "source_output": "data",
                        "target_input": "data",
                    }
                )
            if rng.random() < 0.5:
                mappings.append(
                    {
                        "from_step": dep,
                        "from_parameter": "data",
                        "to_step": step["step_id"],
                        "to_parameter": "data",
                        "description": f"flow from {dep}",
                    }
                )
    document = {
        "workflow_id": workflow_id,
        "name": workflow_id.replace("_", " ").title(),
        "description": f"generated workflow {workflow_id}",
        "version": _version(rng),
        "steps": steps,
        "parameter_mappings": mappings,
        "edges": edges,
        "parameters": {_identifier(rng, "wp"): random_workflow_parameter(rng) for _ in range(rng.randrange(0, 4))},
        "metadata": {
            "complexity": rng.choice(["simple", "moderate", "advanced"]),
            "estimated_duration_minutes": rng.randrange(1, 120),
            "tags": [rng.choice(_WORDS) for _ in range(rng.randrange(0, 4))],
            "categories": [rng.choice(_WORDS)],
            "use_cases": [f"use case {rng.randrange(100)}"],
        },
    }
    if rng.random() < 0.2:
        del document["version"]
    return document
