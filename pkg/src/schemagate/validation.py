"""Composed-workflow validation: the gate extended from single calls to DAGs.

Five checks run over every workflow: acyclicity, edge type compatibility,
parameter resolution, tool availability, and mapping consistency.  A workflow
is valid iff no check produced an error-severity diagnostic.  All functions
here are pure over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol

from schemagate import checks
from schemagate.errors import CyclicDependencies, NotFound, Retired
from schemagate.schema.defs import Diagnostic, ToolDefinition, WorkflowDefinition, error
from schemagate.schema.documents import canonical_json
from schemagate.schema.types import missing_columns, render_semantic_type, types_compatible


class ToolResolver(Protocol):
    def resolve_tool(self, tool_id: str, requirement: str = "latest") -> ToolDefinition: ...


@dataclass(frozen=True)
class CheckResult:
    check: str
    diagnostics: tuple[Diagnostic, ...]

    def to_document(self) -> dict:
        return {"check": self.check, "diagnostics": [d.to_document() for d in self.diagnostics]}


@dataclass(frozen=True)
class ValidationReport:
    """Aggregated outcome of the five composed-workflow checks."""

    workflow_id: str
    checks: tuple[CheckResult, ...]
    valid: bool

    def errors(self) -> list[Diagnostic]:
        return [d for c in self.checks for d in c.diagnostics if d.severity == "error"]

    def check(self, name: str) -> CheckResult:
        for result in self.checks:
            if result.check == name:
                return result
        raise KeyError(name)

    def to_document(self) -> dict:
        return {
            "workflow_id": self.workflow_id,
            "checks": [c.to_document() for c in self.checks],
            "valid": self.valid,
        }

    def render_text(self) -> str:
        """Human-readable table, one row per check."""
        lines = [f"workflow {self.workflow_id}: {'valid' if self.valid else 'INVALID'}"]
        for result in self.checks:
            errors = [d for d in result.diagnostics if d.severity == "error"]
            status = "pass" if not errors else f"fail ({len(errors)} error{'s' if len(errors) != 1 else ''})"
            lines.append(f"  {result.check:<24} {status}")
            for diagnostic in result.diagnostics:
                lines.append(f"      {diagnostic.severity}: {diagnostic.location}: {diagnostic.message}")
        return "\n".join(lines)


@dataclass(frozen=True)
class DependencyGraph:
    """Acyclic tool dependency graph; arcs point dependency -> dependent."""

    nodes: frozenset[str]
    arcs: frozenset[tuple[str, str]]

    def __post_init__(self) -> None:
        for source, target in self.arcs:
            if source not in self.nodes or target not in self.nodes:
                raise ValueError(f"arc ({source}, {target}) references a non-member node")
        cycle = _find_cycle(sorted(self.nodes), {n: sorted(t for s, t in self.arcs if s == n) for n in self.nodes})
        if cycle:
            raise CyclicDependencies(cycle)


def _find_cycle(nodes: list[str], successors: Mapping[str, list[str]]) -> list[str] | None:
    """First cycle found by DFS in the given node order, or None."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {node: WHITE for node in nodes}
    stack: list[str] = []

    def visit(node: str) -> list[str] | None:
        colour[node] = GREY
        stack.append(node)
        for succ in successors.get(node, ()):
            if succ not in colour:
                continue
            if colour[succ] == GREY:
                return stack[stack.index(succ):] if succ in stack else [succ]
            if colour[succ] == WHITE:
                found = visit(succ)
                if found:
                    return found
        stack.pop()
        colour[node] = BLACK
        return None

    for node in nodes:
        if colour[node] == WHITE:
            found = visit(node)
            if found:
                return found
    return None


def _flow_arcs(workflow: WorkflowDefinition) -> dict[str, list[str]]:
    """Successor lists from the union of step dependencies and edges."""
    step_ids = [s.step_id for s in workflow.steps]
    known = set(step_ids)
    successors: dict[str, list[str]] = {step_id: [] for step_id in step_ids}
    for step in workflow.steps:
        for dep in step.dependencies:
            if dep in known and step.step_id not in successors[dep]:
                successors[dep].append(step.step_id)
    for edge in workflow.edges:
        if edge.source_node_id in known and edge.target_node_id in known:
            if edge.target_node_id not in successors[edge.source_node_id]:
                successors[edge.source_node_id].append(edge.target_node_id)
    return successors


def check_acyclicity(workflow: WorkflowDefinition) -> list[Diagnostic]:
    """Empty iff step dependencies plus edges form a DAG.

    Each back edge discovered by DFS (steps visited in definition order)
    yields one diagnostic listing the cycle's step ids in discovery order.
    """
    successors = _flow_arcs(workflow)
    order = [s.step_id for s in workflow.steps]
    diagnostics: list[Diagnostic] = []

    WHITE, GREY, BLACK = 0, 1, 2
    colour = {node: WHITE for node in order}
    stack: list[str] = []

    def visit(node: str) -> None:
        colour[node] = GREY
        stack.append(node)
        for succ in successors.get(node, ()):
            if colour[succ] == GREY:
                cycle = stack[stack.index(succ):]
                diagnostics.append(
                    error(
                        checks.ACYCLICITY,
                        "steps",
                        "cycle detected: " + " -> ".join(cycle + [succ]),
                    )
                )
            elif colour[succ] == WHITE:
                visit(succ)
        stack.pop()
        colour[node] = BLACK

    for node in order:
        if colour[node] == WHITE:
            visit(node)
    return diagnostics


def _resolvable_tools(workflow: WorkflowDefinition, registry: ToolResolver) -> dict[str, ToolDefinition]:
    tools: dict[str, ToolDefinition] = {}
    for step in workflow.steps:
        if step.tool_id in tools:
            continue
        try:
            tools[step.tool_id] = registry.resolve_tool(step.tool_id)
        except (NotFound, Retired):
            continue
    return tools


def check_edge_types(workflow: WorkflowDefinition, registry: ToolResolver) -> list[Diagnostic]:
    """Type-check every dataflow: edge and mapping endpoints must be compatible."""
    tools = _resolvable_tools(workflow, registry)
    diagnostics: list[Diagnostic] = []

    def tool_for(step_id: str) -> ToolDefinition | None:
        step = workflow.step(step_id)
        if step is None:
            return None
        return tools.get(step.tool_id)

    def check_flow(source_step: str, output: str, target_step: str, input_: str, location: str, label: str) -> None:
        source_tool = tool_for(source_step)
        target_tool = tool_for(target_step)
        if source_tool is None or target_tool is None:
            return  # tool_availability reports unresolvable tools
        source_type = source_tool.io.outputs.get(output)
        target_type = target_tool.io.inputs.get(input_)
        if source_type is None or target_type is None:
            return  # mapping_consistency reports unknown contract slots
        if not types_compatible(source_type, target_type):
            missing = missing_columns(source_type, target_type)
            detail = ""
            if missing:
                detail = "; missing columns: " + ", ".join(sorted(missing))
            diagnostics.append(
                error(
                    checks.EDGE_TYPE_COMPATIBILITY,
                    location,
                    f"{label}: output {output!r} ({render_semantic_type(source_type)}) cannot flow into "
                    f"input {input_!r} ({render_semantic_type(target_type)}){detail}",
                )
            )

    for i, edge in enumerate(workflow.edges):
        check_flow(
            edge.source_node_id,
            edge.source_output,
            edge.target_node_id,
            edge.target_input,
            f"edges[{i}]",
            f"edge {edge.edge_id}",
        )
    for i, mapping in enumerate(workflow.parameter_mappings):
        check_flow(
            mapping.from_step,
            mapping.from_parameter,
            mapping.to_step,
            mapping.to_parameter,
            f"parameter_mappings[{i}]",
            f"mapping {mapping.from_step}->{mapping.to_step}",
        )
    return diagnostics


def check_parameter_resolution(workflow: WorkflowDefinition, registry: ToolResolver) -> list[Diagnostic]:
    """Every required tool parameter and input slot must be bound exactly once.

    Binding sources are step-local literals, incoming parameter mappings, and
    workflow-level parameters matched by name.  A step literal and a
    same-named workflow-level parameter count as one conversation-supplied
    source (the literal is the inline record of the parameter's value), so
    over-binding means literal-or-parameter plus a mapping, or two mappings.
    """
    tools = _resolvable_tools(workflow, registry)
    diagnostics: list[Diagnostic] = []
    workflow_params = set(workflow.parameters.keys())

    for i, step in enumerate(workflow.steps):
        tool = tools.get(step.tool_id)
        if tool is None:
            continue
        incoming: dict[str, int] = {}
        for mapping in workflow.parameter_mappings:
            if mapping.to_step == step.step_id:
                incoming[mapping.to_parameter] = incoming.get(mapping.to_parameter, 0) + 1

        slots: list[tuple[str, bool]] = [(p.name, p.required) for p in tool.parameters]
        slots.extend((name, True) for name in tool.io.inputs)

        for slot, required in slots:
            sources = []
            if slot in step.parameters:
                sources.append("step literal")
            elif slot in workflow_params:
                sources.append("workflow parameter")
            sources.extend(["mapping"] * incoming.get(slot, 0))

            location = f"steps[{i}].parameters.{slot}"
            if required and not sources:
                diagnostics.append(
                    error(
                        checks.PARAMETER_RESOLUTION,
                        location,
                        f"step {step.step_id!r}: required {slot!r} of tool {tool.id!r} is unbound",
                    )
                )
            elif len(sources) > 1:
                diagnostics.append(
                    error(
                        checks.PARAMETER_RESOLUTION,
                        location,
                        f"step {step.step_id!r}: {slot!r} is bound by more than one source ({', '.join(sources)})",
                    )
                )
    return diagnostics


def check_tool_availability(workflow: WorkflowDefinition, registry: ToolResolver) -> list[Diagnostic]:
    """Every step's tool must resolve to a published registry entry."""
    diagnostics: list[Diagnostic] = []
    for i, step in enumerate(workflow.steps):
        try:
            registry.resolve_tool(step.tool_id)
        except Retired:
            diagnostics.append(
                error(
                    checks.TOOL_AVAILABILITY,
                    f"steps[{i}].tool_id",
                    f"tool {step.tool_id!r} required by step {step.step_id!r} is retired",
                )
            )
        except NotFound:
            diagnostics.append(
                error(
                    checks.TOOL_AVAILABILITY,
                    f"steps[{i}].tool_id",
                    f"tool {step.tool_id!r} required by step {step.step_id!r} is not published",
                )
            )
    return diagnostics


def check_mapping_consistency(workflow: WorkflowDefinition, registry: ToolResolver) -> list[Diagnostic]:
    """Mappings and edges must name real contract slots and declared dependencies."""
    tools = _resolvable_tools(workflow, registry)
    diagnostics: list[Diagnostic] = []

    def contract_of(step_id: str) -> ToolDefinition | None:
        step = workflow.step(step_id)
        return tools.get(step.tool_id) if step else None

    def requires_dependency(source: str, target: str, location: str, label: str) -> None:
        target_step = workflow.step(target)
        if target_step is not None and source not in target_step.dependencies:
            diagnostics.append(
                error(
                    checks.MAPPING_CONSISTENCY,
                    location,
                    f"{label} implies {target!r} depends on {source!r}, "
                    "but the step does not declare that dependency",
                )
            )

    for i, mapping in enumerate(workflow.parameter_mappings):
        prefix = f"parameter_mappings[{i}]"
        from_tool = contract_of(mapping.from_step)
        to_tool = contract_of(mapping.to_step)
        if from_tool is not None and mapping.from_parameter not in from_tool.io.outputs:
            diagnostics.append(
                error(
                    checks.MAPPING_CONSISTENCY,
                    f"{prefix}.from_parameter",
                    f"tool {from_tool.id!r} declares no output {mapping.from_parameter!r}",
                )
            )
        if to_tool is not None and mapping.to_parameter not in to_tool.io.inputs:
            diagnostics.append(
                error(
                    checks.MAPPING_CONSISTENCY,
                    f"{prefix}.to_parameter",
                    f"tool {to_tool.id!r} declares no input {mapping.to_parameter!r}",
                )
            )
        requires_dependency(mapping.from_step, mapping.to_step, prefix, "mapping")

    for i, edge in enumerate(workflow.edges):
        prefix = f"edges[{i}]"
        source_tool = contract_of(edge.source_node_id)
        target_tool = contract_of(edge.target_node_id)
        if source_tool is not None and edge.source_output not in source_tool.io.outputs:
            diagnostics.append(
                error(
                    checks.MAPPING_CONSISTENCY,
                    f"{prefix}.source_output",
                    f"tool {source_tool.id!r} declares no output {edge.source_output!r}",
                )
            )
        if target_tool is not None and edge.target_input not in target_tool.io.inputs:
            diagnostics.append(
                error(
                    checks.MAPPING_CONSISTENCY,
                    f"{prefix}.target_input",
                    f"tool {target_tool.id!r} declares no input {edge.target_input!r}",
                )
            )
        requires_dependency(edge.source_node_id, edge.target_node_id, prefix, f"edge {edge.edge_id!r}")
    return diagnostics


def validate_workflow(workflow: WorkflowDefinition, registry: ToolResolver) -> ValidationReport:
    """Run all five checks and aggregate them into one report."""
    resolution_extra: list[Diagnostic] = []
    if not workflow.steps:
        resolution_extra.append(error(checks.NONEMPTY_STEPS, "steps", "a workflow needs at least one step"))

    results = (
        CheckResult(checks.ACYCLICITY, tuple(check_acyclicity(workflow))),
        CheckResult(checks.EDGE_TYPE_COMPATIBILITY, tuple(check_edge_types(workflow, registry))),
        CheckResult(
            checks.PARAMETER_RESOLUTION,
            tuple(resolution_extra + check_parameter_resolution(workflow, registry)),
        ),
        CheckResult(checks.TOOL_AVAILABILITY, tuple(check_tool_availability(workflow, registry))),
        CheckResult(checks.MAPPING_CONSISTENCY, tuple(check_mapping_consistency(workflow, registry))),
    )
    valid = not any(d.severity == "error" for result in results for d in result.diagnostics)
    return ValidationReport(workflow_id=workflow.workflow_id, checks=results, valid=valid)


def dependency_graph(target_tool: str, registry: ToolResolver) -> DependencyGraph:
    """Transitive dependency closure of a tool, as an explicit acyclic graph."""
    nodes: set[str] = set()
    arcs: set[tuple[str, str]] = set()
    pending = [target_tool]
    trail: dict[str, str] = {}
    while pending:
        tool_id = pending.pop()
        if tool_id in nodes:
            continue
        tool = registry.resolve_tool(tool_id)  # NotFound propagates
        nodes.add(tool_id)
        for dep in tool.dependencies:
            arcs.add((dep, tool_id))
            if dep not in nodes:
                trail[dep] = tool_id
                pending.append(dep)
    return DependencyGraph(nodes=frozenset(nodes), arcs=frozenset(arcs))


def suggest_composition(target_tool: str, registry: ToolResolver) -> list[str]:
    """Topological order of the target's dependency closure, ending at the target.

    Deterministic Kahn traversal with a sorted frontier, i.e. the
    lexicographically smallest valid order.
    """
    graph = dependency_graph(target_tool, registry)  # raises CyclicDependencies on a cycle
    indegree = {node: 0 for node in graph.nodes}
    successors: dict[str, list[str]] = {node: [] for node in graph.nodes}
    for source, target in graph.arcs:
        indegree[target] += 1
        successors[source].append(target)

    frontier = sorted(node for node, degree in indegree.items() if degree == 0)
    order: list[str] = []
    while frontier:
        node = frontier.pop(0)
        order.append(node)
        for succ in sorted(successors[node]):
            indegree[succ] -= 1
            if indegree[succ] == 0:
                frontier.append(succ)
        frontier.sort()
    return order


def report_digest(report: ValidationReport) -> str:
    """Canonical rendering of a report, for byte-level determinism checks."""
    return canonical_json(report.to_document())
