"""Asynchronous DAG execution with provenance capture.

Steps whose dependencies are all satisfied run concurrently; the per-run
event stream is the serialisation witness.  A step failure marks every step
reachable from it as skipped and the run as failed.  The executor accepts
work exclusively from the gate: submissions must arrive in state
``dispatched``.
"""

from __future__ import annotations

import platform
import socket
import threading
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from typing import Any, Mapping

import schemagate
from schemagate.adapters import AdapterRegistry
from schemagate.errors import AdapterMissing, ExecutorUnavailable, GateStateError, NotFound
from schemagate.ids import Clock, IdSource
from schemagate.runs import EnvironmentMetadata, RunRecord, RunStore, StepResult
from schemagate.schema.defs import StepDefinition, ToolDefinition, WorkflowDefinition
from schemagate.schema.values import check_literal_type
from schemagate.schema.types import render_semantic_type


class Executor:
    """Runs validated workflow DAGs and records provenance for each run."""

    def __init__(
        self,
        store: RunStore,
        adapters: AdapterRegistry,
        tool_resolver,
        clock: Clock | None = None,
        ids: IdSource | None = None,
        seed: int | None = 0,
        max_workers: int = 4,
    ):
        self.store = store
        self.adapters = adapters
        self._tools = tool_resolver
        self._clock = clock or Clock()
        self._ids = ids or IdSource()
        self._seed = seed
        self._pool = ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="schemagate-run")
        self._step_workers = max_workers
        self._records: dict[str, RunRecord] = {}
        self._events: dict[str, list[dict]] = {}
        self._conditions: dict[str, threading.Condition] = {}
        self._futures: dict[str, Future] = {}
        self._aborted: set[str] = set()
        self._lock = threading.Lock()
        self.submission_count = 0

    # -- submission ---------------------------------------------------------

    def execute(
        self,
        invocation_document: Mapping[str, Any],
        workflow: WorkflowDefinition,
        snapshot_document: Mapping[str, Any],
        snapshot_hash: str,
        *,
        synchronous: bool = False,
    ) -> str:
        """Accept a dispatched invocation and start executing it.

        The record is populated asynchronously; ``wait`` blocks until the
        terminal status if needed.
        """
        if invocation_document.get("state") != "dispatched":
            raise GateStateError("the executor only accepts invocations in state 'dispatched'")
        for step in workflow.steps:
            if not self.adapters.has(step.tool_id):
                raise AdapterMissing(f"no adapter registered for tool {step.tool_id!r}")

        resolved = self._resolve_parameters(workflow, invocation_document.get("parameters", {}))
        run_id = self._ids.uuid()
        record = RunRecord(
            run_id=run_id,
            invocation=dict(invocation_document),
            workflow_snapshot_document=dict(snapshot_document),
            workflow_snapshot_hash=snapshot_hash,
            resolved_parameters=resolved,
            started_at=self._clock.stamp(),
            environment=self._environment(workflow),
            status="running",
            steps=[StepResult(step_id=step.step_id) for step in workflow.steps],
        )
        with self._lock:
            self.submission_count += 1
            self._records[run_id] = record
            self._events[run_id] = []
            self._conditions[run_id] = threading.Condition()
        self.store.save(record)
        self._emit(run_id, None, "run_started")
        if synchronous:
            self._run_workflow(run_id, workflow)
        else:
            try:
                self._futures[run_id] = self._pool.submit(self._run_workflow, run_id, workflow)
            except RuntimeError as exc:  # pool shut down
                raise ExecutorUnavailable(f"executor is not accepting work: {exc}") from exc
        return run_id

    @staticmethod
    def _resolve_parameters(workflow: WorkflowDefinition, supplied: Mapping[str, Any]) -> dict:
        resolved: dict[str, Any] = {}
        for name, param in workflow.parameters.items():
            if name in supplied:
                resolved[name] = supplied[name]
            elif param.has_default:
                resolved[name] = param.default
        for name, value in supplied.items():
            resolved.setdefault(name, value)
        return resolved

    def _environment(self, workflow: WorkflowDefinition) -> EnvironmentMetadata:
        used = sorted({step.tool_id for step in workflow.steps})
        versions = {tool_id: self.adapters.resolve(tool_id).version for tool_id in used}
        return EnvironmentMetadata(
            engine_version=schemagate.__version__,
            os=platform.platform(),
            hostname=socket.gethostname(),
            tool_adapter_versions=versions,
            seed=self._seed,
        )

    # -- events --------------------------------------------------------------

    def _emit(self, run_id: str, step_id: str | None, event: str) -> None:
        condition = self._conditions[run_id]
        with condition:
            self._events[run_id].append(
                {"run_id": run_id, "step_id": step_id, "event": event, "timestamp": self._clock.stamp()}
            )
            condition.notify_all()

    def events(self, run_id: str, start: int = 0) -> list[dict]:
        if run_id not in self._events:
            raise NotFound(f"no run {run_id!r}")
        with self._conditions[run_id]:
            return list(self._events[run_id][start:])

    def wait_for_event(self, run_id: str, start: int, timeout: float = 10.0) -> list[dict]:
        """Block until events beyond ``start`` exist or the run is terminal."""
        if run_id not in self._events:
            raise NotFound(f"no run {run_id!r}")
        condition = self._conditions[run_id]
        with condition:
            condition.wait_for(
                lambda: len(self._events[run_id]) > start or self._is_terminal(run_id),
                timeout=timeout,
            )
            return list(self._events[run_id][start:])

    def _is_terminal(self, run_id: str) -> bool:
        record = self._records.get(run_id)
        return record is not None and record.status in ("succeeded", "failed", "aborted")

    # -- queries --------------------------------------------------------------

    def run_status(self, run_id: str) -> dict:
        """Current status snapshot with per-step statuses."""
        record = self._records.get(run_id)
        if record is None:
            document = self.store.load(run_id)  # NotFound propagates
            return {
                "run_id": run_id,
                "status": document["status"],
                "steps": [{"step_id": s["step_id"], "status": s["status"]} for s in document["steps"]],
            }
        with self._lock:
            return {
                "run_id": run_id,
                "status": record.status,
                "steps": [{"step_id": s.step_id, "status": s.status} for s in record.steps],
            }

    def get_run(self, run_id: str) -> dict:
        """Full provenance document for a run."""
        return self.store.load(run_id)

    def wait(self, run_id: str, timeout: float = 30.0) -> str:
        future = self._futures.get(run_id)
        if future is not None:
            future.result(timeout=timeout)
        record = self._records.get(run_id)
        if record is None:
            return self.store.load(run_id)["status"]
        return record.status

    def abort(self, run_id: str) -> None:
        if run_id not in self._records:
            raise NotFound(f"no run {run_id!r}")
        self._aborted.add(run_id)

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)

    # -- execution -----------------------------------------------------------

    def _run_workflow(self, run_id: str, workflow: WorkflowDefinition) -> None:
        record = self._records[run_id]
        successors, predecessors = _flow_graph(workflow)
        outputs: dict[str, dict[str, Any]] = {}
        done: set[str] = set()
        failed: list[str] = []
        pending = {step.step_id for step in workflow.steps}
        pool = ThreadPoolExecutor(max_workers=self._step_workers, thread_name_prefix=f"run-{run_id[:8]}")

        def reachable(origin: str) -> set[str]:
            seen: set[str] = set()
            frontier = [origin]
            while frontier:
                node = frontier.pop()
                for succ in successors.get(node, ()):
                    if succ not in seen:
                        seen.add(succ)
                        frontier.append(succ)
            return seen

        try:
            while pending:
                if run_id in self._aborted:
                    for step_id in sorted(pending):
                        self._mark_skipped(record, step_id, run_id)
                    pending.clear()
                    break
                blocked = set()
                for origin in failed:
                    blocked |= reachable(origin)
                newly_blocked = sorted(pending & blocked)
                for step_id in newly_blocked:
                    self._mark_skipped(record, step_id, run_id)
                    pending.discard(step_id)
                ready = sorted(
                    step_id
                    for step_id in pending
                    if all(dep in done for dep in predecessors[step_id])
                )
                if not ready:
                    if pending:
                        # Remaining steps depend on failed/skipped work.
                        for step_id in sorted(pending):
                            self._mark_skipped(record, step_id, run_id)
                        pending.clear()
                    break
                futures = {
                    pool.submit(self._run_step, run_id, workflow, step_id, outputs): step_id
                    for step_id in ready
                }
                remaining = set(futures)
                while remaining:
                    finished, remaining = wait(remaining, return_when=FIRST_COMPLETED)
                    for future in finished:
                        step_id = futures[future]
                        ok, step_outputs = future.result()
                        pending.discard(step_id)
                        if ok:
                            outputs[step_id] = step_outputs
                            done.add(step_id)
                        else:
                            failed.append(step_id)
        finally:
            pool.shutdown(wait=True)

        if run_id in self._aborted:
            terminal = "aborted"
        elif failed:
            terminal = "failed"
        else:
            terminal = "succeeded"
        # status flip and the closing event must be one atomic observation:
        # a reader that sees a terminal status must also find run_finished
        condition = self._conditions[run_id]
        with condition:
            with self._lock:
                record.status = terminal
                record.finished_at = self._clock.stamp()
            self._events[run_id].append(
                {"run_id": run_id, "step_id": None, "event": "run_finished", "timestamp": record.finished_at}
            )
            condition.notify_all()
        self.store.save(record)

    def _mark_skipped(self, record: RunRecord, step_id: str, run_id: str) -> None:
        result = record.step(step_id)
        with self._lock:
            result.status = "skipped"
        self._emit(run_id, step_id, "skipped")

    def _run_step(
        self,
        run_id: str,
        workflow: WorkflowDefinition,
        step_id: str,
        outputs: dict[str, dict[str, Any]],
    ) -> tuple[bool, dict[str, Any]]:
        record = self._records[run_id]
        step = workflow.step(step_id)
        assert step is not None
        result = record.step(step_id)
        with self._lock:
            result.status = "running"
            result.started_at = self._clock.stamp()
        self._emit(run_id, step_id, "started")
        try:
            tool = self._tools.resolve_tool(step.tool_id)
            adapter = self.adapters.resolve(step.tool_id)
            inputs, parameters = _bind_step(workflow, step, tool, record.resolved_parameters, outputs)
            step_outputs = adapter.run(inputs, parameters)
            _check_outputs(tool, step_outputs)
        except Exception as exc:  # adapter panic or contract breach: captured, run fails
            with self._lock:
                result.status = "failed"
                result.finished_at = self._clock.stamp()
                if record.failure is None:
                    record.failure = {"step_id": step_id, "message": str(exc)}
            self._emit(run_id, step_id, "finished")
            self.store.save(record)
            return False, {}
        metrics = step_outputs.get("metrics")
        with self._lock:
            result.status = "succeeded"
            result.outputs = dict(step_outputs)
            result.finished_at = self._clock.stamp()
            if isinstance(metrics, Mapping) and metrics and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in metrics.values()
            ):
                result.metrics = dict(metrics)
        self._emit(run_id, step_id, "finished")
        self.store.save(record)
        return True, step_outputs


def _flow_graph(workflow: WorkflowDefinition) -> tuple[dict[str, list[str]], dict[str, set[str]]]:
    successors: dict[str, list[str]] = {s.step_id: [] for s in workflow.steps}
    predecessors: dict[str, set[str]] = {s.step_id: set() for s in workflow.steps}
    for step in workflow.steps:
        for dep in step.dependencies:
            if dep in successors and step.step_id not in successors[dep]:
                successors[dep].append(step.step_id)
            predecessors[step.step_id].add(dep)
    for edge in workflow.edges:
        if edge.source_node_id in successors and edge.target_node_id in predecessors:
            if edge.target_node_id not in successors[edge.source_node_id]:
                successors[edge.source_node_id].append(edge.target_node_id)
            predecessors[edge.target_node_id].add(edge.source_node_id)
    return successors, predecessors


def _bind_step(
    workflow: WorkflowDefinition,
    step: StepDefinition,
    tool: ToolDefinition,
    resolved_workflow_params: Mapping[str, Any],
    outputs: Mapping[str, Mapping[str, Any]],
) -> tuple[dict[str, Any], dict[str, Any]]:
    """Assemble a step's input slots and parameter map.

    Input slots take mapped values first.  Tool parameters take the resolved
    workflow-level parameter when one is declared under the same name (it is
    the user-facing knob; the step literal is its inline record), then the
    step literal, then the tool default.
    """
    inputs: dict[str, Any] = {}
    for mapping in workflow.parameter_mappings:
        if mapping.to_step == step.step_id:
            source = outputs.get(mapping.from_step, {})
            if mapping.from_parameter in source:
                inputs[mapping.to_parameter] = source[mapping.from_parameter]
    for slot in tool.io.inputs:
        if slot in inputs:
            continue
        if slot in step.parameters:
            inputs[slot] = step.parameters[slot]
        elif slot in resolved_workflow_params:
            inputs[slot] = resolved_workflow_params[slot]

    parameters: dict[str, Any] = {}
    for param in tool.parameters:
        if param.name in resolved_workflow_params and param.name in workflow.parameters:
            parameters[param.name] = resolved_workflow_params[param.name]
        elif param.name in step.parameters:
            parameters[param.name] = step.parameters[param.name]
        elif param.has_default:
            parameters[param.name] = param.default
    return inputs, parameters


def _check_outputs(tool: ToolDefinition, outputs: Mapping[str, Any]) -> None:
    declared = tool.io.outputs
    for name, value in outputs.items():
        if name not in declared:
            raise ValueError(f"adapter for {tool.id!r} returned undeclared output {name!r}")
        if not check_literal_type(value, declared[name]):
            raise ValueError(
                f"adapter for {tool.id!r} returned output {name!r} that is not a "
                f"{render_semantic_type(declared[name])}"
            )
