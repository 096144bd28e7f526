"""Run provenance records and their append-only store.

Layout: ``<root>/runs/<run_id>.json`` plus ``<root>/runs/index.json``.  Every
record carries the workflow snapshot, resolved parameters, timestamps, and
environment metadata; records are persisted at each status transition so a
reader always sees a consistent snapshot.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from schemagate.errors import NotFound, StorageError
from schemagate.schema.documents import canonical_json
from schemagate.tables import Table

ENV_RUN_DIR = "SCHEMAGATE_RUN_DIR"


def render_literal(value: Any) -> Any:
    """Document form of a runtime literal; tables become $table objects."""
    if isinstance(value, Table):
        return value.to_document()
    if isinstance(value, Mapping):
        return {k: render_literal(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [render_literal(v) for v in value]
    return value


@dataclass(frozen=True)
class EnvironmentMetadata:
    engine_version: str
    os: str
    hostname: str
    tool_adapter_versions: Mapping[str, str]
    seed: int | None = None

    def to_document(self) -> dict:
        return {
            "engine_version": self.engine_version,
            "os": self.os,
            "hostname": self.hostname,
            "tool_adapter_versions": dict(self.tool_adapter_versions),
            "seed": self.seed,
        }


@dataclass
class StepResult:
    step_id: str
    # terminal statuses: succeeded | failed | skipped; while the run is live
    # a snapshot may also show pending | running
    status: str = "pending"
    outputs: dict[str, Any] = field(default_factory=dict)
    started_at: str | None = None
    finished_at: str | None = None
    metrics: dict[str, float] | None = None

    def to_document(self) -> dict:
        return {
            "step_id": self.step_id,
            "status": self.status,
            "outputs": render_literal(self.outputs),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "metrics": dict(self.metrics) if self.metrics is not None else None,
        }


@dataclass
class RunRecord:
    """Provenance record for one workflow execution."""

    run_id: str
    invocation: dict
    workflow_snapshot_document: dict
    workflow_snapshot_hash: str
    resolved_parameters: dict
    started_at: str
    environment: EnvironmentMetadata
    status: str = "running"  # running | succeeded | failed | aborted
    finished_at: str | None = None
    steps: list[StepResult] = field(default_factory=list)
    failure: dict | None = None

    def step(self, step_id: str) -> StepResult:
        for result in self.steps:
            if result.step_id == step_id:
                return result
        raise KeyError(step_id)

    def to_document(self) -> dict:
        return {
            "run_id": self.run_id,
            "invocation": self.invocation,
            "workflow_snapshot": {
                "document": self.workflow_snapshot_document,
                "content_hash": self.workflow_snapshot_hash,
            },
            "resolved_parameters": render_literal(self.resolved_parameters),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "environment": self.environment.to_document(),
            "status": self.status,
            "steps": [s.to_document() for s in self.steps],
            "failure": self.failure,
        }


class RunStore:
    """Append-only directory of run documents plus an index."""

    def __init__(self, root: Path | str):
        self.root = Path(root) / "runs"
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @property
    def _index_path(self) -> Path:
        return self.root / "index.json"

    def _read_index(self) -> dict:
        if not self._index_path.exists():
            return {}
        try:
            return json.loads(self._index_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageError(f"run index unreadable: {exc}") from exc

    def save(self, record: RunRecord) -> None:
        document = record.to_document()
        with self._lock:
            path = self.root / f"{record.run_id}.json"
            tmp = path.with_suffix(".json.tmp")
            try:
                tmp.write_text(canonical_json(document), encoding="utf-8")
                tmp.replace(path)
            except OSError as exc:
                raise StorageError(f"cannot persist run {record.run_id}: {exc}") from exc
            index = self._read_index()
            index[record.run_id] = {
                "run_id": record.run_id,
                "workflow_id": document["invocation"].get("workflow_id"),
                "status": record.status,
                "started_at": record.started_at,
                "finished_at": record.finished_at,
            }
            tmp = self._index_path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            tmp.replace(self._index_path)

    def load(self, run_id: str) -> dict:
        path = self.root / f"{run_id}.json"
        if not path.exists():
            raise NotFound(f"no run {run_id!r}")
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageError(f"run document unreadable: {exc}") from exc

    def exists(self, run_id: str) -> bool:
        return (self.root / f"{run_id}.json").exists()

    def count(self) -> int:
        return len(self._read_index())

    def query(
        self,
        workflow_id: str | None = None,
        status: str | None = None,
        since: str | None = None,
    ) -> list[dict]:
        """Run summaries matching every given filter, newest first."""
        summaries = list(self._read_index().values())
        if workflow_id is not None:
            summaries = [s for s in summaries if s["workflow_id"] == workflow_id]
        if status is not None:
            summaries = [s for s in summaries if s["status"] == status]
        if since is not None:
            summaries = [s for s in summaries if s["started_at"] >= since]
        summaries.sort(key=lambda s: (s["started_at"], s["run_id"]), reverse=True)
        return summaries


def compare_runs(store: RunStore, a: str, b: str) -> dict:
    """Diff two runs: resolved parameters, per-step metrics, and snapshots.

    parameter_diff covers the union of parameter keys and lists (a, b) pairs
    that differ; metric_diff covers steps present in both runs and reports
    (a, b, delta) per differing numeric metric.
    """
    doc_a = store.load(a)
    doc_b = store.load(b)

    params_a = doc_a.get("resolved_parameters", {})
    params_b = doc_b.get("resolved_parameters", {})
    parameter_diff = {}
    for key in sorted(set(params_a) | set(params_b)):
        left = params_a.get(key)
        right = params_b.get(key)
        if left != right:
            parameter_diff[key] = {"a": left, "b": right}

    steps_a = {s["step_id"]: s for s in doc_a.get("steps", [])}
    steps_b = {s["step_id"]: s for s in doc_b.get("steps", [])}
    metric_diff: dict[str, dict] = {}
    for step_id in sorted(set(steps_a) & set(steps_b)):
        metrics_a = steps_a[step_id].get("metrics") or {}
        metrics_b = steps_b[step_id].get("metrics") or {}
        entry = {}
        for metric in sorted(set(metrics_a) & set(metrics_b)):
            left = metrics_a[metric]
            right = metrics_b[metric]
            if left != right and isinstance(left, (int, float)) and isinstance(right, (int, float)):
                entry[metric] = {"a": left, "b": right, "delta": right - left}
        if entry:
            metric_diff[step_id] = entry

    same_workflow = (
        doc_a.get("workflow_snapshot", {}).get("content_hash")
        == doc_b.get("workflow_snapshot", {}).get("content_hash")
    )
    return {
        "a": a,
        "b": b,
        "parameter_diff": parameter_diff,
        "metric_diff": metric_diff,
        "same_workflow": same_workflow,
    }
