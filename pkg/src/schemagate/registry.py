"""Versioned stores of admitted tools and workflows.

Layout: ``<root>/tools/<id>/<version>.json``, ``<root>/workflows/<id>/<version>.json``
and a ``manifest.json`` index mapping id -> version -> status/hash.  Published
entries are immutable; admissions serialise through a file lock so concurrent
processes cannot corrupt the manifest.
"""

from __future__ import annotations

import json
import os
import re
import socket
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping
from urllib.parse import urlparse

from filelock import FileLock

from schemagate import checks
from schemagate.errors import DuplicateVersion, NotFound, Retired, StorageError
from schemagate.ids import Clock
from schemagate.schema.defs import Diagnostic, ParameterDefinition, ToolDefinition, Version, WorkflowDefinition
from schemagate.schema.documents import (
    canonical_json,
    content_hash,
    render_tool_document,
    render_workflow_document,
    try_parse_tool_definition,
    try_parse_workflow_definition,
)

ENV_REGISTRY_DIR = "SCHEMAGATE_REGISTRY_DIR"

_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class RegistryEntry:
    """One stored definition with its lifecycle status and content hash."""

    definition: ToolDefinition | WorkflowDefinition
    status: str  # draft | published | retired
    admitted_at: str
    content_hash: str
    document: Mapping[str, Any]


@dataclass(frozen=True)
class CheckOutcome:
    check: str
    outcome: str  # pass | fail
    diagnostics: tuple[Diagnostic, ...] = ()

    def to_document(self) -> dict:
        return {
            "check": self.check,
            "outcome": self.outcome,
            "diagnostics": [d.to_document() for d in self.diagnostics],
        }


@dataclass(frozen=True)
class AdmissionReport:
    """Result of running the admission gate over one candidate."""

    candidate_id: str
    version: str
    checks: tuple[CheckOutcome, ...]
    admitted: bool

    def failed_checks(self) -> list[str]:
        return [c.check for c in self.checks if c.outcome == "fail"]

    def to_document(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "version": self.version,
            "checks": [c.to_document() for c in self.checks],
            "admitted": self.admitted,
        }


@dataclass(frozen=True)
class HealthProbe:
    """How service availability is established for a tool.

    ``declared-stub`` vouches for locally implemented tools; ``endpoint-ping``
    requires a TCP endpoint to accept a connection within the timeout.
    """

    tool_id: str
    mode: str = "declared-stub"
    endpoint: str | None = None
    timeout: int = 1000  # milliseconds

    def __post_init__(self) -> None:
        if self.mode not in ("declared-stub", "endpoint-ping"):
            raise ValueError(f"unknown probe mode {self.mode!r}")
        if (self.endpoint is not None) != (self.mode == "endpoint-ping"):
            raise ValueError("an endpoint is required exactly for endpoint-ping probes")

    def run(self) -> Diagnostic | None:
        if self.mode == "declared-stub":
            return None
        parsed = urlparse(self.endpoint if "//" in str(self.endpoint) else f"tcp://{self.endpoint}")
        host = parsed.hostname or "localhost"
        port = parsed.port or (443 if parsed.scheme == "https" else 80)
        try:
            with socket.create_connection((host, port), timeout=self.timeout / 1000.0):
                return None
        except OSError as exc:
            return Diagnostic(
                "error",
                checks.SERVICE_AVAILABILITY,
                "endpoint",
                f"endpoint {self.endpoint} unreachable: {exc}",
            )


def _tokens(text: str) -> set[str]:
    return set(_TOKEN.findall(text.lower()))


def _doc_of(candidate: ToolDefinition | WorkflowDefinition | Mapping[str, Any]) -> Mapping[str, Any]:
    if isinstance(candidate, ToolDefinition):
        return render_tool_document(candidate)
    if isinstance(candidate, WorkflowDefinition):
        return render_workflow_document(candidate)
    return candidate


class Registry:
    """Persistent, versioned registry of tools and workflows."""

    def __init__(self, root: Path | str | None = None, clock: Clock | None = None):
        if root is None:
            root = os.environ.get(ENV_REGISTRY_DIR)
        if root is None:
            raise StorageError(f"no registry root given and {ENV_REGISTRY_DIR} unset")
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "tools").mkdir(exist_ok=True)
        (self.root / "workflows").mkdir(exist_ok=True)
        self._clock = clock or Clock()
        self._lock = FileLock(str(self.root / ".registry.lock"))
        # read caches; sound because published documents are immutable and
        # the manifest is swapped atomically (validated by mtime+size)
        self._manifest_cache: tuple[tuple[int, int], dict] | None = None
        self._entry_cache: dict[tuple[str, str, str], tuple[str, Any, dict]] = {}

    # -- manifest ----------------------------------------------------------

    @property
    def _manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def _read_manifest(self, fresh: bool = False) -> dict:
        """Read the index; writers pass fresh=True and own their copy."""
        try:
            stat = self._manifest_path.stat()
        except FileNotFoundError:
            return {"tools": {}, "workflows": {}}
        key = (stat.st_mtime_ns, stat.st_size)
        if not fresh and self._manifest_cache is not None and self._manifest_cache[0] == key:
            return self._manifest_cache[1]
        try:
            manifest = json.loads(self._manifest_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageError(f"manifest unreadable: {exc}") from exc
        if not fresh:
            self._manifest_cache = (key, manifest)
        return manifest

    def _write_manifest(self, manifest: dict) -> None:
        tmp = self._manifest_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        tmp.replace(self._manifest_path)
        self._manifest_cache = None

    def _entry_path(self, kind: str, entry_id: str, version: str) -> Path:
        return self.root / kind / entry_id / f"{version}.json"

    def _store(self, kind: str, entry_id: str, version: str, document: Mapping[str, Any], status: str) -> str:
        digest = content_hash(document)
        with self._lock:
            manifest = self._read_manifest(fresh=True)
            versions = manifest.setdefault(kind, {}).setdefault(entry_id, {})
            existing = versions.get(version)
            if existing and existing["status"] != "draft":
                raise DuplicateVersion(f"{kind[:-1]} {entry_id} {version} is already {existing['status']}")
            path = self._entry_path(kind, entry_id, version)
            path.parent.mkdir(parents=True, exist_ok=True)
            try:
                path.write_text(canonical_json(document), encoding="utf-8")
            except OSError as exc:
                raise StorageError(f"cannot write {path}: {exc}") from exc
            versions[version] = {
                "status": status,
                "content_hash": digest,
                "admitted_at": self._clock.stamp(),
            }
            self._write_manifest(manifest)
        return digest

    def _manifest_entry(self, kind: str, entry_id: str, version: str) -> dict:
        manifest = self._read_manifest()
        versions = manifest.get(kind, {}).get(entry_id)
        if not versions or version not in versions:
            raise NotFound(f"no {kind[:-1]} {entry_id!r} version {version!r}")
        return versions[version]

    def _load_entry(self, kind: str, entry_id: str, version: str) -> RegistryEntry:
        meta = self._manifest_entry(kind, entry_id, version)
        cache_key = (kind, entry_id, version)
        cached = self._entry_cache.get(cache_key)
        if cached is not None and cached[0] == meta["content_hash"]:
            _, definition, document = cached
        else:
            path = self._entry_path(kind, entry_id, version)
            try:
                document = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise StorageError(f"stored document unreadable: {path}: {exc}") from exc
            if kind == "tools":
                definition, diagnostics = try_parse_tool_definition(document)
            else:
                definition, diagnostics = try_parse_workflow_definition(document)
            if definition is None:
                raise StorageError(f"stored document invalid: {path}: {[d.message for d in diagnostics]}")
            self._entry_cache[cache_key] = (meta["content_hash"], definition, document)
        return RegistryEntry(
            definition=definition,
            status=meta["status"],
            admitted_at=meta["admitted_at"],
            content_hash=meta["content_hash"],
            document=document,
        )

    # -- admission ---------------------------------------------------------

    def admit_tool(
        self,
        candidate: ToolDefinition | Mapping[str, Any],
        probe: HealthProbe | None = None,
        *,
        dry_run: bool = False,
    ) -> AdmissionReport:
        """Run the three tool admission checks and publish iff all pass.

        Accepts a parsed definition or a raw document; parse-level findings
        are folded into parameter_consistency except documentation defects,
        which belong to documentation_completeness.
        """
        document = _doc_of(candidate)
        definition, diagnostics = try_parse_tool_definition(document)

        consistency = [d for d in diagnostics if d.check != checks.DOCUMENTATION_COMPLETENESS]
        documentation = [d for d in diagnostics if d.check == checks.DOCUMENTATION_COMPLETENESS]
        documentation.extend(self._examples_check(document))

        probe = probe or HealthProbe(tool_id=str(document.get("id", "")))
        probe_finding = probe.run()
        availability = [probe_finding] if probe_finding else []

        outcomes = (
            CheckOutcome(
                checks.PARAMETER_CONSISTENCY,
                "fail" if consistency else "pass",
                tuple(consistency),
            ),
            CheckOutcome(
                checks.DOCUMENTATION_COMPLETENESS,
                "fail" if documentation else "pass",
                tuple(documentation),
            ),
            CheckOutcome(
                checks.SERVICE_AVAILABILITY,
                "fail" if availability else "pass",
                tuple(availability),
            ),
        )
        admitted = all(c.outcome == "pass" for c in outcomes)
        candidate_id = str(document.get("id", ""))
        version = str(document.get("version", ""))
        if admitted and not dry_run:
            assert definition is not None
            self._store("tools", definition.id, definition.version, document, "published")
        return AdmissionReport(candidate_id=candidate_id, version=version, checks=outcomes, admitted=admitted)

    @staticmethod
    def _examples_check(document: Mapping[str, Any]) -> list[Diagnostic]:
        """Every required parameter must document at least one example."""
        findings: list[Diagnostic] = []
        raw = document.get("parameters")
        if not isinstance(raw, list):
            return findings
        for i, param in enumerate(raw):
            if not isinstance(param, Mapping):
                continue
            if param.get("required") is True and not param.get("examples"):
                findings.append(
                    Diagnostic(
                        "error",
                        checks.DOCUMENTATION_COMPLETENESS,
                        f"parameters[{i}].examples",
                        f"required parameter {param.get('name')!r} needs at least one example",
                    )
                )
        return findings

    def admit_workflow(
        self,
        candidate: WorkflowDefinition | Mapping[str, Any],
        *,
        dry_run: bool = False,
    ) -> AdmissionReport:
        """Validate a workflow at the DAG level and publish iff error-free."""
        from schemagate.validation import validate_workflow

        document = _doc_of(candidate)
        definition, diagnostics = try_parse_workflow_definition(document)
        outcomes: list[CheckOutcome] = []
        if definition is None:
            outcomes.append(CheckOutcome(checks.DOCUMENT_VALIDITY, "fail", tuple(diagnostics)))
            admitted = False
        else:
            outcomes.append(CheckOutcome(checks.DOCUMENT_VALIDITY, "pass"))
            report = validate_workflow(definition, self)
            for check_result in report.checks:
                errors = tuple(d for d in check_result.diagnostics if d.severity == "error")
                outcomes.append(
                    CheckOutcome(check_result.check, "fail" if errors else "pass", tuple(check_result.diagnostics))
                )
            admitted = report.valid
        candidate_id = str(document.get("workflow_id", ""))
        version = str(document.get("version", "1.0.0"))
        if admitted and not dry_run:
            assert definition is not None
            self._store("workflows", definition.workflow_id, definition.version, document, "published")
        return AdmissionReport(candidate_id=candidate_id, version=version, checks=tuple(outcomes), admitted=admitted)

    def save_draft(self, candidate: ToolDefinition | WorkflowDefinition | Mapping[str, Any], kind: str | None = None) -> str:
        """Store a definition as a draft without running admission."""
        document = _doc_of(candidate)
        if kind is None:
            kind = "workflows" if "workflow_id" in document else "tools"
        entry_id = document.get("workflow_id") if kind == "workflows" else document.get("id")
        version = document.get("version", "1.0.0")
        return self._store(kind, str(entry_id), str(version), document, "draft")

    def retire(self, kind: str, entry_id: str, version: str) -> None:
        """Flip an entry's status to retired."""
        with self._lock:
            manifest = self._read_manifest(fresh=True)
            versions = manifest.get(kind, {}).get(entry_id)
            if not versions or version not in versions:
                raise NotFound(f"no {kind[:-1]} {entry_id!r} version {version!r}")
            versions[version]["status"] = "retired"
            self._write_manifest(manifest)

    # -- resolution and discovery ------------------------------------------

    def _published_versions(self, kind: str, entry_id: str) -> list[str]:
        manifest = self._read_manifest()
        versions = manifest.get(kind, {}).get(entry_id, {})
        return [v for v, meta in versions.items() if meta["status"] == "published"]

    def _resolve(self, kind: str, entry_id: str, requirement: str) -> RegistryEntry:
        manifest = self._read_manifest()
        versions = manifest.get(kind, {}).get(entry_id)
        if not versions:
            raise NotFound(f"no {kind[:-1]} {entry_id!r}")
        if requirement == "latest":
            published = [v for v, meta in versions.items() if meta["status"] == "published"]
            if not published:
                if any(meta["status"] == "retired" for meta in versions.values()):
                    raise Retired(f"{kind[:-1]} {entry_id!r} is retired")
                raise NotFound(f"{kind[:-1]} {entry_id!r} has no published version")
            version = max(published, key=Version.parse)
        else:
            meta = versions.get(requirement)
            if meta is None:
                raise NotFound(f"no {kind[:-1]} {entry_id!r} version {requirement!r}")
            if meta["status"] == "retired":
                raise Retired(f"{kind[:-1]} {entry_id} {requirement} is retired")
            if meta["status"] != "published":
                raise NotFound(f"{kind[:-1]} {entry_id} {requirement} is not published")
            version = requirement
        return self._load_entry(kind, entry_id, version)

    def resolve_tool(self, tool_id: str, requirement: str = "latest") -> ToolDefinition:
        entry = self._resolve("tools", tool_id, requirement)
        assert isinstance(entry.definition, ToolDefinition)
        return entry.definition

    def resolve_workflow(self, workflow_id: str, requirement: str = "latest") -> WorkflowDefinition:
        entry = self._resolve("workflows", workflow_id, requirement)
        assert isinstance(entry.definition, WorkflowDefinition)
        return entry.definition

    def workflow_entry(self, workflow_id: str, requirement: str = "latest") -> RegistryEntry:
        return self._resolve("workflows", workflow_id, requirement)

    def tool_entry(self, tool_id: str, requirement: str = "latest") -> RegistryEntry:
        return self._resolve("tools", tool_id, requirement)

    def get_parameters(self, workflow_id: str, version: str | None = None) -> Mapping[str, ParameterDefinition]:
        """The workflow-level parameter map, highest published version by default."""
        workflow = self.resolve_workflow(workflow_id, version or "latest")
        return workflow.parameters

    def search_workflows(self, query: str, tags: Iterable[str] | None = None) -> list[dict]:
        """Rank published workflows by weighted term overlap.

        Query tokens score 3 against the name, 2 against tags, and 1 against
        the description/use_cases pool; ties break by ascending workflow_id.
        """
        query_tokens = _tokens(query)
        wanted_tags = {t.lower() for t in tags} if tags else set()
        results = []
        manifest = self._read_manifest()
        for workflow_id in manifest.get("workflows", {}):
            published = self._published_versions("workflows", workflow_id)
            if not published:
                continue
            version = max(published, key=Version.parse)
            entry = self._load_entry("workflows", workflow_id, version)
            workflow = entry.definition
            assert isinstance(workflow, WorkflowDefinition)
            entry_tags = [str(t) for t in workflow.metadata.get("tags", [])]
            if wanted_tags and not wanted_tags <= {t.lower() for t in entry_tags}:
                continue
            name_tokens = _tokens(workflow.name)
            tag_tokens = set()
            for tag in entry_tags:
                tag_tokens |= _tokens(tag)
            prose_tokens = _tokens(workflow.description)
            for use_case in workflow.metadata.get("use_cases", []):
                prose_tokens |= _tokens(str(use_case))
            score = 0
            for token in query_tokens:
                if token in name_tokens:
                    score += 3
                if token in tag_tokens:
                    score += 2
                if token in prose_tokens:
                    score += 1
            if score > 0:
                results.append({"workflow_id": workflow_id, "version": version, "name": workflow.name, "score": score})
        results.sort(key=lambda r: (-r["score"], r["workflow_id"]))
        return results

    def list_entries(self, kind: str) -> list[dict]:
        """id/version/status rows for every stored entry, sorted."""
        manifest = self._read_manifest()
        rows = []
        for entry_id, versions in sorted(manifest.get(kind, {}).items()):
            for version, meta in sorted(versions.items(), key=lambda kv: Version.parse(kv[0])):
                rows.append(
                    {
                        "id": entry_id,
                        "version": version,
                        "status": meta["status"],
                        "content_hash": meta["content_hash"],
                    }
                )
        return rows

    def published_tool_ids(self) -> set[str]:
        manifest = self._read_manifest()
        return {tool_id for tool_id in manifest.get("tools", {}) if self._published_versions("tools", tool_id)}

    # -- integrity ----------------------------------------------------------

    def verify_integrity(self) -> list[str]:
        """Recompute every stored hash; returns a list of mismatch descriptions."""
        problems: list[str] = []
        manifest = self._read_manifest()
        for kind in ("tools", "workflows"):
            for entry_id, versions in manifest.get(kind, {}).items():
                for version, meta in versions.items():
                    path = self._entry_path(kind, entry_id, version)
                    if not path.exists():
                        problems.append(f"{kind}/{entry_id}/{version}: document missing")
                        continue
                    digest = content_hash(path.read_text(encoding="utf-8"))
                    if digest != meta["content_hash"]:
                        problems.append(f"{kind}/{entry_id}/{version}: content hash mismatch")
        return problems
