"""Operator and headless command-line surface.

Exit codes: 0 success, 1 validation errors, 2 usage errors, 3 store/IO
errors.  Human output goes to stdout, diagnostics to stderr; ``--format doc``
emits the same canonical documents the HTTP service serves.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from schemagate import __version__
from schemagate.engine import Engine, EngineConfig
from schemagate.errors import (
    DuplicateVersion,
    NotFound,
    Retired,
    SchemagateError,
    StorageError,
)
from schemagate.registry import AdmissionReport, HealthProbe
from schemagate.replay import planner_from_script, replay
from schemagate.schema.documents import canonical_json

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_STORE = 3


def _fail(code: int, message: str) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _engine(ctx: click.Context) -> Engine:
    config = EngineConfig(
        registry_dir=ctx.obj.get("registry_dir"),
        run_dir=ctx.obj.get("run_dir") or ctx.obj.get("registry_dir"),
    )
    try:
        return Engine(config)
    except StorageError as exc:
        _fail(EXIT_STORE, str(exc))
        raise AssertionError("unreachable")


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        _fail(EXIT_STORE, f"no such file: {path}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_VALIDATION, f"{path}: not valid JSON: {exc}")
    raise AssertionError("unreachable")


def _print_admission(report: AdmissionReport, doc_format: str) -> None:
    if doc_format == "doc":
        click.echo(canonical_json(report.to_document()), nl=False)
        return
    verdict = "admitted" if report.admitted else "REJECTED"
    click.echo(f"{report.candidate_id} {report.version}: {verdict}")
    for check in report.checks:
        click.echo(f"  {check.check:<28} {check.outcome}")
        for diagnostic in check.diagnostics:
            click.echo(f"      {diagnostic.severity}: {diagnostic.location}: {diagnostic.message}", err=True)


@click.group()
@click.version_option(__version__)
@click.option("--registry-dir", envvar="SCHEMAGATE_REGISTRY_DIR", help="Registry root directory.")
@click.option("--run-dir", envvar="SCHEMAGATE_RUN_DIR", help="Run store root directory.")
@click.option("--format", "doc_format", type=click.Choice(["text", "doc"]), default="text", show_default=True)
@click.pass_context
def main(ctx: click.Context, registry_dir: str | None, run_dir: str | None, doc_format: str) -> None:
    """Schema-gated workflow orchestration."""
    ctx.ensure_object(dict)
    ctx.obj["registry_dir"] = registry_dir
    ctx.obj["run_dir"] = run_dir
    ctx.obj["format"] = doc_format


# -- registry lifecycle ------------------------------------------------------


def _probe_from_options(tool_id: str, endpoint: str | None, timeout: int) -> HealthProbe:
    if endpoint:
        return HealthProbe(tool_id=tool_id, mode="endpoint-ping", endpoint=endpoint, timeout=timeout)
    return HealthProbe(tool_id=tool_id)


@main.group()
def tool() -> None:
    """Tool registry lifecycle."""


@tool.command("add")
@click.argument("document", type=click.Path())
@click.option("--probe-endpoint", help="Ping this endpoint for the service availability check.")
@click.option("--probe-timeout", default=1000, show_default=True, help="Probe timeout in milliseconds.")
@click.pass_context
def tool_add(ctx: click.Context, document: str, probe_endpoint: str | None, probe_timeout: int) -> None:
    """Admit a tool document into the registry."""
    engine = _engine(ctx)
    doc = _load_json(document)
    probe = _probe_from_options(str(doc.get("id", "")), probe_endpoint, probe_timeout)
    try:
        report = engine.registry.admit_tool(doc, probe)
    except DuplicateVersion as exc:
        _fail(EXIT_VALIDATION, str(exc))
        return
    _print_admission(report, ctx.obj["format"])
    sys.exit(EXIT_OK if report.admitted else EXIT_VALIDATION)


@tool.command("validate")
@click.argument("document", type=click.Path())
@click.option("--probe-endpoint", help="Ping this endpoint for the service availability check.")
@click.option("--probe-timeout", default=1000, show_default=True)
@click.pass_context
def tool_validate(ctx: click.Context, document: str, probe_endpoint: str | None, probe_timeout: int) -> None:
    """Dry-run tool admission without persisting anything."""
    engine = _engine(ctx)
    doc = _load_json(document)
    probe = _probe_from_options(str(doc.get("id", "")), probe_endpoint, probe_timeout)
    report = engine.registry.admit_tool(doc, probe, dry_run=True)
    _print_admission(report, ctx.obj["format"])
    sys.exit(EXIT_OK if report.admitted else EXIT_VALIDATION)


@tool.command("list")
@click.pass_context
def tool_list(ctx: click.Context) -> None:
    """List stored tools."""
    engine = _engine(ctx)
    rows = engine.registry.list_entries("tools")
    if ctx.obj["format"] == "doc":
        click.echo(canonical_json(rows), nl=False)
        return
    for row in rows:
        click.echo(f"{row['id']:<36} {row['version']:<10} {row['status']}")


@tool.command("retire")
@click.argument("tool_id")
@click.argument("version")
@click.pass_context
def tool_retire(ctx: click.Context, tool_id: str, version: str) -> None:
    """Retire a published tool version."""
    engine = _engine(ctx)
    try:
        engine.registry.retire("tools", tool_id, version)
    except NotFound as exc:
        _fail(EXIT_STORE, str(exc))
    click.echo(f"retired tool {tool_id} {version}")


@main.group()
def workflow() -> None:
    """Workflow registry lifecycle."""


@workflow.command("add")
@click.argument("document", type=click.Path())
@click.pass_context
def workflow_add(ctx: click.Context, document: str) -> None:
    """Admit a workflow document into the registry."""
    engine = _engine(ctx)
    doc = _load_json(document)
    try:
        report = engine.registry.admit_workflow(doc)
    except DuplicateVersion as exc:
        _fail(EXIT_VALIDATION, str(exc))
        return
    _print_admission(report, ctx.obj["format"])
    sys.exit(EXIT_OK if report.admitted else EXIT_VALIDATION)


@workflow.command("validate")
@click.argument("document", type=click.Path())
@click.pass_context
def workflow_validate(ctx: click.Context, document: str) -> None:
    """Dry-run workflow admission (all five DAG checks) without persisting."""
    engine = _engine(ctx)
    doc = _load_json(document)
    report = engine.registry.admit_workflow(doc, dry_run=True)
    _print_admission(report, ctx.obj["format"])
    sys.exit(EXIT_OK if report.admitted else EXIT_VALIDATION)


@workflow.command("list")
@click.pass_context
def workflow_list(ctx: click.Context) -> None:
    """List stored workflows."""
    engine = _engine(ctx)
    rows = engine.registry.list_entries("workflows")
    if ctx.obj["format"] == "doc":
        click.echo(canonical_json(rows), nl=False)
        return
    for row in rows:
        click.echo(f"{row['id']:<36} {row['version']:<10} {row['status']}")


@workflow.command("retire")
@click.argument("workflow_id")
@click.argument("version")
@click.pass_context
def workflow_retire(ctx: click.Context, workflow_id: str, version: str) -> None:
    """Retire a published workflow version."""
    engine = _engine(ctx)
    try:
        engine.registry.retire("workflows", workflow_id, version)
    except NotFound as exc:
        _fail(EXIT_STORE, str(exc))
    click.echo(f"retired workflow {workflow_id} {version}")


# -- datasets ----------------------------------------------------------------


@main.group()
def dataset() -> None:
    """Dataset store."""


@dataset.command("add")
@click.argument("csv_file", type=click.Path())
@click.option("--name", help="Display name; defaults to the file stem.")
@click.option("--id", "dataset_id", help="Explicit dataset UUID.")
@click.pass_context
def dataset_add(ctx: click.Context, csv_file: str, name: str | None, dataset_id: str | None) -> None:
    """Register a CSV file in the dataset store."""
    engine = _engine(ctx)
    try:
        descriptor = engine.datasets.register(csv_file, name=name, dataset_id=dataset_id)
    except (NotFound, StorageError) as exc:
        _fail(EXIT_STORE, str(exc))
        return
    if ctx.obj["format"] == "doc":
        click.echo(canonical_json(descriptor.to_document()), nl=False)
    else:
        click.echo(f"registered {descriptor.name} as {descriptor.dataset_id} ({descriptor.row_count} rows)")


@dataset.command("list")
@click.pass_context
def dataset_list(ctx: click.Context) -> None:
    """List registered datasets, sorted by name."""
    engine = _engine(ctx)
    descriptors = engine.datasets.list()
    if ctx.obj["format"] == "doc":
        click.echo(canonical_json([d.to_document() for d in descriptors]), nl=False)
        return
    for descriptor in descriptors:
        click.echo(f"{descriptor.dataset_id}  {descriptor.name:<24} {descriptor.row_count} rows")


# -- headless runs -------------------------------------------------------------


@main.command("run")
@click.argument("workflow_id")
@click.option("--params", "params_file", type=click.Path(), required=True, help="Flat JSON document of workflow-level parameters.")
@click.option("--version", help="Exact workflow version; latest published when omitted.")
@click.option("--approve", is_flag=True, help="Approve the invocation without interactive confirmation.")
@click.option("--timeout", default=60.0, show_default=True, help="Seconds to wait for a terminal status.")
@click.pass_context
def run_command(ctx: click.Context, workflow_id: str, params_file: str, version: str | None, approve: bool, timeout: float) -> None:
    """Build an invocation through the gate, dispatch it, and wait."""
    engine = _engine(ctx)
    parameters = _load_json(params_file)
    gate = engine.gate
    session = gate.open_session()
    try:
        invocation, prompts = gate.propose_invocation(session, workflow_id, version, parameters)
    except (NotFound, Retired) as exc:
        _fail(EXIT_STORE, str(exc))
        return
    if prompts:
        for prompt in prompts:
            click.echo(f"{prompt.parameter}: {prompt.reason}: {prompt.message} (expected {prompt.expected})", err=True)
        sys.exit(EXIT_VALIDATION)
    if not approve:
        _fail(EXIT_VALIDATION, "invocation validated but not approved; re-run with --approve")
    gate.approve(session, invocation)
    try:
        run_id = gate.dispatch(session, invocation)
    except SchemagateError as exc:
        _fail(EXIT_VALIDATION, f"dispatch refused: {exc}")
        return
    status = engine.executor.wait(run_id, timeout=timeout)
    document = engine.executor.get_run(run_id)
    if ctx.obj["format"] == "doc":
        click.echo(canonical_json(document), nl=False)
    else:
        click.echo(f"run {run_id}: {status}")
        for step in document["steps"]:
            click.echo(f"  {step['step_id']:<24} {step['status']}")
        if document.get("failure"):
            click.echo(f"  failure: {document['failure']['step_id']}: {document['failure']['message']}", err=True)
    sys.exit(EXIT_OK if status == "succeeded" else EXIT_VALIDATION)


# -- run inspection -------------------------------------------------------------


@main.group()
def runs() -> None:
    """Provenance records."""


@runs.command("show")
@click.argument("run_id")
@click.pass_context
def runs_show(ctx: click.Context, run_id: str) -> None:
    """Render one run record."""
    engine = _engine(ctx)
    try:
        document = engine.run_store.load(run_id)
    except NotFound as exc:
        _fail(EXIT_STORE, str(exc))
        return
    if ctx.obj["format"] == "doc":
        click.echo(canonical_json(document), nl=False)
        return
    click.echo(f"run {document['run_id']} [{document['status']}]")
    click.echo(f"  workflow: {document['invocation']['workflow_id']} {document['invocation']['version']}")
    click.echo(f"  started:  {document['started_at']}")
    click.echo(f"  finished: {document['finished_at']}")
    for key, value in document["resolved_parameters"].items():
        click.echo(f"  param {key} = {json.dumps(value)}")
    for step in document["steps"]:
        metrics = f"  metrics={json.dumps(step['metrics'])}" if step.get("metrics") else ""
        click.echo(f"  step {step['step_id']:<24} {step['status']}{metrics}")


@runs.command("compare")
@click.argument("run_a")
@click.argument("run_b")
@click.pass_context
def runs_compare(ctx: click.Context, run_a: str, run_b: str) -> None:
    """Diff two runs: parameters, metrics, and workflow snapshots."""
    from schemagate.runs import compare_runs

    engine = _engine(ctx)
    try:
        diff = compare_runs(engine.run_store, run_a, run_b)
    except NotFound as exc:
        _fail(EXIT_STORE, str(exc))
        return
    if ctx.obj["format"] == "doc":
        click.echo(canonical_json(diff), nl=False)
        return
    if not diff["parameter_diff"] and not diff["metric_diff"] and diff["same_workflow"]:
        click.echo("no differences")
        return
    click.echo(f"same workflow: {'yes' if diff['same_workflow'] else 'no'}")
    for key, pair in diff["parameter_diff"].items():
        click.echo(f"  param {key}: {json.dumps(pair['a'])} -> {json.dumps(pair['b'])}")
    for step_id, metrics in diff["metric_diff"].items():
        for metric, entry in metrics.items():
            click.echo(f"  metric {step_id}.{metric}: {entry['a']} -> {entry['b']} (delta {entry['delta']:+.4g})")


@runs.command("list")
@click.option("--workflow", "workflow_id", help="Filter by workflow id.")
@click.option("--status", help="Filter by run status.")
@click.option("--since", help="Only runs started at or after this ISO timestamp.")
@click.pass_context
def runs_list(ctx: click.Context, workflow_id: str | None, status: str | None, since: str | None) -> None:
    """List run summaries, newest first."""
    engine = _engine(ctx)
    summaries = engine.run_store.query(workflow_id=workflow_id, status=status, since=since)
    if ctx.obj["format"] == "doc":
        click.echo(canonical_json(summaries), nl=False)
        return
    for summary in summaries:
        click.echo(f"{summary['run_id']}  {summary['workflow_id']:<28} {summary['status']:<10} {summary['started_at']}")


# -- scripted sessions -----------------------------------------------------------


@main.command("session")
@click.argument("action", type=click.Choice(["replay"]))
@click.argument("script_file", type=click.Path())
@click.option("--timeout", default=30.0, show_default=True, help="Seconds to wait per dispatched run.")
@click.pass_context
def session_command(ctx: click.Context, action: str, script_file: str, timeout: float) -> None:
    """Replay a scripted session and assert each turn's expected outcome."""
    engine = _engine(ctx)
    script = _load_json(script_file)
    engine.gate.planner = planner_from_script(script)
    result = replay(engine.gate, script, wait_timeout=timeout)
    click.echo(result.render_table())
    click.echo(f"turns completed: {result.turns_completed}; runs created: {len(result.run_ids)}")
    for run_id in result.run_ids:
        click.echo(f"run {run_id}")
    if not result.ok:
        assert result.divergence is not None
        _fail(EXIT_VALIDATION, "divergence: " + result.divergence.render())
    sys.exit(EXIT_OK)


# -- service ----------------------------------------------------------------------


@main.command("serve")
@click.option("--bind", default="127.0.0.1:8080", show_default=True, help="host:port to listen on.")
@click.option("--planner", "planner_spec", default=None, help="scripted:<file> or remote:<endpoint>.")
@click.pass_context
def serve_command(ctx: click.Context, bind: str, planner_spec: str | None) -> None:
    """Run the HTTP/JSON service over the configured stores."""
    import uvicorn

    from schemagate.api import build_planner, create_app

    engine = _engine(ctx)
    problems = engine.integrity_scan()
    if problems:
        _fail(EXIT_STORE, "store integrity scan failed:\n" + "\n".join(problems))
    engine.gate.planner = build_planner(planner_spec)
    app = create_app(engine)
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080))


if __name__ == "__main__":
    main()
