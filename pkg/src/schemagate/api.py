"""HTTP/JSON boundary over sessions, registry, and runs.

All request and response bodies reuse the canonical document encodings; the
service adds no second schema.  Validation failures map to 422 with the full
diagnostic list, missing resources to 404, and gate-state violations to 409.
The dispatch endpoint is the only route that submits work to the executor.
"""

from __future__ import annotations

import json
from typing import Any

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from schemagate.engine import Engine
from schemagate.errors import (
    DuplicateVersion,
    GateStateError,
    NotFound,
    Retired,
    SchemagateError,
    StorageError,
    UnknownParameter,
)
from schemagate.gate import InvocationObject, SessionContext
from schemagate.planner import Planner, RemotePlanner, ScriptedPlanner
from schemagate.runs import compare_runs
from schemagate.schema.values import describe_expectation


class MessageBody(BaseModel):
    text: str


class ProposeBody(BaseModel):
    workflow_id: str
    version: str | None = None
    parameters: dict[str, Any] = {}


class PatchBody(BaseModel):
    parameter: str | None = None
    value: Any = None
    overrides: dict[str, Any] | None = None


def build_planner(spec: str | None) -> Planner:
    """Planner selection: ``scripted:<file>`` or ``remote:<endpoint>``."""
    if spec is None:
        return ScriptedPlanner([])
    kind, _, rest = spec.partition(":")
    if kind == "scripted":
        return ScriptedPlanner.from_script(rest)
    if kind == "remote":
        return RemotePlanner(rest)
    raise ValueError(f"unknown planner spec {spec!r}")


def _error_body(status: int, code: str, message: str, diagnostics: list | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={
            "status": status,
            "error": code,
            "diagnostics": diagnostics or [],
            "message": message,
        },
    )


def _parameter_schema_document(engine: Engine, workflow_id: str, version: str | None) -> dict:
    from schemagate.schema.documents import render_workflow_document

    workflow = engine.registry.resolve_workflow(workflow_id, version or "latest")
    document = render_workflow_document(workflow)
    schema = document["parameters"]
    for name, param in workflow.parameters.items():
        schema[name]["expected"] = describe_expectation(param)
    return schema


def _invocation_response(invocation: InvocationObject, prompts: list) -> dict:
    return {
        "invocation": invocation.to_document(),
        "prompts": [p.to_document() for p in prompts],
    }


def create_app(engine: Engine, *, integrity_scan: bool = True) -> FastAPI:
    """Build the service over an assembled engine."""
    if integrity_scan:
        problems = engine.integrity_scan()
        if problems:
            raise StorageError("store integrity scan failed: " + "; ".join(problems))

    import schemagate

    app = FastAPI(title="schemagate", version=schemagate.__version__)

    @app.exception_handler(SchemagateError)
    async def schemagate_error_handler(request: Request, exc: SchemagateError):
        if isinstance(exc, (NotFound, Retired)):
            return _error_body(404, type(exc).__name__, str(exc))
        if isinstance(exc, (GateStateError, DuplicateVersion)):
            return _error_body(409, type(exc).__name__, str(exc))
        if isinstance(exc, UnknownParameter):
            return _error_body(422, type(exc).__name__, str(exc))
        return _error_body(500, type(exc).__name__, str(exc))

    def _session(session_id: str) -> SessionContext:
        return engine.gate.session(session_id)

    def _invocation(session_id: str, invocation_id: str) -> tuple[SessionContext, InvocationObject]:
        session = _session(session_id)
        return session, session.invocation(invocation_id)

    # -- sessions -------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session() -> dict:
        session = engine.gate.open_session()
        return session.to_document()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return _session(session_id).to_document()

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody) -> dict:
        session = _session(session_id)
        result = engine.gate.step(session, body.text)
        return result.to_document()

    # -- discovery --------------------------------------------------------------

    @app.get("/workflows")
    def search_workflows(q: str = Query(default=""), tags: str | None = None) -> list:
        tag_list = [t for t in (tags.split(",") if tags else []) if t]
        return engine.registry.search_workflows(q, tag_list or None)

    @app.get("/workflows/{workflow_id}/parameters")
    def get_parameters(workflow_id: str, version: str | None = None) -> dict:
        return _parameter_schema_document(engine, workflow_id, version)

    @app.get("/datasets")
    def list_datasets() -> list:
        return [d.to_document() for d in engine.datasets.list()]

    # -- invocation lifecycle ------------------------------------------------------

    @app.post("/sessions/{session_id}/invocations", status_code=201)
    def propose_invocation(session_id: str, body: ProposeBody) -> dict:
        session = _session(session_id)
        invocation, prompts = engine.gate.propose_invocation(
            session, body.workflow_id, body.version, body.parameters
        )
        return _invocation_response(invocation, prompts)

    @app.patch("/sessions/{session_id}/invocations/{invocation_id}")
    def patch_invocation(session_id: str, invocation_id: str, body: PatchBody):
        session, invocation = _invocation(session_id, invocation_id)
        if body.overrides is not None:
            new_invocation, prompts = engine.gate.amend_invocation(session, invocation, body.overrides)
            return _invocation_response(new_invocation, prompts)
        if body.parameter is None:
            return _error_body(422, "BadPatch", "provide either 'parameter'+'value' or 'overrides'")
        invocation, prompts = engine.gate.clarify(session, invocation, body.parameter, body.value)
        return _invocation_response(invocation, prompts)

    @app.post("/sessions/{session_id}/invocations/{invocation_id}/approve")
    def approve_invocation(session_id: str, invocation_id: str) -> dict:
        session, invocation = _invocation(session_id, invocation_id)
        engine.gate.approve(session, invocation)
        return invocation.to_document()

    @app.post("/sessions/{session_id}/invocations/{invocation_id}/dispatch")
    def dispatch_invocation(session_id: str, invocation_id: str) -> dict:
        session, invocation = _invocation(session_id, invocation_id)
        run_id = engine.gate.dispatch(session, invocation)
        return {"run_id": run_id, "invocation": invocation.to_document()}

    # -- runs ------------------------------------------------------------------------

    @app.get("/runs/compare")
    def compare(a: str, b: str) -> dict:
        return compare_runs(engine.run_store, a, b)

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict:
        return engine.run_store.load(run_id)

    @app.get("/runs/{run_id}/events")
    def run_events(run_id: str):
        engine.executor.events(run_id, 0)  # NotFound propagates before streaming

        def stream():
            cursor = 0
            while True:
                events = engine.executor.wait_for_event(run_id, cursor, timeout=5.0)
                for event in events:
                    yield f"data: {json.dumps(event, sort_keys=True)}\n\n"
                    cursor += 1
                    if event["event"] == "run_finished":
                        return
                if not events and engine.executor.run_status(run_id)["status"] != "running":
                    return

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/runs")
    def query_runs(
        workflow_id: str | None = None,
        status: str | None = None,
        since: str | None = None,
    ) -> list:
        return engine.run_store.query(workflow_id=workflow_id, status=status, since=since)

    # -- health ------------------------------------------------------------------------

    @app.get("/healthz")
    def healthcheck() -> dict:
        status = "ok"
        registry_entries = 0
        runs = 0
        try:
            registry_entries = len(engine.registry.list_entries("tools")) + len(
                engine.registry.list_entries("workflows")
            )
            runs = engine.run_store.count()
        except SchemagateError:
            status = "degraded"
        return {
            "status": status,
            "registry_entries": registry_entries,
            "open_sessions": len(engine.gate.sessions),
            "runs": runs,
        }

    return app


def serve(
    bind: str,
    registry_dir: str,
    run_dir: str,
    planner_spec: str | None = None,
) -> None:
    """Build an engine, scan the stores, and serve until interrupted."""
    import uvicorn

    from schemagate.engine import EngineConfig

    engine = Engine(EngineConfig(registry_dir=registry_dir, run_dir=run_dir))
    engine.gate.planner = build_planner(planner_spec)
    app = create_app(engine)
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080))
