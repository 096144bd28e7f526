"""The orchestration controller: session state, planner mediation, and the gate.

This module owns the no-bypass invariant.  Planners propose; reads execute
immediately; anything that would run computation becomes an invocation object
that must validate, be approved, and only then dispatch.  ``dispatch`` is the
single operation in the system that hands work to the executor.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Mapping

from schemagate import checks
from schemagate.actions import validate_action_arguments
from schemagate.errors import (
    ActionArgumentError,
    GateRegression,
    GateStateError,
    NotFound,
    NotValidated,
    PlannerUnavailable,
    Retired,
    UnknownParameter,
)
from schemagate.executor import Executor
from schemagate.datasets import DatasetStore
from schemagate.ids import Clock, IdSource
from schemagate.planner import Planner, PlannerDecision
from schemagate.registry import Registry
from schemagate.schema.defs import Diagnostic, WorkflowDefinition
from schemagate.schema.documents import canonical_json, content_hash
from schemagate.schema.values import describe_expectation, validate_value
from schemagate.validation import validate_workflow

INVOCATION_STATES = ("draft", "validated", "approved", "dispatched")


@dataclass(frozen=True)
class ClarificationPrompt:
    """A validation defect turned into a conversational prompt."""

    parameter: str
    reason: str  # missing | type_mismatch | constraint_violation
    expected: str
    message: str

    def to_document(self) -> dict:
        return {
            "parameter": self.parameter,
            "reason": self.reason,
            "expected": self.expected,
            "message": self.message,
        }


class InvocationObject:
    """The unit of validation, approval, and provenance.

    State only advances draft -> validated -> approved -> dispatched; any
    parameter change resets it to draft.  The full state history is kept so
    tests can audit the machine.
    """

    def __init__(
        self,
        invocation_id: str,
        workflow_id: str,
        version: str,
        parameters: dict[str, Any],
        created_at: str,
        parent_invocation: str | None = None,
    ):
        self.invocation_id = invocation_id
        self.workflow_id = workflow_id
        self.version = version
        self.parameters = dict(parameters)
        self.created_at = created_at
        self.parent_invocation = parent_invocation
        self._state = "draft"
        self.state_history: list[str] = ["draft"]

    @property
    def state(self) -> str:
        return self._state

    def _advance(self, state: str) -> None:
        order = INVOCATION_STATES.index
        if state != "draft" and order(state) != order(self._state) + 1:
            raise GateStateError(f"cannot move invocation from {self._state!r} to {state!r}")
        self._state = state
        self.state_history.append(state)

    def _reset_to_draft(self) -> None:
        if self._state in ("approved", "dispatched"):
            raise GateStateError("approved or dispatched invocations are immutable; amend instead")
        if self._state != "draft":
            self._state = "draft"
            self.state_history.append("draft")

    def set_parameter(self, name: str, value: Any) -> None:
        self._reset_to_draft()
        self.parameters[name] = value

    def to_document(self) -> dict:
        return {
            "invocation_id": self.invocation_id,
            "workflow_id": self.workflow_id,
            "version": self.version,
            "parameters": {k: self.parameters[k] for k in sorted(self.parameters)},
            "state": self._state,
            "created_at": self.created_at,
            "parent_invocation": self.parent_invocation,
        }


class SessionContext:
    """Accumulated conversational state: messages, actions, pending invocation."""

    def __init__(self, session_id: str):
        self.session_id = session_id
        self.messages: list[dict[str, str]] = []
        self.action_log: list[dict[str, Any]] = []
        self.invocations: dict[str, InvocationObject] = {}
        self.pending_invocation_id: str | None = None
        self.last_run_ids: list[str] = []
        self.selected_workflow: str | None = None
        self.lock = threading.RLock()

    @property
    def pending_invocation(self) -> InvocationObject | None:
        if self.pending_invocation_id is None:
            return None
        return self.invocations.get(self.pending_invocation_id)

    def last_user_message(self) -> str | None:
        for message in reversed(self.messages):
            if message["role"] == "user":
                return message["text"]
        return None

    def append_message(self, role: str, text: str) -> None:
        self.messages.append({"role": role, "text": text})

    def log_action(self, action: str, arguments: Mapping[str, Any], result: Any) -> None:
        digest = content_hash(canonical_json({"result": result}))[:16]
        self.action_log.append({"action": action, "arguments": dict(arguments), "result_digest": digest})

    def invocation(self, invocation_id: str) -> InvocationObject:
        invocation = self.invocations.get(invocation_id)
        if invocation is None:
            raise NotFound(f"no invocation {invocation_id!r} in this session")
        return invocation

    def record_run_event(self, run_id: str, status: str) -> None:
        """Run completion observed by a surface; appended as context."""
        self.append_message("system", f"run {run_id} finished: {status}")
        self.log_action("run_completed", {"run_id": run_id}, {"status": status})

    def to_document(self) -> dict:
        return {
            "session_id": self.session_id,
            "messages": list(self.messages),
            "action_log": list(self.action_log),
            "pending_invocation": self.pending_invocation.to_document() if self.pending_invocation else None,
            "last_run_ids": list(self.last_run_ids),
            "selected_workflow": self.selected_workflow,
        }


@dataclass
class TurnResult:
    """What one conversational turn produced."""

    assistant_message: str
    action: str | None = None
    action_result: Any = None
    prompts: list[ClarificationPrompt] = field(default_factory=list)
    invocation: InvocationObject | None = None
    refusal: list[Diagnostic] = field(default_factory=list)

    def to_document(self) -> dict:
        return {
            "assistant_message": self.assistant_message,
            "action": self.action,
            "action_result": self.action_result,
            "prompts": [p.to_document() for p in self.prompts],
            "invocation": self.invocation.to_document() if self.invocation else None,
            "refusal": [d.to_document() for d in self.refusal],
        }


_REASON_BY_CHECK = {
    checks.REQUIRED: "missing",
    checks.TYPE_CHECK: "type_mismatch",
    checks.NOT_EMPTY: "constraint_violation",
    checks.ALLOWED_VALUES: "constraint_violation",
    checks.MIN: "constraint_violation",
    checks.MAX: "constraint_violation",
    checks.UNKNOWN_FIELD: "constraint_violation",
}
_REASON_PRECEDENCE = ("missing", "type_mismatch", "constraint_violation")


class Gate:
    """Mediates between conversation and validated execution."""

    def __init__(
        self,
        registry: Registry,
        datasets: DatasetStore,
        executor: Executor,
        planner: Planner | None = None,
        clock: Clock | None = None,
        ids: IdSource | None = None,
        auto_approve: bool = False,
    ):
        self.registry = registry
        self.datasets = datasets
        self.executor = executor
        self.planner = planner
        self.clock = clock or Clock()
        self.ids = ids or IdSource()
        self.auto_approve = auto_approve
        self.sessions: dict[str, SessionContext] = {}

    # -- sessions -------------------------------------------------------------

    def open_session(self) -> SessionContext:
        session = SessionContext(session_id=self.ids.uuid())
        self.sessions[session.session_id] = session
        return session

    def session(self, session_id: str) -> SessionContext:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFound(f"no session {session_id!r}")
        return session

    # -- conversational turns ---------------------------------------------------

    def step(self, session: SessionContext, user_message: str, planner: Planner | None = None) -> TurnResult:
        """One turn: append the message, consult the planner, apply the gate.

        Read-only platform actions execute immediately; execute_workflow
        proposals become draft invocations and never dispatch directly.
        """
        planner = planner or self.planner
        if planner is None:
            raise PlannerUnavailable("no planner configured for this session")
        with session.lock:
            session.append_message("user", user_message)
            try:
                decision = planner.decide(session)
            except PlannerUnavailable as exc:
                session.append_message("system", f"planner unavailable: {exc}")
                raise
            return self._apply_decision(session, decision)

    def _apply_decision(self, session: SessionContext, decision: PlannerDecision) -> TurnResult:
        session.append_message("assistant", decision.assistant_message)
        result = TurnResult(assistant_message=decision.assistant_message)
        proposal = decision.proposed_action
        if proposal is None:
            return result

        diagnostics = validate_action_arguments(proposal.action, proposal.arguments)
        if diagnostics:
            refusal = ActionArgumentError(
                f"proposed action {proposal.action!r} failed its argument schema", diagnostics
            )
            session.action_log.append(
                {
                    "action": proposal.action,
                    "arguments": dict(proposal.arguments),
                    "refused": [d.to_document() for d in diagnostics],
                }
            )
            result.refusal = diagnostics
            result.assistant_message += f"\n(action refused: {refusal})"
            return result

        result.action = proposal.action
        arguments = dict(proposal.arguments)
        if proposal.action == "search_workflows":
            found = self.registry.search_workflows(arguments["query"], arguments.get("tags"))
            session.log_action(proposal.action, arguments, found)
            result.action_result = found
        elif proposal.action == "get_parameters":
            schema = self.registry.get_parameters(arguments["workflow_id"], arguments.get("version"))
            rendered = {name: describe_expectation(param) for name, param in schema.items()}
            session.log_action(proposal.action, arguments, rendered)
            session.selected_workflow = arguments["workflow_id"]
            result.action_result = rendered
        elif proposal.action == "list_datasets":
            datasets = [d.to_document() for d in self.datasets.list()]
            session.log_action(proposal.action, arguments, datasets)
            result.action_result = datasets
        else:  # execute_workflow: route into the gate, never direct dispatch
            invocation, prompts = self.propose_invocation(
                session,
                arguments["workflow_id"],
                arguments.get("version"),
                arguments.get("parameters", {}),
            )
            result.invocation = invocation
            result.prompts = prompts
            result.action_result = {"invocation_id": invocation.invocation_id, "state": invocation.state}
        return result

    # -- invocation lifecycle ----------------------------------------------------

    def _workflow_for(self, workflow_id: str, version: str | None) -> WorkflowDefinition:
        return self.registry.resolve_workflow(workflow_id, version or "latest")

    def _validate_parameters(
        self, workflow: WorkflowDefinition, supplied: Mapping[str, Any]
    ) -> list[ClarificationPrompt]:
        """One prompt per defective parameter, in schema declaration order."""
        prompts: list[ClarificationPrompt] = []
        for name, param in workflow.parameters.items():
            if name not in supplied:
                if param.required:
                    prompts.append(
                        ClarificationPrompt(
                            parameter=name,
                            reason="missing",
                            expected=describe_expectation(param),
                            message=f"{name} is required: {param.description}",
                        )
                    )
                continue
            diagnostics = validate_value(supplied[name], param)
            if diagnostics:
                reasons = [_REASON_BY_CHECK.get(d.check, "constraint_violation") for d in diagnostics]
                reason = next(r for r in _REASON_PRECEDENCE if r in reasons)
                prompts.append(
                    ClarificationPrompt(
                        parameter=name,
                        reason=reason,
                        expected=describe_expectation(param),
                        message="; ".join(d.message for d in diagnostics),
                    )
                )
        for name in sorted(supplied):
            if name not in workflow.parameters:
                prompts.append(
                    ClarificationPrompt(
                        parameter=name,
                        reason="constraint_violation",
                        expected="(no such parameter)",
                        message=f"{name!r} is not part of the workflow parameter schema",
                    )
                )
        return prompts

    def _revalidate(self, session: SessionContext, invocation: InvocationObject) -> list[ClarificationPrompt]:
        workflow = self._workflow_for(invocation.workflow_id, invocation.version)
        prompts = self._validate_parameters(workflow, invocation.parameters)
        if not prompts:
            report = validate_workflow(workflow, self.registry)
            if report.valid:
                invocation._advance("validated")
                if self.auto_approve:
                    self.approve(session, invocation, approver="auto")
            else:
                session.append_message(
                    "system",
                    f"workflow {workflow.workflow_id} no longer validates: "
                    + "; ".join(d.message for d in report.errors()),
                )
        return prompts

    def propose_invocation(
        self,
        session: SessionContext,
        workflow_id: str,
        version: str | None = None,
        parameters: Mapping[str, Any] | None = None,
        parent: str | None = None,
    ) -> tuple[InvocationObject, list[ClarificationPrompt]]:
        """Build a draft invocation and validate it parameter by parameter."""
        with session.lock:
            workflow = self._workflow_for(workflow_id, version)  # NotFound/Retired propagate
            invocation = InvocationObject(
                invocation_id=self.ids.uuid(),
                workflow_id=workflow.workflow_id,
                version=workflow.version,
                parameters=dict(parameters or {}),
                created_at=self.clock.stamp(),
                parent_invocation=parent,
            )
            prompts = self._revalidate(session, invocation)
            session.invocations[invocation.invocation_id] = invocation
            session.pending_invocation_id = invocation.invocation_id
            session.log_action(
                "propose_invocation",
                {"workflow_id": workflow.workflow_id, "version": workflow.version},
                {"invocation_id": invocation.invocation_id, "state": invocation.state, "defects": len(prompts)},
            )
            return invocation, prompts

    def clarify(
        self,
        session: SessionContext,
        invocation: InvocationObject,
        parameter: str,
        value: Any,
    ) -> tuple[InvocationObject, list[ClarificationPrompt]]:
        """Set one parameter on a draft invocation and re-run full validation."""
        with session.lock:
            workflow = self._workflow_for(invocation.workflow_id, invocation.version)
            if parameter not in workflow.parameters:
                raise UnknownParameter(f"workflow {workflow.workflow_id} has no parameter {parameter!r}")
            if invocation.state != "draft":
                raise GateStateError(
                    f"clarify applies to draft invocations; this one is {invocation.state} (amend instead)"
                )
            invocation.set_parameter(parameter, value)
            prompts = self._revalidate(session, invocation)
            session.log_action(
                "clarify",
                {"invocation_id": invocation.invocation_id, "parameter": parameter},
                {"state": invocation.state, "defects": len(prompts)},
            )
            return invocation, prompts

    def amend_invocation(
        self,
        session: SessionContext,
        prior: InvocationObject,
        overrides: Mapping[str, Any],
    ) -> tuple[InvocationObject, list[ClarificationPrompt]]:
        """New invocation from a prior one with overridden parameters."""
        if prior.invocation_id not in session.invocations:
            raise NotFound(f"invocation {prior.invocation_id!r} is not part of this session")
        workflow = self._workflow_for(prior.workflow_id, prior.version)
        for name in overrides:
            if name not in workflow.parameters:
                raise UnknownParameter(f"workflow {workflow.workflow_id} has no parameter {name!r}")
        merged = dict(prior.parameters)
        merged.update(overrides)
        return self.propose_invocation(
            session,
            prior.workflow_id,
            prior.version,
            merged,
            parent=prior.invocation_id,
        )

    def approve(self, session: SessionContext, invocation: InvocationObject, approver: str = "user") -> InvocationObject:
        """Record approval of a validated invocation; idempotent once approved."""
        with session.lock:
            if invocation.state in ("approved", "dispatched"):
                return invocation
            if invocation.state != "validated":
                raise NotValidated(f"cannot approve an invocation in state {invocation.state!r}")
            invocation._advance("approved")
            session.action_log.append(
                {
                    "action": "approve",
                    "arguments": {"invocation_id": invocation.invocation_id},
                    "approver": approver,
                    "at": self.clock.stamp(),
                }
            )
            return invocation

    def dispatch(self, session: SessionContext, invocation: InvocationObject) -> str:
        """The only path into the executor.

        Re-validates the invocation and its workflow against the current
        registry (defence in depth), snapshots the workflow, and submits.
        """
        with session.lock:
            if invocation.state != "approved":
                raise NotValidated(f"cannot dispatch an invocation in state {invocation.state!r}")

            try:
                entry = self.registry.workflow_entry(invocation.workflow_id, invocation.version)
            except (NotFound, Retired) as exc:
                raise GateRegression(f"workflow disappeared since approval: {exc}") from exc
            workflow = entry.definition
            assert isinstance(workflow, WorkflowDefinition)

            prompts = self._validate_parameters(workflow, invocation.parameters)
            if prompts:
                raise GateRegression(
                    "invocation no longer validates: " + "; ".join(p.message for p in prompts)
                )
            report = validate_workflow(workflow, self.registry)
            if not report.valid:
                raise GateRegression(
                    "workflow no longer validates: " + "; ".join(d.message for d in report.errors())
                )

            invocation._advance("dispatched")
            try:
                run_id = self.executor.execute(
                    invocation.to_document(),
                    workflow,
                    dict(entry.document),
                    entry.content_hash,
                )
            except Exception:
                invocation._state = "approved"
                invocation.state_history.append("approved")
                raise
            session.last_run_ids.append(run_id)
            session.log_action(
                "dispatch",
                {"invocation_id": invocation.invocation_id},
                {"run_id": run_id},
            )
            return run_id
