"""Scripted session replay: drives the gate turn by turn and checks outcomes.

A session script is an ordered list of turns.  ``message`` turns carry the
user text, the scripted planner decision for it, and the expected gate
outcome; ``clarify``/``amend``/``approve``/``dispatch`` turns drive the
invocation lifecycle the way a UI would.  Each turn may carry display rows
for the printed interaction-trace table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from schemagate.errors import GateStateError, SchemagateError
from schemagate.gate import Gate, SessionContext, TurnResult
from schemagate.planner import PlannerDecision, ScriptRule, ScriptedPlanner


@dataclass
class ReplayDivergence:
    turn_index: int
    kind: str
    expected: dict
    actual: dict

    def render(self) -> str:
        return (
            f"turn {self.turn_index} ({self.kind}): expected {json.dumps(self.expected, sort_keys=True)}, "
            f"got {json.dumps(self.actual, sort_keys=True, default=str)}"
        )


@dataclass
class ReplayResult:
    ok: bool
    rows: list[dict] = field(default_factory=list)
    run_ids: list[str] = field(default_factory=list)
    divergence: ReplayDivergence | None = None
    turns_completed: int = 0

    def render_table(self) -> str:
        if not self.rows:
            return "(no turns)"
        headers = ("turn", "actor", "action", "detail", "gate")
        widths = {h: len(h) for h in headers}
        for row in self.rows:
            for h in headers:
                widths[h] = max(widths[h], len(str(row.get(h, ""))))
        lines = ["  ".join(h.upper().ljust(widths[h]) for h in headers)]
        for row in self.rows:
            lines.append("  ".join(str(row.get(h, "")).ljust(widths[h]) for h in headers))
        return "\n".join(lines)


def load_script(path: Path | str) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def planner_from_script(script: Mapping[str, Any]) -> ScriptedPlanner:
    """Build the deterministic planner from the script's message turns."""
    rules = []
    for turn in script.get("turns", []):
        if turn.get("kind", "message") == "message" and "decision" in turn:
            rules.append(
                ScriptRule(
                    decision=PlannerDecision.from_document(turn["decision"]),
                    text=turn["text"],
                )
            )
    return ScriptedPlanner(rules)


def _match(expected: Mapping[str, Any], actual: Mapping[str, Any]) -> bool:
    return all(actual.get(key) == value for key, value in expected.items())


def _turn_outcome(result: TurnResult) -> dict:
    outcome: dict[str, Any] = {
        "action": result.action,
        "refused": bool(result.refusal),
        "prompts": [p.parameter for p in result.prompts],
        "prompt_count": len(result.prompts),
    }
    if result.action == "search_workflows" and result.action_result:
        outcome["top_workflow"] = result.action_result[0]["workflow_id"]
    if result.invocation is not None:
        outcome["state"] = result.invocation.state
    return outcome


def replay(gate: Gate, script: Mapping[str, Any], wait_timeout: float = 30.0) -> ReplayResult:
    """Run every scripted turn, asserting each turn's expected outcome."""
    planner = planner_from_script(script)
    session: SessionContext = gate.open_session()
    result = ReplayResult(ok=True)

    for index, turn in enumerate(script.get("turns", []), start=1):
        kind = turn.get("kind", "message")
        expected = dict(turn.get("expect", {}))
        actual: dict[str, Any]

        if kind == "message":
            turn_result = gate.step(session, turn["text"], planner)
            actual = _turn_outcome(turn_result)
        elif kind == "clarify":
            invocation = session.pending_invocation
            if invocation is None:
                actual = {"error": "no pending invocation"}
            else:
                try:
                    invocation, prompts = gate.clarify(session, invocation, turn["parameter"], turn["value"])
                    actual = {
                        "state": invocation.state,
                        "prompts": [p.parameter for p in prompts],
                        "prompt_count": len(prompts),
                    }
                except SchemagateError as exc:
                    actual = {"blocked": True, "error": str(exc)}
        elif kind == "amend":
            invocation = session.pending_invocation
            if invocation is None:
                actual = {"error": "no pending invocation"}
            else:
                try:
                    new_invocation, prompts = gate.amend_invocation(session, invocation, turn.get("overrides", {}))
                    actual = {
                        "state": new_invocation.state,
                        "prompts": [p.parameter for p in prompts],
                        "prompt_count": len(prompts),
                    }
                except SchemagateError as exc:
                    actual = {"blocked": True, "error": str(exc)}
        elif kind == "approve":
            invocation = session.pending_invocation
            if invocation is None:
                actual = {"error": "no pending invocation"}
            else:
                try:
                    gate.approve(session, invocation)
                    actual = {"state": invocation.state}
                except SchemagateError as exc:
                    actual = {"blocked": True, "state": invocation.state, "error": str(exc)}
        elif kind == "dispatch":
            invocation = session.pending_invocation
            if invocation is None:
                actual = {"error": "no pending invocation"}
            else:
                try:
                    run_id = gate.dispatch(session, invocation)
                    status = gate.executor.wait(run_id, timeout=wait_timeout)
                    session.record_run_event(run_id, status)
                    result.run_ids.append(run_id)
                    actual = {"run": status, "state": invocation.state}
                except SchemagateError as exc:
                    actual = {"blocked": True, "state": invocation.state, "error": str(exc)}
        else:
            raise GateStateError(f"unknown script turn kind {kind!r}")

        result.rows.extend(turn.get("rows", []))
        if not _match(expected, actual):
            result.ok = False
            result.divergence = ReplayDivergence(index, kind, expected, actual)
            return result
        result.turns_completed = index
    return result
