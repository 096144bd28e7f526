"""Planner interface: the conversational side of the architecture.

Planners only propose; the gate validates and executes.  The scripted
planner is a deterministic table from message patterns to decisions, which
is what every deterministic test uses.  The remote planner adapts an
external chat-completion service and is excluded from the test suite.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Mapping, Protocol

from schemagate.errors import PlannerUnavailable

if TYPE_CHECKING:
    from schemagate.gate import SessionContext

ENV_PLANNER_API_KEY = "SCHEMAGATE_PLANNER_API_KEY"


@dataclass(frozen=True)
class ProposedAction:
    action: str
    arguments: Mapping[str, Any]


@dataclass(frozen=True)
class PlannerDecision:
    assistant_message: str
    proposed_action: ProposedAction | None = None

    @classmethod
    def from_document(cls, document: Mapping[str, Any]) -> "PlannerDecision":
        proposal = document.get("proposed_action")
        action = None
        if proposal is not None:
            action = ProposedAction(action=proposal["action"], arguments=dict(proposal.get("arguments", {})))
        return cls(assistant_message=document.get("assistant_message", ""), proposed_action=action)


class Planner(Protocol):
    def decide(self, context: "SessionContext") -> PlannerDecision: ...


@dataclass(frozen=True)
class ScriptRule:
    decision: PlannerDecision
    text: str | None = None
    pattern: str | None = None

    def matches(self, message: str) -> bool:
        if self.text is not None:
            return message == self.text
        if self.pattern is not None:
            return re.search(self.pattern, message) is not None
        return False


class ScriptedPlanner:
    """Deterministic planner: first matching rule for the last user message wins."""

    def __init__(self, rules: list[ScriptRule]):
        self._rules = list(rules)

    @classmethod
    def from_script(cls, path: Path | str) -> "ScriptedPlanner":
        document = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_document(document)

    @classmethod
    def from_document(cls, document: Mapping[str, Any]) -> "ScriptedPlanner":
        rules = []
        for raw in document.get("rules", []):
            match = raw.get("match", {})
            rules.append(
                ScriptRule(
                    decision=PlannerDecision.from_document(raw["decision"]),
                    text=match.get("text"),
                    pattern=match.get("pattern"),
                )
            )
        return cls(rules)

    def add_rule(self, rule: ScriptRule) -> None:
        self._rules.append(rule)

    def decide(self, context: "SessionContext") -> PlannerDecision:
        message = context.last_user_message() or ""
        for rule in self._rules:
            if rule.matches(message):
                return rule.decision
        return PlannerDecision(assistant_message="I have no scripted decision for that message.")


class RemotePlanner:
    """Adapter for an external chat-completion service.

    Expects the service to answer with a JSON body containing
    ``assistant_message`` and optionally ``proposed_action``.
    """

    def __init__(self, endpoint: str, api_key: str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self._api_key = api_key or os.environ.get(ENV_PLANNER_API_KEY)

    def decide(self, context: "SessionContext") -> PlannerDecision:
        import httpx

        payload = {"messages": [{"role": m["role"], "text": m["text"]} for m in context.messages]}
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            response = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
            response.raise_for_status()
            return PlannerDecision.from_document(response.json())
        except Exception as exc:
            raise PlannerUnavailable(f"remote planner failed: {exc}") from exc
