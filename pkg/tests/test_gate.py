"""Orchestration controller: sessions, clarification loops, approval, dispatch."""

from __future__ import annotations

import copy
import json

import pytest

from schemagate.errors import (
    GateRegression,
    GateStateError,
    NotFound,
    NotValidated,
    PlannerUnavailable,
    UnknownParameter,
)
from schemagate.planner import PlannerDecision, ProposedAction, ScriptRule, ScriptedPlanner
from tests.conftest import ALLOY_DATASET_ID

ALLOY_PARAMS = {
    "dataset_id": ALLOY_DATASET_ID,
    "target_properties": ["yield_strength", "creep_life"],
    "constraints": {"Cr": {"max": 12.0}, "Co": {"min": 5.0}},
    "n_candidates": 50,
}


def _planner(*rules: ScriptRule) -> ScriptedPlanner:
    return ScriptedPlanner(list(rules))


# -- sessions ------------------------------------------------------------------


def test_open_session_is_fresh(engine):
    session = engine.gate.open_session()
    assert session.messages == []
    assert session.action_log == []
    assert session.pending_invocation is None


def test_sessions_have_distinct_ids(engine):
    a = engine.gate.open_session()
    b = engine.gate.open_session()
    assert a.session_id != b.session_id


# -- step ----------------------------------------------------------------------


def test_step_executes_search_action(engine):
    planner = _planner(
        ScriptRule(
            text="I need a new superalloy with little chromium",
            decision=PlannerDecision(
                assistant_message="Searching the registry.",
                proposed_action=ProposedAction("search_workflows", {"query": "alloy design"}),
            ),
        )
    )
    session = engine.gate.open_session()
    result = engine.gate.step(session, "I need a new superalloy with little chromium", planner)
    assert result.action == "search_workflows"
    assert result.action_result[0]["workflow_id"] == "alloy_inverse_design"
    assert session.action_log[-1]["action"] == "search_workflows"
    assert [m["role"] for m in session.messages] == ["user", "assistant"]


def test_step_routes_execute_proposal_into_draft_invocation(engine):
    planner = _planner(
        ScriptRule(
            text="run it",
            decision=PlannerDecision(
                assistant_message="Building the invocation.",
                proposed_action=ProposedAction("execute_workflow", {"workflow_id": "alloy_inverse_design"}),
            ),
        )
    )
    session = engine.gate.open_session()
    result = engine.gate.step(session, "run it", planner)
    assert result.invocation is not None
    assert result.invocation.state == "draft"
    assert [p.parameter for p in result.prompts] == ["dataset_id", "target_properties"]
    assert all(p.reason == "missing" for p in result.prompts)
    assert engine.executor.submission_count == 0


def test_unknown_action_is_refused_without_execution(engine):
    planner = _planner(
        ScriptRule(
            text="wipe everything",
            decision=PlannerDecision(
                assistant_message="Sure.",
                proposed_action=ProposedAction("delete_registry", {}),
            ),
        )
    )
    session = engine.gate.open_session()
    log_before = len(session.action_log)
    result = engine.gate.step(session, "wipe everything", planner)
    assert result.refusal
    assert result.action is None
    # only the refusal entry lands in the log
    assert len(session.action_log) == log_before + 1
    assert "refused" in session.action_log[-1]


def test_bad_action_arguments_are_refused(engine):
    planner = _planner(
        ScriptRule(
            text="find",
            decision=PlannerDecision(
                assistant_message="Searching.",
                proposed_action=ProposedAction("search_workflows", {"query": ""}),
            ),
        )
    )
    session = engine.gate.open_session()
    result = engine.gate.step(session, "find", planner)
    assert result.refusal and result.action is None


def test_planner_unavailable_keeps_session_usable(engine):
    class DownPlanner:
        def decide(self, context):
            raise PlannerUnavailable("adapter offline")

    session = engine.gate.open_session()
    with pytest.raises(PlannerUnavailable):
        engine.gate.step(session, "hello", DownPlanner())
    result = engine.gate.step(
        session,
        "hello again",
        _planner(ScriptRule(text="hello again", decision=PlannerDecision(assistant_message="hi"))),
    )
    assert result.assistant_message == "hi"


def test_get_parameters_selects_workflow(engine):
    planner = _planner(
        ScriptRule(
            text="details",
            decision=PlannerDecision(
                assistant_message="Fetching schema.",
                proposed_action=ProposedAction("get_parameters", {"workflow_id": "basic_data_analysis"}),
            ),
        )
    )
    session = engine.gate.open_session()
    result = engine.gate.step(session, "details", planner)
    assert "dataset_file" in result.action_result
    assert session.selected_workflow == "basic_data_analysis"


def test_list_datasets_action(engine):
    planner = _planner(
        ScriptRule(
            text="what data",
            decision=PlannerDecision(
                assistant_message="Listing datasets.",
                proposed_action=ProposedAction("list_datasets", {}),
            ),
        )
    )
    session = engine.gate.open_session()
    result = engine.gate.step(session, "what data", planner)
    assert [d["name"] for d in result.action_result] == ["materials_sample", "superalloys"]


# -- propose / clarify -----------------------------------------------------------


def test_full_parameter_block_validates(engine):
    session = engine.gate.open_session()
    invocation, prompts = engine.gate.propose_invocation(
        session, "alloy_inverse_design", None, dict(ALLOY_PARAMS)
    )
    assert prompts == []
    assert invocation.state == "validated"


def test_missing_required_parameter_prompts(engine):
    session = engine.gate.open_session()
    params = {k: v for k, v in ALLOY_PARAMS.items() if k != "target_properties"}
    invocation, prompts = engine.gate.propose_invocation(session, "alloy_inverse_design", None, params)
    assert invocation.state == "draft"
    assert [(p.parameter, p.reason) for p in prompts] == [("target_properties", "missing")]


def test_wrong_type_prompts_type_mismatch(engine):
    session = engine.gate.open_session()
    params = dict(ALLOY_PARAMS, n_candidates="fifty")
    invocation, prompts = engine.gate.propose_invocation(session, "alloy_inverse_design", None, params)
    assert invocation.state == "draft"
    assert [(p.parameter, p.reason) for p in prompts] == [("n_candidates", "type_mismatch")]
    assert "integer" in prompts[0].expected


def test_unknown_workflow_is_not_found(engine):
    session = engine.gate.open_session()
    with pytest.raises(NotFound):
        engine.gate.propose_invocation(session, "ghost_flow", None, {})


def test_clarify_shrinks_prompts_then_validates(engine):
    session = engine.gate.open_session()
    invocation, prompts = engine.gate.propose_invocation(session, "alloy_inverse_design", None, {})
    assert [p.parameter for p in prompts] == ["dataset_id", "target_properties"]

    invocation, prompts = engine.gate.clarify(session, invocation, "dataset_id", ALLOY_DATASET_ID)
    assert [p.parameter for p in prompts] == ["target_properties"]
    assert invocation.state == "draft"

    invocation, prompts = engine.gate.clarify(
        session, invocation, "target_properties", ["yield_strength", "creep_life"]
    )
    assert prompts == []
    assert invocation.state == "validated"


def test_clarify_constraint_violation_lists_allowed_values(engine):
    session = engine.gate.open_session()
    invocation, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, {})
    invocation, prompts = engine.gate.clarify(session, invocation, "validation_strategy", "7-fold")
    strategy_prompt = next(p for p in prompts if p.parameter == "validation_strategy")
    assert strategy_prompt.reason == "constraint_violation"
    assert "leave-one-out" in strategy_prompt.expected


def test_clarify_unknown_parameter(engine):
    session = engine.gate.open_session()
    invocation, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, {})
    with pytest.raises(UnknownParameter):
        engine.gate.clarify(session, invocation, "chrominance", 1)


def test_prompts_follow_schema_declaration_order(engine):
    session = engine.gate.open_session()
    params = {"n_candidates": "many", "dataset_id": "", "validation_strategy": "7-fold"}
    invocation, prompts = engine.gate.propose_invocation(session, "alloy_inverse_design", None, params)
    assert [p.parameter for p in prompts] == [
        "dataset_id",
        "target_properties",
        "n_candidates",
        "validation_strategy",
    ]


def test_clarification_prompt_count_equals_defect_count(engine):
    session = engine.gate.open_session()
    params = {
        "dataset_id": "",
        "target_properties": [],
        "n_candidates": 0,
        "validation_strategy": "9-fold",
    }
    _, prompts = engine.gate.propose_invocation(session, "alloy_inverse_design", None, params)
    assert len(prompts) == 4
    assert len({p.parameter for p in prompts}) == 4


# -- approve / dispatch -------------------------------------------------------------


def test_approve_then_dispatch_runs(engine):
    session = engine.gate.open_session()
    invocation, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, dict(ALLOY_PARAMS))
    engine.gate.approve(session, invocation)
    assert invocation.state == "approved"
    run_id = engine.gate.dispatch(session, invocation)
    assert engine.executor.wait(run_id) == "succeeded"
    assert session.last_run_ids == [run_id]
    assert invocation.state == "dispatched"


def test_approving_a_draft_is_refused(engine):
    session = engine.gate.open_session()
    invocation, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, {})
    with pytest.raises(NotValidated):
        engine.gate.approve(session, invocation)


def test_approve_is_idempotent(engine):
    session = engine.gate.open_session()
    invocation, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, dict(ALLOY_PARAMS))
    engine.gate.approve(session, invocation)
    approvals = [e for e in session.action_log if e.get("action") == "approve"]
    engine.gate.approve(session, invocation)
    assert [e for e in session.action_log if e.get("action") == "approve"] == approvals
    assert invocation.state == "approved"


def test_dispatching_a_draft_is_refused(engine):
    session = engine.gate.open_session()
    invocation, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, {})
    runs_before = engine.run_store.count()
    with pytest.raises(NotValidated):
        engine.gate.dispatch(session, invocation)
    assert engine.run_store.count() == runs_before


def test_registry_drift_between_approve_and_dispatch_is_gate_regression(engine):
    session = engine.gate.open_session()
    invocation, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, dict(ALLOY_PARAMS))
    engine.gate.approve(session, invocation)
    engine.registry.retire("tools", "surrogate_model_trainer", "2.1.0")
    runs_before = engine.run_store.count()
    with pytest.raises(GateRegression):
        engine.gate.dispatch(session, invocation)
    assert engine.run_store.count() == runs_before
    assert engine.executor.submission_count == 0


def test_clarify_after_validation_requires_amend(engine):
    session = engine.gate.open_session()
    invocation, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, dict(ALLOY_PARAMS))
    assert invocation.state == "validated"
    with pytest.raises(GateStateError):
        engine.gate.clarify(session, invocation, "n_candidates", 10)


# -- amendment ----------------------------------------------------------------------


def test_amend_changes_exactly_one_field(engine):
    session = engine.gate.open_session()
    prior, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, dict(ALLOY_PARAMS))
    amended, prompts = engine.gate.amend_invocation(
        session, prior, {"validation_strategy": "leave-one-out"}
    )
    assert prompts == []
    assert amended.state == "validated"
    assert amended.invocation_id != prior.invocation_id
    assert amended.parent_invocation == prior.invocation_id
    changed = {
        key
        for key in set(prior.parameters) | set(amended.parameters)
        if prior.parameters.get(key) != amended.parameters.get(key)
    }
    assert changed == {"validation_strategy"}


def test_amend_with_empty_overrides_copies_parameters(engine):
    session = engine.gate.open_session()
    prior, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, dict(ALLOY_PARAMS))
    amended, _ = engine.gate.amend_invocation(session, prior, {})
    assert amended.parameters == prior.parameters
    assert amended.invocation_id != prior.invocation_id
    assert amended.parent_invocation == prior.invocation_id


def test_amend_with_bad_value_goes_back_to_draft(engine):
    session = engine.gate.open_session()
    prior, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, dict(ALLOY_PARAMS))
    amended, prompts = engine.gate.amend_invocation(session, prior, {"validation_strategy": "7-fold"})
    assert amended.state == "draft"
    assert [(p.parameter, p.reason) for p in prompts] == [("validation_strategy", "constraint_violation")]


def test_amend_unknown_override_key(engine):
    session = engine.gate.open_session()
    prior, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, dict(ALLOY_PARAMS))
    with pytest.raises(UnknownParameter):
        engine.gate.amend_invocation(session, prior, {"chrominance": 1})


def test_amendment_equivalence_with_propose(engine):
    import random

    rng = random.Random(13)
    overrides_pool = [
        {"validation_strategy": "leave-one-out"},
        {"validation_strategy": "9-fold"},
        {"n_candidates": 0},
        {"n_candidates": 25},
        {"target_properties": []},
        {"constraints": {"Ni": {"min": 1.0}}},
        {},
    ]
    session = engine.gate.open_session()
    prior, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, dict(ALLOY_PARAMS))
    for _ in range(20):
        overrides = rng.choice(overrides_pool)
        amended, amend_prompts = engine.gate.amend_invocation(session, prior, overrides)
        merged = dict(prior.parameters)
        merged.update(overrides)
        proposed, propose_prompts = engine.gate.propose_invocation(
            session, "alloy_inverse_design", None, merged
        )
        assert [p.to_document() for p in amend_prompts] == [p.to_document() for p in propose_prompts]
        assert amended.state == proposed.state
        assert amended.parameters == proposed.parameters


def test_auto_approve_flag_advances_validated_invocations(tmp_path):
    from tests.conftest import build_engine

    engine = build_engine(tmp_path)
    engine.gate.auto_approve = True
    try:
        session = engine.gate.open_session()
        invocation, prompts = engine.gate.propose_invocation(
            session, "alloy_inverse_design", None, dict(ALLOY_PARAMS)
        )
        assert prompts == []
        assert invocation.state == "approved"
        approvals = [e for e in session.action_log if e.get("action") == "approve"]
        assert approvals and approvals[0]["approver"] == "auto"
    finally:
        engine.shutdown()


# -- invariants -----------------------------------------------------------------------


def test_state_histories_are_prefixes_of_the_lifecycle(engine):
    session = engine.gate.open_session()
    lifecycle = ("draft", "validated", "approved", "dispatched")
    invocation, _ = engine.gate.propose_invocation(session, "alloy_inverse_design", None, {})
    engine.gate.clarify(session, invocation, "dataset_id", ALLOY_DATASET_ID)
    engine.gate.clarify(session, invocation, "target_properties", ["yield_strength"])
    engine.gate.approve(session, invocation)
    engine.gate.dispatch(session, invocation)
    engine.executor.wait(session.last_run_ids[-1])
    for inv in session.invocations.values():
        history = inv.state_history
        # strip clarification resets: every non-draft transition moves one
        # stage forward; draft only reappears after a parameter change
        stages = [s for s in history if s != "draft"]
        assert stages == list(lifecycle[1 : len(stages) + 1])
        assert history[0] == "draft"


def test_scripted_replay_yields_identical_action_logs(tmp_path):
    from tests.conftest import build_engine

    def run_once(base):
        engine = build_engine(base, seed=31)
        planner = _planner(
            ScriptRule(
                text="find alloy flows",
                decision=PlannerDecision(
                    assistant_message="Searching.",
                    proposed_action=ProposedAction("search_workflows", {"query": "alloy design"}),
                ),
            ),
            ScriptRule(
                text="set it up",
                decision=PlannerDecision(
                    assistant_message="Proposing.",
                    proposed_action=ProposedAction(
                        "execute_workflow",
                        {"workflow_id": "alloy_inverse_design", "parameters": dict(ALLOY_PARAMS)},
                    ),
                ),
            ),
        )
        session = engine.gate.open_session()
        engine.gate.step(session, "find alloy flows", planner)
        result = engine.gate.step(session, "set it up", planner)
        engine.gate.approve(session, result.invocation)
        run_id = engine.gate.dispatch(session, result.invocation)
        engine.executor.wait(run_id)
        log = json.dumps(session.action_log, sort_keys=True, default=str)
        engine.shutdown()
        return log

    first = run_once(tmp_path / "a")
    second = run_once(tmp_path / "b")
    assert first == second
