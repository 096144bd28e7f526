"""Acceptance criteria, one test per criterion, each printing a verdict line.

Tolerances are pinned here exactly as stated; nothing is deferred to later
calibration.
"""

from __future__ import annotations

import copy
import json
import random
import time

import pytest
from click.testing import CliRunner

from schemagate.cli import main as cli_main
from schemagate.errors import SchemagateError
from schemagate.planner import PlannerDecision, ProposedAction, ScriptRule, ScriptedPlanner
from schemagate.registry import HealthProbe
from schemagate.runs import compare_runs
from schemagate.schema.defs import StepDefinition, WorkflowDefinition
from schemagate.schema.documents import (
    canonical_json,
    render_tool_document,
    render_workflow_document,
    try_parse_tool_definition,
    try_parse_workflow_definition,
)
from schemagate.validation import check_acyclicity, validate_workflow
from tests.conftest import ALLOY_DATASET_ID, FIXTURES, build_engine, load_fixture
from tests.oracles import dfs_acyclic, distinct_complete_rows


def _verdict(criterion: str) -> None:
    print(f"ACCEPTANCE PASS: {criterion}")


# -- criterion 1: interaction-trace replay ------------------------------------------


def test_trace_replay_over_fixture_registry(tmp_path):
    engine = build_engine(tmp_path)
    engine.shutdown()
    started = time.monotonic()
    runner = CliRunner()
    result = runner.invoke(
        cli_main,
        [
            "--registry-dir", str(tmp_path / "registry"),
            "--run-dir", str(tmp_path / "runs"),
            "session", "replay", str(FIXTURES / "sessions" / "table7.session"),
        ],
        catch_exceptions=False,
    )
    elapsed = time.monotonic() - started
    assert result.exit_code == 0, result.output

    # all 12 display turns complete, in order
    turns = [line.split()[0] for line in result.output.splitlines() if line[:2].strip().isdigit()]
    assert turns == [str(i) for i in range(1, 13)], result.output

    # the script's premature dispatch was refused (a pass means the gate
    # blocked it; a bypass would have diverged the replay)
    assert "turns completed: 10" in result.output
    assert "runs created: 2" in result.output

    run_ids = [line.split()[1] for line in result.output.splitlines() if line.startswith("run ")]
    assert len(run_ids) == 2

    # exactly two provenance records exist afterwards
    summaries = json.loads(
        runner.invoke(
            cli_main,
            ["--registry-dir", str(tmp_path / "registry"), "--run-dir", str(tmp_path / "runs"),
             "--format", "doc", "runs", "list"],
            catch_exceptions=False,
        ).output
    )
    assert len(summaries) == 2

    compare = runner.invoke(
        cli_main,
        ["--registry-dir", str(tmp_path / "registry"), "--run-dir", str(tmp_path / "runs"),
         "--format", "doc", "runs", "compare", run_ids[0], run_ids[1]],
        catch_exceptions=False,
    )
    diff = json.loads(compare.output)
    assert diff["parameter_diff"] == {
        "validation_strategy": {"a": "5-fold", "b": "leave-one-out"}
    }
    assert diff["same_workflow"] is True

    assert elapsed < 5.0, f"replay took {elapsed:.2f}s"
    _verdict(
        "trace replay: 12 turns, premature dispatch refused, two runs, "
        f"single parameter diff, {elapsed:.2f}s < 5s"
    )


# -- criterion 2: reference document fidelity -----------------------------------------


def test_reference_documents_parse_admit_round_trip_and_execute(tmp_path):
    predictor_doc = load_fixture("tools/materials_property_predictor.json")
    analysis_doc = load_fixture("workflows/basic_data_analysis.json")

    tool, tool_diags = try_parse_tool_definition(predictor_doc)
    assert tool is not None and tool_diags == []
    workflow, wf_diags = try_parse_workflow_definition(analysis_doc)
    assert workflow is not None and wf_diags == []

    # canonical round trip: parse -> render -> parse is the identity
    tool_again, _ = try_parse_tool_definition(render_tool_document(tool))
    assert tool_again == tool
    workflow_again, _ = try_parse_workflow_definition(render_workflow_document(workflow))
    assert workflow_again == workflow

    engine = build_engine(tmp_path)  # admission of both documents happens here
    try:
        assert engine.registry.resolve_tool("materials_property_predictor", "2.1.0").version == "2.1.0"
        assert engine.registry.resolve_workflow("basic_data_analysis").workflow_id == "basic_data_analysis"

        session = engine.gate.open_session()
        invocation, prompts = engine.gate.propose_invocation(
            session,
            "basic_data_analysis",
            None,
            {"dataset_file": str(FIXTURES / "datasets" / "materials_sample.csv")},
        )
        assert prompts == []
        engine.gate.approve(session, invocation)
        run_id = engine.gate.dispatch(session, invocation)
        assert engine.executor.wait(run_id) == "succeeded"

        record = engine.executor.get_run(run_id)
        clean_rows = next(s for s in record["steps"] if s["step_id"] == "clean_data")
        oracle_count = distinct_complete_rows(FIXTURES / "datasets" / "materials_sample.csv")
        assert oracle_count == 7
        assert len(clean_rows["outputs"]["cleaned_data"]["$table"]["rows"]) == oracle_count

        # all four provenance categories present
        assert record["workflow_snapshot"]["document"] and record["workflow_snapshot"]["content_hash"]
        assert record["resolved_parameters"]["dataset_file"]
        assert record["started_at"] and record["finished_at"]
        assert record["environment"]["engine_version"] and record["environment"]["tool_adapter_versions"]
    finally:
        engine.shutdown()
    _verdict("reference documents: parse, admit, round-trip; run succeeded with 7 clean rows")


# -- criterion 3: cross-step rejection -------------------------------------------------


def test_cross_step_column_mismatch_is_rejected(tmp_path):
    engine = build_engine(tmp_path)
    try:
        workflow, diags = try_parse_workflow_definition(load_fixture("workflows/alloy_bad_columns.json"))
        assert workflow is not None and diags == []
        report = validate_workflow(workflow, engine.registry)
        assert not report.valid
        findings = report.check("edge_type_compatibility").diagnostics
        assert findings, report.to_document()
        for diagnostic in findings:
            assert diagnostic.check == "edge_type_compatibility"
            assert "yield_strength" in diagnostic.message
            assert "creep_life" in diagnostic.message
        assert engine.run_store.count() == 0
    finally:
        engine.shutdown()
    _verdict("cross-step rejection: edge_type_compatibility names both missing columns, zero runs")


# -- criterion 4: no-bypass fuzz ----------------------------------------------------------


def test_no_bypass_under_randomised_malformed_sequences(tmp_path):
    engine = build_engine(tmp_path)
    rng = random.Random(424242)
    workflow_ids = ["alloy_inverse_design", "basic_data_analysis", "ghost_flow", ""]
    junk_values = [None, "", "x", 0, -3, 3.5, True, [], ["a"], {}, {"k": 1}, "leave-one-out", "7-fold"]
    param_names = [
        "dataset_id", "target_properties", "constraints", "n_candidates",
        "validation_strategy", "dataset_file", "missing_strategy", "bogus",
    ]
    actions = ["search_workflows", "get_parameters", "list_datasets", "execute_workflow", "drop_tables", ""]

    def random_params():
        return {rng.choice(param_names): rng.choice(junk_values) for _ in range(rng.randrange(0, 4))}

    failures = 0
    try:
        session = engine.gate.open_session()
        for i in range(10_000):
            if i % 500 == 0:
                session = engine.gate.open_session()
            op = rng.randrange(4)
            try:
                if op == 0:
                    action = rng.choice(actions)
                    planner = ScriptedPlanner(
                        [
                            ScriptRule(
                                text="fuzz",
                                decision=PlannerDecision(
                                    assistant_message="fuzzing",
                                    proposed_action=ProposedAction(
                                        action,
                                        {"workflow_id": rng.choice(workflow_ids), "parameters": random_params()}
                                        if action == "execute_workflow"
                                        else {"query": rng.choice(["alloy", "", 42])},
                                    ),
                                ),
                            )
                        ]
                    )
                    engine.gate.step(session, "fuzz", planner)
                elif op == 1:
                    engine.gate.propose_invocation(
                        session, rng.choice(workflow_ids), None, random_params()
                    )
                elif op == 2:
                    invocation = session.pending_invocation
                    if invocation is not None:
                        engine.gate.clarify(
                            session, invocation, rng.choice(param_names), rng.choice(junk_values)
                        )
                else:
                    invocation = session.pending_invocation
                    if invocation is not None:
                        engine.gate.amend_invocation(session, invocation, random_params())
            except SchemagateError:
                # typed refusals are the expected response to malformed input;
                # anything else (TypeError, KeyError, ...) fails the criterion
                pass
            if engine.executor.submission_count != 0:
                failures += 1

        assert failures == 0
        assert engine.executor.submission_count == 0
        assert engine.run_store.count() == 0
        for sess in engine.gate.sessions.values():
            for invocation in sess.invocations.values():
                assert invocation.state in ("draft", "validated")
    finally:
        engine.shutdown()
    _verdict("no-bypass fuzz: 10,000 malformed sequences, zero executor submissions")


# -- criterion 5: acyclicity oracle ---------------------------------------------------------


def test_acyclicity_matches_dfs_oracle_on_10000_digraphs():
    rng = random.Random(20260808)
    started = time.monotonic()
    agreements = 0
    trials = 10_000
    for _ in range(trials):
        n = rng.randrange(1, 9)
        nodes = [f"n{i}" for i in range(n)]
        arcs = {
            (nodes[i], nodes[j])
            for i in range(n)
            for j in range(n)
            if i != j and rng.random() < rng.choice((0.1, 0.25, 0.4))
        }
        deps: dict[str, list[str]] = {name: [] for name in nodes}
        for source, target in arcs:
            deps[target].append(source)
        workflow = WorkflowDefinition(
            workflow_id="fuzzgraph",
            name="Fuzz graph",
            description="random digraph",
            version="1.0.0",
            steps=tuple(
                StepDefinition(step_id=name, tool_id="noop", name=name, description="", dependencies=tuple(deps[name]))
                for name in nodes
            ),
        )
        if (check_acyclicity(workflow) == []) == dfs_acyclic(nodes, arcs):
            agreements += 1
    elapsed = time.monotonic() - started
    assert agreements == trials, f"{agreements}/{trials}"
    assert elapsed < 30.0, f"oracle comparison took {elapsed:.1f}s"
    _verdict(f"acyclicity oracle: 10,000/10,000 agreement in {elapsed:.1f}s < 30s")


# -- criterion 6: admission mutation suite ----------------------------------------------------


def test_admission_mutants_fail_exactly_the_named_check(tmp_path):
    import socket

    engine = build_engine(tmp_path, populate_stores=False)
    try:
        base = load_fixture("tools/materials_property_predictor.json")
        stub = HealthProbe(tool_id="materials_property_predictor")

        empty_description = copy.deepcopy(base)
        empty_description["description"] = ""
        report = engine.registry.admit_tool(empty_description, stub)
        assert not report.admitted
        assert report.failed_checks() == ["documentation_completeness"]

        default_outside_allowed = copy.deepcopy(base)
        default_outside_allowed["parameters"][2]["default"] = "7-fold"
        report = engine.registry.admit_tool(default_outside_allowed, stub)
        assert not report.admitted
        assert report.failed_checks() == ["parameter_consistency"]

        probe_socket = socket.socket()
        probe_socket.bind(("127.0.0.1", 0))
        dead_port = probe_socket.getsockname()[1]
        probe_socket.close()
        dead_probe = HealthProbe(
            tool_id="materials_property_predictor",
            mode="endpoint-ping",
            endpoint=f"http://127.0.0.1:{dead_port}",
            timeout=200,
        )
        report = engine.registry.admit_tool(copy.deepcopy(base), dead_probe)
        assert not report.admitted
        assert report.failed_checks() == ["service_availability"]
    finally:
        engine.shutdown()
    _verdict("admission mutations: each mutant fails exactly its named check")


# -- criterion 7: replay determinism -----------------------------------------------------------


def test_identical_invocations_replay_byte_identically(tmp_path):
    engine = build_engine(tmp_path)
    try:
        session = engine.gate.open_session()
        parameters = {"dataset_file": str(FIXTURES / "datasets" / "materials_sample.csv")}
        first, prompts = engine.gate.propose_invocation(session, "basic_data_analysis", None, parameters)
        assert prompts == []
        engine.gate.approve(session, first)
        run_a = engine.gate.dispatch(session, first)
        assert engine.executor.wait(run_a) == "succeeded"

        # identical parameter set, fresh invocation id, same fixed seed
        second, prompts = engine.gate.amend_invocation(session, first, {})
        assert prompts == [] and second.parameters == first.parameters
        engine.gate.approve(session, second)
        run_b = engine.gate.dispatch(session, second)
        assert engine.executor.wait(run_b) == "succeeded"

        record_a = engine.executor.get_run(run_a)
        record_b = engine.executor.get_run(run_b)
        outputs_a = canonical_json([s["outputs"] for s in record_a["steps"]])
        outputs_b = canonical_json([s["outputs"] for s in record_b["steps"]])
        assert outputs_a == outputs_b

        diff = compare_runs(engine.run_store, run_a, run_b)
        assert diff["parameter_diff"] == {}
        assert diff["metric_diff"] == {}
        assert diff["same_workflow"] is True
    finally:
        engine.shutdown()
    _verdict("replay determinism: byte-identical step outputs, empty parameter and metric diffs")
