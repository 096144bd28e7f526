"""Admission gates, versioned persistence, and discovery."""

from __future__ import annotations

import copy
import json
import socket

import pytest

from schemagate.errors import DuplicateVersion, NotFound, Retired
from schemagate.registry import HealthProbe, Registry
from schemagate.ids import TickingClock
from tests.conftest import load_fixture
from tests.oracles import semver_key


@pytest.fixture
def registry(tmp_path) -> Registry:
    return Registry(tmp_path / "registry", clock=TickingClock())


@pytest.fixture
def predictor_doc() -> dict:
    return load_fixture("tools/materials_property_predictor.json")


def _closed_port() -> int:
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    return port


# -- tool admission ---------------------------------------------------------------


def test_predictor_admits_with_stub_probe(registry, predictor_doc):
    report = registry.admit_tool(predictor_doc, HealthProbe(tool_id="materials_property_predictor"))
    assert report.admitted
    assert [c.outcome for c in report.checks] == ["pass", "pass", "pass"]
    assert [c.check for c in report.checks] == [
        "parameter_consistency",
        "documentation_completeness",
        "service_availability",
    ]


def test_empty_description_fails_documentation(registry, predictor_doc):
    document = copy.deepcopy(predictor_doc)
    document["description"] = ""
    report = registry.admit_tool(document, HealthProbe(tool_id="materials_property_predictor"))
    assert not report.admitted
    assert report.failed_checks() == ["documentation_completeness"]


def test_dead_endpoint_fails_service_availability(registry, predictor_doc):
    probe = HealthProbe(
        tool_id="materials_property_predictor",
        mode="endpoint-ping",
        endpoint=f"http://127.0.0.1:{_closed_port()}",
        timeout=200,
    )
    report = registry.admit_tool(predictor_doc, probe)
    assert not report.admitted
    assert report.failed_checks() == ["service_availability"]


def test_live_endpoint_passes_service_availability(registry, predictor_doc):
    listener = socket.socket()
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)
    port = listener.getsockname()[1]
    try:
        probe = HealthProbe(
            tool_id="materials_property_predictor",
            mode="endpoint-ping",
            endpoint=f"http://127.0.0.1:{port}",
            timeout=1000,
        )
        report = registry.admit_tool(predictor_doc, probe)
        assert report.admitted
    finally:
        listener.close()


def test_required_parameter_without_example_fails_documentation(registry, predictor_doc):
    document = copy.deepcopy(predictor_doc)
    del document["parameters"][0]["examples"]
    report = registry.admit_tool(document, HealthProbe(tool_id="materials_property_predictor"))
    assert not report.admitted
    assert report.failed_checks() == ["documentation_completeness"]


def test_probe_shape_is_checked():
    with pytest.raises(ValueError):
        HealthProbe(tool_id="x", mode="endpoint-ping")
    with pytest.raises(ValueError):
        HealthProbe(tool_id="x", mode="declared-stub", endpoint="http://example.org")


# -- immutability and lifecycle ------------------------------------------------------


def test_duplicate_version_rejected_across_restart(tmp_path, predictor_doc):
    first = Registry(tmp_path / "registry", clock=TickingClock())
    report = first.admit_tool(predictor_doc, HealthProbe(tool_id="materials_property_predictor"))
    assert report.admitted
    stored_hash = first.tool_entry("materials_property_predictor", "2.1.0").content_hash

    # a fresh process over the same directory
    second = Registry(tmp_path / "registry", clock=TickingClock())
    with pytest.raises(DuplicateVersion):
        second.admit_tool(predictor_doc, HealthProbe(tool_id="materials_property_predictor"))
    assert second.tool_entry("materials_property_predictor", "2.1.0").content_hash == stored_hash


def test_published_entries_re_pass_admission(registry, predictor_doc):
    registry.admit_tool(predictor_doc, HealthProbe(tool_id="materials_property_predictor"))
    entry = registry.tool_entry("materials_property_predictor", "2.1.0")
    report = registry.admit_tool(dict(entry.document), HealthProbe(tool_id="materials_property_predictor"), dry_run=True)
    assert report.admitted


def test_draft_is_not_resolvable(registry, predictor_doc):
    registry.save_draft(predictor_doc)
    with pytest.raises(NotFound):
        registry.resolve_tool("materials_property_predictor")
    with pytest.raises(NotFound):
        registry.resolve_tool("materials_property_predictor", "2.1.0")


def test_retired_entry_raises_retired(registry, predictor_doc):
    registry.admit_tool(predictor_doc, HealthProbe(tool_id="materials_property_predictor"))
    registry.retire("tools", "materials_property_predictor", "2.1.0")
    with pytest.raises(Retired):
        registry.resolve_tool("materials_property_predictor", "2.1.0")
    with pytest.raises(Retired):
        registry.resolve_tool("materials_property_predictor", "latest")


def test_resolve_latest_uses_semver_order(registry, predictor_doc):
    for version in ("1.0.0", "1.2.0", "1.10.0"):
        document = copy.deepcopy(predictor_doc)
        document["id"] = "data_loader"
        document["dependencies"] = []
        document["version"] = version
        assert registry.admit_tool(document, HealthProbe(tool_id="data_loader")).admitted
    resolved = registry.resolve_tool("data_loader", "latest")
    published = [row["version"] for row in registry.list_entries("tools") if row["id"] == "data_loader"]
    assert resolved.version == sorted(published, key=semver_key)[-1] == "1.10.0"


def test_resolve_unknown_tool(registry):
    with pytest.raises(NotFound):
        registry.resolve_tool("ghost_tool", "latest")


# -- workflow admission ----------------------------------------------------------------


def _populated(registry: Registry) -> Registry:
    for tool_id in ("data_loader", "data_cleaner", "data_analyzer"):
        report = registry.admit_tool(load_fixture(f"tools/{tool_id}.json"), HealthProbe(tool_id=tool_id))
        assert report.admitted
    return registry


def test_analysis_workflow_admits(registry):
    _populated(registry)
    report = registry.admit_workflow(load_fixture("workflows/basic_data_analysis.json"))
    assert report.admitted
    assert registry.resolve_workflow("basic_data_analysis").version == "1.0.0"


def test_two_cycle_rejected_on_acyclicity(registry):
    _populated(registry)
    document = load_fixture("workflows/basic_data_analysis.json")
    document = copy.deepcopy(document)
    document["steps"] = document["steps"][:2]
    document["steps"][0]["dependencies"] = ["clean_data"]
    document["parameter_mappings"] = []
    document["edges"] = [
        {"edge_id": "a", "source_node_id": "load_data", "target_node_id": "clean_data",
         "source_output": "data", "target_input": "data"},
        {"edge_id": "b", "source_node_id": "clean_data", "target_node_id": "load_data",
         "source_output": "cleaned_data", "target_input": "data"},
    ]
    report = registry.admit_workflow(document)
    assert not report.admitted
    assert "acyclicity" in report.failed_checks()


def test_missing_tool_rejected_on_availability(registry):
    _populated(registry)
    document = copy.deepcopy(load_fixture("workflows/basic_data_analysis.json"))
    document["steps"][2]["tool_id"] = "data_profiler"
    report = registry.admit_workflow(document)
    assert not report.admitted
    assert "tool_availability" in report.failed_checks()


# -- discovery -----------------------------------------------------------------------


def _admit_search_fixtures(registry: Registry) -> None:
    _populated(registry)
    for tool_id in ("alloy_dataset_fetcher", "surrogate_model_trainer", "inverse_designer"):
        assert registry.admit_tool(load_fixture(f"tools/{tool_id}.json"), HealthProbe(tool_id=tool_id)).admitted
    assert registry.admit_workflow(load_fixture("workflows/basic_data_analysis.json")).admitted
    assert registry.admit_workflow(load_fixture("workflows/alloy_inverse_design.json")).admitted


def test_search_ranks_alloy_pipeline_first(registry):
    _admit_search_fixtures(registry)
    results = registry.search_workflows("alloy design")
    assert results
    assert results[0]["workflow_id"] == "alloy_inverse_design"
    assert results[0]["score"] >= results[-1]["score"]


def test_search_empty_registry(registry):
    assert registry.search_workflows("anything") == []


def test_search_tie_breaks_lexicographically(registry):
    _populated(registry)
    base = load_fixture("workflows/basic_data_analysis.json")
    for workflow_id in ("twin_b", "twin_a"):
        document = copy.deepcopy(base)
        document["workflow_id"] = workflow_id
        document["name"] = "Twin Profiler"
        document["description"] = "identical twin workflow"
        document["metadata"]["tags"] = ["twin"]
        document["metadata"]["use_cases"] = ["twin case"]
        assert registry.admit_workflow(document).admitted
    results = registry.search_workflows("twin")
    pairs = [(r["workflow_id"], r["score"]) for r in results]
    assert pairs[0][1] == pairs[1][1]
    assert [p[0] for p in pairs] == ["twin_a", "twin_b"]


def test_search_excludes_draft_and_retired(registry):
    _admit_search_fixtures(registry)
    results = registry.search_workflows("data analysis")
    assert any(r["workflow_id"] == "basic_data_analysis" for r in results)
    registry.retire("workflows", "basic_data_analysis", "1.0.0")
    results = registry.search_workflows("data analysis")
    assert not any(r["workflow_id"] == "basic_data_analysis" for r in results)

    draft = copy.deepcopy(load_fixture("workflows/alloy_inverse_design.json"))
    draft["workflow_id"] = "draft_only"
    registry.save_draft(draft)
    assert not any(r["workflow_id"] == "draft_only" for r in registry.search_workflows("alloy design"))


def test_get_parameters_returns_schema_verbatim(registry):
    _admit_search_fixtures(registry)
    schema = registry.get_parameters("basic_data_analysis")
    assert list(schema) == ["dataset_file", "missing_strategy"]
    assert schema["dataset_file"].required is True
    assert schema["dataset_file"].rule("not_empty") is not None
    strategy = schema["missing_strategy"]
    assert strategy.required is False
    assert strategy.default == "remove"
    assert strategy.allowed_values == ("remove", "fill_mean", "fill_median")


def test_get_parameters_unknown_ids(registry):
    _admit_search_fixtures(registry)
    with pytest.raises(NotFound):
        registry.get_parameters("ghost_workflow")
    with pytest.raises(NotFound):
        registry.get_parameters("basic_data_analysis", "9.9.9")


def test_search_excludes_randomly_flipped_statuses(registry):
    import random

    _admit_search_fixtures(registry)
    rng = random.Random(17)
    rows = registry.list_entries("workflows")
    for _ in range(10):
        flipped = {row["id"]: rng.random() < 0.5 for row in rows}
        for row in rows:
            manifest = registry._read_manifest(fresh=True)
            manifest["workflows"][row["id"]][row["version"]]["status"] = (
                "retired" if flipped[row["id"]] else "published"
            )
            registry._write_manifest(manifest)
        hits = {r["workflow_id"] for r in registry.search_workflows("alloy design data analysis")}
        for workflow_id, retired in flipped.items():
            if retired:
                assert workflow_id not in hits


# -- integrity --------------------------------------------------------------------------


def test_integrity_scan_detects_tampering(registry, predictor_doc, tmp_path):
    registry.admit_tool(predictor_doc, HealthProbe(tool_id="materials_property_predictor"))
    assert registry.verify_integrity() == []
    path = registry.root / "tools" / "materials_property_predictor" / "2.1.0.json"
    document = json.loads(path.read_text())
    document["description"] = "tampered"
    path.write_text(json.dumps(document, indent=2) + "\n")
    problems = registry.verify_integrity()
    assert problems and "hash mismatch" in problems[0]
