"""Shared fixtures: a populated registry, datasets, and a wired engine."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from schemagate.engine import Engine, EngineConfig
from schemagate.ids import SeededIdSource, TickingClock
from schemagate.registry import HealthProbe

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

ALLOY_DATASET_ID = "123e4567-e89b-12d3-a456-426614174000"
MATERIALS_DATASET_ID = "550e8400-e29b-41d4-a716-446655440000"

FIXTURE_TOOLS = (
    "data_loader",
    "data_cleaner",
    "data_analyzer",
    "materials_property_predictor",
    "alloy_dataset_fetcher",
    "surrogate_model_trainer",
    "inverse_designer",
    "alloy_dataset_source",
    "property_model_trainer",
)
FIXTURE_WORKFLOWS = ("basic_data_analysis", "alloy_inverse_design")


def load_fixture(relative: str) -> dict:
    return json.loads((FIXTURES / relative).read_text(encoding="utf-8"))


def populate(engine: Engine) -> None:
    """Admit every fixture tool and workflow; register both datasets."""
    for tool_id in FIXTURE_TOOLS:
        report = engine.registry.admit_tool(
            load_fixture(f"tools/{tool_id}.json"), HealthProbe(tool_id=tool_id)
        )
        assert report.admitted, f"{tool_id}: {report.to_document()}"
    for workflow_id in FIXTURE_WORKFLOWS:
        report = engine.registry.admit_workflow(load_fixture(f"workflows/{workflow_id}.json"))
        assert report.admitted, f"{workflow_id}: {report.to_document()}"
    engine.datasets.register(
        FIXTURES / "datasets" / "superalloys.csv", name="superalloys", dataset_id=ALLOY_DATASET_ID
    )
    engine.datasets.register(
        FIXTURES / "datasets" / "materials_sample.csv",
        name="materials_sample",
        dataset_id=MATERIALS_DATASET_ID,
    )


def build_engine(tmp_path: Path, *, seed: int = 7, populate_stores: bool = True) -> Engine:
    engine = Engine(
        EngineConfig(registry_dir=str(tmp_path / "registry"), run_dir=str(tmp_path / "runs"), seed=0),
        clock=TickingClock(),
        ids=SeededIdSource(seed),
    )
    if populate_stores:
        populate(engine)
    return engine


@pytest.fixture
def engine(tmp_path: Path) -> Engine:
    e = build_engine(tmp_path)
    yield e
    e.shutdown()


@pytest.fixture
def empty_engine(tmp_path: Path) -> Engine:
    e = build_engine(tmp_path, populate_stores=False)
    yield e
    e.shutdown()


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
