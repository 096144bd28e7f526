"""Populate a throwaway registry from the shipped fixtures and serve it.

Usage: python3 serve_fixture.py REGISTRY_DIR RUN_DIR PORT FIXTURES_DIR
"""

import json
import pathlib
import sys

import uvicorn

from schemagate.api import create_app
from schemagate.engine import Engine, EngineConfig
from schemagate.registry import HealthProbe

registry_dir, run_dir, port, fixtures_dir = sys.argv[1:5]
fixtures = pathlib.Path(fixtures_dir)

engine = Engine(EngineConfig(registry_dir=registry_dir, run_dir=run_dir))
for path in sorted((fixtures / "tools").glob("*.json")):
    document = json.loads(path.read_text(encoding="utf-8"))
    report = engine.registry.admit_tool(document, HealthProbe(tool_id=document["id"]))
    assert report.admitted, report.to_document()
for name in ("basic_data_analysis", "alloy_inverse_design"):
    document = json.loads((fixtures / "workflows" / f"{name}.json").read_text(encoding="utf-8"))
    report = engine.registry.admit_workflow(document)
    assert report.admitted, report.to_document()
engine.datasets.register(
    fixtures / "datasets" / "superalloys.csv",
    name="superalloys",
    dataset_id="123e4567-e89b-12d3-a456-426614174000",
)

uvicorn.run(create_app(engine), host="127.0.0.1", port=int(port), log_level="warning")
