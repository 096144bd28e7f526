"""Tool adapters: the runtime behind registered tools.

Each adapter implements one tool id + version and maps typed inputs plus a
literal parameter map to typed outputs.  The built-ins are deterministic:
identical inputs, parameters, and seed produce identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import random
from typing import Any, Mapping, Protocol

from schemagate.datasets import DatasetStore
from schemagate.errors import AdapterMissing
from schemagate.tables import Table, load_csv


class ToolAdapter(Protocol):
    tool_id: str
    version: str

    def run(self, inputs: Mapping[str, Any], parameters: Mapping[str, Any]) -> dict[str, Any]: ...


class AdapterRegistry:
    """Resolves tool ids to the adapters that implement them."""

    def __init__(self, adapters: list[ToolAdapter] | None = None):
        self._adapters: dict[str, ToolAdapter] = {}
        for adapter in adapters or []:
            self.register(adapter)

    def register(self, adapter: ToolAdapter) -> None:
        self._adapters[adapter.tool_id] = adapter

    def resolve(self, tool_id: str) -> ToolAdapter:
        adapter = self._adapters.get(tool_id)
        if adapter is None:
            raise AdapterMissing(f"no adapter registered for tool {tool_id!r}")
        return adapter

    def has(self, tool_id: str) -> bool:
        return tool_id in self._adapters

    def versions(self) -> dict[str, str]:
        return {tool_id: adapter.version for tool_id, adapter in sorted(self._adapters.items())}


def _stable_digest(*parts: Any) -> str:
    payload = json.dumps([_plain(p) for p in parts], sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _plain(value: Any) -> Any:
    if isinstance(value, Table):
        return value.to_document()
    if isinstance(value, Mapping):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class DataLoaderAdapter:
    """Reads a CSV dataset from disk into a table value."""

    tool_id = "data_loader"
    version = "1.0.0"

    def run(self, inputs: Mapping[str, Any], parameters: Mapping[str, Any]) -> dict[str, Any]:
        file_type = parameters.get("file_type", "csv")
        if file_type != "csv":
            raise ValueError(f"unsupported file type {file_type!r}")
        dataset_file = parameters["dataset_file"]
        return {"data": load_csv(dataset_file)}


class DataCleanerAdapter:
    """remove_duplicates and handle_missing with remove/fill_mean/fill_median."""

    tool_id = "data_cleaner"
    version = "1.0.0"

    def run(self, inputs: Mapping[str, Any], parameters: Mapping[str, Any]) -> dict[str, Any]:
        table: Table = inputs["data"]
        operations = parameters["operations"]
        strategy = parameters.get("missing_strategy", "remove")
        for operation in operations:
            if operation == "remove_duplicates":
                table = table.distinct_rows()
            elif operation == "handle_missing":
                if strategy == "remove":
                    table = table.drop_incomplete()
                elif strategy in ("fill_mean", "fill_median"):
                    table = table.fill_missing(strategy)
                else:
                    raise ValueError(f"unknown missing_strategy {strategy!r}")
            else:
                raise ValueError(f"unknown cleaning operation {operation!r}")
        return {"cleaned_data": table}


class DataAnalyzerAdapter:
    """Statistical profile of a table plus an optional text summary."""

    tool_id = "data_analyzer"
    version = "1.0.0"

    def run(self, inputs: Mapping[str, Any], parameters: Mapping[str, Any]) -> dict[str, Any]:
        table: Table = inputs["data"]
        analysis_type = parameters.get("analysis_type", "dataset_profile")
        if analysis_type != "dataset_profile":
            raise ValueError(f"unknown analysis_type {analysis_type!r}")
        profile = table.profile()
        summary = ""
        if parameters.get("generate_summary", True):
            summary = (
                f"{table.row_count} rows across {len(table.columns)} columns "
                f"({', '.join(table.columns)})"
            )
        return {"profile": profile, "summary": summary}


class AlloyDatasetFetcherAdapter:
    """Loads a registered dataset by id into a table value."""

    tool_id = "alloy_dataset_fetcher"
    version = "1.0.0"

    def __init__(self, datasets: DatasetStore):
        self._datasets = datasets

    def run(self, inputs: Mapping[str, Any], parameters: Mapping[str, Any]) -> dict[str, Any]:
        dataset_id = parameters["dataset_id"]
        return {"data": load_csv(self._datasets.path_of(dataset_id))}


class SurrogateTrainerAdapter:
    """Deterministic stand-in for surrogate model training.

    The fit metrics are a stable function of the training data, the target
    columns, and the validation strategy, so replays are byte-identical and
    strategy changes are observable in run comparisons.
    """

    tool_id = "surrogate_model_trainer"
    version = "2.1.0"

    def run(self, inputs: Mapping[str, Any], parameters: Mapping[str, Any]) -> dict[str, Any]:
        table: Table = inputs["dataset"]
        targets = list(parameters["target_properties"])
        strategy = parameters.get("validation_strategy", "5-fold")
        missing = [t for t in targets if t not in table.columns]
        if missing:
            raise ValueError("target properties not in dataset: " + ", ".join(sorted(missing)))
        digest = _stable_digest(table, targets, strategy)
        r2 = round(0.80 + (int(digest[:8], 16) % 1500) / 10000.0, 4)
        rmse = round(1.0 + (int(digest[8:16], 16) % 5000) / 1000.0, 4)
        return {
            "model_id": f"model-{digest[:12]}",
            "metrics": {"r2_score": r2, "rmse": rmse},
        }


class MaterialsPropertyPredictorAdapter(SurrogateTrainerAdapter):
    """Trains and scores a surrogate, echoing per-target predictions."""

    tool_id = "materials_property_predictor"
    version = "2.1.0"

    def run(self, inputs: Mapping[str, Any], parameters: Mapping[str, Any]) -> dict[str, Any]:
        table: Table = inputs["dataset"]
        targets = list(inputs.get("target_columns") or parameters.get("target_properties", []))
        strategy = parameters.get("validation_strategy", "5-fold")
        digest = _stable_digest(table, targets, strategy)
        r2 = round(0.80 + (int(digest[:8], 16) % 1500) / 10000.0, 4)
        rmse = round(1.0 + (int(digest[8:16], 16) % 5000) / 1000.0, 4)
        predictions = Table.from_rows(
            ["target", "predicted_mean"],
            [
                (t, round(sum(v for v in table.column(t) if v is not None) / max(table.row_count, 1), 4))
                for t in targets
                if t in table.columns
            ],
        )
        return {
            "model_id": f"model-{digest[:12]}",
            "metrics": {"r2_score": r2, "rmse": rmse},
            "predictions": predictions,
        }


class InverseDesignerAdapter:
    """Generates candidate compositions under min/max element constraints."""

    tool_id = "inverse_designer"
    version = "1.2.0"

    def __init__(self, seed: int = 0):
        self._seed = seed

    def run(self, inputs: Mapping[str, Any], parameters: Mapping[str, Any]) -> dict[str, Any]:
        model_id = inputs["model_id"]
        constraints: Mapping[str, Any] = parameters.get("constraints", {}) or {}
        n_candidates = parameters.get("n_candidates", 50)
        digest = _stable_digest(model_id, dict(constraints), n_candidates, self._seed)
        rng = random.Random(int(digest[:16], 16))
        elements = sorted(constraints.keys()) or ["Cr", "Co"]
        columns = ["candidate_id", *elements, "score"]
        rows = []
        for i in range(int(n_candidates)):
            row: list[Any] = [f"cand-{i:04d}"]
            for element in elements:
                bounds = constraints.get(element, {}) if isinstance(constraints.get(element), Mapping) else {}
                low = float(bounds.get("min", 0.0))
                high = float(bounds.get("max", max(low + 1.0, 25.0)))
                row.append(round(rng.uniform(low, high), 3))
            row.append(round(rng.uniform(0.0, 1.0), 4))
            rows.append(tuple(row))
        return {"candidates": Table.from_rows(columns, rows)}


def builtin_adapters(datasets: DatasetStore, seed: int = 0) -> AdapterRegistry:
    """All adapters shipped with the engine."""
    return AdapterRegistry(
        [
            DataLoaderAdapter(),
            DataCleanerAdapter(),
            DataAnalyzerAdapter(),
            AlloyDatasetFetcherAdapter(datasets),
            SurrogateTrainerAdapter(),
            MaterialsPropertyPredictorAdapter(),
            InverseDesignerAdapter(seed),
        ]
    )
