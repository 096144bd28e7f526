"""Dataset store: registered CSV files plus a JSON index.

Layout: ``<root>/datasets/<uuid>.csv`` and ``<root>/datasets/index.json``.
"""

from __future__ import annotations

import csv
import json
import shutil
from dataclasses import dataclass
from pathlib import Path

from schemagate.errors import NotFound, StorageError
from schemagate.ids import IdSource


@dataclass(frozen=True)
class DatasetDescriptor:
    dataset_id: str
    name: str
    format: str
    columns: tuple[str, ...]
    row_count: int
    uri: str

    def to_document(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "name": self.name,
            "format": self.format,
            "columns": list(self.columns),
            "row_count": self.row_count,
            "uri": self.uri,
        }


class DatasetStore:
    """CSV datasets addressable by UUID, listable by name."""

    def __init__(self, root: Path | str, ids: IdSource | None = None):
        self.root = Path(root) / "datasets"
        self.root.mkdir(parents=True, exist_ok=True)
        self._ids = ids or IdSource()

    @property
    def _index_path(self) -> Path:
        return self.root / "index.json"

    def _read_index(self) -> dict:
        if not self._index_path.exists():
            return {}
        try:
            return json.loads(self._index_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageError(f"dataset index unreadable: {exc}") from exc

    def _write_index(self, index: dict) -> None:
        tmp = self._index_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
        tmp.replace(self._index_path)

    def register(self, csv_path: Path | str, name: str | None = None, dataset_id: str | None = None) -> DatasetDescriptor:
        """Copy a CSV into the store and index its columns and row count."""
        source = Path(csv_path)
        if not source.exists():
            raise NotFound(f"no such file: {source}")
        with source.open(newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise StorageError(f"{source} has no header row") from None
            if len(set(header)) != len(header):
                raise StorageError(f"{source} has duplicate column names")
            row_count = sum(1 for _ in reader)
        dataset_id = dataset_id or self._ids.uuid()
        target = self.root / f"{dataset_id}.csv"
        shutil.copyfile(source, target)
        descriptor = DatasetDescriptor(
            dataset_id=dataset_id,
            name=name or source.stem,
            format="csv",
            columns=tuple(header),
            row_count=row_count,
            uri=str(target),
        )
        index = self._read_index()
        index[dataset_id] = descriptor.to_document()
        self._write_index(index)
        return descriptor

    def get(self, dataset_id: str) -> DatasetDescriptor:
        entry = self._read_index().get(dataset_id)
        if entry is None:
            raise NotFound(f"no dataset {dataset_id!r}")
        return DatasetDescriptor(
            dataset_id=entry["dataset_id"],
            name=entry["name"],
            format=entry["format"],
            columns=tuple(entry["columns"]),
            row_count=entry["row_count"],
            uri=entry["uri"],
        )

    def list(self) -> list[DatasetDescriptor]:
        """All registered datasets, sorted by name."""
        entries = [self.get(dataset_id) for dataset_id in self._read_index()]
        return sorted(entries, key=lambda d: (d.name, d.dataset_id))

    def path_of(self, dataset_id: str) -> Path:
        return Path(self.get(dataset_id).uri)
