"""In-memory column-ordered table: the runtime dataframe value.

Column types are inferred from CSV as string/number/boolean; empty cells
become None.  Tables are immutable and render to a deterministic document
form, which is what provenance records store.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: tuple[tuple[Any, ...], ...]

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row width does not match the column count")

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list[Any]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def to_document(self) -> dict:
        return {"$table": {"columns": list(self.columns), "rows": [list(row) for row in self.rows]}}

    @classmethod
    def from_document(cls, document: dict) -> "Table":
        inner = document["$table"]
        return cls(columns=tuple(inner["columns"]), rows=tuple(tuple(row) for row in inner["rows"]))

    @classmethod
    def from_rows(cls, columns: Iterable[str], rows: Iterable[Iterable[Any]]) -> "Table":
        return cls(columns=tuple(columns), rows=tuple(tuple(row) for row in rows))

    # -- transformations -----------------------------------------------------

    def distinct_rows(self) -> "Table":
        """Drop duplicate rows, keeping first occurrences in order."""
        seen: set[tuple] = set()
        kept = []
        for row in self.rows:
            if row not in seen:
                seen.add(row)
                kept.append(row)
        return Table(columns=self.columns, rows=tuple(kept))

    def drop_incomplete(self) -> "Table":
        return Table(columns=self.columns, rows=tuple(row for row in self.rows if None not in row))

    def numeric_columns(self) -> list[str]:
        names = []
        for i, name in enumerate(self.columns):
            values = [row[i] for row in self.rows if row[i] is not None]
            if values and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
                names.append(name)
        return names

    def fill_missing(self, strategy: str) -> "Table":
        """Fill missing numeric cells with the column mean or median.

        Missing values in non-numeric columns cannot be filled and raise.
        """
        numeric = set(self.numeric_columns())
        for i, name in enumerate(self.columns):
            if name in numeric:
                continue
            if any(row[i] is None for row in self.rows):
                raise ValueError(
                    f"column {name!r} is not numeric; the {strategy} strategy only fills numeric columns"
                )
        replacements: dict[int, float] = {}
        for i, name in enumerate(self.columns):
            if name not in numeric:
                continue
            values = [row[i] for row in self.rows if row[i] is not None]
            if not values:
                raise ValueError(f"column {name!r} has no values to derive a fill from")
            replacements[i] = statistics.mean(values) if strategy == "fill_mean" else statistics.median(values)
        filled = []
        for row in self.rows:
            filled.append(tuple(replacements.get(i, None) if cell is None else cell for i, cell in enumerate(row)))
        return Table(columns=self.columns, rows=tuple(filled))

    def profile(self) -> dict:
        """Per-column count/mean/min/max; mean only for numeric columns."""
        result = {}
        for i, name in enumerate(self.columns):
            values = [row[i] for row in self.rows if row[i] is not None]
            numeric = [v for v in values if isinstance(v, (int, float)) and not isinstance(v, bool)]
            entry: dict[str, Any] = {"count": len(values)}
            if numeric and len(numeric) == len(values):
                entry["mean"] = statistics.mean(numeric)
                entry["min"] = min(numeric)
                entry["max"] = max(numeric)
            elif values and all(isinstance(v, str) for v in values):
                entry["min"] = min(values)
                entry["max"] = max(values)
            result[name] = entry
        return result


def _coerce_column(values: list[str]) -> list[Any]:
    present = [v for v in values if v != ""]
    out: list[Any] = []
    if present and all(_is_number(v) for v in present):
        for v in values:
            out.append(None if v == "" else _to_number(v))
        return out
    if present and all(v.lower() in ("true", "false") for v in present):
        for v in values:
            out.append(None if v == "" else v.lower() == "true")
        return out
    return [None if v == "" else v for v in values]


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _to_number(text: str) -> int | float:
    try:
        return int(text)
    except ValueError:
        return float(text)


def load_csv(path: Path | str) -> Table:
    """Read a CSV into a typed table; empty cells become None."""
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path} has no header row") from None
        raw_rows = [row for row in reader]
    for row in raw_rows:
        if len(row) != len(header):
            raise ValueError(f"{path}: ragged row {row!r}")
    columns = [[row[i] for row in raw_rows] for i in range(len(header))]
    typed = [_coerce_column(col) for col in columns]
    rows = tuple(tuple(typed[i][r] for i in range(len(header))) for r in range(len(raw_rows)))
    return Table(columns=tuple(header), rows=rows)
