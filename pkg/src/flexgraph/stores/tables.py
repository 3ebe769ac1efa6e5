"""In-memory loader tables and the CSV front door.

The loader assigns internal ids in input-row order, which is what makes
independently-built backends agree on every VertexRef.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..errors import CsvParseError, SchemaMismatch
from ..model import BOOL, FLOAT64, INT64, STRING, PropertyGraphSchema, Value


@dataclass
class VertexTable:
    """Rows for one vertex type: parallel column lists keyed by property name.

    Must include the primary-key property; missing property columns load
    as all-null.
    """

    columns: Dict[str, list] = field(default_factory=dict)

    @property
    def nrows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0


@dataclass
class EdgeTable:
    """Rows for one edge type: endpoint primary keys plus property columns."""

    src_pk: list = field(default_factory=list)
    dst_pk: list = field(default_factory=list)
    columns: Dict[str, list] = field(default_factory=dict)

    @property
    def nrows(self) -> int:
        return len(self.src_pk)


def _parse_cell(text: str, dtype, path: str, line: int) -> Value:
    if text == "":
        return None
    try:
        if dtype == INT64:
            return int(text)
        if dtype == FLOAT64:
            return float(text)
        if dtype == BOOL:
            t = text.strip().lower()
            if t in ("true", "1", "t"):
                return True
            if t in ("false", "0", "f"):
                return False
            raise ValueError(text)
        return text
    except ValueError:
        raise CsvParseError(line, f"{path}: bad {dtype!r} literal {text!r}") from None


def _read_csv(path: Path, want_cols: List[str]) -> Dict[str, list]:
    """Read named columns from a headered CSV. Line numbers are 1-based
    file lines (header is line 1)."""
    out: Dict[str, list] = {c: [] for c in want_cols}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(1, f"{path}: empty file") from None
        missing = [c for c in want_cols if c not in header]
        if missing:
            raise SchemaMismatch(f"{path}: missing columns {missing}")
        pos = {c: header.index(c) for c in want_cols}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvParseError(
                    lineno, f"{path}: expected {len(header)} columns, got {len(row)}")
            for c in want_cols:
                out[c].append(row[pos[c]])
    return out


def load_csv_tables(
    spec: Union[dict, str, Path],
    schema: PropertyGraphSchema,
    base_dir: Optional[Path] = None,
) -> Tuple[Dict[str, VertexTable], Dict[str, EdgeTable]]:
    """Load the CSV files named by a csv-spec document.

    Spec shape: {"vertices":[{"file","type","columns":[...]}],
    "edges":[{"file","type","src_col","dst_col","columns":[...]}]}.
    `columns` lists property names, matched against CSV header names.
    """
    if not isinstance(spec, dict):
        spec_path = Path(spec)
        base_dir = base_dir or spec_path.parent
        spec = json.loads(spec_path.read_text())
    base = Path(base_dir) if base_dir else Path(".")

    vtabs: Dict[str, VertexTable] = {}
    for ent in spec.get("vertices", []):
        decl = schema.vertex_decl(ent["type"])
        cols = list(ent.get("columns", [n for n, _ in decl.properties]))
        if decl.primary_key not in cols:
            raise SchemaMismatch(
                f"vertex spec for {decl.name!r} must include pk {decl.primary_key!r}")
        raw = _read_csv(base / ent["file"], cols)
        table = VertexTable()
        for c in cols:
            dt = decl.property_dtype(c)
            if dt is None:
                raise SchemaMismatch(f"{decl.name} has no property {c!r}")
            table.columns[c] = [
                _parse_cell(t, dt, ent["file"], i + 2) for i, t in enumerate(raw[c])
            ]
        vtabs[decl.name] = table

    etabs: Dict[str, EdgeTable] = {}
    for ent in spec.get("edges", []):
        decl = schema.edge_decl(ent["type"])
        src_decl = schema.vertex_decl(decl.src_type)
        dst_decl = schema.vertex_decl(decl.dst_type)
        cols = list(ent.get("columns", [n for n, _ in decl.properties]))
        raw = _read_csv(base / ent["file"], [ent["src_col"], ent["dst_col"]] + cols)
        table = EdgeTable()
        src_dt = src_decl.property_dtype(src_decl.primary_key)
        dst_dt = dst_decl.property_dtype(dst_decl.primary_key)
        table.src_pk = [
            _parse_cell(t, src_dt, ent["file"], i + 2)
            for i, t in enumerate(raw[ent["src_col"]])
        ]
        table.dst_pk = [
            _parse_cell(t, dst_dt, ent["file"], i + 2)
            for i, t in enumerate(raw[ent["dst_col"]])
        ]
        for c in cols:
            dt = decl.property_dtype(c)
            if dt is None:
                raise SchemaMismatch(f"{decl.name} has no property {c!r}")
            table.columns[c] = [
                _parse_cell(t, dt, ent["file"], i + 2) for i, t in enumerate(raw[c])
            ]
        etabs[decl.name] = table

    return vtabs, etabs
