"""The four table-to-text input formats and their inverse parsers.

Grammars (fixed so ablation results stay reproducible):

plain    TSV, exactly render_tsv.
special  cells joined with " | "; a "---" rule line under the header;
         literal "|" inside a cell is doubled.
graph    one line per non-Empty cell: "(row_<i>) -[<column>]-> <value>",
         rows 1-indexed; literal "[" and "]" in the column token are doubled.
nl       one sentence per row; the Synthea demographics schema has a fluent
         template, every other schema uses the generic fallback
         "Row <i>: <col> is <value>; ...". Empty cells are left out.
"""

from __future__ import annotations

import enum
import re
from typing import Mapping, Optional

from .table import (
    Cell,
    ColumnType,
    RaggedRowError,
    Schema,
    Table,
    TableError,
    _parse_typed,
    parse_tsv,
    render_cell,
    render_tsv,
)
from .tasks import TaskInstance
from .templates import render_instruction


class InputFormat(enum.Enum):
    PLAIN = "plain"
    SPECIAL = "special"
    GRAPH = "graph"
    NL = "nl"


def format_from_selector(name: str) -> InputFormat:
    try:
        return InputFormat(name)
    except ValueError:
        raise ValueError(f"unknown format {name!r}; expected plain|special|graph|nl") from None


# ---------------------------------------------------------------------------
# Serializers

NL_TEMPLATES: dict[tuple[str, ...], str] = {
    ("ID", "RACE", "GENDER", "INCOME"): "Patient {ID} is a {RACE} {GENDER} with income {INCOME}.",
}


def _special_escape(text: str) -> str:
    return text.replace("|", "||")


def _graph_escape_column(text: str) -> str:
    return text.replace("[", "[[").replace("]", "]]")


def serialize(table: Table, fmt: InputFormat) -> str:
    if fmt is InputFormat.PLAIN:
        return render_tsv(table)
    if fmt is InputFormat.SPECIAL:
        lines = [" | ".join(_special_escape(c) for c in table.schema.columns)]
        lines.append(" | ".join("---" for _ in table.schema.columns))
        for row in table.rows:
            lines.append(" | ".join(_special_escape(render_cell(c)) for c in row))
        return "\n".join(lines) + "\n"
    if fmt is InputFormat.GRAPH:
        lines = []
        for i, row in enumerate(table.rows, start=1):
            for name, cell in zip(table.schema.columns, row):
                if cell is None:
                    continue
                lines.append(f"(row_{i}) -[{_graph_escape_column(name)}]-> {render_cell(cell)}")
        return "\n".join(lines) + "\n"
    if fmt is InputFormat.NL:
        template = NL_TEMPLATES.get(table.schema.columns)
        lines = []
        for i, row in enumerate(table.rows, start=1):
            cells = dict(zip(table.schema.columns, row))
            if template is not None and all(c is not None for c in row):
                lines.append(template.format(**{k: render_cell(v) for k, v in cells.items()}))
            else:
                parts = [
                    f"{name} is {render_cell(cell)}"
                    for name, cell in cells.items()
                    if cell is not None
                ]
                lines.append(f"Row {i}: " + "; ".join(parts) + ".")
        return "\n".join(lines) + "\n"
    raise TypeError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# Inverse parsers

_RULE_CELL = re.compile(r"^-{3,}$")


def _split_special(line: str) -> list[str]:
    parts = re.split(r"(?<!\|)\|(?!\|)", line)
    return [p.strip().replace("||", "|") for p in parts]


def parse_special(text: str, hints: Optional[Mapping[str, ColumnType]] = None) -> Table:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if len(lines) < 2:
        raise TableError("special format needs a header and a rule line")
    if not all(_RULE_CELL.match(cell) for cell in _split_special(lines[1])):
        raise TableError("second line must be the --- rule line")
    tsv_lines = ["\t".join(_split_special(lines[0]))]
    for line in lines[2:]:
        tsv_lines.append("\t".join(_split_special(line)))
    return parse_tsv("\n".join(tsv_lines) + "\n", hints=hints)


_GRAPH_LINE = re.compile(r"^\(row_(\d+)\) -\[(.+?)\]-> (.*)$")


def parse_graph(text: str, schema: Schema) -> Table:
    """Rebuild a table from graph lines; cells never emitted become Empty."""
    cells: dict[int, dict[str, str]] = {}
    for line in text.split("\n"):
        if not line.strip():
            continue
        m = _GRAPH_LINE.match(line)
        if not m:
            raise TableError(f"bad graph line {line!r}")
        row_idx = int(m.group(1))
        column = m.group(2).replace("[[", "[").replace("]]", "]")
        if column not in schema.columns:
            raise TableError(f"unknown column {column!r} in graph line")
        cells.setdefault(row_idx, {})[column] = m.group(3)
    if not cells:
        return Table(schema=schema, rows=())
    n = max(cells)
    if sorted(cells) != list(range(1, n + 1)):
        raise RaggedRowError("graph rows must be contiguous from row_1")
    rows = []
    for i in range(1, n + 1):
        row: list[Cell] = []
        for name, kind in zip(schema.columns, schema.types):
            raw = cells[i].get(name)
            row.append(None if raw is None else _parse_typed(raw, kind))
        rows.append(tuple(row))
    return Table(schema=schema, rows=tuple(rows))


def parse_back(text: str, fmt: InputFormat, schema: Schema) -> Table:
    """Inverse of serialize for the three lossless formats."""
    hints = dict(zip(schema.columns, schema.types))
    if fmt is InputFormat.PLAIN:
        return parse_tsv(text, hints=hints)
    if fmt is InputFormat.SPECIAL:
        return parse_special(text, hints=hints)
    if fmt is InputFormat.GRAPH:
        return parse_graph(text, schema)
    raise ValueError("natural language format has no parser")


# ---------------------------------------------------------------------------
# Safety check and prompt building


def content_complete(table: Table, rendered: str, fmt: InputFormat) -> bool:
    """True iff every non-Empty cell value appears (escaped or verbatim)."""
    for row in table.rows:
        for cell in row:
            if cell is None:
                continue
            value = render_cell(cell)
            if value in rendered:
                continue
            if fmt is InputFormat.SPECIAL and _special_escape(value) in rendered:
                continue
            return False
    return True


def prompt_text(instance: TaskInstance, fmt: InputFormat) -> str:
    """The instance's instruction with its table serialized in fmt."""
    return render_instruction(
        instance.task, instance.flavor, serialize(instance.table, fmt), instance.params
    )
