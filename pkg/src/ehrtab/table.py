"""Typed rectangular tables with byte-stable TSV rendering.

Cells are plain Python values: str (Text), int (Integer), decimal.Decimal
(Decimal, which carries an integer mantissa plus scale so "179235.89" survives
round trips verbatim), datetime.date (Date), and None (Empty). Tables are
immutable; every transform returns a new Table.

Boundary: TSV renders both Empty and Text("") as an empty field and parses an
empty field back as Empty, so the round-trip guarantee covers tables that do
not contain Text("").
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from decimal import Decimal
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence, Union

Cell = Union[str, int, Decimal, date, None]


class TableError(ValueError):
    """Base class for table construction and parse failures."""


class RaggedRowError(TableError):
    pass


class DuplicateColumnError(TableError):
    pass


class EmptyInputError(TableError):
    pass


class UnknownColumnError(TableError, KeyError):
    pass


class ColumnType(Enum):
    TEXT = "text"
    INTEGER = "integer"
    DECIMAL = "decimal"
    DATE = "date"


@dataclass(frozen=True)
class Schema:
    """Ordered column names with declared types."""

    columns: tuple[str, ...]
    types: tuple[ColumnType, ...]

    def __post_init__(self):
        if len(self.columns) != len(self.types):
            raise TableError("schema columns and types differ in length")
        if len(set(self.columns)) != len(self.columns):
            raise DuplicateColumnError("duplicate column name in schema")
        if not self.columns:
            raise EmptyInputError("schema needs at least one column")

    def index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise UnknownColumnError(name) from None


_INT_RE = re.compile(r"-?\d+$")
_DEC_RE = re.compile(r"-?\d+\.\d+$")
_DATE_ISO_RE = re.compile(r"(\d{4})-(\d{2})-(\d{2})$")
_DATE_SLASH_RE = re.compile(r"(\d{4})/(\d{2})/(\d{2})$")


def parse_date(text: str) -> date:
    """Accepts YYYY-MM-DD or YYYY/MM/DD."""
    m = _DATE_ISO_RE.match(text) or _DATE_SLASH_RE.match(text)
    if not m:
        raise TableError(f"not a date: {text!r}")
    return date(int(m.group(1)), int(m.group(2)), int(m.group(3)))


def render_cell(value: Cell) -> str:
    """Canonical text for one cell; Empty renders as the empty string."""
    if value is None:
        return ""
    if isinstance(value, bool):
        raise TableError("bool is not a cell type")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Decimal):
        return format(value, "f")
    if isinstance(value, date):
        return value.isoformat()
    return value


def _parse_typed(text: str, kind: ColumnType) -> Cell:
    if text == "":
        return None
    if kind is ColumnType.INTEGER:
        if not _INT_RE.match(text):
            raise TableError(f"not an integer: {text!r}")
        return int(text)
    if kind is ColumnType.DECIMAL:
        if not (_INT_RE.match(text) or _DEC_RE.match(text)):
            raise TableError(f"not a decimal: {text!r}")
        return Decimal(text)
    if kind is ColumnType.DATE:
        return parse_date(text)
    return text


class Row:
    """Read-only view of one row, addressable by column name."""

    __slots__ = ("_schema", "_cells")

    def __init__(self, schema: Schema, cells: tuple[Cell, ...]):
        self._schema = schema
        self._cells = cells

    def __getitem__(self, name: str) -> Cell:
        return self._cells[self._schema.index(name)]

    def get(self, name: str, default: Cell = None) -> Cell:
        try:
            return self[name]
        except UnknownColumnError:
            return default

    def cells(self) -> tuple[Cell, ...]:
        return self._cells


@dataclass(frozen=True)
class Table:
    """Immutable rectangular table; construction validates shape and types."""

    schema: Schema
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self):
        width = len(self.schema.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise RaggedRowError(f"row {i} has {len(row)} cells, want {width}")
            for cell, kind in zip(row, self.schema.types):
                _check_cell(cell, kind, i)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> tuple[Cell, ...]:
        idx = self.schema.index(name)
        return tuple(row[idx] for row in self.rows)

    def row_view(self, i: int) -> Row:
        return Row(self.schema, self.rows[i])

    def iter_rows(self) -> Iterable[Row]:
        for cells in self.rows:
            yield Row(self.schema, cells)

    def __iter__(self) -> Iterable[Row]:
        return self.iter_rows()


def _check_cell(cell: Cell, kind: ColumnType, row_idx: int) -> None:
    if cell is None:
        return
    ok = (
        (kind is ColumnType.TEXT and isinstance(cell, str))
        or (kind is ColumnType.INTEGER and isinstance(cell, int) and not isinstance(cell, bool))
        or (kind is ColumnType.DECIMAL and isinstance(cell, Decimal))
        or (kind is ColumnType.DATE and isinstance(cell, date))
    )
    if not ok:
        raise TableError(f"row {row_idx}: cell {cell!r} does not fit {kind.value}")


def make_table(columns: Sequence[str], types: Sequence[ColumnType], rows: Sequence[Sequence[Cell]]) -> Table:
    return Table(Schema(tuple(columns), tuple(types)), tuple(tuple(r) for r in rows))


def _infer_type(values: list[str]) -> ColumnType:
    """Numeric if every non-empty cell is numeric, else Text. Dates need hints."""
    non_empty = [v for v in values if v != ""]
    if not non_empty:
        return ColumnType.TEXT
    if all(_INT_RE.match(v) for v in non_empty):
        return ColumnType.INTEGER
    if all(_INT_RE.match(v) or _DEC_RE.match(v) for v in non_empty):
        return ColumnType.DECIMAL
    return ColumnType.TEXT


def parse_tsv(text: str, hints: Mapping[str, ColumnType] | None = None) -> Table:
    """Parse header + data lines; column types inferred unless hinted."""
    if text.strip() == "":
        raise EmptyInputError("no header line")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header = lines[0].split("\t")
    if len(set(header)) != len(header):
        raise DuplicateColumnError("duplicate column in header")
    raw_rows = []
    for i, line in enumerate(lines[1:]):
        cells = line.split("\t")
        if len(cells) != len(header):
            raise RaggedRowError(f"line {i + 2} has {len(cells)} fields, want {len(header)}")
        raw_rows.append(cells)

    hints = dict(hints or {})
    for name in hints:
        if name not in header:
            raise UnknownColumnError(name)
    types = []
    for j, name in enumerate(header):
        if name in hints:
            types.append(hints[name])
        else:
            types.append(_infer_type([r[j] for r in raw_rows]))

    rows = tuple(
        tuple(_parse_typed(cells[j], types[j]) for j in range(len(header)))
        for cells in raw_rows
    )
    return Table(Schema(tuple(header), tuple(types)), rows)


def render_tsv(table: Table) -> str:
    """Header line + one line per row, LF endings, trailing newline."""
    out = ["\t".join(table.schema.columns)]
    for row in table.rows:
        out.append("\t".join(render_cell(c) for c in row))
    return "\n".join(out) + "\n"


def filter_rows(table: Table, predicate: Callable[[Row], bool]) -> Table:
    """New table with schema unchanged, keeping rows where predicate holds."""
    kept = tuple(cells for cells in table.rows if predicate(Row(table.schema, cells)))
    return Table(table.schema, kept)


def table_hash(table: Table) -> str:
    """Content hash of the canonical TSV rendering."""
    import hashlib

    return hashlib.sha256(render_tsv(table).encode("utf-8")).hexdigest()
