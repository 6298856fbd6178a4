"""Tabular core: typing, TSV round trips, filters, error cases."""

from __future__ import annotations

from datetime import date
from decimal import Decimal

import pytest

from ehrtab.rng import Stream
from ehrtab.table import (
    ColumnType,
    DuplicateColumnError,
    EmptyInputError,
    RaggedRowError,
    Table,
    TableError,
    UnknownColumnError,
    filter_rows,
    make_table,
    parse_date,
    parse_tsv,
    render_cell,
    render_tsv,
    table_hash,
)

T = ColumnType.TEXT
I = ColumnType.INTEGER
D = ColumnType.DECIMAL
DT = ColumnType.DATE


def demo_table() -> Table:
    return make_table(
        ["ID", "RACE", "GENDER", "INCOME"],
        [T, T, T, I],
        [
            ("001", "White", "Male", 45000),
            ("002", "Black", "Female", 52000),
            ("003", "White", "Female", 28000),
            ("004", "White", "Male", 36000),
        ],
    )


def test_render_cell_decimal_keeps_scale():
    assert render_cell(Decimal("179235.89")) == "179235.89"
    assert render_cell(Decimal("20000.8")) == "20000.8"
    assert render_cell(Decimal("150341.00")) == "150341.00"
    assert render_cell(Decimal("-13725.74")) == "-13725.74"


def test_render_cell_basic_kinds():
    assert render_cell(None) == ""
    assert render_cell(7) == "7"
    assert render_cell("x") == "x"
    assert render_cell(date(2005, 4, 12)) == "2005-04-12"


def test_decimal_addition_preserves_scale_through_render():
    total = Decimal("67890.25") + Decimal("82450.75")
    assert render_cell(total) == "150341.00"


def test_parse_date_both_formats_one_render():
    assert parse_date("2005-04-12") == parse_date("2005/04/12") == date(2005, 4, 12)
    with pytest.raises(TableError):
        parse_date("04/12/2005")


def test_empty_distinct_from_empty_text_in_memory():
    t = make_table(["A"], [T], [(None,), ("x",)])
    assert t.rows[0][0] is None
    assert t.rows[1][0] == "x"


def test_rect_validation():
    with pytest.raises(RaggedRowError):
        make_table(["A", "B"], [T, T], [("x",)])
    with pytest.raises(DuplicateColumnError):
        make_table(["A", "A"], [T, T], [("x", "y")])
    with pytest.raises(EmptyInputError):
        make_table([], [], [])
    with pytest.raises(TableError):
        make_table(["A"], [I], [("not-int",)])


def test_parse_tsv_infers_numeric_columns():
    t = parse_tsv("NAME\tINCOME\tNOTE\nann\t45000\thello\nbo\t52000\t\n")
    assert t.schema.types == (T, I, T)
    assert t.rows[1][2] is None


def test_parse_tsv_id_column_needs_hint_to_stay_text():
    plain = parse_tsv("ID\tINCOME\n001\t45000\n")
    assert plain.schema.types[0] == I  # zero-padded ids are all-numeric
    hinted = parse_tsv("ID\tINCOME\n001\t45000\n", hints={"ID": T})
    assert hinted.schema.types[0] == T
    assert hinted.rows[0][0] == "001"


def test_parse_tsv_mixed_numeric_column_degrades_to_text():
    t = parse_tsv("DESC\tVALUE\nBP\t120/80\nTemp\t36.6\n")
    assert t.schema.types[1] == T
    assert t.rows[0][1] == "120/80"


def test_parse_tsv_int_plus_decimal_column_is_decimal():
    t = parse_tsv("V\n3\n4.5\n")
    assert t.schema.types[0] == D
    assert t.rows[0][0] == Decimal("3")


def test_parse_tsv_errors():
    with pytest.raises(EmptyInputError):
        parse_tsv("")
    with pytest.raises(EmptyInputError):
        parse_tsv("   \n")
    with pytest.raises(RaggedRowError):
        parse_tsv("A\tB\nx\n")
    with pytest.raises(DuplicateColumnError):
        parse_tsv("A\tA\nx\ty\n")
    with pytest.raises(UnknownColumnError):
        parse_tsv("A\nx\n", hints={"B": T})


def test_parse_tsv_date_hint_normalizes_slashes():
    t = parse_tsv("START\n2005/04/12\n2010-01-03\n", hints={"START": DT})
    assert render_tsv(t) == "START\n2005-04-12\n2010-01-03\n"


def test_round_trip_verbatim_decimal():
    text = "ID\tHEALTHCARE\tINCOME\n003\t145000.35\t179235.89\n"
    t = parse_tsv(text, hints={"ID": T})
    assert render_tsv(t) == text


def test_filter_rows_d_u1_style():
    t = demo_table()
    got = filter_rows(t, lambda r: r["RACE"] == "White" and r["INCOME"] > 30000)
    assert [r[0] for r in got.rows] == ["001", "004"]
    assert got.schema == t.schema


def test_filter_rows_unknown_column():
    with pytest.raises(UnknownColumnError):
        filter_rows(demo_table(), lambda r: r["NOPE"] == 1)


def test_table_is_immutable():
    t = demo_table()
    with pytest.raises(Exception):
        t.rows = ()


def test_table_hash_changes_with_content():
    a = demo_table()
    b = make_table(
        ["ID", "RACE", "GENDER", "INCOME"],
        [T, T, T, I],
        [("001", "White", "Male", 45001)],
    )
    assert table_hash(a) != table_hash(b)
    assert table_hash(a) == table_hash(demo_table())


def _random_table(st: Stream) -> Table:
    """Random table avoiding Text('') and tab/newline in text cells."""
    n_cols = st.randint(1, 5)
    n_rows = st.randint(1, 8)
    cols = [f"C{i}" for i in range(n_cols)]
    kinds = [st.choice([T, I, D, DT]) for _ in range(n_cols)]
    words = ["alpha", "beta", "x y", "36.6C", "n/a", "White", "> 89"]
    rows = []
    for _ in range(n_rows):
        row = []
        for kind in kinds:
            if st.chance(1, 6):
                row.append(None)
            elif kind is T:
                row.append(st.choice(words))
            elif kind is I:
                row.append(st.randint(-500, 500))
            elif kind is D:
                row.append(st.decimal(Decimal("-99.99"), Decimal("99.99"), 2))
            else:
                row.append(date(st.randint(1990, 2024), st.randint(1, 12), st.randint(1, 28)))
        rows.append(tuple(row))
    return make_table(cols, kinds, rows)


def test_round_trip_property_seeded():
    st = Stream(20240817)
    for _ in range(200):
        t = _random_table(st)
        hints = dict(zip(t.schema.columns, t.schema.types))
        back = parse_tsv(render_tsv(t), hints=hints)
        assert back == t
