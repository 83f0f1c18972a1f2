import math

import numpy as np
import pytest

from statransport.tables import Table
from statransport.units import parse_grid, parse_quantity


@pytest.mark.parametrize("text,kind,expected", [
    ("1.29mm", "length", 1.29e-3), ("272um", "length", 272e-6), ("1064nm", "length", 1.064e-6),
    ("186ms", "time", 0.186), ("7.16", "frequency", 7.16), ("1kHz", "rate", 1000.0),
    ("400nK", "temperature", 400e-9), ("302deg", "angle", math.radians(302)), ("2", "length", 2.0),
    ("-1e-3", "length", -1e-3), (0.5, "time", 0.5),
])
def test_parse_quantity(text, kind, expected):
    assert parse_quantity(text, kind) == pytest.approx(expected, rel=1e-15)


def test_default_unit_applies_to_bare_numbers():
    assert parse_quantity("302", "angle", "deg") == pytest.approx(math.radians(302))


@pytest.mark.parametrize("text,kind", [("1.2 parsec", "length"), ("ms", "time"), ("3mm", "time"), ("", "length")])
def test_parse_quantity_errors(text, kind):
    with pytest.raises(ValueError):
        parse_quantity(text, kind)


def test_parse_grid():
    assert parse_grid("0:200um:3", "length") == pytest.approx([0, 100e-6, 200e-6])
    assert parse_grid("1,2.5", "number") == pytest.approx([1, 2.5])
    with pytest.raises(ValueError):
        parse_grid("0:1", "number")
    with pytest.raises(ValueError):
        parse_grid("0:1:0", "number")


def test_table_csv_round_trip(tmp_path):
    table = Table.from_columns(a=[1.0, 0.1], b=[math.pi, -2e-300])
    path = tmp_path / "t.csv"
    table.write_csv(path, {"kind": "x"})
    text = path.read_text()
    assert text.startswith("#kind=x\na,b\n")
    back = Table.read_csv(path)
    assert back.columns == ("a", "b") and np.array_equal(back.data, table.data)
    assert len(back) == 2


def test_table_shape_checks():
    with pytest.raises(ValueError):
        Table(("a", "b"), [[1.0]])
    assert len(Table(("a",), [])) == 0
