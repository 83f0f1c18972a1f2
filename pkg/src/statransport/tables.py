"""Column tables emitted by sweeps and simulations."""
import io
from pathlib import Path

import numpy as np


class Table:
    """Named float columns with deterministic CSV rendering."""

    def __init__(self, columns, rows):
        self.columns = tuple(columns)
        data = np.asarray(rows, dtype=float)
        if data.size == 0:
            data = data.reshape(0, len(self.columns))
        if data.ndim != 2 or data.shape[1] != len(self.columns):
            raise ValueError(f"rows must have {len(self.columns)} columns")
        self.data = data

    @classmethod
    def from_columns(cls, **columns):
        names = list(columns)
        return cls(names, np.column_stack([np.asarray(columns[n], dtype=float) for n in names]))

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, name):
        return self.data[:, self.columns.index(name)]

    def to_csv(self, metadata=None):
        buf = io.StringIO()
        for key, value in (metadata or {}).items():
            buf.write(f"#{key}={value}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.data:
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()

    def write_csv(self, path, metadata=None):
        Path(path).write_text(self.to_csv(metadata))

    @classmethod
    def read_csv(cls, path):
        lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        columns = lines[0].split(",")
        rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
        return cls(columns, rows)
