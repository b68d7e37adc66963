"""CSV result tables with a `#`-prefixed metadata header.

Dialect: comma-separated, `.` decimal point, LF line endings.  Reals are
serialized with 17 significant digits so read(write(table)) reproduces every
value bit-exactly; complex quantities are stored as two real columns.  Files
are written atomically (temp + rename).
"""

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TableSchemaError

_DTYPES = ("int", "float", "str")


@dataclass
class ResultTable:
    columns: tuple
    dtypes: tuple
    rows: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.dtypes = tuple(self.dtypes)
        if len(self.columns) != len(self.dtypes):
            raise TableSchemaError("columns and dtypes length mismatch")
        for d in self.dtypes:
            if d not in _DTYPES:
                raise TableSchemaError(f"unsupported dtype {d!r}")

    def column(self, name: str):
        try:
            i = self.columns.index(name)
        except ValueError:
            raise TableSchemaError(f"no column {name!r}; have {self.columns}") from None
        values = [row[i] for row in self.rows]
        if self.dtypes[i] == "int":
            return np.array(values, dtype=int)
        if self.dtypes[i] == "float":
            return np.array(values, dtype=float)
        return values


def from_arrays(columns, arrays, meta=None) -> ResultTable:
    """Build a table from parallel column arrays, inferring int/float dtypes."""
    cols = []
    dtypes = []
    for name, arr in zip(columns, arrays):
        arr = np.asarray(arr)
        if np.issubdtype(arr.dtype, np.integer):
            dtypes.append("int")
        elif np.issubdtype(arr.dtype, np.floating):
            dtypes.append("float")
        else:
            dtypes.append("str")
        cols.append(arr)
    n_rows = {len(c) for c in cols}
    if len(n_rows) > 1:
        raise TableSchemaError(f"column lengths differ: {sorted(n_rows)}")
    rows = [tuple(col[i].item() if hasattr(col[i], "item") else col[i] for col in cols)
            for i in range(n_rows.pop() if n_rows else 0)]
    return ResultTable(tuple(columns), tuple(dtypes), rows, dict(meta or {}))


def _format_cell(value, dtype: str) -> str:
    if dtype == "int":
        return str(int(value))
    if dtype == "float":
        return format(float(value), ".17g")
    s = str(value)
    if "," in s or "\n" in s:
        raise TableSchemaError(f"string cell may not contain commas or newlines: {s!r}")
    return s


def _parse_cell(text: str, dtype: str):
    try:
        if dtype == "int":
            return int(text)
        if dtype == "float":
            return float(text)
        return text
    except ValueError:
        raise TableSchemaError(f"cannot parse {text!r} as {dtype}") from None


def write_table(path, table: ResultTable) -> None:
    path = Path(path)
    lines = []
    for key, value in table.meta.items():
        lines.append(f"# {key} = {value}")
    lines.append(f"# dtypes = {','.join(table.dtypes)}")
    lines.append(",".join(table.columns))
    for row in table.rows:
        if len(row) != len(table.columns):
            raise TableSchemaError("row width does not match column count")
        lines.append(",".join(_format_cell(v, d) for v, d in zip(row, table.dtypes)))
    data = "\n".join(lines) + "\n"
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_table(path) -> ResultTable:
    path = Path(path)
    meta = {}
    header = None
    dtypes = None
    rows = []
    with open(path, "r", newline="") as handle:
        for raw in handle:
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, value = body.partition(" = ")
                if key == "dtypes":
                    dtypes = tuple(value.split(","))
                elif key:
                    meta[key] = value
                continue
            cells = line.split(",")
            if header is None:
                header = tuple(c.strip() for c in cells)
                if dtypes is None:
                    dtypes = tuple("float" for _ in header)
                if len(dtypes) != len(header):
                    raise TableSchemaError(
                        f"dtypes count {len(dtypes)} != column count {len(header)} in {path}"
                    )
                continue
            if len(cells) != len(header):
                raise TableSchemaError(
                    f"row has {len(cells)} cells, expected {len(header)} in {path}"
                )
            rows.append(tuple(_parse_cell(c, d) for c, d in zip(cells, dtypes)))
    if header is None:
        raise TableSchemaError(f"no header row found in {path}")
    return ResultTable(header, dtypes, rows, meta)
