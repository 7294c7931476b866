"""Matrix ingestion (CSV, .npy) and CSV emission with '#' metadata lines."""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from numpy.lib import format as npy_format

from .errors import InputError, NonFiniteEntry, NotTwoDimensional, ParseError

def _parse_float(text, line, offset):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"not a number: {text.strip()!r}", line=line, offset=offset) from None


def read_csv_matrix(path) -> np.ndarray:
    """Parse a numeric CSV; blank lines and '#' comment lines are skipped.

    Every data row must have the same number of fields.  Positions in errors
    are 1-based line numbers and 0-based character offsets.
    """
    rows, width = [], None
    with open(path, newline="") as fh:
        text = fh.read()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        fields = next(csv.reader([raw]))
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(
                f"expected {width} fields, found {len(fields)}", line=lineno, offset=0
            )
        values, offset = [], 0
        for f in fields:
            values.append(_parse_float(f, lineno, offset))
            offset += len(f) + 1
        rows.append(values)
    if not rows:
        raise NotTwoDimensional("CSV holds no data rows")
    return np.array(rows, dtype=float)


def read_npy_matrix(path) -> np.ndarray:
    """Read .npy version 1.0, little-endian float64, C order, 2-D only."""
    with open(path, "rb") as fh:
        try:
            version = npy_format.read_magic(fh)
        except ValueError:
            raise ParseError("not an .npy file (bad magic)", line=None, offset=0) from None
        if version != (1, 0):
            raise InputError(f".npy version {version[0]}.{version[1]} unsupported; only 1.0 is read")
        try:
            shape, fortran, dtype = npy_format.read_array_header_1_0(fh)
        except ValueError:
            raise ParseError("malformed .npy header", line=None, offset=10) from None
        if dtype.str != "<f8":
            raise InputError(f".npy dtype {dtype.str!r} unsupported; only '<f8' (little-endian float64)")
        if fortran:
            raise InputError(".npy Fortran order unsupported; save in C order")
        if len(shape) != 2:
            raise NotTwoDimensional(f"expected a 2-D array, got shape {shape}")
        offset = fh.tell()
        data = fh.read()
    n = shape[0] * shape[1]
    if len(data) != 8 * n:
        raise ParseError(f"payload holds {len(data)} bytes, expected {8 * n}", line=None, offset=offset)
    return np.frombuffer(data, dtype="<f8").reshape(shape).copy()


def ingest(path, fmt: Optional[str] = None) -> np.ndarray:
    """Load a finite 2-D matrix from CSV or .npy (format inferred from suffix)."""
    path = Path(path)
    if fmt is None:
        fmt = "npy" if path.suffix.lower() == ".npy" else "csv"
    if fmt == "csv":
        a = read_csv_matrix(path)
    elif fmt == "npy":
        a = read_npy_matrix(path)
    else:
        raise InputError(f"unknown format {fmt!r}")
    bad = np.argwhere(~np.isfinite(a))
    if bad.size:
        r, c = (int(v) for v in bad[0])
        raise NonFiniteEntry(r, c, a[r, c])
    return a


def read_vector(path) -> np.ndarray:
    """A weight vector: one value per line, or a single row/column matrix."""
    a = ingest(path)
    if 1 not in a.shape:
        raise NotTwoDimensional(f"weights must be a single row or column, got {a.shape}")
    return a.ravel()


def write_npy(path, a) -> None:
    a = np.ascontiguousarray(a, dtype="<f8")
    np.save(path, a, allow_pickle=False)


# -- CSV output ----------------------------------------------------------------


def fmt_value(v) -> str:
    """17 significant digits for floats; empty field for NaN/None."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return "%.17g" % v
    return str(v)


def config_hash(config: Mapping) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def metadata_lines(meta: Mapping) -> list:
    return [f"# {k}: {v}" for k, v in meta.items()]


def write_table(
    path,
    header: Sequence[str],
    rows: Iterable[Sequence],
    meta: Optional[Mapping] = None,
) -> None:
    buf = _io.StringIO()
    for line in metadata_lines(meta or {}):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_value(v) for v in row])
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(buf.getvalue())
        return
    Path(path).write_text(buf.getvalue())


def read_table(path):
    """Parse a file written by write_table: (metadata dict, header, rows as str)."""
    meta, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition(": ")
            meta[k] = v
        else:
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    return meta, header, list(reader)
