"""Compressed sparse row matrices and Matrix Market I/O.

The CSR arrays are the canonical representation. A scipy ``csr_matrix``
view over the same arrays is built lazily and only used as the kernel for
matrix-vector products.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, MatrixMarketError

__all__ = [
    "SparseMatrix",
    "from_triplets",
    "from_dense",
    "from_scipy",
    "identity",
    "matvec",
    "parse_matrix_market",
    "read_matrix_market",
    "write_matrix_market",
    "save_matrix_market",
]


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Immutable CSR matrix with float64 values.

    Within every row the column indices are strictly increasing, so two
    matrices holding the same entries always have identical arrays.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", _frozen(self.row_offsets, np.int64))
        object.__setattr__(self, "col_indices", _frozen(self.col_indices, np.int64))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        self._check()

    def _check(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        ro, ci = self.row_offsets, self.col_indices
        if ro.ndim != 1 or ro.shape[0] != self.n_rows + 1:
            raise ValueError("row_offsets must have length n_rows + 1")
        if ro[0] != 0 or ro[-1] != ci.shape[0] or ci.shape != self.values.shape:
            raise ValueError("row_offsets must start at 0 and end at the entry count")
        if np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing inside a row <=> every in-row step is positive
            steps = np.diff(ci)
            row_starts = np.zeros(ci.size, dtype=bool)
            row_starts[ro[:-1][np.diff(ro) > 0]] = True
            if np.any(steps[~row_starts[1:]] <= 0):
                raise ValueError("column indices must be strictly increasing within rows")

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.values.shape[0])

    @property
    def is_square(self):
        return self.n_rows == self.n_cols

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """Read-only scipy view used as the matvec kernel."""
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=self.shape, copy=False
        )

    def row(self, i):
        """Return ``(cols, vals)`` of row ``i``."""
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def diagonal(self) -> np.ndarray:
        d = np.zeros(min(self.shape))
        for i in range(d.shape[0]):
            cols, vals = self.row(i)
            k = np.searchsorted(cols, i)
            if k < cols.shape[0] and cols[k] == i:
                d[i] = vals[k]
        return d

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def triplets(self):
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets))
        return rows, self.col_indices.copy(), self.values.copy()

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            # bitwise comparison, so -0.0 != 0.0 and NaN == NaN
            and self.values.tobytes() == other.values.tobytes()
        )

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def from_triplets(n, entries: Iterable[tuple[int, int, float]], n_cols=None) -> SparseMatrix:
    """Build a CSR matrix from ``(row, col, value)`` triplets.

    Duplicated positions are summed. ``n_cols`` defaults to ``n``.
    """
    n_cols = n if n_cols is None else n_cols
    entries = list(entries)
    if entries:
        rows = np.fromiter((e[0] for e in entries), dtype=np.int64, count=len(entries))
        cols = np.fromiter((e[1] for e in entries), dtype=np.int64, count=len(entries))
        vals = np.fromiter((e[2] for e in entries), dtype=np.float64, count=len(entries))
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    return _from_coo(n, n_cols, rows, cols, vals)


def _from_coo(n_rows, n_cols, rows, cols, vals) -> SparseMatrix:
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if rows.size:
        bad = (rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise DimensionError(
                f"entry ({rows[k]}, {cols[k]}) outside a {n_rows}x{n_cols} matrix"
            )
    # stable sort keeps the summation order of duplicates deterministic
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        new = np.ones(rows.size, dtype=bool)
        new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new)
        with np.errstate(over="ignore"):  # duplicates summing past the range give inf
            vals = np.add.reduceat(vals, starts)
        rows, cols = rows[starts], cols[starts]
    offsets = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=offsets[1:])
    return SparseMatrix(n_rows, n_cols, offsets, cols, vals)


def from_dense(a) -> SparseMatrix:
    """CSR matrix holding the nonzero entries of a dense 2-D array."""
    a = np.asarray(a, dtype=np.float64)
    rows, cols = np.nonzero(a)
    return _from_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])


def from_scipy(m) -> SparseMatrix:
    c = sp.coo_matrix(m)
    return _from_coo(c.shape[0], c.shape[1], c.row, c.col, c.data)


def identity(n) -> SparseMatrix:
    idx = np.arange(n)
    return SparseMatrix(n, n, np.arange(n + 1), idx, np.ones(n))


def matvec(m: SparseMatrix, v) -> np.ndarray:
    """Return ``m @ v``."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != m.n_cols:
        raise DimensionError(f"vector of length {v.shape} does not match {m.n_cols} columns")
    return m.csr @ v


# -- Matrix Market ---------------------------------------------------------

_SUPPORTED_FIELDS = ("real", "integer")
_SUPPORTED_SYMMETRY = ("general", "symmetric")


def _lines(data):
    if isinstance(data, (bytes, bytearray, memoryview)):
        data = bytes(data).decode("ascii", errors="replace")
    elif not isinstance(data, str):
        data = data.read()
        if isinstance(data, bytes):
            data = data.decode("ascii", errors="replace")
    return data.splitlines()


def parse_matrix_market(data) -> SparseMatrix:
    """Parse a Matrix Market coordinate stream.

    Accepts ``bytes``, ``str`` or a readable file object. Symmetric storage
    is expanded to general storage and duplicate entries are summed.
    """
    lines = _lines(data)
    if not lines:
        raise MatrixMarketError("empty input", line=1)
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        raise MatrixMarketError("missing '%%MatrixMarket' banner", line=1)
    obj, fmt, field, symmetry = (h.lower() for h in header[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", line=1)
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format {fmt!r}", line=1)
    if field not in _SUPPORTED_FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r}", line=1)
    if symmetry not in _SUPPORTED_SYMMETRY:
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", line=1)

    pos = 1
    while pos < len(lines) and (not lines[pos].strip() or lines[pos].lstrip().startswith("%")):
        pos += 1
    if pos == len(lines):
        raise MatrixMarketError("missing size line", line=pos + 1)
    size = lines[pos].split()
    try:
        if len(size) != 3:
            raise ValueError
        n_rows, n_cols, count = (int(t) for t in size)
    except ValueError:
        raise MatrixMarketError(f"malformed size line {lines[pos]!r}", line=pos + 1) from None
    if n_rows < 0 or n_cols < 0 or count < 0:
        raise MatrixMarketError("negative size", line=pos + 1)
    if symmetry == "symmetric" and n_rows != n_cols:
        raise MatrixMarketError("symmetric matrix must be square", line=pos + 1)

    rows = np.empty(count, dtype=np.int64)
    cols = np.empty(count, dtype=np.int64)
    vals = np.empty(count, dtype=np.float64)
    k = 0
    for lineno in range(pos + 2, len(lines) + 1):
        text = lines[lineno - 1]
        tok = text.split()
        if not tok or tok[0].startswith("%"):
            continue
        if k == count:
            raise MatrixMarketError("more entries than declared", line=lineno)
        if len(tok) != 3:
            raise MatrixMarketError(f"expected 'row col value', got {text!r}", line=lineno)
        try:
            i, j = int(tok[0]), int(tok[1])
        except ValueError:
            raise MatrixMarketError(f"non-integer index in {text!r}", line=lineno) from None
        try:
            v = int(tok[2]) if field == "integer" else float(tok[2])
        except ValueError:
            raise MatrixMarketError(f"non-numeric value {tok[2]!r}", line=lineno) from None
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise MatrixMarketError(
                f"index ({i}, {j}) out of bounds for {n_rows}x{n_cols}", line=lineno
            )
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != count:
        raise MatrixMarketError(f"expected {count} entries, found {k}", line=len(lines))

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    return _from_coo(n_rows, n_cols, rows, cols, vals)


def read_matrix_market(path) -> SparseMatrix:
    with open(path, "rb") as fh:
        return parse_matrix_market(fh.read())


def write_matrix_market(m: SparseMatrix, comment: str | None = None) -> bytes:
    """Serialize to Matrix Market (coordinate, real, general).

    Values are written with ``repr`` so parsing the output reproduces every
    value bit for bit.
    """
    out = io.StringIO()
    out.write("%%MatrixMarket matrix coordinate real general\n")
    if comment:
        for line in comment.splitlines():
            out.write(f"% {line}\n")
    out.write(f"{m.n_rows} {m.n_cols} {m.nnz}\n")
    rows, cols, vals = m.triplets()
    for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
        out.write(f"{i + 1} {j + 1} {_fmt(v)}\n")
    return out.getvalue().encode("ascii")


def _fmt(v: float) -> str:
    if math.isfinite(v):
        return repr(v)
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def save_matrix_market(path, m: SparseMatrix, comment: str | None = None):
    with open(path, "wb") as fh:
        fh.write(write_matrix_market(m, comment))

