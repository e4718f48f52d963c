"""ILU(0) preconditioning.

The factorization keeps exactly the sparsity pattern of the source matrix:
``L`` (unit lower triangular, diagonal not stored) and ``U`` share one CSR
array set. ``apply`` solves ``L U z = v``, which is what a right
preconditioner in GMRES needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

from .errors import DimensionError, FactorizationError
from .matio import SparseMatrix

__all__ = ["Ilu0Factors", "apply", "ilu0_factor"]

#: Pivots smaller than this in magnitude abort the factorization.
PIVOT_TOL = 1e-300


@dataclass(frozen=True)
class Ilu0Factors:
    """``combined`` holds ``L`` strictly below and ``U`` on and above the diagonal."""

    combined: SparseMatrix

    @property
    def n(self) -> int:
        return self.combined.n_rows

    @cached_property
    def _triangles(self):
        csr = self.combined.csr
        lower = sp.tril(csr, k=-1, format="csr") + sp.identity(self.n, format="csr")
        upper = sp.triu(csr, k=0, format="csr")
        return lower.tocsr(), upper.tocsr()

    def lower(self) -> np.ndarray:
        """Dense unit lower factor, for inspection and tests."""
        return self._triangles[0].toarray()

    def upper(self) -> np.ndarray:
        return self._triangles[1].toarray()

    def apply(self, v) -> np.ndarray:
        return apply(self, v)

    __call__ = apply


def ilu0_factor(m: SparseMatrix) -> Ilu0Factors:
    """Incomplete LU factorization with zero fill-in (IKJ ordering).

    Raises
    ------
    FactorizationError
        If a diagonal entry is structurally missing or a pivot vanishes.
    """
    if not m.is_square:
        raise DimensionError(f"ILU(0) needs a square matrix, got {m.shape}")
    n = m.n_rows
    ptr = m.row_offsets
    cols = m.col_indices
    vals = np.array(m.values, dtype=np.float64)

    diag = np.empty(n, dtype=np.int64)
    for i in range(n):
        row = cols[ptr[i] : ptr[i + 1]]
        k = int(np.searchsorted(row, i))
        if k == row.size or row[k] != i:
            raise FactorizationError(f"structural zero on the diagonal in row {i}; ILU(0) unsupported")
        diag[i] = ptr[i] + k

    for i in range(n):
        lo, hi = int(ptr[i]), int(ptr[i + 1])
        where = {int(cols[p]): p for p in range(lo, hi)}
        for p in range(lo, int(diag[i])):
            k = int(cols[p])
            pivot = vals[diag[k]]
            if abs(pivot) < PIVOT_TOL:
                raise FactorizationError(f"zero pivot in row {k}")
            vals[p] /= pivot
            lik = vals[p]
            for q in range(int(diag[k]) + 1, int(ptr[k + 1])):
                t = where.get(int(cols[q]))
                if t is not None:
                    vals[t] -= lik * vals[q]
        if abs(vals[diag[i]]) < PIVOT_TOL:
            raise FactorizationError(f"zero pivot in row {i}")

    combined = SparseMatrix(n, n, ptr, cols, vals)
    return Ilu0Factors(combined)


def apply(f: Ilu0Factors, v) -> np.ndarray:
    """``U^{-1} L^{-1} v`` by forward then backward substitution."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (f.n,):
        raise DimensionError(f"vector of shape {v.shape} for n={f.n}")
    lower, upper = f._triangles
    y = spsolve_triangular(lower, v, lower=True, unit_diagonal=True)
    return spsolve_triangular(upper, y, lower=False)
