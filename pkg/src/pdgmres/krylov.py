"""Restarted GMRES building blocks.

One restart cycle runs Arnoldi with modified Gram-Schmidt (plus a second
pass on heavy cancellation) and keeps the least-squares problem in
upper-triangular form through Givens rotations, so the residual norm after
every inner step is available without forming the iterate. Preconditioning is applied from the right, which keeps every
reported residual a residual of the original system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionError, DivergenceError
from .matio import SparseMatrix

__all__ = [
    "CycleResult",
    "SolveTrace",
    "default_budget",
    "gmres_cycle",
    "gmres_restarted",
    "true_residual_norm",
]

#: Subdiagonal entries at or below this multiple of ``||b||`` end the cycle.
BREAKDOWN_FACTOR = 1e-14
#: Relative residual change below which a fixed-restart cycle counts as stalled.
STAGNATION_RTOL = 1e-14
#: A second Gram-Schmidt pass runs when projection shrinks a vector below this fraction.
REORTH_FACTOR = 0.7
BUDGET_PER_UNKNOWN = 50
BUDGET_CAP = 200_000


def default_budget(n: int) -> int:
    """Default cap on total inner iterations for a system of size ``n``."""
    return min(BUDGET_PER_UNKNOWN * n, BUDGET_CAP)


@dataclass
class CycleResult:
    x_new: np.ndarray
    inner_residual_norms: list[float]
    steps_taken: int
    converged: bool
    breakdown: bool = False
    basis: np.ndarray | None = field(default=None, repr=False)


@dataclass
class SolveTrace:
    """Everything recorded during one (PD-)GMRES solve.

    ``inner_residual_norms[0]`` is the initial residual norm and entry ``j``
    is the Givens-updated residual norm after inner iteration ``j``, counted
    across all cycles. ``restart_residual_norms`` holds the explicitly
    recomputed ``||b - Mx||`` at every restart boundary, starting with the
    initial guess.
    """

    restart_params: list[int] = field(default_factory=list)
    cycle_lengths: list[int] = field(default_factory=list)
    inner_residual_norms: list[float] = field(default_factory=list)
    restart_residual_norms: list[float] = field(default_factory=list)
    reset_history: list[int] = field(default_factory=list)
    resets: int = 0
    converged: bool = False
    stagnated: bool = False
    x: np.ndarray | None = field(default=None, repr=False)

    @property
    def total_inner_iterations(self) -> int:
        return sum(self.cycle_lengths)

    @property
    def restarts(self) -> int:
        return len(self.cycle_lengths)

    @property
    def final_residual_norm(self) -> float:
        return self.restart_residual_norms[-1]

    def cycle_of_inner(self):
        """Yield ``(inner_index, cycle_index, restart_param)`` per inner step."""
        j = 0
        for k, (m, steps) in enumerate(zip(self.restart_params, self.cycle_lengths)):
            for _ in range(steps):
                j += 1
                yield j, k, m


def _check_system(matrix: SparseMatrix, b):
    if not matrix.is_square:
        raise DimensionError(f"solver needs a square matrix, got {matrix.shape}")
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != matrix.n_rows:
        raise DimensionError(f"right-hand side of shape {b.shape} for n={matrix.n_rows}")
    return b


def _precond_fn(precond):
    if precond is None:
        return None
    return precond.apply if hasattr(precond, "apply") else precond


def true_residual_norm(matrix: SparseMatrix, b, x) -> float:
    """Euclidean norm of ``b - Mx``."""
    b = _check_system(matrix, b)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != b.shape:
        raise DimensionError(f"iterate of shape {x.shape} for n={matrix.n_rows}")
    r = b - matrix.csr @ x
    return float(math.sqrt(r @ r))


def _checked_residual(matrix, b, x) -> float:
    r = true_residual_norm(matrix, b, x)
    if not math.isfinite(r):
        raise DivergenceError("non-finite residual norm")
    return r


def gmres_cycle(
    matrix: SparseMatrix,
    b,
    x0,
    max_dim: int,
    tol: float,
    precond=None,
    *,
    keep_basis: bool = False,
) -> CycleResult:
    """Run one GMRES cycle of at most ``max_dim`` inner steps from ``x0``.

    The cycle stops early once the implicit residual norm drops to ``tol``
    or the Arnoldi process breaks down.
    """
    b = _check_system(matrix, b)
    if max_dim < 1:
        raise ValueError("max_dim must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = matrix.n_rows
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64)
    if x0.shape != b.shape:
        raise DimensionError(f"initial guess of shape {x0.shape} for n={n}")
    A = matrix.csr
    pc = _precond_fn(precond)

    r = b - A @ x0
    beta = math.sqrt(float(r @ r))
    if not math.isfinite(beta):
        raise DivergenceError("non-finite initial residual")
    if beta == 0.0:
        return CycleResult(x0.copy(), [], 0, True)

    m = min(max_dim, n)
    breakdown_tol = BREAKDOWN_FACTOR * math.sqrt(float(b @ b))
    V = np.empty((m + 1, n))
    V[0] = r / beta
    R = np.zeros((m, m))
    cs: list[float] = []
    sn: list[float] = []
    g = [beta]
    norms: list[float] = []
    dot = np.dot
    converged = breakdown = False
    k = 0
    while k < m:
        w = A @ (pc(V[k]) if pc else V[k])
        w_norm = math.sqrt(float(dot(w, w)))
        col = []
        for i in range(k + 1):
            vi = V[i]
            h = float(dot(vi, w))
            w -= h * vi
            col.append(h)
        hn = math.sqrt(float(dot(w, w)))
        if hn < REORTH_FACTOR * w_norm:
            # heavy cancellation: one more pass restores orthogonality
            for i in range(k + 1):
                vi = V[i]
                h = float(dot(vi, w))
                w -= h * vi
                col[i] += h
            hn = math.sqrt(float(dot(w, w)))
        if not math.isfinite(hn):
            raise DivergenceError(f"non-finite Arnoldi entry at inner step {k + 1}")
        for i in range(k):
            c, s = cs[i], sn[i]
            a, bb = col[i], col[i + 1]
            col[i] = c * a + s * bb
            col[i + 1] = -s * a + c * bb
        a = col[k]
        d = math.hypot(a, hn)
        if d == 0.0:
            # singular Hessenberg column: the space cannot be extended
            breakdown = True
            break
        c, s = a / d, hn / d
        cs.append(c)
        sn.append(s)
        col[k] = d
        R[: k + 1, k] = col
        gk = g[k]
        g[k] = c * gk
        g.append(-s * gk)
        norms.append(abs(g[k + 1]))
        k += 1
        if norms[-1] <= tol:
            converged = True
            break
        if hn <= breakdown_tol or hn == 0.0:
            breakdown = True
            break
        V[k] = w / hn

    if k == 0:
        return CycleResult(x0.copy(), [], 0, False, breakdown=True)
    y = solve_triangular(R[:k, :k], np.asarray(g[:k]))
    u = y @ V[:k]
    x = x0 + (pc(u) if pc else u)
    if not np.all(np.isfinite(x)):
        raise DivergenceError("non-finite iterate")
    basis = V[:k].copy() if keep_basis else None
    return CycleResult(x, norms, k, converged or breakdown, breakdown, basis)


def gmres_restarted(
    matrix: SparseMatrix,
    b,
    restart: int,
    tol: float,
    budget: int | None = None,
    precond=None,
    *,
    x0=None,
    relative: bool = False,
) -> SolveTrace:
    """GMRES(m) with a fixed restart parameter.

    Stops when the explicit residual norm reaches ``tol`` (scaled by
    ``||b||`` when ``relative``) or when ``budget`` inner iterations are used
    up. A cycle that leaves the residual unchanged sets ``stagnated``; the
    solve still runs out its budget.
    """
    if restart < 1:
        raise ValueError("restart must be at least 1")
    b = _check_system(matrix, b)
    n = matrix.n_rows
    budget = default_budget(n) if budget is None else budget
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    target = tol * float(np.linalg.norm(b)) if relative else tol

    r_norm = _checked_residual(matrix, b, x)
    trace = SolveTrace(inner_residual_norms=[r_norm], restart_residual_norms=[r_norm])
    m = min(restart, n)
    used = 0
    while r_norm > target and used < budget:
        res = gmres_cycle(matrix, b, x, min(m, budget - used), target, precond)
        used += res.steps_taken
        x = res.x_new
        trace.restart_params.append(m)
        trace.cycle_lengths.append(res.steps_taken)
        trace.inner_residual_norms.extend(res.inner_residual_norms)
        trace.reset_history.append(0)
        prev, r_norm = r_norm, _checked_residual(matrix, b, x)
        trace.restart_residual_norms.append(r_norm)
        if r_norm > target and abs(prev - r_norm) <= STAGNATION_RTOL * prev:
            trace.stagnated = True
        if res.steps_taken == 0:
            break
    trace.converged = r_norm <= target
    trace.x = x
    return trace
