"""Deterministic runtime estimates for (PD-)GMRES solves.

Wall-clock times are too noisy to compare nearby parameter choices, so a
solve is costed with a quadratic model ``h(m)`` of one GMRES(m) cycle. The
averaged heuristic weights the cumulative model cost at every inner
iteration whose residual lies inside a tolerance window by the log-decrease
of the residual in that iteration, giving a cost that is good on average
over a range of stopping tolerances rather than for a single one.
"""

from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .controller import PdParams, pdgmres_solve
from .errors import DivergenceError, HeuristicUndefinedError
from .krylov import SolveTrace, gmres_cycle, gmres_restarted
from .matio import SparseMatrix

__all__ = [
    "PENALTY",
    "RuntimeModel",
    "ToleranceWindow",
    "averaged_heuristic",
    "calibrate",
    "cumulative_costs",
    "fit_quadratic",
    "fixed_restart_objective",
    "heuristic_weights",
    "objective",
    "synthetic_model",
    "total_cost",
    "trace_cost",
]

#: Objective value of a solve that did not converge. Finite so geometric
#: means stay defined; far above any desk-scale model cost.
PENALTY = 1e18

DEFAULT_SAMPLE_DIMS = (5, 10, 20, 30, 50)


@dataclass(frozen=True)
class RuntimeModel:
    """Quadratic cost ``a2*m**2 + a1*m + a0`` of one GMRES(m) cycle."""

    a2: float
    a1: float
    a0: float
    source: str = "measured"
    floor_value: float = 1e-12
    matrix: str = ""

    def __post_init__(self):
        if self.source not in ("measured", "synthetic"):
            raise ValueError(f"unknown model source {self.source!r}")
        if not self.floor_value > 0:
            raise ValueError("floor_value must be positive")

    def cost(self, m) -> float:
        return max(self.a2 * m * m + self.a1 * m + self.a0, self.floor_value)

    __call__ = cost

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RuntimeModel:
        data = json.loads(text)
        return cls(**data)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> RuntimeModel:
        with open(path) as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class ToleranceWindow:
    tol_max: float = 1e-3
    tol_min: float = 1e-9

    def __post_init__(self):
        if not self.tol_max > self.tol_min > 0:
            raise ValueError("tolerance window needs tol_max > tol_min > 0")

    def contains(self, norm: float) -> bool:
        return self.tol_max > norm > self.tol_min


def synthetic_model(matrix: SparseMatrix, name: str = "") -> RuntimeModel:
    """Flop-count model ``nnz*m + n*m**2/2``, identical on every machine."""
    return RuntimeModel(
        a2=matrix.n_rows / 2.0,
        a1=float(matrix.nnz),
        a0=0.0,
        source="synthetic",
        floor_value=1.0,
        matrix=name,
    )


def fit_quadratic(dims: Sequence[float], times: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares quadratic through ``(dims, times)``; returns ``(a2, a1, a0)``."""
    dims = np.asarray(dims, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if dims.shape != times.shape:
        raise ValueError("dims and times must have equal length")
    if np.unique(dims).size < 3:
        raise ValueError("a quadratic fit needs at least 3 distinct dimensions")
    V = np.vander(dims, 3)
    coef, *_ = np.linalg.lstsq(V, times, rcond=None)
    return float(coef[0]), float(coef[1]), float(coef[2])


def calibrate(
    matrix: SparseMatrix,
    sample_dims: Sequence[int] = DEFAULT_SAMPLE_DIMS,
    trials: int = 5,
    *,
    name: str = "",
    timer=time.perf_counter,
) -> RuntimeModel:
    """Fit ``h`` to measured wall times of single GMRES(m) cycles.

    Each dimension is timed ``trials`` times and the median is used. Do not
    run this alongside other CPU-heavy work; the measurements assume an
    otherwise idle core.
    """
    n = matrix.n_rows
    dims = sorted({int(m) for m in sample_dims})
    if any(m < 1 or m > n for m in dims):
        raise ValueError(f"sample dimensions must lie in [1, {n}]")
    if len(dims) < 3:
        raise ValueError("a quadratic fit needs at least 3 distinct dimensions")
    b = np.ones(n)
    x0 = np.zeros(n)
    medians = []
    for m in dims:
        samples = []
        for _ in range(max(trials, 1)):
            t0 = timer()
            # tolerance far below reach so the cycle runs all m steps
            gmres_cycle(matrix, b, x0, m, 1e-300)
            samples.append(timer() - t0)
        medians.append(statistics.median(samples))
    a2, a1, a0 = fit_quadratic(dims, medians)
    floor = max(min(medians) * 1e-3, 1e-12)
    return RuntimeModel(a2, a1, a0, source="measured", floor_value=floor, matrix=name)


def cumulative_costs(trace: SolveTrace, model: RuntimeModel) -> list[float]:
    """Model cost of reaching each inner index ``j = 0..J``.

    Finished cycles cost ``h(length)``; the unfinished cycle containing
    ``j`` is costed by the steps done so far.
    """
    costs = [0.0]
    done = 0.0
    for length in trace.cycle_lengths:
        for step in range(1, length + 1):
            costs.append(done + model.cost(step))
        done += model.cost(length) if length else 0.0
    return costs


def total_cost(trace: SolveTrace, model: RuntimeModel) -> float:
    return sum(model.cost(length) for length in trace.cycle_lengths if length)


def heuristic_weights(trace: SolveTrace, window: ToleranceWindow) -> dict[int, float]:
    """Weight of every inner index in the averaged heuristic.

    An inner step contributes when it starts and ends inside the window; its
    weight is its share of the total log-decrease between the largest and
    smallest in-window residual. For a non-increasing residual history the
    weights sum to one.
    """
    norms = trace.inner_residual_norms
    inside = [j for j, r in enumerate(norms) if window.contains(r)]
    if len(inside) < 2:
        raise HeuristicUndefinedError(
            f"{len(inside)} residual norm(s) inside ({window.tol_min:g}, {window.tol_max:g})"
        )
    hi = max(norms[j] for j in inside)
    lo = min(norms[j] for j in inside)
    denom = math.log(hi / lo)
    if not denom > 0:
        raise HeuristicUndefinedError("all in-window residual norms are equal")
    in_set = set(inside)
    return {
        j: math.log(norms[j - 1] / norms[j]) / denom for j in inside if j - 1 in in_set
    }


def averaged_heuristic(trace: SolveTrace, model: RuntimeModel, window: ToleranceWindow) -> float:
    weights = heuristic_weights(trace, window)
    costs = cumulative_costs(trace, model)
    return math.fsum(costs[j] * w for j, w in weights.items())


def trace_cost(trace: SolveTrace, model: RuntimeModel, window: ToleranceWindow) -> float:
    """Objective value of a finished solve.

    Non-converged solves get ``PENALTY``. When fewer than two residuals fall
    inside the window (the solve was too easy for the heuristic), the total
    model cost of the solve is used instead.
    """
    if not trace.converged:
        return PENALTY
    try:
        return averaged_heuristic(trace, model, window)
    except HeuristicUndefinedError:
        return total_cost(trace, model)


def objective(
    matrix: SparseMatrix,
    params: PdParams,
    model: RuntimeModel,
    window: ToleranceWindow = ToleranceWindow(),
    budget: int | None = None,
    precond=None,
) -> float:
    """Heuristic cost of PD-GMRES with ``params`` on ``Mx = ones``."""
    b = np.ones(matrix.n_rows)
    try:
        trace = pdgmres_solve(matrix, b, params, window.tol_min, budget, precond)
    except DivergenceError:
        return PENALTY
    return trace_cost(trace, model, window)


def fixed_restart_objective(
    matrix: SparseMatrix,
    restart: int,
    model: RuntimeModel,
    window: ToleranceWindow = ToleranceWindow(),
    budget: int | None = None,
    precond=None,
) -> float:
    """Heuristic cost of GMRES(restart) on ``Mx = ones``."""
    b = np.ones(matrix.n_rows)
    try:
        trace = gmres_restarted(matrix, b, restart, window.tol_min, budget, precond)
    except DivergenceError:
        return PENALTY
    return trace_cost(trace, model, window)
