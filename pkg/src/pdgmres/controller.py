"""PD control of the GMRES restart parameter, and the PD-GMRES driver.

The controller looks at the explicit residual norms of the last three
restarts and proposes the next restart parameter as

    m_next = m + floor(P + D),
    P = alpha_p * |r_j| / |r_{j-1}|,
    D = alpha_d * (|r_j| - |r_{j-2}|) / (2 |r_{j-1}|).

Proposals below ``m_min`` trigger a reset to ``m_init + c * m_step`` where
``c`` counts resets so far. With ``m_max`` set, proposals above it restart
the cycle at ``m_init`` and clear the counter. For ``alpha_p > 0`` the
fractional part dropped by the floor is carried into the next proposal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError
from .krylov import SolveTrace, _check_system, _checked_residual, default_budget, gmres_cycle
from .matio import SparseMatrix

__all__ = [
    "PRESETS",
    "ControllerState",
    "PdParams",
    "derivative_term",
    "next_restart",
    "pdgmres_solve",
    "preset",
    "proportional_term",
    "replay_restarts",
]

#: Denominator norms below this are treated as an already converged solve.
TINY_NORM = 1e-300


@dataclass(frozen=True)
class PdParams:
    m_init: int
    m_min: int
    m_step: int
    alpha_p: float
    alpha_d: float
    m_max: int | None = None

    def __post_init__(self):
        for name in ("m_init", "m_min", "m_step"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.m_max is not None:
            if int(self.m_max) != self.m_max or self.m_max < self.m_init:
                raise ValueError(f"m_max must be an integer >= m_init, got {self.m_max!r}")
            object.__setattr__(self, "m_max", int(self.m_max))
        object.__setattr__(self, "alpha_p", float(self.alpha_p))
        object.__setattr__(self, "alpha_d", float(self.alpha_d))

    def as_dict(self):
        return {
            "m_init": self.m_init,
            "m_min": self.m_min,
            "m_step": self.m_step,
            "alpha_p": self.alpha_p,
            "alpha_d": self.alpha_d,
            "m_max": self.m_max,
        }


PRESETS = {
    "default": PdParams(30, 1, 3, -3.0, 9.0),
    "optimized": PdParams(10, 3, 10, -0.625, 4.375),
    "specialized": PdParams(30, 33, 39, -42.5, 0.0),
    "problematic_test": PdParams(50, 51, 76, -41.25, 29.375),
}


def preset(name: str) -> PdParams:
    """Look up a published parameter set; ``-`` and ``_`` are interchangeable."""
    key = name.strip().lower().replace("-", "_")
    try:
        return PRESETS[key]
    except KeyError:
        known = ", ".join(k.replace("_", "-") for k in PRESETS)
        raise ValueError(f"unknown preset {name!r} (known: {known})") from None


@dataclass(frozen=True)
class ControllerState:
    """Controller memory between restarts.

    ``recent_norms`` lists the latest restart residual norms newest first,
    at most three of them. ``restart_index`` is the number of finished cycles.
    """

    m_current: int = 0
    reset_counter: int = 0
    carry: float = 0.0
    recent_norms: tuple[float, ...] = ()
    restart_index: int = 0
    total_resets: int = 0

    def observe(self, norm: float) -> ControllerState:
        """State after a cycle ending with residual norm ``norm``."""
        return replace(
            self,
            recent_norms=((float(norm),) + self.recent_norms)[:3],
            restart_index=self.restart_index + 1,
        )


def proportional_term(alpha_p: float, norm_j: float, norm_jm1: float) -> float:
    if norm_jm1 == 0:
        raise ZeroDivisionError("previous residual norm is zero; the solve has converged")
    return alpha_p * norm_j / norm_jm1


def derivative_term(alpha_d: float, norm_j: float, norm_jm1: float, norm_jm2: float) -> float:
    if norm_jm1 == 0:
        raise ZeroDivisionError("previous residual norm is zero; the solve has converged")
    return alpha_d * (norm_j - norm_jm2) / (2.0 * norm_jm1)


def next_restart(state: ControllerState, params: PdParams) -> tuple[int, ControllerState]:
    """Restart parameter for the next cycle and the updated controller state.

    The caller is responsible for clamping the result to the matrix size and
    storing the clamped value back into ``m_current``.
    """
    j = state.restart_index
    carry = state.carry
    if j == 0:
        candidate = params.m_init
    else:
        norms = state.recent_norms
        need = 2 if j == 1 else 3
        if len(norms) < need:
            raise ValueError(f"restart {j} needs {need} residual norms, state holds {len(norms)}")
        total = proportional_term(params.alpha_p, norms[0], norms[1])
        if j >= 2:
            total += derivative_term(params.alpha_d, norms[0], norms[1], norms[2])
        if params.alpha_p > 0:
            total += carry
            step = math.floor(total)
            carry = total - step
            if carry >= 1.0:  # total was a tiny negative number
                step += 1
                carry = 0.0
        else:
            step = math.floor(total)
        candidate = state.m_current + int(step)

    counter = state.reset_counter
    resets = state.total_resets
    if candidate < params.m_min:
        counter += 1
        resets += 1
        candidate = params.m_init + counter * params.m_step
    if params.m_max is not None and candidate > params.m_max:
        counter = 0
        candidate = params.m_init
    new_state = replace(
        state, m_current=candidate, reset_counter=counter, carry=carry, total_resets=resets
    )
    return candidate, new_state


def replay_restarts(norms, params: PdParams, n: int) -> list[int]:
    """Restart parameters the controller picks for given restart norms.

    ``norms`` are the explicit residual norms at the restart boundaries,
    starting with the initial residual. Used to cross-check traces.
    """
    state = ControllerState(recent_norms=(float(norms[0]),))
    out = []
    for norm in norms[1:]:
        m, state = next_restart(state, params)
        m = min(m, n)
        state = replace(state, m_current=m).observe(norm)
        out.append(m)
    return out


def pdgmres_solve(
    matrix: SparseMatrix,
    b,
    params: PdParams,
    tol: float,
    budget: int | None = None,
    precond=None,
    *,
    x0=None,
    relative: bool = False,
) -> SolveTrace:
    """Solve ``Mx = b`` with PD-GMRES.

    Each cycle runs GMRES with the restart parameter chosen by the
    controller; the cycle is cut short when the remaining ``budget`` of
    inner iterations is smaller. Raises ``DivergenceError`` on non-finite
    residuals.
    """
    b = _check_system(matrix, b)
    n = matrix.n_rows
    if n == 0:
        raise DimensionError("empty system")
    budget = default_budget(n) if budget is None else budget
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    target = tol * float(np.linalg.norm(b)) if relative else tol

    r_norm = _checked_residual(matrix, b, x)
    trace = SolveTrace(inner_residual_norms=[r_norm], restart_residual_norms=[r_norm])
    state = ControllerState(recent_norms=(r_norm,))
    used = 0
    while r_norm > target and r_norm >= TINY_NORM and used < budget:
        m, state = next_restart(state, params)
        m = min(m, n)
        state = replace(state, m_current=m)
        res = gmres_cycle(matrix, b, x, min(m, budget - used), target, precond)
        used += res.steps_taken
        x = res.x_new
        trace.restart_params.append(m)
        trace.cycle_lengths.append(res.steps_taken)
        trace.inner_residual_norms.extend(res.inner_residual_norms)
        trace.reset_history.append(state.reset_counter)
        r_norm = _checked_residual(matrix, b, x)
        trace.restart_residual_norms.append(r_norm)
        state = state.observe(r_norm)
        if res.steps_taken == 0:
            break
    trace.resets = state.total_resets
    trace.converged = r_norm <= target or r_norm < TINY_NORM
    trace.x = x
    return trace
