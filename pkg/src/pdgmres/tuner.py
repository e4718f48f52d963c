"""Alternating quadtree optimization of PD-GMRES parameters over a matrix set.

For every candidate ``m_init`` the procedure alternates between the
``(alpha_p, alpha_d)`` plane with ``(m_min, m_step)`` fixed and the
``(m_min, m_step)`` plane with the alphas fixed. Each step builds one
quadtree per matrix, normalizes every matrix by its own best value, and
picks the cell with the smallest geometric mean. After each full cycle both
search rectangles are halved around the incumbent. At the end the final
parameters of all candidates are compared on the whole set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .controller import PdParams, pdgmres_solve
from .errors import DivergenceError
from .matio import SparseMatrix
from .quadtree import ParamDomain, QuadtreeResult, Sample, build, planned_evaluations
from .runtime_model import PENALTY, RuntimeModel, ToleranceWindow, total_cost, trace_cost

__all__ = [
    "DEFAULT_TIERS",
    "MINIMAL_BUDGET",
    "Evaluator",
    "OptimizationReport",
    "PairStep",
    "Problem",
    "ResolutionBudget",
    "TuningConfig",
    "aggregate_geomean",
    "budget_resolution",
    "geometric_mean",
    "optimize_pair",
    "run_procedure",
]


@dataclass(frozen=True)
class ResolutionBudget:
    depth: int
    ratios: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(float(s) for s in self.ratios))
        if self.depth < 1 or len(self.ratios) != self.depth:
            raise ValueError(f"depth {self.depth} needs that many ratios, got {self.ratios}")

    @property
    def planned(self) -> int:
        return sum(planned_evaluations(self.depth, self.ratios))

    def at_cycle(self, k: int) -> ResolutionBudget:
        """Budget for cycle ``k`` (0-based) on a domain halved ``k`` times.

        The finest cell size is kept, so every halving removes one level.
        The coarsest ratios are dropped because the new root block has the
        size of a level-``k`` block of the first tree.
        """
        depth = max(self.depth - k, 1)
        return ResolutionBudget(depth, self.ratios[self.depth - depth :])

    def as_dict(self):
        return {"depth": self.depth, "ratios": list(self.ratios), "planned": self.planned}


#: Resolution tiers from richest to cheapest, each with 64x64 finest cells.
DEFAULT_TIERS = (
    ResolutionBudget(6, (1, 1, 1, 0.5, 0.25, 0.125)),
    ResolutionBudget(6, (1, 1, 0.5, 0.25, 0.25, 0.25)),
    ResolutionBudget(6, (1, 0.5, 0.25, 0.25, 0.25, 0.25)),
)
MINIMAL_BUDGET = ResolutionBudget(2, (0.25, 0.25))


@dataclass
class Problem:
    name: str
    matrix: SparseMatrix
    model: RuntimeModel
    precond: object = None


class Evaluator:
    """Cached objective of one problem with evaluation accounting.

    ``samples`` counts every request, ``solves`` only those that ran the
    solver, and ``model_cost`` sums the total model cost of those solves.
    """

    def __init__(self, problem: Problem, window: ToleranceWindow, budget: int | None = None):
        self.problem = problem
        self.window = window
        self.budget = budget
        self.cache: dict[PdParams, float] = {}
        self.samples = 0
        self.solves = 0
        self.model_cost = 0.0

    def __call__(self, params: PdParams) -> float:
        self.samples += 1
        hit = self.cache.get(params)
        if hit is not None:
            return hit
        p = self.problem
        b = np.ones(p.matrix.n_rows)
        self.solves += 1
        try:
            trace = pdgmres_solve(p.matrix, b, params, self.window.tol_min, self.budget, p.precond)
        except DivergenceError:
            value = PENALTY
        else:
            self.model_cost += total_cost(trace, p.model)
            value = trace_cost(trace, p.model, self.window)
        self.cache[params] = value
        return value

    def accounting(self):
        return {"samples": self.samples, "solves": self.solves, "model_cost": self.model_cost}


@dataclass
class TuningConfig:
    m_init_candidates: tuple[int, ...] = (10, 20, 30)
    cycles: int = 3
    alpha_domain: ParamDomain = field(default_factory=lambda: ParamDomain(-40.0, 0.0, 0.0, 40.0))
    m_domain: ParamDomain = field(
        default_factory=lambda: ParamDomain(1.0, 65.0, 1.0, 65.0, integer_u=True, integer_v=True)
    )
    initial_m_min: int = 10
    initial_m_step: int = 5
    resolution: ResolutionBudget = DEFAULT_TIERS[1]
    #: Per-matrix overrides of ``resolution``, e.g. from ``budget_resolution``.
    budgets: dict[str, ResolutionBudget] = field(default_factory=dict)
    window: ToleranceWindow = field(default_factory=ToleranceWindow)
    m_max: int | None = None
    iteration_budget: int | None = None
    keep_resolution: bool = True
    carry_best: bool = True

    def __post_init__(self):
        if self.cycles < 1:
            raise ValueError("cycles must be at least 1")
        if not self.m_init_candidates:
            raise ValueError("need at least one m_init candidate")
        if not (self.m_domain.integer_u and self.m_domain.integer_v):
            raise ValueError("the (m_min, m_step) domain must snap to integers")

    def budget_for(self, name: str, cycle: int) -> ResolutionBudget:
        b = self.budgets.get(name, self.resolution)
        return b.at_cycle(cycle) if self.keep_resolution else b

    def as_dict(self):
        return {
            "m_init_candidates": list(self.m_init_candidates),
            "cycles": self.cycles,
            "alpha_domain": self.alpha_domain.as_dict(),
            "m_domain": self.m_domain.as_dict(),
            "initial_m_min": self.initial_m_min,
            "initial_m_step": self.initial_m_step,
            "resolution": self.resolution.as_dict(),
            "budgets": {k: v.as_dict() for k, v in sorted(self.budgets.items())},
            "window": [self.window.tol_max, self.window.tol_min],
            "m_max": self.m_max,
            "iteration_budget": self.iteration_budget,
            "keep_resolution": self.keep_resolution,
            "carry_best": self.carry_best,
        }


def geometric_mean(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return math.nan
    return float(np.exp(np.mean(np.log(values))))


def _upsample(a: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return a
    return np.repeat(np.repeat(a, factor, axis=0), factor, axis=1)


def aggregate_geomean(per_matrix: Sequence[QuadtreeResult]) -> QuadtreeResult:
    """Cell-wise geometric mean of individually min-normalized quadtrees.

    Results of lower depth are upsampled to the deepest one. A cell that
    failed for any matrix is penalized in the aggregate. Each constant
    region of the aggregate gets one sample: the common point when all
    matrices evaluated that region at the same point, otherwise the corner
    of its first cell.
    """
    if not per_matrix:
        raise ValueError("nothing to aggregate")
    domain = per_matrix[0].domain
    if any(r.domain != domain for r in per_matrix):
        raise ValueError("quadtrees over different domains cannot be aggregated")
    depth = max(r.depth for r in per_matrix)
    side = 1 << depth
    qs, pens, owners = [], [], []
    for r in per_matrix:
        if r.q.shape != (1 << r.depth, 1 << r.depth):
            raise ValueError(f"quadtree matrix of shape {r.q.shape} at depth {r.depth}")
        f = 1 << (depth - r.depth)
        ok = ~r.penalized_mask
        scale = float(r.q[ok].min()) if ok.any() else 1.0
        qs.append(_upsample(r.q / scale, f))
        pens.append(_upsample(r.penalized_mask, f))
        owners.append(_upsample(r.owner, f))
    qs = np.stack(qs)
    pens = np.stack(pens)
    owners = np.stack(owners)

    k = len(per_matrix)
    count = pens.sum(axis=0)
    logs = np.log(np.where(pens, 1.0, qs))
    with np.errstate(invalid="ignore", divide="ignore"):
        fallback = np.exp(logs.sum(axis=0) / np.maximum(k - count, 1))
    fallback = np.where(count == k, PENALTY, fallback)
    penalized = count > 0
    if k == 1:
        q = np.where(penalized, PENALTY, qs[0])
    else:
        q = np.where(penalized, PENALTY, fallback)

    keys = owners.reshape(k, -1).T
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first, kind="stable")
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    samples: list[Sample] = []
    for region in order:
        cell = int(first[region])
        iu, iv = divmod(cell, side)
        owned = [per_matrix[i].samples[int(keys[cell, i])] for i in range(k)]
        points = {(s.u, s.v) for s in owned}
        if len(points) == 1:
            u, v = points.pop()
        else:
            u, v = domain.point(iu, iv, depth)
        level = -1 if all(s.level == -1 for s in owned) else max(s.level for s in owned)
        samples.append(Sample(u, v, float(q[iu, iv]), level, bool(penalized[iu, iv])))
    owner = relabel[inverse].reshape(side, side)

    ratios = per_matrix[0].ratios if all(r.ratios == per_matrix[0].ratios for r in per_matrix) else ()
    return QuadtreeResult(
        depth=depth,
        domain=domain,
        ratios=tuple(ratios),
        q=q,
        penalized_mask=penalized,
        owner=owner,
        samples=samples,
        penalty_count=count,
        fallback_values=fallback,
    )


def _with_pair(fixed: PdParams, which: str, u: float, v: float) -> PdParams:
    if which == "alphas":
        return replace(fixed, alpha_p=u, alpha_d=v)
    if which == "m_pair":
        return replace(fixed, m_min=int(u), m_step=int(v))
    raise ValueError(f"unknown parameter pair {which!r}")


@dataclass
class PairStep:
    """One optimization step over a parameter pair."""

    which: str
    fixed: PdParams
    domain: ParamDomain
    chosen: tuple[float, float]
    params: PdParams
    aggregate: QuadtreeResult
    per_matrix: dict[str, QuadtreeResult]
    excluded: list[str]
    carry: tuple[float, float] | None
    objectives: dict[str, float] = field(default_factory=dict)

    def summary(self):
        return {
            "which": self.which,
            "domain": self.domain.as_dict(),
            "chosen": list(self.chosen),
            "params": self.params.as_dict(),
            "carry": list(self.carry) if self.carry is not None else None,
            "excluded": list(self.excluded),
            "aggregate_min": self.aggregate.min_value(),
            "evaluations": {k: r.evaluations for k, r in sorted(self.per_matrix.items())},
            "objectives": dict(sorted(self.objectives.items())),
        }


def optimize_pair(
    evaluators: dict[str, Evaluator],
    fixed: PdParams,
    which: str,
    domain: ParamDomain,
    budgets: dict[str, ResolutionBudget],
    carry_best: tuple[float, float] | None = None,
) -> PairStep:
    """Search one parameter plane on every matrix and pick the best pair.

    Matrices whose quadtree failed everywhere are left out of the aggregate
    and listed in ``excluded``. If all of them failed, the aggregate of all
    is used anyway so a pair is still returned.
    """
    if which == "m_pair" and not (domain.integer_u and domain.integer_v):
        raise ValueError("the (m_min, m_step) plane needs an integer domain")
    extras = [carry_best] if carry_best is not None else []
    per_matrix: dict[str, QuadtreeResult] = {}
    for name in sorted(evaluators):
        ev = evaluators[name]
        b = budgets[name]

        def f(u, v, ev=ev):
            return ev(_with_pair(fixed, which, u, v))

        per_matrix[name] = build(f, domain, b.depth, b.ratios, extras)

    excluded = [n for n, r in per_matrix.items() if r.penalized_mask.all()]
    used = [n for n in per_matrix if n not in excluded] or list(per_matrix)
    agg = aggregate_geomean([per_matrix[n] for n in used])
    best = agg.best()
    chosen = (best.u, best.v)
    params = _with_pair(fixed, which, *chosen)
    objectives = {n: ev(params) for n, ev in sorted(evaluators.items())}
    if carry_best is not None and chosen != tuple(carry_best):
        # the aggregate may rank a cell by coarse values taken elsewhere, so
        # compare the exact objectives against the incumbent before moving
        prev = _with_pair(fixed, which, *carry_best)
        prev_obj = {n: ev(prev) for n, ev in sorted(evaluators.items())}
        if _set_key(prev_obj, objectives, used) < _set_key(objectives, prev_obj, used):
            chosen, params, objectives = tuple(carry_best), prev, prev_obj
    return PairStep(which, fixed, domain, chosen, params, agg, per_matrix, excluded, carry_best, objectives)


def _set_key(a: dict[str, float], b: dict[str, float], names) -> tuple[int, float]:
    """Failures of ``a``, then the geometric mean of ``a / b`` where both converged."""
    fails = sum(a[n] >= PENALTY for n in names)
    ratios = [a[n] / b[n] for n in names if a[n] < PENALTY and b[n] < PENALTY]
    return fails, geometric_mean(ratios) if ratios else 1.0


def procedure_evaluations(budget: ResolutionBudget, config: TuningConfig) -> int:
    """Planned objective evaluations of one matrix over a whole run."""
    per_candidate = 0
    for k in range(config.cycles):
        b = budget.at_cycle(k) if config.keep_resolution else budget
        per_candidate += 2 * b.planned
    return per_candidate * len(config.m_init_candidates)


def budget_resolution(
    problems: Sequence[Problem],
    time_budget: float,
    probe_points: int = 5,
    *,
    config: TuningConfig | None = None,
    tiers: Sequence[ResolutionBudget] = DEFAULT_TIERS,
    seed: int = 0,
):
    """Assign each matrix the richest resolution tier its cost share allows.

    Costs are model costs (seconds for measured models, flop units for
    synthetic ones), so the assignment is reproducible. Each matrix is
    probed at ``probe_points`` seeded random parameter sets; the average
    total cost of a solve times the planned evaluation count of a tier must
    fit into ``time_budget / len(problems)``.

    Returns ``(budgets, probes)`` where ``probes`` records the probe points
    and the average cost per matrix.
    """
    if probe_points < 1:
        raise ValueError("probe_points must be at least 1")
    if not problems:
        raise ValueError("no problems to budget")
    config = config or TuningConfig()
    rng = np.random.default_rng(seed)
    a, m = config.alpha_domain, config.m_domain
    points = []
    for _ in range(probe_points):
        ap = float(rng.uniform(a.u_lo, a.u_hi))
        ad = float(rng.uniform(a.v_lo, a.v_hi))
        mm = int(rng.integers(math.ceil(m.u_lo), math.floor(m.u_hi) + 1))
        ms = int(rng.integers(math.ceil(m.v_lo), math.floor(m.v_hi) + 1))
        mi = int(config.m_init_candidates[int(rng.integers(len(config.m_init_candidates)))])
        points.append(PdParams(mi, max(mm, 1), max(ms, 1), ap, ad, config.m_max))

    share = time_budget / len(problems)
    budgets: dict[str, ResolutionBudget] = {}
    averages: dict[str, float] = {}
    for p in problems:
        costs = []
        for params in points:
            b = np.ones(p.matrix.n_rows)
            try:
                trace = pdgmres_solve(
                    p.matrix, b, params, config.window.tol_min, config.iteration_budget, p.precond
                )
                costs.append(total_cost(trace, p.model))
            except DivergenceError:
                costs.append(math.inf)
        avg = float(np.mean(costs))
        averages[p.name] = avg
        budgets[p.name] = MINIMAL_BUDGET
        for tier in tiers:
            if avg * procedure_evaluations(tier, config) <= share:
                budgets[p.name] = tier
                break
    probes = {
        "points": [pt.as_dict() for pt in points],
        "average_cost": dict(sorted(averages.items())),
        "share": share,
    }
    return budgets, probes


@dataclass
class CandidateRun:
    m_init: int
    steps: list[PairStep]
    final: PdParams


@dataclass
class OptimizationReport:
    config: TuningConfig
    candidates: list[CandidateRun]
    final_objectives: dict[int, dict[str, float]]
    final_geomeans: dict[int, float]
    winner: PdParams
    trajectories: dict[int, list[float]]
    accounting: dict[str, dict]
    budgets: dict[str, ResolutionBudget]
    probes: dict | None = None

    def to_dict(self):
        """Plain, deterministic representation (no timings)."""
        return {
            "config": self.config.as_dict(),
            "budgets": {k: v.as_dict() for k, v in sorted(self.budgets.items())},
            "probes": self.probes,
            "candidates": [
                {
                    "m_init": c.m_init,
                    "final": c.final.as_dict(),
                    "steps": [s.summary() for s in c.steps],
                    "geomean_trajectory": self.trajectories[c.m_init],
                }
                for c in self.candidates
            ],
            "final_objectives": {
                str(k): dict(sorted(v.items())) for k, v in self.final_objectives.items()
            },
            "final_geomeans": {str(k): v for k, v in self.final_geomeans.items()},
            "winner": self.winner.as_dict(),
            "accounting": dict(sorted(self.accounting.items())),
        }


def _trajectory(steps: list[PairStep]) -> list[float]:
    """Geometric mean over matrices of each step's objective relative to step 1.

    Matrices that failed at step 1 or at the step in question are skipped.
    """
    if not steps:
        return []
    base = steps[0].objectives
    out = []
    for s in steps:
        ratios = [
            s.objectives[n] / base[n]
            for n in base
            if base[n] < PENALTY and s.objectives.get(n, PENALTY) < PENALTY
        ]
        out.append(geometric_mean(ratios) if ratios else math.nan)
    return out


def _rank_candidates(objectives: dict[int, dict[str, float]]):
    """Geometric mean per candidate of values normalized by the best candidate.

    A matrix on which some candidate failed is left out of every mean. The
    winner has the fewest failures, then the smallest mean.
    """
    names = sorted(next(iter(objectives.values())))
    common = [n for n in names if all(o[n] < PENALTY for o in objectives.values())]
    best = {n: min(o[n] for o in objectives.values()) for n in common}
    means = {}
    for m_init, o in objectives.items():
        vals = [o[n] / best[n] for n in common]
        means[m_init] = geometric_mean(vals) if vals else math.nan
    fails = {m: sum(o[n] >= PENALTY for n in names) for m, o in objectives.items()}

    def key(m):
        g = means[m]
        return (fails[m], g if not math.isnan(g) else math.inf)

    winner = min(objectives, key=key)  # first candidate wins ties
    return means, winner


def run_procedure(problems: Sequence[Problem], config: TuningConfig | None = None) -> OptimizationReport:
    """Run the full alternating optimization and pick the best ``m_init``."""
    config = config or TuningConfig()
    if not problems:
        raise ValueError("no problems to tune on")
    names = [p.name for p in problems]
    if len(set(names)) != len(names):
        raise ValueError("problem names must be unique")
    evaluators = {
        p.name: Evaluator(p, config.window, config.iteration_budget) for p in problems
    }
    alpha0, m0 = config.alpha_domain, config.m_domain
    candidates: list[CandidateRun] = []
    trajectories: dict[int, list[float]] = {}

    for m_init in config.m_init_candidates:
        m_pair = (float(config.initial_m_min), float(config.initial_m_step))
        alphas: tuple[float, float] | None = None
        a_dom, m_dom = alpha0, m0
        steps: list[PairStep] = []
        for k in range(config.cycles):
            budgets = {n: config.budget_for(n, k) for n in names}
            fixed = PdParams(m_init, int(m_pair[0]), int(m_pair[1]), 0.0, 0.0, config.m_max)
            carry = alphas if (config.carry_best and alphas is not None) else None
            step = optimize_pair(evaluators, fixed, "alphas", a_dom, budgets, carry)
            steps.append(step)
            alphas = step.chosen

            fixed = replace(fixed, alpha_p=alphas[0], alpha_d=alphas[1])
            carry = m_pair if config.carry_best else None
            step = optimize_pair(evaluators, fixed, "m_pair", m_dom, budgets, carry)
            steps.append(step)
            m_pair = step.chosen

            if k + 1 < config.cycles:
                a_dom = a_dom.halved(alphas, within=alpha0)
                m_dom = m_dom.halved(m_pair, within=m0)
        final = steps[-1].params
        candidates.append(CandidateRun(m_init, steps, final))
        trajectories[m_init] = _trajectory(steps)

    final_objectives = {
        c.m_init: {n: ev(c.final) for n, ev in sorted(evaluators.items())} for c in candidates
    }
    means, winner_m = _rank_candidates(final_objectives)
    winner = next(c.final for c in candidates if c.m_init == winner_m)
    accounting = {n: ev.accounting() for n, ev in evaluators.items()}
    budgets = {n: config.budgets.get(n, config.resolution) for n in names}
    return OptimizationReport(
        config=config,
        candidates=candidates,
        final_objectives=final_objectives,
        final_geomeans=means,
        winner=winner,
        trajectories=trajectories,
        accounting=accounting,
        budgets=budgets,
    )
