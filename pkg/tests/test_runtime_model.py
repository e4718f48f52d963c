import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdgmres.controller import PdParams, preset
from pdgmres.errors import HeuristicUndefinedError
from pdgmres.krylov import SolveTrace
from pdgmres.matio import from_triplets, identity
from pdgmres.problems import laplacian_2d
from pdgmres.runtime_model import (
    PENALTY,
    RuntimeModel,
    ToleranceWindow,
    averaged_heuristic,
    calibrate,
    cumulative_costs,
    fit_quadratic,
    fixed_restart_objective,
    heuristic_weights,
    objective,
    synthetic_model,
    total_cost,
    trace_cost,
)


def make_trace(norms, lengths, converged=True):
    assert len(norms) == sum(lengths) + 1
    return SolveTrace(
        restart_params=list(lengths),
        cycle_lengths=list(lengths),
        inner_residual_norms=list(norms),
        restart_residual_norms=[norms[0], norms[-1]],
        converged=converged,
    )


def oracle_heuristic(norms, lengths, h, tmax, tmin):
    """Straight transcription of the averaged heuristic, written independently."""
    inside = [j for j in range(len(norms)) if tmax > norms[j] > tmin]
    big = max(norms[j] for j in inside)
    small = min(norms[j] for j in inside)
    total = 0.0
    for j in inside:
        if j - 1 not in inside:
            continue
        # restart parameters "up to inner index j": whole cycles, then the partial one
        parts, left = [], j
        for length in lengths:
            take = min(length, left)
            if take:
                parts.append(take)
            left -= take
        cost = sum(h(p) for p in parts)
        total += cost * math.log(norms[j - 1] / norms[j]) / math.log(big / small)
    return total


def test_model_cost_and_clamp():
    m = RuntimeModel(2.0, 3.0, 1.0, floor_value=0.5)
    assert m.cost(2) == 15.0
    assert RuntimeModel(0.0, 0.0, -1.0, floor_value=0.5).cost(3) == 0.5
    with pytest.raises(ValueError):
        RuntimeModel(1, 1, 1, floor_value=0.0)
    with pytest.raises(ValueError):
        RuntimeModel(1, 1, 1, source="guess")


def test_model_json_roundtrip(tmp_path):
    m = RuntimeModel(1e-9, 2.5e-7, 3e-6, "measured", 1e-9, "lap20")
    assert RuntimeModel.from_json(m.to_json()) == m
    m.save(tmp_path / "m.json")
    assert RuntimeModel.load(tmp_path / "m.json") == m


def test_window_validation():
    ToleranceWindow(1e-3, 1e-9)
    for bad in ((1e-9, 1e-3), (1e-3, 1e-3), (1e-3, 0.0)):
        with pytest.raises(ValueError):
            ToleranceWindow(*bad)


def test_synthetic_model():
    m = from_triplets(100, [(i, (i * 7 + k) % 100, 1.0) for i in range(100) for k in range(5)])
    assert m.nnz == 500
    h = synthetic_model(m)
    assert h.cost(10) == 10000
    assert h.source == "synthetic"
    assert h.cost(0) == h.floor_value
    assert all(h.cost(a) < h.cost(a + 1) for a in range(1, 60))


def test_fit_exact():
    dims = [5, 10, 20, 30, 50]
    a2, a1, a0 = fit_quadratic(dims, [2 * m * m + 3 * m + 1 for m in dims])
    assert (a2, a1, a0) == pytest.approx((2, 3, 1), abs=1e-9)
    assert fit_quadratic(dims, [4.0] * 5) == pytest.approx((0, 0, 4.0), abs=1e-12)


def test_fit_noise_beats_grid_search():
    rng = np.random.default_rng(0)
    dims = np.array([5, 10, 20, 30, 50], dtype=float)
    t = 0.5 * dims**2 + 2 * dims + 3 + rng.normal(0, 5, dims.size)
    coef = fit_quadratic(dims, t)

    def sse(c):
        return float(np.sum((np.polyval(c, dims) - t) ** 2))

    best = min(
        sse(c)
        for c in itertools.product(np.linspace(0.3, 0.7, 21), np.linspace(0, 4, 21), np.linspace(-10, 15, 26))
    )
    assert sse(coef) <= best + 1e-9


def test_fit_needs_three_dims():
    with pytest.raises(ValueError):
        fit_quadratic([5, 5, 10], [1, 2, 3])


def test_calibrate_with_fake_timer():
    clock = {"t": 0.0}
    lap = laplacian_2d(8)

    # each timer call advances by a cost tied to how many calls were made; pair up start/stop
    calls = []

    def timer():
        calls.append(None)
        if len(calls) % 2 == 0:
            clock["t"] += 1.0
        return clock["t"]

    model = calibrate(lap, [5, 10, 20], trials=3, timer=timer, name="lap8")
    assert model.source == "measured" and model.matrix == "lap8"
    assert model.cost(10) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        calibrate(lap, [5, 10], trials=1)
    with pytest.raises(ValueError):
        calibrate(lap, [5, 10, 65])


def test_calibrate_real_timing_is_positive():
    model = calibrate(laplacian_2d(10), [5, 10, 20], trials=2)
    assert model.cost(20) > 0


def test_heuristic_two_norms():
    # norms 1e-4 and 1e-8 inside, one cycle of 5
    norms = [1.0, 1e-2, 1e-4, 1e-8, 1e-10, 1e-11]
    tr = make_trace(norms, [5])
    w = heuristic_weights(tr, ToleranceWindow())
    assert w == {3: pytest.approx(1.0)}
    h = RuntimeModel(1.0, 0.0, 0.0, "synthetic", 1e-12)
    assert averaged_heuristic(tr, h, ToleranceWindow()) == pytest.approx(h.cost(3))


def test_heuristic_oracle_three_norms():
    norms = [1.0, 1e-2, 5e-4, 3e-4, 1e-6, 4e-7, 5e-10]
    lengths = [2, 3, 1]
    tr = make_trace(norms, lengths)
    h = RuntimeModel(0.5, 7.0, 1.0, "synthetic", 1.0)
    got = averaged_heuristic(tr, h, ToleranceWindow())
    want = oracle_heuristic(norms, lengths, h.cost, 1e-3, 1e-9)
    assert got == pytest.approx(want, rel=1e-12)
    assert cumulative_costs(tr, h)[4] == h.cost(2) + h.cost(2)


def test_heuristic_undefined():
    tr = make_trace([1.0, 1e-5, 1e-12], [2])
    with pytest.raises(HeuristicUndefinedError):
        heuristic_weights(tr, ToleranceWindow())
    flat = make_trace([1.0, 1e-5, 1e-5, 1e-12], [3])
    with pytest.raises(HeuristicUndefinedError):
        heuristic_weights(flat, ToleranceWindow())


def random_trace(rng):
    cycles = [int(c) for c in rng.integers(1, 8, size=int(rng.integers(1, 6)))]
    j = sum(cycles)
    drops = rng.uniform(0.0, 3.0, size=j)
    drops[rng.random(j) < 0.2] = 0.0  # stalls
    logs = np.concatenate([[0.0], -np.cumsum(drops)])
    norms = 10 ** (logs * 12 / max(-logs[-1], 1e-9) * rng.uniform(0.8, 1.2))
    return norms.tolist(), cycles


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_weights_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    norms, lengths = random_trace(rng)
    tr = make_trace(norms, lengths)
    window = ToleranceWindow()
    try:
        w = heuristic_weights(tr, window)
    except HeuristicUndefinedError:
        inside = [r for r in norms if 1e-3 > r > 1e-9]
        assert len(inside) < 2 or len(set(inside)) == 1
        return
    assert abs(math.fsum(w.values()) - 1.0) <= 1e-12
    h = RuntimeModel(0.5, 5.0, 0.0, "synthetic", 1.0)
    got = averaged_heuristic(tr, h, window)
    assert got == pytest.approx(oracle_heuristic(norms, lengths, h.cost, 1e-3, 1e-9), rel=1e-10)


def test_heuristic_scale_invariant():
    norms = [1.0, 1e-2, 5e-4, 3e-4, 1e-6, 4e-7, 5e-10]
    tr = make_trace(norms, [2, 3, 1])
    scaled = make_trace([norms[0]] + [r * 1.5 for r in norms[1:]], [2, 3, 1])
    h = RuntimeModel(0.5, 7.0, 1.0, "synthetic", 1.0)
    assert averaged_heuristic(tr, h, ToleranceWindow()) == pytest.approx(
        averaged_heuristic(scaled, h, ToleranceWindow()), rel=1e-12
    )


def test_trace_cost_penalty_and_fallback():
    h = RuntimeModel(1.0, 0.0, 0.0, "synthetic", 1e-12)
    assert trace_cost(make_trace([1.0, 0.5], [1], converged=False), h, ToleranceWindow()) == PENALTY
    easy = make_trace([1.0, 1e-12], [1])
    assert trace_cost(easy, h, ToleranceWindow()) == total_cost(easy, h) == 1.0


def test_objective_identity_fallback():
    i = identity(20)
    h = synthetic_model(i)
    v = objective(i, preset("optimized"), h)
    assert v == h.cost(1)


def test_objective_deterministic_and_penalty():
    lap = laplacian_2d(12)
    h = synthetic_model(lap)
    p = preset("optimized")
    assert objective(lap, p, h) == objective(lap, p, h)
    assert objective(lap, p, h, budget=3) == PENALTY
    assert PENALTY > 1e15 > objective(lap, p, h)


def test_objective_orders_more_work_higher():
    # GMRES(1) on the Laplacian takes more inner iterations than GMRES(10) at every tolerance
    lap = laplacian_2d(8)
    h = synthetic_model(lap)
    slow = fixed_restart_objective(lap, 1, h)
    fast = fixed_restart_objective(lap, 10, h)
    assert slow > fast
