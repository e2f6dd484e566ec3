import numpy as np
import pytest
from lp_cases import random_lp
from oracles import vertex_enumeration

from peakreg import kernels
from peakreg.lp import (
    EQ,
    GE,
    LE,
    Affine,
    LinearProgram,
    SolverError,
    abs_split,
    epigraph_max,
    primal_residual,
    solve,
)
from peakreg.lp.simplex import solve_dense

BACKENDS = ["python"] + (["cython"] if kernels.compiled_available() else [])


def row(lp, idx, coef, sense, rhs):
    lp.add_constraint(idx, coef, sense, rhs)


def test_min_x_ge_one():
    lp = LinearProgram()
    x = lp.add_variable(cost=1.0, lo=-np.inf)
    row(lp, [x], [1.0], GE, 1.0)
    sol = solve(lp, "simplex")
    assert sol.optimal
    assert sol.values[0] == pytest.approx(1.0)
    assert sol.objective_value == pytest.approx(1.0)


def test_textbook_face():
    lp = LinearProgram()
    lp.add_variables(2, cost=-1.0)
    row(lp, [0, 1], [1.0, 1.0], LE, 1.0)
    sol = solve(lp, "simplex")
    assert sol.objective_value == pytest.approx(-1.0)
    assert sol.values.sum() == pytest.approx(1.0)


def test_infeasible():
    lp = LinearProgram()
    x = lp.add_variable(cost=1.0)
    row(lp, [x], [1.0], GE, 2.0)
    row(lp, [x], [1.0], LE, 1.0)
    for method in ("simplex", "highs"):
        assert solve(lp, method).status == "infeasible"


def test_infeasible_bounds_and_empty_row():
    lp = LinearProgram()
    lp.add_variable(lo=2.0, hi=1.0)
    assert solve(lp, "simplex").status == "infeasible"
    lp = LinearProgram()
    lp.add_variable()
    lp.add_constraints(Affine.constant(1.0), LE, 0.0)
    assert solve(lp, "simplex").status == "infeasible"


def test_unbounded():
    lp = LinearProgram()
    x, y = lp.add_variables(2, cost=[-1.0, 0.0])
    row(lp, [x, y], [1.0, -1.0], LE, 1.0)
    for method in ("simplex", "highs"):
        assert solve(lp, method).status == "unbounded"


def test_unbounded_free_empty_column():
    lp = LinearProgram()
    lp.add_variable(cost=1.0, lo=-np.inf)
    assert solve(lp, "simplex").status == "unbounded"


def test_unknown_method():
    with pytest.raises(ValueError):
        solve(LinearProgram(), "interior")


def test_iteration_cap_raises():
    lp, _ = random_lp(3)
    lp2 = LinearProgram()
    n = 8
    lp2.add_variables(n, cost=-np.arange(1.0, n + 1), hi=1.0)
    for k in range(n):
        row(lp2, list(range(k + 1)), [1.0] * (k + 1), LE, 0.5 * (k + 1))
    with pytest.raises(SolverError):
        solve_dense(lp2, max_iter=1)


@pytest.mark.parametrize("seed", range(50))
def test_random_lp_matches_vertex_enumeration(seed):
    lp, dense = random_lp(seed)
    ref = vertex_enumeration(*dense)
    sol = solve(lp, "simplex")
    if ref is None:
        assert sol.status == "infeasible"
        return
    assert sol.optimal
    assert primal_residual(lp, sol.values) <= 1e-7
    assert sol.objective_value == pytest.approx(ref, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("seed", range(30))
def test_simplex_agrees_with_highs(seed):
    rng = np.random.default_rng(seed)
    n, m = 25, 15
    lp = LinearProgram()
    lp.add_variables(n, cost=rng.normal(size=n), lo=-rng.uniform(0, 2, n), hi=rng.uniform(0, 2, n))
    for _ in range(m):
        a = rng.normal(size=n) * (rng.uniform(size=n) < 0.5)
        lp.add_constraints(Affine(np.zeros(n, dtype=np.int64), np.arange(n), a, [0.0]),
                           [LE, GE, EQ][int(rng.integers(3))], float(rng.normal(0, 0.3)))
    a, b = solve(lp, "simplex"), solve(lp, "highs")
    assert a.status == b.status
    if a.optimal:
        assert a.objective_value == pytest.approx(b.objective_value, rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("backend", BACKENDS)
def test_deterministic(backend):
    lp, _ = random_lp(11)
    a = solve_dense(lp, backend=backend)
    b = solve_dense(lp, backend=backend)
    assert np.array_equal(a.values, b.values)
    assert a.objective_value == b.objective_value


@pytest.mark.skipif(not kernels.compiled_available(), reason="compiled kernels not built")
@pytest.mark.parametrize("seed", range(20))
def test_backends_bitwise_equal(seed):
    lp, _ = random_lp(seed)
    a = solve_dense(lp, backend="python")
    b = solve_dense(lp, backend="cython")
    assert a.status == b.status
    if a.optimal:
        assert np.array_equal(a.values, b.values)
        assert a.iterations == b.iterations


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("factor", [2.0, 3.7])
def test_scaling_invariance(seed, factor):
    lp, _ = random_lp(seed)
    ref = solve(lp, "simplex")
    scaled = LinearProgram(cost=[factor * v for v in lp.cost], lower=list(lp.lower), upper=list(lp.upper))
    c, A, senses, b, lo, hi = lp.matrices()
    for i in range(A.shape[0]):
        r = A.getrow(i)
        scaled.add_constraint(r.indices, r.data, senses[i], b[i])
    got = solve(scaled, "simplex")
    assert got.status == ref.status
    if ref.optimal:
        assert np.array_equal(got.values, ref.values)


def test_objective_constant():
    lp = LinearProgram(objective_constant=5.0)
    lp.add_variable(cost=1.0, lo=1.0, hi=2.0)
    assert solve(lp, "simplex").objective_value == pytest.approx(6.0)


# ----------------------------------------------------------- reformulations

@pytest.mark.parametrize("k,expect", [(3.0, 3.0), (-3.0, 3.0)])
def test_abs_split_constant(k, expect):
    lp = LinearProgram()
    aux = abs_split(lp, Affine.constant(k))
    sol = solve(lp, "simplex")
    assert sol.values[aux[0]] == pytest.approx(expect)


def test_abs_split_matches_grid_search():
    # minimize |x - 0.3| + 2|x + y - 1| + 0.5|y + 0.4| + 0.1 y over the box [-1, 1]^2
    lp = LinearProgram()
    x, y = lp.add_variables(2, lo=-1.0, hi=1.0)
    lp.add_cost(y, 0.1)
    abs_split(lp, Affine.single([x], [1.0], -0.3), 1.0)
    abs_split(lp, Affine.single([x, y], [1.0, 1.0], -1.0), 2.0)
    abs_split(lp, Affine.single([y], [1.0], 0.4), 0.5)
    sol = solve(lp, "simplex")
    g = np.round(np.linspace(-1, 1, 201), 10)
    X, Y = np.meshgrid(g, g)
    F = np.abs(X - 0.3) + 2 * np.abs(X + Y - 1) + 0.5 * np.abs(Y + 0.4) + 0.1 * Y
    assert sol.objective_value == pytest.approx(F.min(), abs=1e-9)


def test_epigraph_constants():
    lp = LinearProgram()
    u = epigraph_max(lp, Affine.stack([Affine.constant(v) for v in (1.0, 5.0, 2.0)]))
    assert solve(lp, "simplex").values[u] == pytest.approx(5.0)


def test_epigraph_single_is_identity():
    lp = LinearProgram()
    x = lp.add_variable(lo=0.5, hi=3.0, cost=1.0)
    u = epigraph_max(lp, Affine.single([x], [2.0], 1.0), weight=1.0)
    sol = solve(lp, "simplex")
    assert sol.values[u] == pytest.approx(2 * sol.values[x] + 1)


def test_epigraph_empty():
    with pytest.raises(ValueError):
        epigraph_max(LinearProgram(), Affine.stack([]))


@pytest.mark.parametrize("seed", range(10))
def test_epigraph_matches_direct_max(seed):
    rng = np.random.default_rng(seed)
    n, k = 3, 6
    lp = LinearProgram()
    lp.add_variables(n, cost=rng.normal(0, 0.2, n), lo=-1.0, hi=1.0)
    A = rng.normal(size=(k, n))
    d = rng.normal(size=k)
    exprs = Affine.stack([Affine.single(np.arange(n), A[i], d[i]) for i in range(k)])
    u = epigraph_max(lp, exprs, weight=1.0)
    sol = solve(lp, "simplex")
    x = sol.values[:n]
    assert sol.values[u] == pytest.approx(float((A @ x + d).max()), abs=1e-9)


def test_affine_evaluate_and_checks():
    e = Affine([0, 0, 1], [0, 1, 1], [1.0, 2.0, -1.0], [0.5, 0.0])
    assert np.allclose(e.evaluate([1.0, 2.0]), [5.5, -2.0])
    with pytest.raises(ValueError):
        Affine([2], [0], [1.0], [0.0])
    lp = LinearProgram()
    with pytest.raises(ValueError):
        lp.add_constraints(Affine.single([3], [1.0]), LE, 0.0)
    with pytest.raises(ValueError):
        lp.add_constraints(Affine.constant(0.0), "!", 0.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_degenerate_tie_avoids_tiny_pivot(tmp_path, backend):
    # the MPS round trip of this day-ahead LP once led the stalled pivot rule onto a 1.4e-7 pivot
    from peakreg.battery import BatterySpec
    from peakreg.billing import Tariff
    from peakreg.lp.mps import read_mps
    from peakreg.planner import solve_day_ahead
    from peakreg.scenarios import gen_rect_peak, random_scenarios

    tariff = Tariff(47.0, 12.0, 50.0, lambda_mis=166.0)
    spec = BatterySpec(1.0, 0.05, 0.2, 0.8, 0.95, 0.95, 83.0)
    load = gen_rect_peak(0.5, 1.0, 15, 3600, 4.0, 1800)
    path = tmp_path / "plan.mps"
    solve_day_ahead(load, random_scenarios(3, 900, seed=0), tariff, spec, downsample=5, dump_lp=path)
    lp = read_mps(path)
    got = solve_dense(lp, backend=backend)
    assert primal_residual(lp, got.values) <= 1e-7
    assert got.objective_value == pytest.approx(solve(lp, "highs").objective_value, rel=1e-8)
