import numpy as np
import pytest
from oracles import weighted_medoid

from peakreg.billing import AlignmentError, TimeSeries
from peakreg.planner import ScenarioSet
from peakreg.scenarios import (
    daily_scenarios,
    distance_matrix,
    forward_reduce,
    gen_rect_peak,
    gen_trunc_gauss,
    random_scenarios,
    scenario_distance,
)


def test_distance_closed_form():
    a = TimeSeries(4.0, np.zeros(900))
    b = TimeSeries(4.0, np.full(900, 0.3))
    assert scenario_distance(a, b) == pytest.approx(0.3 * np.sqrt(900 * 4 / 3600), rel=1e-12)
    assert scenario_distance(a, a) == 0.0


def test_distance_symmetric_and_matrix(rng):
    s = ScenarioSet.uniform([TimeSeries(4.0, rng.uniform(-1, 1, 50)) for _ in range(6)])
    D = distance_matrix(s)
    assert np.allclose(D, D.T, rtol=0, atol=1e-12)
    for i in range(6):
        for j in range(6):
            assert D[i, j] == pytest.approx(scenario_distance(s.scenarios[i], s.scenarios[j]), abs=1e-12)


def test_distance_resolution_stable():
    a = TimeSeries(4.0, np.zeros(900))
    b = TimeSeries(4.0, np.full(900, 0.3))
    coarse = scenario_distance(a.resample(60.0), b.resample(60.0))
    assert coarse == pytest.approx(scenario_distance(a, b), rel=1e-12)


def test_distance_misaligned():
    with pytest.raises(AlignmentError):
        scenario_distance(TimeSeries(4.0, np.zeros(3)), TimeSeries(4.0, np.zeros(4)))


def test_reduce_k_equals_n(rng):
    s = ScenarioSet([TimeSeries(4.0, rng.normal(size=20)) for _ in range(5)], np.array([.1, .2, .3, .25, .15]))
    red = forward_reduce(s, 5)
    assert np.array_equal(red.kept_indices, np.arange(5))
    assert np.allclose(red.new_weights, s.weights, rtol=0, atol=1e-15)
    assert red.kantorovich_distance == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_reduce_k_one_is_weighted_medoid(seed):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(5))
    s = ScenarioSet([TimeSeries(4.0, rng.normal(size=30)) for _ in range(5)], w)
    red = forward_reduce(s, 1)
    arg, best = weighted_medoid(s.matrix(), w, 4.0)
    assert red.kept_indices.tolist() == [arg]
    assert red.new_weights.tolist() == [1.0]
    assert red.kantorovich_distance == pytest.approx(best, rel=1e-12)


def test_reduce_range_errors():
    s = random_scenarios(3, 10, seed=0)
    for k in (0, 4):
        with pytest.raises(ValueError):
            forward_reduce(s, k)


def test_reduce_conservation_fuzz():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 15))
        base = [TimeSeries(4.0, rng.normal(size=12)) for _ in range(n)]
        copies = int(rng.integers(1, 4))
        scen = base + [base[0]] * copies
        s = ScenarioSet(scen, rng.dirichlet(np.ones(len(scen))))
        k = int(rng.integers(1, len(scen) + 1))
        red = forward_reduce(s, k)
        assert abs(red.new_weights.sum() - 1.0) <= 1e-12
        assert len(red.kept_indices) == k == len(set(red.kept_indices.tolist()))
        assert np.all(red.new_weights >= 0)


def test_reduce_weight_goes_to_nearest():
    xs = [0.0, 0.1, 5.0, 5.2]
    s = ScenarioSet.uniform([TimeSeries(3600.0, [x]) for x in xs])
    red = forward_reduce(s, 2)
    kept = red.kept_indices.tolist()
    assert (kept[0] in (0, 1)) and (kept[1] in (2, 3))
    assert np.allclose(red.new_weights, [0.5, 0.5])


def test_reduce_objective_non_increasing_in_k():
    s = random_scenarios(12, 60, seed=3)
    prev = np.inf
    for k in range(1, 13):
        d = forward_reduce(s, k).kantorovich_distance
        assert d <= prev + 1e-12
        prev = d
    assert prev == 0.0


def test_reduce_ties_to_lowest_index():
    a = TimeSeries(4.0, np.zeros(4))
    s = ScenarioSet.uniform([a, a, a])
    assert forward_reduce(s, 1).kept_indices.tolist() == [0]


def test_reduction_apply(rng):
    s = random_scenarios(6, 20, seed=1)
    red = forward_reduce(s, 3)
    sub = red.apply(s)
    assert len(sub) == 3
    assert np.array_equal(sub.matrix(), s.matrix()[red.kept_indices])


# ---------------------------------------------------------------- generators

def test_trunc_gauss_range_and_determinism():
    a = gen_trunc_gauss(10000, seed=7)
    assert a.values.min() >= -1.0 and a.values.max() <= 1.0
    assert np.array_equal(a.values, gen_trunc_gauss(10000, seed=7).values)
    assert not np.array_equal(a.values, gen_trunc_gauss(10000, seed=8).values)


def test_trunc_gauss_clt():
    n = 100_000
    x = gen_trunc_gauss(n, seed=11).values
    assert abs(x.mean()) <= 3 * x.std() / np.sqrt(n)


def test_trunc_gauss_narrow_range():
    x = gen_trunc_gauss(500, sigma2=0.12, lo=0.2, hi=0.3, seed=1).values
    assert x.min() >= 0.2 and x.max() <= 0.3


def test_trunc_gauss_errors():
    with pytest.raises(ValueError):
        gen_trunc_gauss(10, lo=1.0, hi=1.0)
    with pytest.raises(ValueError):
        gen_trunc_gauss(10, sigma2=0.0)
    with pytest.raises(ValueError):
        gen_trunc_gauss(10, sigma2=1e-6, lo=50.0, hi=51.0)


def test_rect_peak_profile_and_energy():
    x = gen_rect_peak(0.5, 1.0, 15, 86400, 4.0, 43200)
    assert set(np.unique(x.values).tolist()) == {0.5, 1.0}
    idx = np.flatnonzero(x.values == 1.0)
    assert idx[0] == 10800 and idx[-1] == 10800 + 224
    assert x.values.sum() * 4 / 3600 == pytest.approx(0.5 * 24 + 0.5 * 0.25, rel=1e-12)


def test_rect_peak_zero_minutes_and_overflow():
    assert np.all(gen_rect_peak(0.5, 1.0, 0, 3600, 4.0).values == 0.5)
    with pytest.raises(ValueError):
        gen_rect_peak(0.5, 1.0, 15, 3600, 4.0, 3000)
    with pytest.raises(AlignmentError):
        gen_rect_peak(0.5, 1.0, 15, 3600, 7.0)


def test_daily_scenarios():
    sig = gen_trunc_gauss(30, seed=2)
    s = daily_scenarios(sig, 10)
    assert len(s) == 3
    assert np.array_equal(s.matrix().ravel(), sig.values)
    with pytest.raises(ValueError):
        daily_scenarios(sig, 31)
