import numpy as np
import pytest

from peakreg.billing import (
    AlignmentError,
    BillBreakdown,
    RegulationOutcome,
    Tariff,
    TimeSeries,
    energy_charge,
    mismatch_energy,
    peak_charge,
    smooth,
    total_bill,
)


def day(values_per_min, step=60.0):
    return TimeSeries(step, values_per_min)


# ------------------------------------------------------------------ TimeSeries

def test_timeseries_rejects_bad_input():
    with pytest.raises(ValueError):
        TimeSeries(0.0, [1.0])
    with pytest.raises(ValueError):
        TimeSeries(4.0, [])
    with pytest.raises(ValueError):
        TimeSeries(4.0, [1.0, np.nan])


def test_timeseries_is_immutable():
    s = TimeSeries(4.0, [1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 3.0


def test_resample_round_trip():
    s = TimeSeries(4.0, np.arange(8.0))
    coarse = s.resample(8.0)
    assert np.array_equal(coarse.values, [0.5, 2.5, 4.5, 6.5])
    fine = coarse.resample(4.0)
    assert np.array_equal(fine.values, np.repeat(coarse.values, 2))
    with pytest.raises(AlignmentError):
        s.resample(6.0)


# ---------------------------------------------------------------------- smooth

def test_smooth_constant():
    assert np.array_equal(smooth(TimeSeries(4.0, [1, 1, 1, 1]), 2).values, [1, 1])


def test_smooth_mean():
    out = smooth(TimeSeries(4.0, [0, 0, 4, 4]), 4)
    assert np.array_equal(out.values, [2.0])
    assert out.step_seconds == 16.0


def test_smooth_matches_summation_oracle(rng):
    x = rng.normal(size=8)
    expect = [(x[2 * i] + x[2 * i + 1]) / 2 for i in range(4)]
    assert np.allclose(smooth(TimeSeries(4.0, x), 2).values, expect, rtol=0, atol=1e-15)


def test_smooth_alignment_error():
    with pytest.raises(AlignmentError):
        smooth(TimeSeries(4.0, [1, 2, 3]), 2)


def test_smooth_is_linear(rng):
    x, y = rng.normal(size=60), rng.normal(size=60)
    a, b = 1.7, -0.3
    lhs = smooth(TimeSeries(4.0, a * x + b * y), 6).values
    rhs = a * smooth(TimeSeries(4.0, x), 6).values + b * smooth(TimeSeries(4.0, y), 6).values
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-14)


# -------------------------------------------------------------- energy charge

def test_energy_charge_zero(tariff):
    assert energy_charge(TimeSeries(4.0, np.zeros(10)), tariff) == 0.0


def test_energy_charge_one_mw_day(tariff):
    assert energy_charge(TimeSeries(3600.0, np.ones(24)), tariff) == pytest.approx(1128.0, rel=1e-12)


def test_energy_charge_two_steps(tariff):
    # 47 * 0.5 * 8 / 3600
    assert energy_charge(TimeSeries(4.0, [0.5, 0.5]), tariff) == pytest.approx(0.05222222222222222, rel=1e-12)


def test_energy_charge_negative_load_priced_symmetrically(tariff):
    assert energy_charge(TimeSeries(4.0, [-1.0, 1.0]), tariff) == 0.0


def test_energy_charge_additive(rng, tariff):
    a, b = rng.normal(size=13), rng.normal(size=7)
    whole = energy_charge(TimeSeries(4.0, np.concatenate([a, b])), tariff)
    parts = energy_charge(TimeSeries(4.0, a), tariff) + energy_charge(TimeSeries(4.0, b), tariff)
    assert whole == pytest.approx(parts, rel=1e-12)


# ---------------------------------------------------------------- peak charge

def test_peak_charge_flat_day(tariff):
    assert peak_charge(day(np.ones(1440)), tariff, 1.0) == pytest.approx(400.0, rel=1e-12)


def test_peak_charge_zero(tariff):
    assert peak_charge(day(np.zeros(1440)), tariff, 1.0) == 0.0


def test_peak_charge_single_window(tariff):
    x = np.full(1440, 0.5)
    x[600:615] = 1.2
    assert peak_charge(day(x), tariff, 1.0) == pytest.approx(480.0, rel=1e-12)


def test_peak_charge_floored_at_zero(tariff):
    assert peak_charge(day(np.full(1440, -1.0)), tariff, 1.0) == 0.0


def test_peak_charge_defaults_to_series_duration(tariff):
    half = day(np.ones(720))
    assert peak_charge(half, tariff) == pytest.approx(200.0, rel=1e-12)


def test_peak_charge_monotone(rng, tariff):
    for _ in range(50):
        x = rng.normal(0.5, 0.3, 1440)
        y = x + np.abs(rng.normal(0, 0.1, 1440))
        assert peak_charge(day(y), tariff, 1.0) >= peak_charge(day(x), tariff, 1.0)


def test_peak_window_must_align(tariff):
    with pytest.raises(AlignmentError):
        peak_charge(TimeSeries(7.0, np.ones(1000)), tariff, 1.0)


# ----------------------------------------------------------------- total bill

def test_table_one_original_row():
    b = BillBreakdown(energy_charge=884.2, peak_charge=461.5)
    assert b.total == pytest.approx(1345.7, abs=1e-9)


def test_zero_prices_zero_bill():
    t = Tariff(0.0, 0.0)
    load = day(np.ones(1440))
    assert total_bill(load, None, None, t).total == 0.0


def test_total_bill_component_oracle(rng, tariff):
    ts = 4.0
    s = TimeSeries(ts, rng.uniform(0.4, 1.1, 900))
    b = TimeSeries(ts, rng.uniform(-1, 1, 900))
    r = TimeSeries(ts, rng.uniform(-1, 1, 900))
    y = TimeSeries(ts, s.values + rng.normal(0, 0.01, 900))
    C, lam_b, days = 0.7, 83.0, 900 * ts / 86400
    got = total_bill(s, b, RegulationOutcome(C, r, y), tariff, lam_b)
    h = ts / 3600
    net = s.values - b.values
    energy = 47.0 * h * sum(net)
    means = [sum(net[k:k + 225]) / 225 for k in range(0, 900, 225)]
    peak = 12.0 * 1000 / 30 * days * max(0.0, max(means))
    deg = lam_b * h * sum(abs(v) for v in b.values)
    mis = sum(abs(yy - ss + bb - C * rr) for yy, ss, bb, rr in zip(y.values, s.values, b.values, r.values)) * h
    rev = 50.0 * C * 900 * h - 166.0 * mis
    assert got.energy_charge == pytest.approx(energy, rel=1e-12)
    assert got.peak_charge == pytest.approx(peak, rel=1e-12)
    assert got.battery_cost == pytest.approx(deg, rel=1e-12)
    assert got.regulation_revenue == pytest.approx(rev, rel=1e-12)
    assert got.total == pytest.approx(energy + peak + deg - rev, rel=1e-9)


def test_mismatch_without_baseline(tariff):
    s = TimeSeries(3600.0, [1.0, 1.0])
    b = TimeSeries(3600.0, [0.5, -0.5])
    r = TimeSeries(3600.0, [1.0, -1.0])
    assert mismatch_energy(s, b, RegulationOutcome(1.0, r)) == pytest.approx(1.0)


def test_total_bill_misaligned(tariff):
    with pytest.raises(AlignmentError):
        total_bill(TimeSeries(4.0, np.ones(225)), TimeSeries(4.0, np.ones(224)), None, tariff)


def test_bill_convex_in_dispatch(rng, tariff):
    ts = 60.0
    s = TimeSeries(ts, rng.uniform(0.3, 1.2, 60))
    r = TimeSeries(ts, rng.uniform(-1, 1, 60))

    def bill(b):
        return total_bill(s, s.with_values(b), RegulationOutcome(0.5, r, s), tariff, 83.0).total

    for _ in range(100):
        b1, b2 = rng.uniform(-1, 1, 60), rng.uniform(-1, 1, 60)
        th = rng.uniform()
        assert bill(th * b1 + (1 - th) * b2) <= th * bill(b1) + (1 - th) * bill(b2) + 1e-9
