"""Day-ahead two-stage stochastic plan: capacity bid and peak threshold.

The capacity bid ``C`` is decided before the signal is known and shared by
all scenarios; each scenario gets its own recourse dispatch. The demand
charge applies to the probability-weighted expected window-averaged net
load. The threshold handed to the real-time controller is the peak of that
expected smoothed net load under the optimal dispatch; it equals the
epigraph variable whenever the demand charge is binding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .battery import BatterySpec
from .benchmarks import add_dispatch, window_mean
from .billing import AlignmentError, Tariff, TimeSeries, check_aligned, smooth
from .lp import Affine, LinearProgram, SolverError, abs_split, epigraph_max, solve
from .lp.mps import write_mps


@dataclass
class ScenarioSet:
    scenarios: list[TimeSeries]
    weights: np.ndarray

    def __post_init__(self):
        if not self.scenarios:
            raise ValueError("a scenario set needs at least one scenario")
        check_aligned(*self.scenarios)
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.size != len(self.scenarios):
            raise ValueError(f"{w.size} weights for {len(self.scenarios)} scenarios")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        self.weights = w

    @classmethod
    def uniform(cls, scenarios: list[TimeSeries]) -> ScenarioSet:
        n = len(scenarios)
        return cls(list(scenarios), np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return len(self.scenarios)

    @property
    def step_seconds(self) -> float:
        return self.scenarios[0].step_seconds

    def matrix(self) -> np.ndarray:
        return np.vstack([s.values for s in self.scenarios])

    def resample(self, factor: int) -> ScenarioSet:
        if factor == 1:
            return self
        return ScenarioSet([smooth(s, factor) for s in self.scenarios], self.weights.copy())


@dataclass
class DayAheadPlan:
    capacity_mw: float
    threshold_mw: float
    scenario_dispatch: list[TimeSeries]
    planned_objective: float
    weights: np.ndarray = field(repr=False)
    epigraph_value: float = np.nan

    @property
    def step_seconds(self) -> float:
        return self.scenario_dispatch[0].step_seconds

    def expected_dispatch(self) -> np.ndarray:
        return self.weights @ np.vstack([b.values for b in self.scenario_dispatch])


class PlanStateError(RuntimeError):
    """The plan has no solved dispatch to read from."""


def extract_threshold(plan: DayAheadPlan, forecast: TimeSeries, tariff: Tariff) -> float:
    """Largest window mean of the expected planned net load, floored at zero."""
    if not plan.scenario_dispatch:
        raise PlanStateError("plan carries no scenario dispatch")
    ds = len(forecast) // len(plan.scenario_dispatch[0])
    s_hat = smooth(forecast, ds) if ds > 1 else forecast
    net = s_hat.with_values(s_hat.values - plan.expected_dispatch())
    w = tariff.window_steps(net.step_seconds)
    return max(0.0, float(smooth(net, w).values.max()))


def solve_day_ahead(
    forecast: TimeSeries,
    scenarios: ScenarioSet,
    tariff: Tariff,
    spec: BatterySpec,
    soc_ini: float = 0.5,
    downsample: int = 15,
    horizon_days: float | None = None,
    capacity: float | None = None,
    method: str = "auto",
    dump_lp=None,
) -> DayAheadPlan:
    """Solve the two-stage joint problem on the forecast and scenario set.

    The forecast doubles as the regulation baseline, so each scenario's
    mismatch is ``|b_i - C r_i|``. ``downsample`` block-averages forecast and
    scenarios before planning and must divide the demand window.
    ``capacity`` pins the bid (used to compare against single-service plans).
    ``dump_lp`` names a file that receives the LP in fixed-format MPS.
    """
    if len(forecast) != len(scenarios.scenarios[0]) or forecast.step_seconds != scenarios.step_seconds:
        raise AlignmentError("forecast and scenarios are not aligned")
    downsample = int(downsample)
    if downsample < 1:
        raise ValueError("downsample must be >= 1")
    days = forecast.duration_days if horizon_days is None else horizon_days
    s_hat = smooth(forecast, downsample) if downsample > 1 else forecast
    scen = scenarios.resample(downsample)
    ts = s_hat.step_seconds
    T = len(s_hat)
    h = ts / 3600.0
    w = tariff.window_steps(ts)
    if T % w:
        raise AlignmentError(f"demand window of {w} steps does not divide horizon of {T} steps")
    omega = scen.weights
    R = scen.matrix()

    lp = LinearProgram()
    hours = T * h
    if capacity is None:
        c_idx = lp.add_variable(cost=-tariff.lambda_c * hours, lo=0.0, hi=spec.p_max, name="C")
    else:
        c_idx = lp.add_variable(cost=-tariff.lambda_c * hours, lo=capacity, hi=capacity, name="C")
    lp.objective_constant += tariff.lambda_elec * h * float(s_hat.values.sum())

    t = np.arange(T)
    blocks = []
    for i, wi in enumerate(omega):
        bv = add_dispatch(lp, T, ts, spec, soc_ini, weight=wi, name=f"_{i}")
        lp.add_cost(bv.dc, -tariff.lambda_elec * h * wi)
        lp.add_cost(bv.ch, tariff.lambda_elec * h * wi)
        net = bv.net()
        dev = Affine(np.concatenate([net.rows, t]), np.concatenate([net.cols, np.full(T, c_idx)]),
                     np.concatenate([net.vals, -R[i]]), np.zeros(T))
        abs_split(lp, dev, weight=tariff.lambda_mis * h * wi, name=f"mis_{i}")
        blocks.append(bv)

    parts = [(bv.net(), -wi) for bv, wi in zip(blocks, omega)]
    u_idx = epigraph_max(lp, window_mean(T, w, parts, s_hat.values),
                         weight=tariff.peak_rate_per_mw_day * days, lo=0.0, name="U")

    if dump_lp is not None:
        write_mps(lp, dump_lp, "DAYAHEAD")
    sol = solve(lp, method=method)
    if not sol.optimal:
        raise SolverError(f"day-ahead LP is {sol.status}")
    # scenario dispatch only feeds the threshold, so any charge/discharge overlap is simply netted
    dispatch = [s_hat.with_values(bv.values(sol.values)[0]) for bv in blocks]
    plan = DayAheadPlan(
        capacity_mw=float(sol.values[c_idx]),
        threshold_mw=np.nan,
        scenario_dispatch=dispatch,
        planned_objective=sol.objective_value,
        weights=omega.copy(),
        epigraph_value=float(sol.values[u_idx]),
    )
    plan.threshold_mw = extract_threshold(plan, forecast, tariff)
    return plan
