"""Real-time control: greedy regulation tracking plus a peak threshold.

Each step the battery is asked for ``C r(t)``; while the average net load of
the completed steps in the current demand window exceeds the planned
threshold ``U*``, the excess ``U - U*`` is added to the discharge request.
The request is then clipped to the power rating and to what the SoC allows.
With no threshold this is the optimal regulation-only policy for a fixed bid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .battery import BatterySpec, BatteryState, feasible_power, step_signed
from .billing import (
    BillBreakdown,
    RegulationOutcome,
    Tariff,
    TimeSeries,
    check_aligned,
    mismatch_energy,
    total_bill,
)
from .planner import DayAheadPlan


def regulation_policy(r_t: float, capacity_mw: float, state: BatteryState, spec: BatterySpec,
                      step_seconds: float, lambda_mis: float | None = None) -> float:
    """Track ``C r`` as closely as power and SoC allow.

    When the mismatch penalty does not exceed the degradation price, idling
    is optimal and the policy returns 0.
    """
    if lambda_mis is not None and lambda_mis <= spec.lambda_b:
        return 0.0
    return feasible_power(state, capacity_mw * r_t, step_seconds, spec)


@dataclass(frozen=True)
class WindowState:
    """Running net-load sum over the completed steps of the current demand window."""

    window_steps: int
    acc: float = 0.0
    k: int = 0

    def average(self) -> float | None:
        return self.acc / self.k if self.k else None


def joint_step(r_t: float, load_t: float, window: WindowState, plan: DayAheadPlan, state: BatteryState,
               spec: BatterySpec, step_seconds: float) -> tuple[float, WindowState, BatteryState]:
    """One control step; returns ``(b, window', state')``."""
    if window.k == window.window_steps:
        window = WindowState(window.window_steps)
    b = plan.capacity_mw * r_t
    u = window.average()
    if u is not None and u > plan.threshold_mw:
        b += u - plan.threshold_mw
    b = feasible_power(state, b, step_seconds, spec)
    state = step_signed(state, b, step_seconds, spec)
    window = WindowState(window.window_steps, window.acc + (load_t - b), window.k + 1)
    return b, window, state


@dataclass
class SimulationTrace:
    dispatch: TimeSeries
    soc_path: np.ndarray  # length T + 1, starts at the initial SoC
    realized_bill: BillBreakdown
    mismatch_energy: float  # MWh
    capacity_mw: float
    threshold_mw: float


def run_controller(load: TimeSeries, signal: TimeSeries, capacity: float, threshold: float, spec: BatterySpec,
                   tariff: Tariff, soc_ini: float = 0.5, backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Dispatch and SoC path of the threshold controller (compiled when available)."""
    check_aligned(load, signal)
    n = len(load)
    b = np.empty(n)
    soc = np.empty(n + 1)
    kernels.get(backend).joint_control(
        np.ascontiguousarray(load.values), np.ascontiguousarray(signal.values), float(capacity),
        float(threshold), tariff.window_steps(load.step_seconds), load.step_seconds, spec.p_max,
        spec.energy_capacity, spec.soc_min, spec.soc_max, spec.eta_c, spec.eta_d, float(soc_ini), b, soc)
    return b, soc


def simulate_day(load: TimeSeries, signal: TimeSeries, plan: DayAheadPlan, spec: BatterySpec, tariff: Tariff,
                 soc_ini: float = 0.5, forecast: TimeSeries | None = None, horizon_days: float | None = None,
                 backend: str | None = None) -> SimulationTrace:
    """Run the controller over a day and bill the outcome.

    The mismatch is measured on the meter against the forecast baseline,
    ``|s_hat - s + b - C r|``; without a forecast the realized load serves as
    its own baseline.
    """
    b, soc = run_controller(load, signal, plan.capacity_mw, plan.threshold_mw, spec, tariff, soc_ini, backend)
    dispatch = load.with_values(b)
    baseline = forecast if forecast is not None else load
    outcome = RegulationOutcome(plan.capacity_mw, signal, baseline)
    bill = total_bill(load, dispatch, outcome, tariff, spec.lambda_b, horizon_days)
    mis = mismatch_energy(load, dispatch, outcome)
    return SimulationTrace(dispatch, soc, bill, mis, plan.capacity_mw, plan.threshold_mw)
