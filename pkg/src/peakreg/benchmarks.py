"""Offline perfect-foresight benchmarks: peak shaving alone and regulation alone.

Both are linear programs over charge/discharge magnitudes with explicit SoC
variables. Degradation ``lambda_b |b|`` is priced as ``lambda_b (ch + dc)``.
The relaxation usually keeps ``ch * dc = 0``, but with lossy conversion it
may charge and discharge together to burn energy off a full battery when
degradation is cheap. A single battery cannot do that, so such solutions are
netted to one signed power per step and replayed through the power and SoC
limits; the benchmark is then scored on the replayed dispatch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .battery import BatterySpec, BatteryState, feasible_power, step_signed
from .billing import (
    BillBreakdown,
    RegulationOutcome,
    Tariff,
    TimeSeries,
    check_aligned,
    total_bill,
)
from .lp import EQ, Affine, LinearProgram, SolverError, abs_split, epigraph_max, solve

log = logging.getLogger(__name__)

COMPLEMENTARITY_TOL = 1e-7


@dataclass
class DispatchVars:
    """LP indices of one battery trajectory."""

    ch: np.ndarray
    dc: np.ndarray
    soc: np.ndarray  # soc after each step

    def net(self, coef: float = 1.0) -> Affine:
        """Rows ``coef * (dc[t] - ch[t])``."""
        T = self.ch.size
        t = np.arange(T)
        return Affine(np.concatenate([t, t]), np.concatenate([self.dc, self.ch]),
                      np.concatenate([np.full(T, coef), np.full(T, -coef)]), np.zeros(T))

    def overlap(self, x: np.ndarray) -> float:
        """Largest ``min(ch, dc)`` over the horizon."""
        both = np.minimum(x[self.ch], x[self.dc])
        return float(both.max()) if both.size else 0.0

    def values(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Signed dispatch ``dc - ch`` and SoC path (entry 0 left for the caller's initial SoC)."""
        return x[self.dc] - x[self.ch], np.concatenate([[np.nan], x[self.soc]])

    def physical(self, x: np.ndarray, step_seconds: float, spec: BatterySpec,
                 soc_ini: float) -> tuple[np.ndarray, np.ndarray, bool]:
        """Executable dispatch and SoC path; the flag is set when co-activity had to be netted out."""
        b, soc = self.values(x)
        soc[0] = soc_ini
        if self.overlap(x) <= COMPLEMENTARITY_TOL:
            _replay(b, step_seconds, spec, soc_ini)
            return b, soc, False
        log.warning("LP charges and discharges together (overlap %.3e MW); netting and replaying",
                    self.overlap(x))
        state = BatteryState(soc_ini)
        out = np.empty_like(b)
        for t, v in enumerate(b):
            out[t] = feasible_power(state, float(v), step_seconds, spec)
            state = step_signed(state, out[t], step_seconds, spec)
            soc[t + 1] = state.soc
        return out, soc, True


def add_dispatch(lp: LinearProgram, T: int, step_seconds: float, spec: BatterySpec,
                 soc_ini: float, weight: float = 1.0, name: str = "") -> DispatchVars:
    """Battery variables, SoC dynamics and ``weight``-scaled degradation cost."""
    h = step_seconds / 3600.0
    deg = weight * spec.lambda_b * h
    ch = lp.add_variables(T, cost=deg, lo=0.0, hi=spec.p_max, name=f"ch{name}")
    dc = lp.add_variables(T, cost=deg, lo=0.0, hi=spec.p_max, name=f"dc{name}")
    soc = lp.add_variables(T, cost=0.0, lo=spec.soc_min, hi=spec.soc_max, name=f"soc{name}")
    a = spec.eta_c * h / spec.energy_capacity
    c = h / (spec.eta_d * spec.energy_capacity)
    t = np.arange(T)
    rows = [t, t, t, t[1:]]
    cols = [soc, ch, dc, soc[:-1]]
    vals = [np.ones(T), np.full(T, -a), np.full(T, c), -np.ones(T - 1)]
    const = np.zeros(T)
    const[0] = -soc_ini
    lp.add_constraints(Affine(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), const), EQ, 0.0)
    return DispatchVars(ch, dc, soc)


def window_mean(T: int, w: int, parts: list[tuple[Affine, float]], const: np.ndarray) -> Affine:
    """Window means of ``const + sum(coef * expr)`` over tumbling windows of ``w`` steps."""
    n_win = T // w
    rows, cols, vals = [], [], []
    for expr, coef in parts:
        rows.append(expr.rows // w)
        cols.append(expr.cols)
        vals.append(expr.vals * coef / w)
    c = const.reshape(n_win, w).mean(axis=1)
    return Affine(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), c)


def _solve_checked(lp: LinearProgram, method: str):
    sol = solve(lp, method=method)
    if not sol.optimal:
        raise SolverError(f"benchmark LP is {sol.status}")
    return sol


def _replay(dispatch: np.ndarray, step_seconds: float, spec: BatterySpec, soc_ini: float) -> None:
    state = BatteryState(soc_ini)
    for b in dispatch:
        state = step_signed(state, float(b), step_seconds, spec)


@dataclass
class PeakShaveResult:
    dispatch: TimeSeries
    bill: BillBreakdown
    soc_path: np.ndarray
    objective: float  # LP optimum; a lower bound on the bill when ``netted``
    netted: bool = False


def solve_peak_shaving(load: TimeSeries, tariff: Tariff, spec: BatterySpec, soc_ini: float = 0.5,
                       horizon_days: float | None = None, method: str = "auto") -> PeakShaveResult:
    """Minimize energy + demand charge + degradation over the dispatch, knowing the load."""
    T, ts = len(load), load.step_seconds
    h = load.hours_per_step
    w = tariff.window_steps(ts)
    days = load.duration_days if horizon_days is None else horizon_days
    s = load.values

    lp = LinearProgram()
    bv = add_dispatch(lp, T, ts, spec, soc_ini)
    # energy on s - dc + ch
    lp.objective_constant += tariff.lambda_elec * h * float(s.sum())
    lp.add_cost(bv.dc, -tariff.lambda_elec * h)
    lp.add_cost(bv.ch, tariff.lambda_elec * h)
    epigraph_max(lp, window_mean(T, w, [(bv.net(), -1.0)], s), weight=tariff.peak_rate_per_mw_day * days,
                 lo=0.0, name="peak")

    sol = _solve_checked(lp, method)
    b, soc, netted = bv.physical(sol.values, ts, spec, soc_ini)
    dispatch = load.with_values(b)
    bill = total_bill(load, dispatch, None, tariff, spec.lambda_b, days)
    if not netted:
        _check_objective(sol.objective_value, bill.total)
    return PeakShaveResult(dispatch, bill, soc, sol.objective_value, netted)


@dataclass
class RegulationResult:
    capacity_mw: float
    dispatch: TimeSeries
    revenue: float  # R*: capacity payment - mismatch penalty - degradation
    signal: TimeSeries
    soc_path: np.ndarray
    lambda_b: float  # degradation price the dispatch was optimized under
    lp_revenue: float = float("nan")  # LP optimum; an upper bound on ``revenue`` when ``netted``
    netted: bool = False


def regulation_objective(dispatch: np.ndarray, signal: np.ndarray, capacity: float, step_seconds: float,
                         tariff: Tariff, spec: BatterySpec) -> float:
    """Regulation revenue net of mismatch penalty and degradation for a given dispatch."""
    h = step_seconds / 3600.0
    payment = tariff.lambda_c * capacity * h * signal.size
    mismatch = tariff.lambda_mis * h * float(np.abs(dispatch - capacity * signal).sum())
    degradation = spec.lambda_b * h * float(np.abs(dispatch).sum())
    return payment - mismatch - degradation


def solve_regulation(signal: TimeSeries, tariff: Tariff, spec: BatterySpec, soc_ini: float = 0.5,
                     capacity: float | None = None, method: str = "auto") -> RegulationResult:
    """Maximize regulation revenue over capacity and dispatch, knowing the signal.

    ``capacity`` fixes the bid instead of optimizing it. When the mismatch
    price does not exceed the degradation price the dispatch is held at zero.
    The bid is bounded by
    the power rating: without that bound the problem is unbounded whenever the
    capacity price exceeds the expected mismatch cost of an untracked MW.
    """
    T, ts = len(signal), signal.step_seconds
    h = signal.hours_per_step
    r = signal.values
    if np.any(np.abs(r) > 1.0 + 1e-12):
        raise ValueError("regulation signal must lie in [-1, 1]")
    lp = LinearProgram()
    if capacity is None:
        c_idx = lp.add_variable(cost=-tariff.lambda_c * h * T, lo=0.0, hi=spec.p_max, name="C")
    else:
        if not 0.0 <= capacity:
            raise ValueError("capacity must be non-negative")
        c_idx = lp.add_variable(cost=-tariff.lambda_c * h * T, lo=capacity, hi=capacity, name="C")
    bv = add_dispatch(lp, T, ts, spec, soc_ini)
    if tariff.lambda_mis <= spec.lambda_b:
        # idling is optimal here (and tied with tracking at equality); pin the canonical optimum
        for j in np.concatenate([bv.ch, bv.dc]).tolist():
            lp.upper[j] = 0.0
    t = np.arange(T)
    dev = bv.net()
    dev = Affine(np.concatenate([dev.rows, t]), np.concatenate([dev.cols, np.full(T, c_idx)]),
                 np.concatenate([dev.vals, -r]), np.zeros(T))
    abs_split(lp, dev, weight=tariff.lambda_mis * h, name="mis")

    sol = _solve_checked(lp, method)
    b, soc, netted = bv.physical(sol.values, ts, spec, soc_ini)
    cap = float(sol.values[c_idx])
    revenue = regulation_objective(b, r, cap, ts, tariff, spec)
    if not netted:
        _check_objective(-sol.objective_value, revenue)
    return RegulationResult(cap, signal.with_values(b), revenue, signal, soc, spec.lambda_b, -sol.objective_value,
                            netted)


def bill_with_regulation(load: TimeSeries, reg: RegulationResult, tariff: Tariff,
                         horizon_days: float | None = None) -> BillBreakdown:
    """Bill on ``load - b^r`` with regulation revenue credited.

    The dispatch was optimized for regulation only; its effect on the
    energy and demand charges is whatever it happens to be.
    """
    check_aligned(load, reg.dispatch)
    outcome = RegulationOutcome(reg.capacity_mw, reg.signal)
    return total_bill(load, reg.dispatch, outcome, tariff, reg.lambda_b, horizon_days)


def _check_objective(lp_value: float, recomputed: float, rtol: float = 1e-6) -> None:
    if abs(lp_value - recomputed) > rtol * max(1.0, abs(recomputed)):
        raise SolverError(f"LP objective {lp_value!r} disagrees with recomputed value {recomputed!r}")
