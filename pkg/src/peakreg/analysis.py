"""Experiment drivers and metrics for comparing joint and single-service use."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .battery import BatterySpec, CellParams, lambda_b_from_cell
from .benchmarks import bill_with_regulation, solve_peak_shaving, solve_regulation
from .billing import Tariff, TimeSeries, total_bill
from .controller import simulate_day
from .lp import SolverError
from .planner import ScenarioSet, solve_day_ahead
from .scenarios import forward_reduce, gen_rect_peak, gen_trunc_gauss, random_scenarios


@dataclass(frozen=True)
class DailyComparison:
    j_original: float
    j_peak_only: float
    j_reg_only: float
    j_joint: float
    superlinear: bool
    q: float


def superlinear_ratio(j: float, j_p: float, j_r: float, j_joint: float) -> DailyComparison:
    """Joint saving beyond the sum of the single-service savings, relative to the original bill."""
    vals = (j, j_p, j_r, j_joint)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("bills must be finite")
    if j == 0:
        raise ValueError("original bill is zero; the saving ratio is undefined")
    joint_saving = j - j_joint
    separate = (j - j_r) + (j - j_p)
    return DailyComparison(j, j_p, j_r, j_joint, joint_saving > separate, (joint_saving - separate) / j)


@dataclass(frozen=True)
class PeakDurations:
    durations_seconds: np.ndarray  # sorted ascending
    cdf: np.ndarray  # empirical CDF at each sorted duration

    @property
    def total_seconds(self) -> float:
        return float(self.durations_seconds.sum())


def peak_duration_cdf(load: TimeSeries, threshold_fraction: float = 0.95) -> PeakDurations:
    """Lengths of the maximal runs with load at or above ``threshold_fraction`` of the maximum."""
    x = load.values
    above = x >= threshold_fraction * x.max()
    edges = np.diff(np.concatenate([[0], above.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    d = np.sort((ends - starts) * load.step_seconds).astype(np.float64)
    cdf = np.arange(1, d.size + 1) / d.size
    return PeakDurations(d, cdf)


def life_expectancy(annual_throughput_mwh: float, cell: CellParams, energy_capacity: float) -> float:
    """Years until the cycle-life energy budget ``2 N (SoC window) E`` is used up; inf when idle."""
    if annual_throughput_mwh < 0 or energy_capacity <= 0:
        raise ValueError("throughput must be non-negative and capacity positive")
    budget = 2.0 * cell.cycles_n * cell.dod_window * energy_capacity
    if annual_throughput_mwh == 0:
        return math.inf
    return budget / annual_throughput_mwh


# ---------------------------------------------------------------- experiments


@dataclass(frozen=True)
class ExperimentSetup:
    """Everything a synthetic day comparison needs besides the seed."""

    tariff: Tariff
    spec: BatterySpec
    step_seconds: float = 4.0
    horizon_steps: int = 900
    soc_ini: float = 0.5
    horizon_days: float | None = None  # demand-charge proration; None = horizon length
    base_mw: float = 0.5
    peak_mw: float = 1.0
    peak_minutes: float = 15.0
    peak_start_seconds: float = 1800.0
    sigma2: float = 0.12
    scenario_pool: int = 30
    n_scenarios: int = 10
    downsample: int = 1
    lp_method: str = "auto"


@dataclass(frozen=True)
class DayResult:
    comparison: DailyComparison
    capacity_joint: float
    threshold: float
    capacity_reg: float
    joint_throughput_mwh: float


def synthetic_day(setup: ExperimentSetup, seed: int) -> tuple[TimeSeries, TimeSeries, ScenarioSet]:
    """Rectangle-peak load, realized signal and a reduced scenario set for one seed.

    The realized signal and the scenario pool come from independent child
    streams of ``seed``.
    """
    T, ts = setup.horizon_steps, setup.step_seconds
    load = gen_rect_peak(setup.base_mw, setup.peak_mw, setup.peak_minutes, T * ts, ts, setup.peak_start_seconds)
    sig_seq, pool_seq = np.random.SeedSequence(seed).spawn(2)
    signal = gen_trunc_gauss(T, setup.sigma2, -1.0, 1.0, int(sig_seq.generate_state(1)[0]), ts)
    pool = random_scenarios(setup.scenario_pool, T, int(pool_seq.generate_state(1)[0]), setup.sigma2, ts)
    k = min(setup.n_scenarios, len(pool))
    scen = forward_reduce(pool, k).apply(pool)
    return load, signal, scen


def compare_day(load: TimeSeries, signal: TimeSeries, scenarios: ScenarioSet, setup: ExperimentSetup,
                forecast: TimeSeries | None = None) -> DayResult:
    """Original bill, both offline benchmarks and the online joint controller on one day."""
    tariff, spec, days = setup.tariff, setup.spec, setup.horizon_days
    forecast = load if forecast is None else forecast
    j = total_bill(load, None, None, tariff, 0.0, days).total
    jp = solve_peak_shaving(load, tariff, spec, setup.soc_ini, days, setup.lp_method).bill.total
    reg = solve_regulation(signal, tariff, spec, setup.soc_ini, method=setup.lp_method)
    jr = bill_with_regulation(load, reg, tariff, days).total
    plan = solve_day_ahead(forecast, scenarios, tariff, spec, setup.soc_ini, setup.downsample, days,
                           method=setup.lp_method)
    trace = simulate_day(load, signal, plan, spec, tariff, setup.soc_ini, forecast, days)
    throughput = float(np.abs(trace.dispatch.values).sum()) * load.hours_per_step
    return DayResult(superlinear_ratio(j, jp, jr, trace.realized_bill.total), plan.capacity_mw,
                     plan.threshold_mw, reg.capacity_mw, throughput)


def run_seed(setup: ExperimentSetup, seed: int) -> DayResult:
    load, signal, scen = synthetic_day(setup, seed)
    return compare_day(load, signal, scen, setup)


# ------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepCell:
    """One grid point; ``None`` keeps the base setup's value."""

    lambda_cell: float | None = None  # $/Wh, converted to lambda_b through the cell model
    lambda_peak_month: float | None = None
    lambda_c: float | None = None


@dataclass
class SweepRow:
    cell: SweepCell
    probability: float  # fraction of successful seeds with superlinear gain
    n_superlinear: int
    n_ok: int
    n_failed: int
    mean_q: float
    seeds: tuple = field(repr=False, default=())


def cell_setup(base: ExperimentSetup, cell: SweepCell, cycles_n: int = 10000) -> ExperimentSetup:
    tariff, spec = base.tariff, base.spec
    if cell.lambda_peak_month is not None:
        tariff = replace(tariff, lambda_peak_month=cell.lambda_peak_month)
    if cell.lambda_c is not None:
        tariff = replace(tariff, lambda_c=cell.lambda_c)
    if cell.lambda_cell is not None:
        window = spec.soc_max - spec.soc_min
        spec = spec.with_(lambda_b=lambda_b_from_cell(CellParams(cell.lambda_cell, cycles_n, window)))
    return replace(base, tariff=tariff, spec=spec)


def _cell_seed(args):
    setup, seed = args
    try:
        return run_seed(setup, seed)
    except SolverError:
        return None


def worker_count() -> int:
    """Pool size from ``PEAKREG_WORKERS`` (default 1, i.e. in-process)."""
    raw = os.environ.get("PEAKREG_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"PEAKREG_WORKERS must be an integer, got {raw!r}") from None
    return max(1, n)


def sensitivity_sweep(base: ExperimentSetup, cells: list[SweepCell], seeds: list[int],
                      cycles_n: int = 10000, workers: int | None = None) -> list[SweepRow]:
    """Fraction of seeds with superlinear gain at each grid cell.

    Jobs fan out over a process pool; results are gathered in (cell, seed)
    order so the output does not depend on scheduling.
    """
    workers = worker_count() if workers is None else workers
    jobs = [(cell_setup(base, c, cycles_n), s) for c in cells for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_cell_seed, jobs))
    else:
        results = [_cell_seed(j) for j in jobs]
    rows = []
    n = len(seeds)
    for i, c in enumerate(cells):
        chunk = results[i * n:(i + 1) * n]
        ok = [r for r in chunk if r is not None]
        sup = sum(r.comparison.superlinear for r in ok)
        rows.append(SweepRow(
            cell=c,
            probability=sup / len(ok) if ok else math.nan,
            n_superlinear=sup,
            n_ok=len(ok),
            n_failed=n - len(ok),
            mean_q=float(np.mean([r.comparison.q for r in ok])) if ok else math.nan,
            seeds=tuple(seeds),
        ))
    return rows


def grid(lambda_cells: list[float], others: list[float], axis: str) -> list[SweepCell]:
    """Cartesian grid of ``lambda_cell`` against ``lambda_peak_month`` or ``lambda_c``."""
    if axis not in ("lambda_peak_month", "lambda_c"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    return [SweepCell(lambda_cell=a, **{axis: b}) for a in lambda_cells for b in others]
