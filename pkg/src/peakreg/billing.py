"""Time-series container and the commercial tariff billing engine.

Power is in MW throughout; prices carry their units in their field names.
A bill is assembled from an energy charge on the net load, a demand charge
on the peak of the window-averaged net load, battery degradation cost and
(optionally) frequency-regulation revenue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SECONDS_PER_HOUR = 3600.0
SECONDS_PER_DAY = 86400.0


class AlignmentError(ValueError):
    """Series do not share a step size/length, or a window does not divide them."""


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real-valued sequence with step size in seconds."""

    step_seconds: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        step = float(self.step_seconds)
        if not step > 0 or not np.isfinite(step):
            raise ValueError(f"step_seconds must be positive, got {self.step_seconds!r}")
        arr = np.array(self.values, dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise ValueError("a TimeSeries needs at least one value")
        if not np.all(np.isfinite(arr)):
            raise ValueError("TimeSeries values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "step_seconds", step)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    @property
    def hours_per_step(self) -> float:
        return self.step_seconds / SECONDS_PER_HOUR

    @property
    def duration_hours(self) -> float:
        return len(self) * self.hours_per_step

    @property
    def duration_days(self) -> float:
        return len(self) * self.step_seconds / SECONDS_PER_DAY

    def with_values(self, values) -> TimeSeries:
        return TimeSeries(self.step_seconds, values)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return self.step_seconds == other.step_seconds and np.array_equal(self.values, other.values)

    __hash__ = None

    def resample(self, step_seconds: float) -> TimeSeries:
        """Block-average to a coarser step or hold values to a finer one.

        The ratio between the two steps must be an integer.
        """
        if step_seconds == self.step_seconds:
            return self
        if step_seconds > self.step_seconds:
            factor = _integer_ratio(step_seconds, self.step_seconds)
            return smooth(self, factor)
        factor = _integer_ratio(self.step_seconds, step_seconds)
        return TimeSeries(step_seconds, np.repeat(self.values, factor))


def _integer_ratio(big: float, small: float) -> int:
    ratio = big / small
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * ratio:
        raise AlignmentError(f"{big} s is not an integer multiple of {small} s")
    return k


def check_aligned(*series: TimeSeries) -> None:
    first = series[0]
    for s in series[1:]:
        if s.step_seconds != first.step_seconds or len(s) != len(first):
            raise AlignmentError(
                f"misaligned series: ({len(first)} x {first.step_seconds} s) "
                f"vs ({len(s)} x {s.step_seconds} s)"
            )


@dataclass(frozen=True)
class Tariff:
    lambda_elec: float  # $/MWh
    lambda_peak_month: float  # $/kW-month
    lambda_c: float = 0.0  # $/MW per hour of committed capacity
    lambda_mis: float = 0.0  # $/MWh of absolute mismatch
    peak_window_seconds: float = 900.0
    days_per_month: float = 30.0

    def __post_init__(self):
        for name in ("lambda_elec", "lambda_peak_month", "lambda_c", "lambda_mis"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.peak_window_seconds <= 0:
            raise ValueError("peak_window_seconds must be positive")
        if self.days_per_month <= 0:
            raise ValueError("days_per_month must be positive")

    @property
    def peak_rate_per_mw_day(self) -> float:
        """Demand charge prorated to $ per MW of peak per billed day."""
        return self.lambda_peak_month * 1000.0 / self.days_per_month

    def window_steps(self, step_seconds: float) -> int:
        try:
            return _integer_ratio(self.peak_window_seconds, step_seconds)
        except AlignmentError:
            raise AlignmentError(
                f"peak window {self.peak_window_seconds} s is not a multiple of step {step_seconds} s"
            ) from None


@dataclass(frozen=True)
class RegulationOutcome:
    """Committed regulation capacity and the signal it was measured against.

    ``baseline`` is the load forecast reported to the grid operator; when it is
    given the mismatch is measured on the meter, ``|y - s + b - C r|``, otherwise
    on the battery alone, ``|b - C r|``.
    """

    capacity_mw: float
    signal: TimeSeries
    baseline: TimeSeries | None = None


@dataclass(frozen=True)
class BillBreakdown:
    energy_charge: float
    peak_charge: float
    battery_cost: float = 0.0
    regulation_revenue: float = 0.0

    @property
    def total(self) -> float:
        return self.energy_charge + self.peak_charge + self.battery_cost - self.regulation_revenue

    def as_row(self) -> dict[str, float]:
        return {
            "energy_charge": self.energy_charge,
            "peak_charge": self.peak_charge,
            "battery_cost": self.battery_cost,
            "regulation_revenue": self.regulation_revenue,
            "total": self.total,
        }


def smooth(series: TimeSeries, window_steps: int) -> TimeSeries:
    """Mean over consecutive non-overlapping windows of ``window_steps`` samples."""
    window_steps = int(window_steps)
    if window_steps < 1:
        raise ValueError("window_steps must be >= 1")
    n = len(series)
    if n % window_steps:
        raise AlignmentError(f"window of {window_steps} steps does not divide series of length {n}")
    means = series.values.reshape(n // window_steps, window_steps).mean(axis=1)
    return TimeSeries(series.step_seconds * window_steps, means)


def energy_charge(load: TimeSeries, tariff: Tariff) -> float:
    return float(tariff.lambda_elec * load.values.sum() * load.hours_per_step)


def smoothed_peak(load: TimeSeries, tariff: Tariff) -> float:
    """Largest window-averaged load, floored at zero."""
    w = tariff.window_steps(load.step_seconds)
    return max(0.0, float(smooth(load, w).values.max()))


def peak_charge(load: TimeSeries, tariff: Tariff, horizon_days: float | None = None) -> float:
    """Demand charge for a horizon of ``horizon_days`` (defaults to the series length)."""
    if horizon_days is None:
        horizon_days = load.duration_days
    if horizon_days <= 0:
        raise ValueError("horizon_days must be positive")
    return tariff.peak_rate_per_mw_day * horizon_days * smoothed_peak(load, tariff)


def mismatch_energy(
    load: TimeSeries, battery_power: TimeSeries, regulation: RegulationOutcome
) -> float:
    """Absolute regulation mismatch in MWh."""
    check_aligned(load, battery_power, regulation.signal)
    b = battery_power.values
    target = regulation.capacity_mw * regulation.signal.values
    if regulation.baseline is not None:
        check_aligned(load, regulation.baseline)
        dev = regulation.baseline.values - load.values + b - target
    else:
        dev = b - target
    return float(np.abs(dev).sum() * load.hours_per_step)


def regulation_revenue(
    load: TimeSeries, battery_power: TimeSeries, regulation: RegulationOutcome, tariff: Tariff
) -> float:
    """Capacity payment minus the mismatch penalty (degradation excluded)."""
    payment = tariff.lambda_c * regulation.capacity_mw * load.duration_hours
    return payment - tariff.lambda_mis * mismatch_energy(load, battery_power, regulation)


def total_bill(
    load: TimeSeries,
    battery_power: TimeSeries | None,
    regulation: RegulationOutcome | None,
    tariff: Tariff,
    lambda_b: float = 0.0,
    horizon_days: float | None = None,
) -> BillBreakdown:
    """Bill on the net load ``load - battery_power``.

    ``lambda_b`` ($/MWh of throughput) prices battery degradation. Positive
    battery power is discharge.
    """
    if battery_power is None:
        battery_power = load.with_values(np.zeros(len(load)))
    check_aligned(load, battery_power)
    net = load.with_values(load.values - battery_power.values)
    battery_cost = lambda_b * float(np.abs(battery_power.values).sum()) * load.hours_per_step
    revenue = 0.0
    if regulation is not None:
        revenue = regulation_revenue(load, battery_power, regulation, tariff)
    return BillBreakdown(
        energy_charge=energy_charge(net, tariff),
        peak_charge=peak_charge(net, tariff, horizon_days),
        battery_cost=battery_cost,
        regulation_revenue=revenue,
    )
