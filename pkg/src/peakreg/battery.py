"""Battery electrical model and linearized degradation price."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .billing import SECONDS_PER_HOUR

# Tolerance for SoC bound checks; floating-point drift below this is accepted.
SOC_TOL = 1e-9


class SocViolationError(ValueError):
    pass


class PowerLimitError(ValueError):
    pass


@dataclass(frozen=True)
class BatterySpec:
    p_max: float  # MW
    energy_capacity: float  # MWh
    soc_min: float = 0.2
    soc_max: float = 0.8
    eta_c: float = 0.95
    eta_d: float = 0.95
    lambda_b: float = 83.0  # $/MWh throughput

    def __post_init__(self):
        if not 0.0 <= self.soc_min < self.soc_max <= 1.0:
            raise ValueError(f"need 0 <= soc_min < soc_max <= 1, got [{self.soc_min}, {self.soc_max}]")
        if self.p_max < 0:
            # p_max == 0 is allowed so that "no battery" runs go through the same code.
            raise ValueError("p_max must be non-negative")
        if self.energy_capacity <= 0:
            raise ValueError("energy_capacity must be positive")
        if not (0 < self.eta_c <= 1 and 0 < self.eta_d <= 1):
            raise ValueError("efficiencies must lie in (0, 1]")
        if self.lambda_b < 0:
            raise ValueError("lambda_b must be non-negative")

    def with_(self, **changes) -> BatterySpec:
        return replace(self, **changes)

    @property
    def usable_energy(self) -> float:
        return (self.soc_max - self.soc_min) * self.energy_capacity


@dataclass(frozen=True)
class BatteryState:
    soc: float


@dataclass(frozen=True)
class CellParams:
    lambda_cell: float  # $/Wh
    cycles_n: int
    dod_window: float  # soc_max - soc_min

    def __post_init__(self):
        if self.lambda_cell < 0 or self.cycles_n <= 0 or self.dod_window <= 0:
            raise ValueError("cell parameters must be positive")


def lambda_b_from_cell(cell: CellParams) -> float:
    """Prorated degradation price in $/MWh: cell price over lifetime throughput."""
    denom = 2.0 * cell.cycles_n * cell.dod_window
    if denom == 0:
        raise ZeroDivisionError("cycle count and DoD window must be nonzero")
    return cell.lambda_cell * 1e6 / denom


def degradation_cost(b_mw: float, step_seconds: float, spec: BatterySpec) -> float:
    if abs(b_mw) > spec.p_max * (1 + 1e-12):
        raise PowerLimitError(f"|{b_mw}| MW exceeds rating {spec.p_max} MW")
    return spec.lambda_b * abs(b_mw) * step_seconds / SECONDS_PER_HOUR


def step(state: BatteryState, b_ch: float, b_dc: float, step_seconds: float, spec: BatterySpec) -> BatteryState:
    """Advance the SoC by one step of charging ``b_ch`` or discharging ``b_dc`` (MW)."""
    if b_ch < 0 or b_dc < 0:
        raise ValueError("b_ch and b_dc are magnitudes and must be non-negative")
    if b_ch > spec.p_max * (1 + 1e-12) or b_dc > spec.p_max * (1 + 1e-12):
        raise PowerLimitError(f"power above rating {spec.p_max} MW")
    if b_ch > 0 and b_dc > 0:
        raise ValueError("simultaneous charge and discharge")
    h = step_seconds / SECONDS_PER_HOUR
    soc = state.soc + (b_ch * spec.eta_c - b_dc / spec.eta_d) * h / spec.energy_capacity
    if soc < spec.soc_min - SOC_TOL or soc > spec.soc_max + SOC_TOL:
        raise SocViolationError(f"SoC {soc:.12g} outside [{spec.soc_min}, {spec.soc_max}]")
    return BatteryState(soc)


def step_signed(state: BatteryState, b_mw: float, step_seconds: float, spec: BatterySpec) -> BatteryState:
    """``step`` with signed power (positive discharges)."""
    if b_mw >= 0:
        return step(state, 0.0, b_mw, step_seconds, spec)
    return step(state, -b_mw, 0.0, step_seconds, spec)


def discharge_limit(soc: float, step_seconds: float, spec: BatterySpec) -> float:
    """Largest discharge (MW) the stored energy allows for one step."""
    return spec.eta_d * (soc - spec.soc_min) * spec.energy_capacity * SECONDS_PER_HOUR / step_seconds


def charge_limit(soc: float, step_seconds: float, spec: BatterySpec) -> float:
    """Most negative power (MW) the remaining headroom allows for one step."""
    return (soc - spec.soc_max) * spec.energy_capacity * SECONDS_PER_HOUR / (spec.eta_c * step_seconds)


def feasible_power(state: BatteryState, requested_mw: float, step_seconds: float, spec: BatterySpec) -> float:
    """Clip a signed power request to the rating and to what the SoC allows."""
    if requested_mw >= 0:
        limit = discharge_limit(state.soc, step_seconds, spec)
        return max(0.0, min(requested_mw, spec.p_max, limit))
    limit = charge_limit(state.soc, step_seconds, spec)
    return min(0.0, max(requested_mw, -spec.p_max, limit))
