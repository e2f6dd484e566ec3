"""Run configuration: YAML with unit-suffixed keys in five blocks.

Every key has a default except the path bindings a subcommand needs, which
are checked by ``RunConfig.require``. Unknown keys are rejected. Overrides
given on the command line (``block.key=value``) win over the file, which wins
over the defaults.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .battery import BatterySpec, CellParams, lambda_b_from_cell
from .billing import Tariff

# block -> key -> (default, type); type None means "any YAML scalar or list"
SCHEMA: dict[str, dict[str, tuple]] = {
    "tariff": {
        "lambda_elec_usd_per_mwh": (47.0, float),
        "lambda_peak_usd_per_kw_month": (12.0, float),
        "lambda_c_usd_per_mw_h": (50.0, float),
        "lambda_mis_usd_per_mwh": (None, float),  # None: twice the degradation price
        "peak_window_s": (900.0, float),
        "days_per_month": (30.0, float),
        "billing_days": (None, float),  # None: prorate to the horizon length
    },
    "battery": {
        "p_max_mw": (1.0, float),
        "energy_mwh": (0.05, float),
        "soc_min": (0.2, float),
        "soc_max": (0.8, float),
        "soc_ini": (0.5, float),
        "eta_c": (0.95, float),
        "eta_d": (0.95, float),
        "lambda_b_usd_per_mwh": (83.0, float),
        "lambda_cell_usd_per_wh": (0.5, float),
        "cycles_n": (10000, int),
    },
    "horizon": {
        "step_s": (4.0, float),
        "steps": (21600, int),  # one day at 4 s
        "downsample": (15, int),  # 1-minute planning resolution
    },
    "experiment": {
        "seeds": (list(range(20)), list),
        "n_scenarios": (10, int),
        "scenario_pool": (30, int),
        "sigma2": (0.12, float),
        "rect_base_mw": (0.5, float),
        "rect_peak_mw": (1.0, float),
        "rect_minutes": (15.0, float),
        "rect_start_s": (1800.0, float),
        "grid_lambda_cell_usd_per_wh": ([0.25, 0.5, 0.75], list),
        "grid_lambda_peak_usd_per_kw_month": ([6.0, 12.0, 18.0], list),
        "grid_lambda_c_usd_per_mw_h": ([25.0, 50.0, 75.0], list),
        "cv_folds": (10, int),
        "peak_threshold_fraction": (0.95, float),
        "lp_method": ("auto", str),
    },
    "paths": {
        "load_csv": (None, str),
        "signal_csv": (None, str),
        "forecast_csv": (None, str),
        "training_csv": (None, str),
        "weather_csv": (None, str),
        "scenario_dir": (None, str),
        "plan": (None, str),
        "out_dir": (None, str),
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _coerce(key: str, value, typ):
    if value is None:
        return None
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ConfigError(key, f"expected a list, got {value!r}")
        return list(value)
    return value


@dataclass
class RunConfig:
    data: dict

    @classmethod
    def defaults(cls) -> RunConfig:
        return cls({b: {k: copy.deepcopy(v[0]) for k, v in keys.items()} for b, keys in SCHEMA.items()})

    @classmethod
    def from_dict(cls, raw: dict | None) -> RunConfig:
        cfg = cls.defaults()
        raw = raw or {}
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a mapping of blocks")
        for block, entries in raw.items():
            if block not in SCHEMA:
                raise ConfigError(str(block), "unknown block")
            if entries is None:
                continue
            if not isinstance(entries, dict):
                raise ConfigError(block, "block must be a mapping")
            for key, value in entries.items():
                cfg.set(f"{block}.{key}", value)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None) -> RunConfig:
        if path is None:
            return cls.defaults()
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def set(self, dotted: str, value) -> None:
        block, _, key = dotted.partition(".")
        if block not in SCHEMA:
            raise ConfigError(dotted, "unknown block")
        if key not in SCHEMA[block]:
            raise ConfigError(dotted, "unknown key")
        self.data[block][key] = _coerce(dotted, value, SCHEMA[block][key][1])

    def override(self, assignments: list[str]) -> None:
        """Apply ``block.key=value`` strings; values are parsed as YAML scalars."""
        for a in assignments:
            if "=" not in a:
                raise ConfigError(a, "override must look like block.key=value")
            k, v = a.split("=", 1)
            self.set(k.strip(), yaml.safe_load(v))
        self.validate()

    def get(self, dotted: str):
        block, _, key = dotted.partition(".")
        return self.data[block][key]

    def require(self, *dotted: str):
        out = []
        for d in dotted:
            v = self.get(d)
            if v is None:
                raise ConfigError(d, "missing required config key")
            out.append(v)
        return out if len(out) > 1 else out[0]

    def validate(self) -> None:
        try:
            self.tariff()
            self.battery()
        except ValueError as exc:
            raise ConfigError("tariff/battery", str(exc)) from None
        for k in ("horizon.steps", "horizon.downsample", "experiment.n_scenarios", "experiment.scenario_pool"):
            if self.get(k) < 1:
                raise ConfigError(k, "must be >= 1")
        if self.get("horizon.step_s") <= 0:
            raise ConfigError("horizon.step_s", "must be positive")
        if self.get("experiment.lp_method") not in ("auto", "simplex", "highs"):
            raise ConfigError("experiment.lp_method", "must be auto, simplex or highs")
        if not 0 < self.get("battery.soc_ini") <= 1:
            raise ConfigError("battery.soc_ini", "must lie in (0, 1]")

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def sha256(self) -> str:
        """Hash of every setting except the path bindings (inputs are checksummed on their own)."""
        content = {b: v for b, v in self.to_dict().items() if b != "paths"}
        blob = json.dumps(content, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # typed views

    def battery(self) -> BatterySpec:
        b = self.data["battery"]
        return BatterySpec(b["p_max_mw"], b["energy_mwh"], b["soc_min"], b["soc_max"], b["eta_c"], b["eta_d"],
                           b["lambda_b_usd_per_mwh"])

    def tariff(self) -> Tariff:
        t = self.data["tariff"]
        mis = t["lambda_mis_usd_per_mwh"]
        if mis is None:
            mis = 2.0 * self.data["battery"]["lambda_b_usd_per_mwh"]
        return Tariff(t["lambda_elec_usd_per_mwh"], t["lambda_peak_usd_per_kw_month"], t["lambda_c_usd_per_mw_h"],
                      mis, t["peak_window_s"], t["days_per_month"])

    def cell(self) -> CellParams:
        b = self.data["battery"]
        return CellParams(b["lambda_cell_usd_per_wh"], b["cycles_n"], b["soc_max"] - b["soc_min"])

    def soc_ini(self) -> float:
        return self.data["battery"]["soc_ini"]

    def billing_days(self) -> float | None:
        return self.data["tariff"]["billing_days"]

    def lambda_b_warnings(self) -> list[str]:
        """Note when the configured degradation price departs from the cell model by more than 1%."""
        formula = lambda_b_from_cell(self.cell())
        configured = self.data["battery"]["lambda_b_usd_per_mwh"]
        if formula == 0 and configured == 0:
            return []
        ref = max(abs(formula), 1e-300)
        if abs(configured - formula) / ref > 0.01:
            return [
                f"battery.lambda_b_usd_per_mwh = {configured:g} differs from the cell-model value "
                f"{formula:.4f} $/MWh (lambda_cell {self.cell().lambda_cell:g} $/Wh, "
                f"N {self.cell().cycles_n}, window {self.cell().dod_window:g}); using the configured value"
            ]
        return []
