"""Command-line entry point: ``peakreg <subcommand> [options]``.

Every subcommand reads the YAML config given by ``--config`` (defaults
otherwise), applies ``--set block.key=value`` overrides and then its own
flags, writes its artifacts atomically under the output directory and
records them in ``manifest_<subcommand>.json``.

Exit status: 0 success, 2 configuration error, 3 input error, 4 solver
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, io
from .benchmarks import bill_with_regulation, solve_peak_shaving, solve_regulation
from .billing import AlignmentError, total_bill
from .config import ConfigError, RunConfig
from .controller import simulate_day
from .forecast import (
    fit,
    kfold_cv,
    next_day_rows,
    parse_timestamp,
    synthetic_history,
    training_rows,
)
from .lp import SolverError
from .planner import solve_day_ahead
from .scenarios import forward_reduce, gen_rect_peak, gen_trunc_gauss, random_scenarios

log = logging.getLogger("peakreg")

EXIT_CONFIG, EXIT_INPUT, EXIT_SOLVER = 2, 3, 4


class Run:
    """Per-invocation state: config, output directory and the artifacts written so far."""

    def __init__(self, args):
        self.args = args
        self.cfg = RunConfig.load(args.config)
        self.cfg.override(args.set or [])
        for key, value in _flag_overrides(args).items():
            self.cfg.set(key, value)
        self.cfg.validate()
        out = args.out or self.cfg.get("paths.out_dir")
        if out is None:
            raise ConfigError("paths.out_dir", "missing required config key (or pass --out)")
        self.out = Path(out)
        self.artifacts: list[Path] = []
        self.inputs: list[Path] = []
        self.warnings = self.cfg.lambda_b_warnings()
        for w in self.warnings:
            print(f"warning: {w}", file=sys.stderr)

    def path(self, key: str) -> Path:
        p = Path(self.cfg.require(key))
        if not p.exists():
            raise io.IngestError(p, f"{key} does not exist")
        if p.is_file():
            self.inputs.append(p)
        else:
            self.inputs.extend(sorted(p.glob("*.csv")))
        return p

    def write(self, name: str, text: str) -> Path:
        p = self.out / name
        io.atomic_write(p, text)
        self.artifacts.append(p)
        return p

    def finish(self, command: str, seeds=()) -> None:
        io.write_manifest(self.out, command, self.cfg.sha256(), list(seeds), self.artifacts, self.warnings,
                          self.inputs)
        for p in self.artifacts:
            print(p)


def _flag_overrides(args) -> dict:
    """Map subcommand flags onto config keys (flag beats config)."""
    table = {
        "load": "paths.load_csv", "signal": "paths.signal_csv", "forecast": "paths.forecast_csv",
        "training": "paths.training_csv", "weather": "paths.weather_csv", "scenarios": "paths.scenario_dir",
        "plan": "paths.plan", "k": "experiment.n_scenarios", "steps": "horizon.steps",
        "step_s": "horizon.step_s", "downsample": "horizon.downsample",
    }
    return {key: getattr(args, a) for a, key in table.items() if getattr(args, a, None) is not None}


def _kv(items: list[str] | None) -> dict[str, float]:
    out = {}
    for it in items or []:
        k, _, v = it.partition("=")
        if not _:
            raise ConfigError(it, "expected key=value")
        out[k] = float(v)
    return out


def _days(run: Run) -> float | None:
    return run.cfg.billing_days()


# ------------------------------------------------------------- subcommands

def cmd_gen(run: Run) -> None:
    cfg, a = run.cfg, run.args
    ts, T = cfg.get("horizon.step_s"), cfg.get("horizon.steps")
    seed = a.seed if a.seed is not None else cfg.get("experiment.seeds")[0]
    rect = {"base": cfg.get("experiment.rect_base_mw"), "peak": cfg.get("experiment.rect_peak_mw"),
            "minutes": cfg.get("experiment.rect_minutes"), "start": cfg.get("experiment.rect_start_s")}
    unknown = set(_kv(a.rect)) - set(rect)
    if unknown:
        raise ConfigError("--rect", f"unknown fields {sorted(unknown)}")
    rect.update(_kv(a.rect))
    load = gen_rect_peak(rect["base"], rect["peak"], rect["minutes"], T * ts, ts, rect["start"])
    sig_seq, pool_seq = np.random.SeedSequence(seed).spawn(2)
    sigma2 = cfg.get("experiment.sigma2")
    signal = gen_trunc_gauss(T, sigma2, -1.0, 1.0, int(sig_seq.generate_state(1)[0]), ts)
    pool = random_scenarios(cfg.get("experiment.scenario_pool"), T, int(pool_seq.generate_state(1)[0]), sigma2, ts)
    run.write("load.csv", io.series_csv(load, "mw"))
    run.write("forecast.csv", io.series_csv(load, "mw"))
    run.write("signal.csv", io.series_csv(signal, "r"))
    run.artifacts += io.write_scenario_dir(run.out / "scenarios", pool)
    if a.history_days:
        hist, tmp_next, hol_next = synthetic_history(a.history_days, seed)
        rows = ["timestamp,mw,tmp_c,is_holiday"]
        for i in range(hist.load.size):
            rows.append(f"{hist.time(i).isoformat()},{io.fmt(hist.load[i])},{io.fmt(hist.tmp[i])},{hist.is_holiday[i]}")
        run.write("history.csv", "\n".join(rows) + "\n")
        n0 = hist.load.size
        wrows = ["timestamp,tmp_c,is_holiday"]
        for j in range(tmp_next.size):
            wrows.append(f"{hist.time(n0 + j).isoformat()},{io.fmt(tmp_next[j])},{hol_next[j]}")
        run.write("weather.csv", "\n".join(wrows) + "\n")
    run.finish("gen", [seed])


def cmd_forecast(run: Run) -> None:
    hist = io.read_history_csv(run.path("paths.training_csv"))
    stamps, tmp, hol = io.read_weather_csv(run.path("paths.weather_csv"))
    rows, y = training_rows(hist)
    model = fit(rows, y)
    cv = kfold_cv(rows, y, min(run.cfg.get("experiment.cv_folds"), len(y)))
    nxt = next_day_rows(hist, tmp, hol)
    pred = model.predict(nxt)
    expect = hist.time(hist.load.size)
    if parse_timestamp(stamps[0]) != expect:
        raise io.IngestError("weather", f"next-day inputs must start at {expect.isoformat()}")
    lines = ["timestamp,mw"] + [f"{s},{io.fmt(v)}" for s, v in zip(stamps, pred)]
    run.write("forecast_next_day.csv", "\n".join(lines) + "\n")
    cv_rows = [{"fold": i, "mape": m} for i, m in enumerate(cv.fold_mape)] + [{"fold": "mean", "mape": cv.mean}]
    run.write("cv.csv", io.table_csv(cv_rows))
    if model.rank_deficient:
        run.warnings.append(f"forecast design is rank deficient (rank {model.rank}); minimum-norm fit used")
    run.finish("forecast")


def cmd_reduce(run: Run) -> None:
    scen = io.read_scenario_dir(run.path("paths.scenario_dir"))
    k = min(run.cfg.get("experiment.n_scenarios"), len(scen))
    res = forward_reduce(scen, k)
    reduced = res.apply(scen)
    run.artifacts += io.write_scenario_dir(run.out / "reduced", reduced)
    run.write("reduction.csv", io.table_csv(
        [{"kept_index": int(i), "weight": float(w)} for i, w in zip(res.kept_indices, res.new_weights)]
        + [{"kept_index": "distance", "weight": res.kantorovich_distance}]))
    run.finish("reduce")


def cmd_plan(run: Run) -> None:
    cfg = run.cfg
    forecast = io.read_series_csv(run.path("paths.forecast_csv"))
    scen = io.read_scenario_dir(run.path("paths.scenario_dir"))
    dump = run.out / "plan.mps" if run.args.dump_lp else None
    plan = solve_day_ahead(forecast, scen, cfg.tariff(), cfg.battery(), cfg.soc_ini(), cfg.get("horizon.downsample"),
                           _days(run), method=cfg.get("experiment.lp_method"), dump_lp=dump)
    if dump is not None:
        run.artifacts.append(dump)
    run.write("plan.json", io.plan_to_json(plan))
    run.finish("plan")


def cmd_simulate(run: Run) -> None:
    cfg = run.cfg
    plan = io.read_plan(run.path("paths.plan")).as_plan()
    load = io.read_series_csv(run.path("paths.load_csv"))
    signal = io.read_series_csv(run.path("paths.signal_csv"))
    forecast = io.read_series_csv(run.path("paths.forecast_csv")) if cfg.get("paths.forecast_csv") else None
    spec, tariff = cfg.battery(), cfg.tariff()
    trace = simulate_day(load, signal, plan, spec, tariff, cfg.soc_ini(), forecast, _days(run))
    extra = {"r": signal.values, "b": trace.dispatch.values, "soc": trace.soc_path[1:]}
    run.write("trace.csv", io.series_csv(load, "s", extra))
    row = {"case": "joint", **trace.realized_bill.as_row(), "mismatch_mwh": trace.mismatch_energy,
           "capacity_mw": trace.capacity_mw, "threshold_mw": trace.threshold_mw}
    run.write("bill_joint.csv", io.table_csv([row]))
    run.finish("simulate")


def cmd_benchmark(run: Run) -> None:
    cfg = run.cfg
    load = io.read_series_csv(run.path("paths.load_csv"))
    signal = io.read_series_csv(run.path("paths.signal_csv"))
    spec, tariff, days, method = cfg.battery(), cfg.tariff(), _days(run), cfg.get("experiment.lp_method")
    original = total_bill(load, None, None, tariff, 0.0, days)
    ps = solve_peak_shaving(load, tariff, spec, cfg.soc_ini(), days, method)
    reg = solve_regulation(signal, tariff, spec, cfg.soc_ini(), method=method)
    jr = bill_with_regulation(load, reg, tariff, days)
    rows = [{"case": "original", **original.as_row(), "capacity_mw": 0.0},
            {"case": "peak_only", **ps.bill.as_row(), "capacity_mw": 0.0},
            {"case": "regulation_only", **jr.as_row(), "capacity_mw": reg.capacity_mw}]
    run.write("bills.csv", io.table_csv(rows))
    run.write("dispatch_peak_only.csv", io.series_csv(ps.dispatch, "b"))
    run.write("dispatch_regulation_only.csv", io.series_csv(reg.dispatch, "b"))
    run.finish("benchmark")


def _read_bill_table(path: Path) -> dict[str, float]:
    header, rows = io._read_rows(path)
    i_case, i_total = header.index("case"), header.index("total")
    return {r[i_case]: float(r[i_total]) for _, r in rows}


def cmd_analyze(run: Run) -> None:
    cfg, a = run.cfg, run.args
    src = Path(a.results) if a.results else run.out
    bills = _read_bill_table(src / "bills.csv")
    run.inputs.append(src / "bills.csv")
    joint = _read_bill_table(src / "bill_joint.csv")
    run.inputs.append(src / "bill_joint.csv")
    cmp_ = analysis.superlinear_ratio(bills["original"], bills["peak_only"], bills["regulation_only"], joint["joint"])
    run.write("superlinear.csv", io.table_csv([{
        "j_original": cmp_.j_original, "j_peak_only": cmp_.j_peak_only, "j_reg_only": cmp_.j_reg_only,
        "j_joint": cmp_.j_joint, "superlinear": int(cmp_.superlinear), "q": cmp_.q}]))
    load = io.read_series_csv(run.path("paths.load_csv"))
    pdc = analysis.peak_duration_cdf(load, cfg.get("experiment.peak_threshold_fraction"))
    run.write("peak_duration_cdf.csv", io.table_csv(
        [{"duration_s": float(d), "cdf": float(c)} for d, c in zip(pdc.durations_seconds, pdc.cdf)]))
    trace_path = src / "trace.csv"
    if trace_path.exists():
        run.inputs.append(trace_path)
        header, rows = io._read_rows(trace_path)
        ib = header.index("b")
        b = np.array([float(r[ib]) for _, r in rows])
        horizon_days = load.duration_days
        annual = float(np.abs(b).sum()) * load.hours_per_step * 365.0 / horizon_days
        years = analysis.life_expectancy(annual, cfg.cell(), cfg.get("battery.energy_mwh"))
        run.write("life.csv", io.table_csv([{"annual_throughput_mwh": annual, "life_years": years}]))
    run.finish("analyze")


def cmd_sweep(run: Run) -> None:
    cfg, a = run.cfg, run.args
    setup = setup_from_config(cfg)
    seeds = cfg.get("experiment.seeds")
    cells_axis = {"peak": ("lambda_peak_month", "experiment.grid_lambda_peak_usd_per_kw_month"),
                  "c": ("lambda_c", "experiment.grid_lambda_c_usd_per_mw_h")}
    axis, key = cells_axis[a.axis]
    cells = analysis.grid(cfg.get("experiment.grid_lambda_cell_usd_per_wh"), cfg.get(key), axis)
    rows = analysis.sensitivity_sweep(setup, cells, seeds, cfg.get("battery.cycles_n"))
    out = [{"lambda_cell_usd_per_wh": r.cell.lambda_cell, axis: getattr(r.cell, axis),
            "probability": r.probability, "n_superlinear": r.n_superlinear, "n_ok": r.n_ok,
            "n_failed": r.n_failed, "mean_q": r.mean_q} for r in rows]
    run.write(f"sweep_{a.axis}.csv", io.table_csv(out))
    run.finish(f"sweep_{a.axis}", seeds)


def setup_from_config(cfg: RunConfig) -> analysis.ExperimentSetup:
    return analysis.ExperimentSetup(
        tariff=cfg.tariff(), spec=cfg.battery(), step_seconds=cfg.get("horizon.step_s"),
        horizon_steps=cfg.get("horizon.steps"), soc_ini=cfg.soc_ini(), horizon_days=cfg.billing_days(),
        base_mw=cfg.get("experiment.rect_base_mw"), peak_mw=cfg.get("experiment.rect_peak_mw"),
        peak_minutes=cfg.get("experiment.rect_minutes"), peak_start_seconds=cfg.get("experiment.rect_start_s"),
        sigma2=cfg.get("experiment.sigma2"), scenario_pool=cfg.get("experiment.scenario_pool"),
        n_scenarios=cfg.get("experiment.n_scenarios"), downsample=cfg.get("horizon.downsample"),
        lp_method=cfg.get("experiment.lp_method"))


COMMANDS = {
    "gen": cmd_gen, "forecast": cmd_forecast, "reduce": cmd_reduce, "plan": cmd_plan,
    "simulate": cmd_simulate, "benchmark": cmd_benchmark, "analyze": cmd_analyze, "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--set", action="append", metavar="BLOCK.KEY=VALUE", help="override a config key")
    common.add_argument("--out", help="output directory (paths.out_dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="peakreg", description="Battery peak shaving + frequency regulation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="synthetic load, signal and scenario pool")
    g.add_argument("--rect", nargs="*", metavar="KEY=VALUE", help="rectangle peak: base, peak, minutes, start")
    g.add_argument("--seed", type=int)
    g.add_argument("--steps", type=int)
    g.add_argument("--step-s", type=float)
    g.add_argument("--history-days", type=int, default=0, help="also write a training history of this many days")

    f = sub.add_parser("forecast", parents=[common], help="fit the regression and predict the next day")
    f.add_argument("--training")
    f.add_argument("--weather")

    r = sub.add_parser("reduce", parents=[common], help="forward scenario reduction")
    r.add_argument("--scenarios")
    r.add_argument("-k", type=int)

    pl = sub.add_parser("plan", parents=[common], help="day-ahead capacity bid and peak threshold")
    pl.add_argument("--forecast")
    pl.add_argument("--scenarios")
    pl.add_argument("--downsample", type=int)
    pl.add_argument("--dump-lp", action="store_true", help="also write the LP as plan.mps (fixed-format MPS)")

    s = sub.add_parser("simulate", parents=[common], help="run the real-time controller on a day")
    s.add_argument("--plan")
    s.add_argument("--load")
    s.add_argument("--signal")
    s.add_argument("--forecast")

    b = sub.add_parser("benchmark", parents=[common], help="offline peak-only and regulation-only optima")
    b.add_argument("--load")
    b.add_argument("--signal")

    an = sub.add_parser("analyze", parents=[common], help="superlinear ratio, peak durations, battery life")
    an.add_argument("--results", help="directory holding bills.csv, bill_joint.csv and trace.csv")
    an.add_argument("--load")

    sw = sub.add_parser("sweep", parents=[common], help="probability of superlinear gain over a price grid")
    sw.add_argument("--axis", choices=["peak", "c"], default="peak")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        run = Run(args)
        COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (io.IngestError, AlignmentError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return 0


if __name__ == "__main__":
    sys.exit(main())
