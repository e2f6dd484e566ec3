"""Compare the compiled kernels against the numpy fallback.

Times the simplex on a peak-shaving LP and the real-time controller over a
full 4 s day, checks that both backends agree, and prints one line per case.

    python bench/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import tempfile
import time
from pathlib import Path

import numpy as np

from peakreg import kernels
from peakreg.battery import BatterySpec
from peakreg.billing import Tariff
from peakreg.controller import run_controller
from peakreg.lp.mps import read_mps
from peakreg.lp.simplex import solve_dense
from peakreg.planner import solve_day_ahead
from peakreg.scenarios import gen_rect_peak, gen_trunc_gauss, random_scenarios

TARIFF = Tariff(47.0, 12.0, 50.0, lambda_mis=166.0)
SPEC = BatterySpec(1.0, 0.05, 0.2, 0.8, 0.95, 0.95, 83.0)


def best_of(fn, repeat: int) -> tuple[float, object]:
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def simplex_case(backend: str, repeat: int):
    # the day-ahead LP at 20 s resolution with three scenarios, captured through its MPS dump
    load = gen_rect_peak(0.5, 1.0, 15, 3600, 4.0, 1800)
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "plan.mps"
        solve_day_ahead(load, random_scenarios(3, 900, seed=0), TARIFF, SPEC, downsample=5, dump_lp=path)
        lp = read_mps(path)
    return best_of(lambda: solve_dense(lp, backend=backend), repeat)


def controller_case(backend: str, repeat: int):
    load = gen_rect_peak(0.5, 1.0, 15, 86400, 4.0, 43200)
    sig = gen_trunc_gauss(21600, seed=1)
    return best_of(lambda: run_controller(load, sig, 0.6, 0.8, SPEC, TARIFF, 0.5, backend), repeat)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.compiled_available():
        print("compiled kernels not built; only the fallback can be timed")
    backends = ["python"] + (["cython"] if kernels.compiled_available() else [])
    for name, case in (("simplex, day-ahead LP", simplex_case),
                       ("controller, T=21600", controller_case)):
        times, outs = {}, {}
        for b in backends:
            times[b], outs[b] = case(b, args.repeat)
        line = f"{name:32s}" + "".join(f"  {b} {times[b] * 1e3:9.1f} ms" for b in backends)
        if len(backends) == 2:
            a, c = outs["python"], outs["cython"]
            if name.startswith("simplex"):
                same = abs(a.objective_value - c.objective_value) <= 1e-9 * max(1.0, abs(a.objective_value))
            else:
                same = all(np.array_equal(x, y) for x, y in zip(a, c))
            line += f"  speedup {times['python'] / times['cython']:6.1f}x  agree {same}"
        print(line)


if __name__ == "__main__":
    main()
