import sys
from pathlib import Path

import numpy as np
import pytest

from peakreg.battery import BatterySpec
from peakreg.billing import Tariff

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def tariff():
    # experiment prices; lambda_mis = 2 * lambda_b
    return Tariff(lambda_elec=47.0, lambda_peak_month=12.0, lambda_c=50.0, lambda_mis=166.0)


@pytest.fixture
def spec():
    return BatterySpec(p_max=1.0, energy_capacity=0.05, soc_min=0.2, soc_max=0.8, eta_c=0.95, eta_d=0.95,
                       lambda_b=83.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
