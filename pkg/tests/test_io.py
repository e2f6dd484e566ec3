import hashlib
import json

import numpy as np
import pytest

from peakreg.billing import TimeSeries
from peakreg.io import (
    IngestError,
    atomic_write,
    plan_to_json,
    read_history_csv,
    read_plan,
    read_scenario_dir,
    read_series_csv,
    read_weather_csv,
    write_manifest,
    write_scenario_dir,
    write_series_csv,
)
from peakreg.planner import DayAheadPlan, ScenarioSet


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    p = tmp_path / "a" / "f.txt"
    atomic_write(p, "one")
    atomic_write(p, b"two")
    assert p.read_text() == "two"
    assert [q.name for q in p.parent.iterdir()] == ["f.txt"]


def test_series_round_trip_is_exact(tmp_path, rng):
    s = TimeSeries(4.0, rng.normal(size=50))
    write_series_csv(tmp_path / "s.csv", s)
    back = read_series_csv(tmp_path / "s.csv")
    assert back.step_seconds == 4.0
    assert np.array_equal(back.values, s.values)


def test_series_iso_timestamps(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("timestamp,mw\n2020-01-01T00:00:00,1.0\n2020-01-01T00:00:04,2.0\n2020-01-01T00:00:08,3.0\n")
    s = read_series_csv(p)
    assert s.step_seconds == 4.0 and s.values.tolist() == [1.0, 2.0, 3.0]


@pytest.mark.parametrize("body,row", [
    ("timestamp,mw\n0,1\n4,x\n", 3),
    ("timestamp,mw\n0,1\n4,2\n9,3\n", 4),
    ("timestamp,mw\n0,1\nyesterday,2\n", 3),
    ("timestamp,mw\n0,1\n4,nan\n", 3),
    ("time,mw\n0,1\n4,2\n", 1),
])
def test_series_errors_carry_row(tmp_path, body, row):
    p = tmp_path / "s.csv"
    p.write_text(body)
    with pytest.raises(IngestError) as e:
        read_series_csv(p)
    assert e.value.row == row
    assert f":{row}:" in str(e.value)


def test_series_needs_two_rows(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("timestamp,mw\n0,1\n")
    with pytest.raises(IngestError):
        read_series_csv(p)
    p.write_text("")
    with pytest.raises(IngestError):
        read_series_csv(p)


def test_history_and_weather(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("timestamp,mw,tmp_c,is_holiday\n2020-01-01T00:00:00,1.0,5.0,0\n2020-01-01T01:00:00,1.1,6.0,1\n")
    h = read_history_csv(p)
    assert h.step_seconds == 3600.0 and h.is_holiday.tolist() == [0, 1]
    w = tmp_path / "w.csv"
    w.write_text("timestamp,tmp_c,is_holiday\n2020-01-02T00:00:00,4.0,0\n")
    stamps, tmp, hol = read_weather_csv(w)
    assert tmp.tolist() == [4.0] and hol.tolist() == [0]
    w.write_text("timestamp,tmp_c,is_holiday\n2020-01-02T00:00:00,cold,0\n")
    with pytest.raises(IngestError) as e:
        read_weather_csv(w)
    assert e.value.row == 2


def test_scenario_dir_round_trip(tmp_path, rng):
    s = ScenarioSet([TimeSeries(4.0, rng.uniform(-1, 1, 10)) for _ in range(3)], np.array([0.2, 0.3, 0.5]))
    files = write_scenario_dir(tmp_path / "scen", s)
    assert sorted(f.name for f in files) == ["scenario_0.csv", "scenario_1.csv", "scenario_2.csv", "weights.csv"]
    back = read_scenario_dir(tmp_path / "scen")
    assert np.array_equal(back.matrix(), s.matrix())
    assert np.array_equal(back.weights, s.weights)


def test_scenario_dir_missing_file(tmp_path, rng):
    s = ScenarioSet.uniform([TimeSeries(4.0, rng.uniform(-1, 1, 10)) for _ in range(2)])
    write_scenario_dir(tmp_path, s)
    (tmp_path / "scenario_1.csv").unlink()
    with pytest.raises(IngestError, match="missing"):
        read_scenario_dir(tmp_path)


def test_plan_file_round_trip(tmp_path):
    plan = DayAheadPlan(0.4, 0.93, [TimeSeries(4.0, [0.1, -0.2])], 12.5, np.ones(1), epigraph_value=0.93)
    p = tmp_path / "plan.json"
    atomic_write(p, plan_to_json(plan))
    back = read_plan(p)
    assert (back.capacity_mw, back.threshold_mw, back.planned_objective, back.step_seconds) == (0.4, 0.93, 12.5, 4.0)
    assert back.as_plan().capacity_mw == 0.4
    doc = json.loads(p.read_text())
    doc.pop("threshold_mw")
    p.write_text(json.dumps(doc))
    with pytest.raises(IngestError, match="threshold_mw"):
        read_plan(p)
    p.write_text(json.dumps({"format": "other"}))
    with pytest.raises(IngestError):
        read_plan(p)


def test_manifest_is_location_independent(tmp_path):
    manifests = []
    for d in ("a", "b"):
        out = tmp_path / d
        atomic_write(out / "x.csv", "1\n")
        manifests.append(write_manifest(out, "gen", "abc", [1, 2], [out / "x.csv"]).read_text())
    assert manifests[0] == manifests[1]
    assert json.loads(manifests[0])["artifacts"] == {"x.csv": hashlib.sha256(b"1\n").hexdigest()}
