"""File formats: series CSVs, scenario directories, plan files and run manifests.

All writers go through ``atomic_write`` (temp file in the target directory,
fsync, rename) so an interrupted run never leaves a partial file under its
final name. Nothing time-dependent is written, which keeps reruns
byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .billing import TimeSeries
from .forecast import History, parse_timestamp
from .planner import DayAheadPlan, ScenarioSet

PLAN_FORMAT = "peakreg-plan/1"


class IngestError(ValueError):
    """Malformed input file; ``row`` is the 1-based line number when known."""

    def __init__(self, path, message: str, row: int | None = None):
        where = f"{path}:{row}" if row is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.row = row


def atomic_write(path: str | Path, data: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x: float) -> str:
    """Shortest repr that round-trips a float."""
    return repr(float(x))


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ------------------------------------------------------------------ CSV

def _read_rows(path: str | Path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestError(path, "empty file") from None
        rows = [(reader.line_num, row) for row in reader if row and any(c.strip() for c in row)]
    return header, rows


def _timestamps_to_seconds(path, rows, idx) -> np.ndarray:
    out = np.empty(len(rows))
    origin = None
    for k, (line, row) in enumerate(rows):
        try:
            t = parse_timestamp(row[idx])
        except (ValueError, IndexError):
            raise IngestError(path, f"bad timestamp {row[idx] if idx < len(row) else ''!r}", line) from None
        origin = origin or t
        out[k] = (t - origin).total_seconds()
    return out


def _uniform_step(path, secs: np.ndarray, rows) -> float:
    if secs.size < 2:
        raise IngestError(path, "need at least two rows to infer the step")
    d = np.diff(secs)
    step = d[0]
    if step <= 0:
        raise IngestError(path, "timestamps must increase", rows[1][0])
    bad = np.flatnonzero(np.abs(d - step) > 1e-6)
    if bad.size:
        raise IngestError(path, f"non-uniform spacing (expected {step:g} s)", rows[bad[0] + 1][0])
    return float(step)


def read_series_csv(path: str | Path, column: str | None = None) -> TimeSeries:
    """Two-column ``timestamp,<value>`` CSV with strictly uniform spacing."""
    header, rows = _read_rows(path)
    if len(header) < 2 or header[0] != "timestamp":
        raise IngestError(path, f"header must start with 'timestamp', got {header}", 1)
    col = 1 if column is None else header.index(column) if column in header else -1
    if col < 0:
        raise IngestError(path, f"missing column {column!r}", 1)
    secs = _timestamps_to_seconds(path, rows, 0)
    step = _uniform_step(path, secs, rows)
    vals = np.empty(len(rows))
    for k, (line, row) in enumerate(rows):
        try:
            vals[k] = float(row[col])
        except (ValueError, IndexError):
            raise IngestError(path, f"bad value in column {header[col]!r}", line) from None
        if not np.isfinite(vals[k]):
            raise IngestError(path, "non-finite value", line)
    return TimeSeries(step, vals)


def series_csv(series: TimeSeries, column: str = "mw", extra: dict[str, np.ndarray] | None = None) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    extra = extra or {}
    w.writerow(["timestamp", column, *extra])
    for i, v in enumerate(series.values):
        t = i * series.step_seconds
        stamp = str(int(t)) if float(t).is_integer() else fmt(t)
        w.writerow([stamp, fmt(v), *(fmt(a[i]) for a in extra.values())])
    return buf.getvalue()


def write_series_csv(path: str | Path, series: TimeSeries, column: str = "mw") -> None:
    atomic_write(path, series_csv(series, column))


def table_csv(rows: list[dict]) -> str:
    buf = _io.StringIO()
    if not rows:
        return ""
    w = csv.writer(buf, lineterminator="\n")
    keys = list(rows[0])
    w.writerow(keys)
    for r in rows:
        w.writerow([fmt(r[k]) if isinstance(r[k], float) else r[k] for k in keys])
    return buf.getvalue()


def read_history_csv(path: str | Path) -> History:
    """Training data ``timestamp,mw,tmp_c,is_holiday``."""
    header, rows = _read_rows(path)
    need = ["timestamp", "mw", "tmp_c", "is_holiday"]
    if header[:4] != need:
        raise IngestError(path, f"header must be {','.join(need)}", 1)
    secs = _timestamps_to_seconds(path, rows, 0)
    step = _uniform_step(path, secs, rows)
    arr = np.empty((len(rows), 3))
    for k, (line, row) in enumerate(rows):
        try:
            arr[k] = [float(row[1]), float(row[2]), int(row[3])]
        except (ValueError, IndexError):
            raise IngestError(path, "bad numeric field", line) from None
    return History(parse_timestamp(rows[0][1][0]), step, arr[:, 0], arr[:, 1], arr[:, 2].astype(np.int64))


def read_weather_csv(path: str | Path) -> tuple[list, np.ndarray, np.ndarray]:
    """Next-day inputs ``timestamp,tmp_c,is_holiday``."""
    header, rows = _read_rows(path)
    if header[:3] != ["timestamp", "tmp_c", "is_holiday"]:
        raise IngestError(path, "header must be timestamp,tmp_c,is_holiday", 1)
    stamps, tmp, hol = [], [], []
    for line, row in rows:
        try:
            stamps.append(row[0])
            tmp.append(float(row[1]))
            hol.append(int(row[2]))
        except (ValueError, IndexError):
            raise IngestError(path, "bad field", line) from None
    return stamps, np.array(tmp), np.array(hol)


# ------------------------------------------------------------ scenarios

def write_scenario_dir(path: str | Path, scenarios: ScenarioSet) -> list[Path]:
    path = Path(path)
    out = []
    for i, s in enumerate(scenarios.scenarios):
        p = path / f"scenario_{i}.csv"
        write_series_csv(p, s, "r")
        out.append(p)
    lines = ["scenario,weight"] + [f"{i},{fmt(w)}" for i, w in enumerate(scenarios.weights)]
    atomic_write(path / "weights.csv", "\n".join(lines) + "\n")
    out.append(path / "weights.csv")
    return out


def read_scenario_dir(path: str | Path) -> ScenarioSet:
    path = Path(path)
    header, rows = _read_rows(path / "weights.csv")
    if header[:2] != ["scenario", "weight"]:
        raise IngestError(path / "weights.csv", "header must be scenario,weight", 1)
    scen, weights = [], []
    for line, row in rows:
        try:
            i, w = int(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise IngestError(path / "weights.csv", "bad row", line) from None
        f = path / f"scenario_{i}.csv"
        if not f.exists():
            raise IngestError(f, "scenario file listed in weights.csv is missing")
        scen.append(read_series_csv(f))
        weights.append(w)
    return ScenarioSet(scen, np.array(weights))


# ----------------------------------------------------------------- plan

def plan_to_json(plan: DayAheadPlan) -> str:
    doc = {
        "format": PLAN_FORMAT,
        "capacity_mw": plan.capacity_mw,
        "threshold_mw": plan.threshold_mw,
        "planned_objective_usd": plan.planned_objective,
        "epigraph_value_mw": plan.epigraph_value,
        "step_seconds": plan.step_seconds,
        "weights": [float(w) for w in plan.weights],
        "expected_dispatch_mw": [float(v) for v in plan.expected_dispatch()],
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


@dataclass
class PlanFile:
    capacity_mw: float
    threshold_mw: float
    planned_objective: float
    step_seconds: float

    def as_plan(self) -> DayAheadPlan:
        """A plan carrying just what the real-time controller needs."""
        return DayAheadPlan(self.capacity_mw, self.threshold_mw, [TimeSeries(self.step_seconds, [0.0])],
                            self.planned_objective, np.ones(1))


def read_plan(path: str | Path) -> PlanFile:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != PLAN_FORMAT:
        raise IngestError(path, f"not a {PLAN_FORMAT} file")
    try:
        return PlanFile(float(doc["capacity_mw"]), float(doc["threshold_mw"]),
                        float(doc["planned_objective_usd"]), float(doc["step_seconds"]))
    except KeyError as exc:
        raise IngestError(path, f"missing key {exc.args[0]!r}") from None


# ------------------------------------------------------------- manifest

def manifest_name(command: str) -> str:
    return f"manifest_{command}.json"


def write_manifest(out_dir: str | Path, command: str, config_sha256: str, seeds: list[int],
                   artifacts: list[Path], warnings: list[str] | None = None, inputs: list[Path] | None = None) -> Path:
    """Record the config hash, seeds and the checksum of every artifact and input.

    Artifacts are keyed by path relative to ``out_dir`` and inputs by file
    name, so runs in different directories produce the same manifest.
    """
    out_dir = Path(out_dir)
    doc = {
        "command": command,
        "config_sha256": config_sha256,
        "seeds": list(seeds),
        "artifacts": {str(Path(p).relative_to(out_dir)) if Path(p).is_relative_to(out_dir) else str(p): sha256_file(p)
                      for p in sorted(artifacts, key=str)},
        "inputs": {Path(p).name: sha256_file(p) for p in sorted(inputs or [], key=lambda q: Path(q).name)},
        "warnings": list(warnings or []),
    }
    path = out_dir / manifest_name(command)
    atomic_write(path, json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return path
