"""Day-ahead load forecast by multiple linear regression on calendar and weather terms.

Design columns, in this order (categoricals one-hot with the first level dropped):

    intercept, trend, tmp,
    month[2..12]                      (11)
    hour[1..23] * tmp                 (23)
    month[2..12] * tmp                (11)
    (day, hour) cells except (0, 0)   (167)
    load_prev_day, is_weekend, is_holiday, similar_days_avg

for 219 columns in all. ``day`` is the weekday with Monday = 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

log = logging.getLogger(__name__)

N_MONTH = 11
N_HOUR = 23
N_DAYHOUR = 7 * 24 - 1
N_COLUMNS = 3 + N_MONTH + N_HOUR + N_MONTH + N_DAYHOUR + 4
SIMILAR_DAYS = 3


@dataclass(frozen=True)
class FeatureRow:
    trend: float
    tmp: float
    month: int  # 1..12
    hour: int  # 0..23
    day_of_week: int  # 0..6, Monday = 0
    load_prev_day: float
    is_weekend: int
    is_holiday: int
    similar_days_avg: float

    def validate(self) -> None:
        if not 1 <= self.month <= 12:
            raise ValueError(f"month {self.month} outside 1..12")
        if not 0 <= self.hour <= 23:
            raise ValueError(f"hour {self.hour} outside 0..23")
        if not 0 <= self.day_of_week <= 6:
            raise ValueError(f"day_of_week {self.day_of_week} outside 0..6")
        if self.is_weekend not in (0, 1) or self.is_holiday not in (0, 1):
            raise ValueError("is_weekend and is_holiday must be 0 or 1")
        nums = (self.trend, self.tmp, self.load_prev_day, self.similar_days_avg)
        if not all(np.isfinite(nums)):
            raise ValueError("numeric features must be finite")


def column_names() -> list[str]:
    names = ["intercept", "trend", "tmp"]
    names += [f"month{m}" for m in range(2, 13)]
    names += [f"hour{h}*tmp" for h in range(1, 24)]
    names += [f"month{m}*tmp" for m in range(2, 13)]
    names += [f"day{d}*hour{h}" for d in range(7) for h in range(24) if (d, h) != (0, 0)]
    names += ["load_prev_day", "is_weekend", "is_holiday", "similar_days_avg"]
    return names


def design_matrix(rows: list[FeatureRow]) -> np.ndarray:
    if not rows:
        raise ValueError("design matrix needs at least one row")
    for r in rows:
        r.validate()
    n = len(rows)
    X = np.zeros((n, N_COLUMNS))
    tmp = np.array([r.tmp for r in rows])
    month = np.array([r.month for r in rows])
    hour = np.array([r.hour for r in rows])
    dow = np.array([r.day_of_week for r in rows])
    i = np.arange(n)
    X[:, 0] = 1.0
    X[:, 1] = [r.trend for r in rows]
    X[:, 2] = tmp
    off = 3
    m = month > 1
    X[i[m], off + month[m] - 2] = 1.0
    off += N_MONTH
    hsel = hour > 0
    X[i[hsel], off + hour[hsel] - 1] = tmp[hsel]
    off += N_HOUR
    X[i[m], off + month[m] - 2] = tmp[m]
    off += N_MONTH
    cell = dow * 24 + hour
    c = cell > 0
    X[i[c], off + cell[c] - 1] = 1.0
    off += N_DAYHOUR
    X[:, off] = [r.load_prev_day for r in rows]
    X[:, off + 1] = [r.is_weekend for r in rows]
    X[:, off + 2] = [r.is_holiday for r in rows]
    X[:, off + 3] = [r.similar_days_avg for r in rows]
    return X


@dataclass
class MlrModel:
    coefficients: np.ndarray
    rank: int
    rank_deficient: bool

    def predict(self, rows: list[FeatureRow]) -> np.ndarray:
        return design_matrix(rows) @ self.coefficients


def fit(rows: list[FeatureRow], targets) -> MlrModel:
    """Least squares via SVD; rank-deficient designs get the minimum-norm solution."""
    X = design_matrix(rows)
    return fit_matrix(X, targets)


def fit_matrix(X: np.ndarray, targets) -> MlrModel:
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    if y.size != X.shape[0]:
        raise ValueError(f"{y.size} targets for {X.shape[0]} rows")
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    deficient = int(rank) < X.shape[1]
    if deficient:
        log.warning("design rank %d < %d columns; using the minimum-norm solution", rank, X.shape[1])
    return MlrModel(beta, int(rank), deficient)


def mape(actual, predicted) -> float:
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if a.size != p.size:
        raise ValueError("actual and predicted differ in length")
    if a.size == 0:
        raise ValueError("empty input")
    zero = np.flatnonzero(a == 0)
    if zero.size:
        raise ValueError(f"actual value is zero at index {int(zero[0])}")
    return float(np.mean(np.abs(a - p) / np.abs(a)))


@dataclass
class CvResult:
    fold_mape: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_mape))


def kfold_cv(rows: list[FeatureRow], targets, k: int = 10) -> CvResult:
    """Contiguous time-block folds; each block is scored by a model fit on the rest."""
    X = design_matrix(rows)
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    n = y.size
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in [2, {n}], got {k}")
    bounds = np.linspace(0, n, k + 1).round().astype(int)
    scores = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        test = np.zeros(n, dtype=bool)
        test[a:b] = True
        model = fit_matrix(X[~test], y[~test])
        scores.append(mape(y[test], X[test] @ model.coefficients))
    return CvResult(scores)


# ------------------------------------------------------------- feature build


def parse_timestamp(raw: str) -> datetime:
    """ISO-8601 (naive means UTC) or integer seconds since the epoch."""
    raw = raw.strip()
    try:
        return datetime.fromtimestamp(int(raw), tz=timezone.utc)
    except ValueError:
        pass
    ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    return ts if ts.tzinfo else ts.replace(tzinfo=timezone.utc)


@dataclass
class History:
    """Uniformly sampled load history with temperature and holiday flags."""

    start: datetime
    step_seconds: float
    load: np.ndarray
    tmp: np.ndarray
    is_holiday: np.ndarray

    @property
    def steps_per_day(self) -> int:
        k = 86400.0 / self.step_seconds
        if abs(k - round(k)) > 1e-9:
            raise ValueError("step does not divide a day")
        return int(round(k))

    def time(self, i: int) -> datetime:
        return self.start + timedelta(seconds=i * self.step_seconds)


def _row(t: datetime, i: int, spd: int, tmp: float, holiday: int, load: np.ndarray, step_seconds: float) -> FeatureRow:
    similar = [load[i - 7 * spd * (j + 1)] for j in range(SIMILAR_DAYS)]
    return FeatureRow(
        trend=i * step_seconds / 86400.0,
        tmp=float(tmp),
        month=t.month,
        hour=t.hour,
        day_of_week=t.weekday(),
        load_prev_day=float(load[i - spd]),
        is_weekend=int(t.weekday() >= 5),
        is_holiday=int(holiday),
        similar_days_avg=float(np.mean(similar)),
    )


def training_rows(hist: History) -> tuple[list[FeatureRow], np.ndarray]:
    """Rows for every step with three weeks of history behind it."""
    spd = hist.steps_per_day
    first = 7 * spd * SIMILAR_DAYS
    if hist.load.size <= first:
        raise ValueError(f"need more than {SIMILAR_DAYS} weeks of history")
    rows = [_row(hist.time(i), i, spd, hist.tmp[i], hist.is_holiday[i], hist.load, hist.step_seconds)
            for i in range(first, hist.load.size)]
    return rows, hist.load[first:].copy()


def next_day_rows(hist: History, tmp_forecast, holiday) -> list[FeatureRow]:
    """Rows for the day right after the history, from history alone plus the weather forecast."""
    spd = hist.steps_per_day
    if hist.load.size % spd:
        raise ValueError("history must cover whole days")
    tmp_forecast = np.asarray(tmp_forecast, dtype=np.float64)
    holiday = np.asarray(holiday, dtype=np.int64)
    if tmp_forecast.size != spd or holiday.size != spd:
        raise ValueError(f"next-day inputs need {spd} values")
    n0 = hist.load.size
    ext = np.concatenate([hist.load, np.full(spd, np.nan)])
    return [_row(hist.time(n0 + j), n0 + j, spd, tmp_forecast[j], holiday[j], ext, hist.step_seconds)
            for j in range(spd)]


def synthetic_history(days: int, seed: int, start: datetime | None = None,
                      step_seconds: float = 3600.0) -> tuple[History, np.ndarray, np.ndarray]:
    """Hourly-style load with daily and weekly shape driven by temperature.

    Returns the history plus the temperature and holiday inputs for the day
    after it, so a forecast can be scored against a known process.
    """
    start = start or datetime(2017, 1, 2, tzinfo=timezone.utc)
    rng = np.random.Generator(np.random.PCG64(seed))
    spd = int(round(86400.0 / step_seconds))
    n = (days + 1) * spd
    t = np.arange(n) * step_seconds / 3600.0
    tmp = 12.0 + 8.0 * np.sin(2 * np.pi * (t - 9.0) / 24.0) + rng.normal(0.0, 1.0, n)
    dow = ((t // 24).astype(int) + start.weekday()) % 7
    weekly = np.where(dow >= 5, -0.08, 0.0)
    daily = 0.15 * np.sin(2 * np.pi * (t - 8.0) / 24.0)
    load = 0.8 + daily + weekly + 0.01 * np.maximum(tmp - 15.0, 0.0) + rng.normal(0.0, 0.01, n)
    holiday = np.zeros(n, dtype=np.int64)
    hist = History(start, step_seconds, load[:-spd], tmp[:-spd], holiday[:-spd])
    return hist, tmp[-spd:], holiday[-spd:]
