"""Regulation-signal scenarios: forward reduction and synthetic generators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .billing import AlignmentError, TimeSeries, check_aligned
from .planner import ScenarioSet


def scenario_distance(a: TimeSeries, b: TimeSeries) -> float:
    """Euclidean distance scaled by ``sqrt(step hours)`` so it does not depend on resolution."""
    check_aligned(a, b)
    return float(np.linalg.norm(a.values - b.values) * np.sqrt(a.hours_per_step))


def distance_matrix(scenarios: ScenarioSet) -> np.ndarray:
    X = scenarios.matrix()
    sq = np.einsum("ij,ij->i", X, X)
    G = X @ X.T
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * G, 0.0)
    D = np.sqrt(D2) * np.sqrt(scenarios.scenarios[0].hours_per_step)
    np.fill_diagonal(D, 0.0)
    return D


@dataclass
class ReductionResult:
    kept_indices: np.ndarray
    new_weights: np.ndarray  # aligned with kept_indices
    kantorovich_distance: float

    def apply(self, scenarios: ScenarioSet) -> ScenarioSet:
        return ScenarioSet([scenarios.scenarios[i] for i in self.kept_indices], self.new_weights.copy())


def forward_reduce(scenarios: ScenarioSet, k: int, distances: np.ndarray | None = None) -> ReductionResult:
    """Fast forward selection of ``k`` scenarios.

    Greedily adds the scenario that most lowers the probability-weighted
    distance from the unselected scenarios to their nearest selected one,
    then moves every dropped scenario's weight onto its nearest survivor.
    Ties go to the lowest index.
    """
    n = len(scenarios)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    p = scenarios.weights
    D = distance_matrix(scenarios) if distances is None else np.asarray(distances, dtype=np.float64)
    selected: list[int] = []
    nearest = np.full(n, np.inf)
    remaining = np.ones(n, dtype=bool)
    for _ in range(k):
        # candidate u: sum over i not in S+{u} of p_i * min(nearest_i, D[i, u])
        cand = np.minimum(nearest[:, None], D)
        contrib = p[:, None] * cand
        contrib[~remaining, :] = 0.0
        score = contrib.sum(axis=0) - np.diag(contrib)
        score[~remaining] = np.inf
        u = int(np.argmin(score))
        selected.append(u)
        remaining[u] = False
        nearest = np.minimum(nearest, D[:, u])
    kept = np.array(sorted(selected), dtype=np.int64)
    owner = kept[np.argmin(D[:, kept], axis=1)]
    new_w = np.zeros(n)
    np.add.at(new_w, owner, p)
    weights = new_w[kept]
    weights = weights / weights.sum()
    dropped = np.setdiff1d(np.arange(n), kept)
    dist = float((p[dropped] * D[dropped][:, kept].min(axis=1)).sum()) if dropped.size else 0.0
    return ReductionResult(kept, weights, dist)


def gen_trunc_gauss(length: int, sigma2: float = 0.12, lo: float = -1.0, hi: float = 1.0, seed: int = 0,
                    step_seconds: float = 4.0) -> TimeSeries:
    """I.i.d. zero-mean Gaussian draws truncated to ``[lo, hi]`` by rejection."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    length = int(length)
    if length < 1:
        raise ValueError("length must be >= 1")
    sigma = np.sqrt(sigma2)
    rng = np.random.Generator(np.random.PCG64(seed))
    out = np.empty(length)
    filled = 0
    while filled < length:
        need = length - filled
        draw = rng.normal(0.0, sigma, size=max(need + need // 8 + 16, 64))
        ok = draw[(draw >= lo) & (draw <= hi)][:need]
        if ok.size == 0 and np.exp(-0.5 * min(lo * lo, hi * hi) / sigma2) < 1e-300:
            raise ValueError("truncation range has negligible probability")
        out[filled:filled + ok.size] = ok
        filled += ok.size
    return TimeSeries(step_seconds, out)


def gen_rect_peak(base_mw: float, peak_mw: float, peak_minutes: float, day_seconds: float = 86400.0,
                  step_seconds: float = 4.0, peak_start_seconds: float = 0.0) -> TimeSeries:
    """Flat ``base_mw`` load with one ``peak_mw`` rectangle of ``peak_minutes``."""
    n = _steps(day_seconds, step_seconds, "day length")
    width = _steps(peak_minutes * 60.0, step_seconds, "peak duration") if peak_minutes else 0
    start = _steps(peak_start_seconds, step_seconds, "peak start") if peak_start_seconds else 0
    if start < 0 or start + width > n:
        raise ValueError("peak interval does not fit inside the day")
    values = np.full(n, float(base_mw))
    values[start:start + width] = float(peak_mw)
    return TimeSeries(step_seconds, values)


def _steps(seconds: float, step_seconds: float, what: str) -> int:
    k = seconds / step_seconds
    ki = int(round(k))
    if abs(k - ki) > 1e-9 * max(1.0, k):
        raise AlignmentError(f"{what} of {seconds} s is not a whole number of {step_seconds} s steps")
    return ki


def daily_scenarios(signal: TimeSeries, steps_per_day: int) -> ScenarioSet:
    """Cut a long historical signal into equally weighted daily scenarios."""
    n = len(signal) // steps_per_day
    if n < 1:
        raise ValueError("signal shorter than one day")
    days = [signal.with_values(signal.values[i * steps_per_day:(i + 1) * steps_per_day]) for i in range(n)]
    return ScenarioSet.uniform(days)


def random_scenarios(n: int, length: int, seed: int, sigma2: float = 0.12, step_seconds: float = 4.0) -> ScenarioSet:
    """``n`` truncated-Gaussian scenarios from independent child seeds of ``seed``."""
    children = np.random.SeedSequence(seed).spawn(n)
    seeds = [int(c.generate_state(1)[0]) for c in children]
    return ScenarioSet.uniform([gen_trunc_gauss(length, sigma2, -1.0, 1.0, s, step_seconds) for s in seeds])
