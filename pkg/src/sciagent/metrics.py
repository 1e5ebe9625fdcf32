"""Error metrics, success rates and box-plot aggregates used to grade runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

QUANTILE_METHOD = "linear"
WHISKER_RULE = "tukey_1.5iqr"


class MetricError(ValueError):
    pass


class LengthMismatch(MetricError):
    pass


class ZeroReference(MetricError):
    pass


class EmptySample(MetricError):
    pass


class Completion(str, Enum):
    CONTAINS_NAN = "contains_nan"
    OVER_THRESHOLD = "over_threshold"
    BELOW_THRESHOLD = "below_threshold"


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    if a.size == 0:
        raise LengthMismatch("empty vectors")
    return a, b


def _norm2(v: np.ndarray) -> float:
    # scaled so that tiny or huge entries do not under/overflow when squared
    s = float(np.max(np.abs(v)))
    if s == 0.0 or not math.isfinite(s):
        return s
    w = v / s
    return s * math.sqrt(float(np.sum(w * w)))


def rel_l2_error(y_ref, y_hat) -> float:
    """Relative L2 error ``sqrt(sum((y_hat - y_ref)^2) / sum(y_ref^2))``."""
    ref, hat = _pair(y_ref, y_hat)
    denom = _norm2(ref)
    if denom == 0.0:
        raise ZeroReference("reference vector has zero norm")
    return _norm2(hat - ref) / denom


def linf_error(x_ref, x_hat) -> float:
    ref, hat = _pair(x_ref, x_hat)
    diff = np.abs(hat - ref)
    if np.isnan(diff).any():
        return math.nan
    return float(diff.max())


def classify_completion(error: float, threshold: float) -> Completion:
    if error is None or math.isnan(error):
        return Completion.CONTAINS_NAN
    if error < threshold:
        return Completion.BELOW_THRESHOLD
    return Completion.OVER_THRESHOLD


def execution_success_rate(classifications: Sequence) -> float:
    """Fraction of runs classified ``success`` (bug-free and NaN-free)."""
    if len(classifications) == 0:
        raise EmptySample("no classifications")
    hits = sum(1 for c in classifications if getattr(c, "value", c) == "success")
    return hits / len(classifications)


def solving_success_rate(errors: Sequence[float], threshold: float) -> float:
    if len(errors) == 0:
        raise EmptySample("no errors")
    hits = sum(
        1
        for e in errors
        if e is not None and classify_completion(e, threshold) is Completion.BELOW_THRESHOLD
    )
    return hits / len(errors)


@dataclass(frozen=True)
class BoxStats:
    mean: float
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    n: int

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "n": self.n,
        }


def box_stats(errors: Iterable[float]) -> BoxStats:
    """Mean, quartiles and Tukey whiskers; NaN entries are dropped first."""
    data = np.array([e for e in errors if e is not None], dtype=float)
    data = data[np.isfinite(data)]
    if data.size == 0:
        raise EmptySample("no finite errors")
    q1, med, q3 = np.percentile(data, [25, 50, 75], method=QUANTILE_METHOD)
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = data[(data >= lo_fence) & (data <= hi_fence)]
    return BoxStats(
        mean=float(data.mean()),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        n=int(data.size),
    )


@dataclass
class StageMetrics:
    stage: str
    n_runs: int
    execution_success_rate: float
    solving_success_rate: float | None
    errors: list[float] = field(default_factory=list)
    n_nan: int = 0
    box: BoxStats | None = None

    def as_dict(self) -> dict:
        return {
            "stage": self.stage,
            "n_runs": self.n_runs,
            "execution_success_rate": self.execution_success_rate,
            "solving_success_rate": self.solving_success_rate,
            "errors": [e if math.isfinite(e) else None for e in self.errors],
            "n_nan": self.n_nan,
            "box": self.box.as_dict() if self.box else None,
        }


@dataclass
class MetricReport:
    problem: str
    programmer: str
    stages: list[StageMetrics]
    metadata: dict = field(
        default_factory=lambda: {
            "quantile_method": QUANTILE_METHOD,
            "whiskers": WHISKER_RULE,
            "regridding": "linear (1D) / bilinear (2D) onto the reference grid",
            "nan_policy": "NaN errors excluded from box statistics, counted in n_nan",
            "reference": "in-package fine-grid oracles",
        }
    )

    def as_dict(self) -> dict:
        return {
            "problem": self.problem,
            "programmer": self.programmer,
            "stages": [s.as_dict() for s in self.stages],
            "metadata": self.metadata,
        }

    def table_rows(self) -> list[dict]:
        """Rows in the ``problem, programmer, stage, mean_rel_l2`` layout."""
        rows = []
        for s in self.stages:
            rows.append(
                {
                    "problem": self.problem,
                    "programmer": self.programmer,
                    "stage": s.stage,
                    "mean_rel_l2": s.box.mean if s.box else None,
                    "execution_success_rate": s.execution_success_rate,
                    "solving_success_rate": s.solving_success_rate,
                    "q1": s.box.q1 if s.box else None,
                    "median": s.box.median if s.box else None,
                    "q3": s.box.q3 if s.box else None,
                    "n_runs": s.n_runs,
                    "n_nan": s.n_nan,
                }
            )
        return rows


def stage_metrics(
    stage: str,
    classifications: Sequence,
    errors: Sequence[float | None],
    threshold: float | None,
) -> StageMetrics:
    """Aggregate one response stage across samples.

    ``errors`` is aligned with ``classifications``; runs without a grade
    carry ``None`` and count as NaN for solving success.
    """
    errs = [math.nan if e is None else float(e) for e in errors]
    finite = [e for e in errs if not math.isnan(e)]
    solving = solving_success_rate(errs, threshold) if threshold is not None and errs else None
    return StageMetrics(
        stage=stage,
        n_runs=len(classifications),
        execution_success_rate=execution_success_rate(classifications),
        solving_success_rate=solving,
        errors=errs,
        n_nan=len(errs) - len(finite),
        box=box_stats(finite) if finite else None,
    )
