"""Forecasting for model elements from their assessment history.

Two desk-scale methods: simple exponential smoothing (a flat forecast at the
smoothed level) and an ordinary-least-squares linear trend. Both clamp
predictions to [0, 1]. Irregular sampling is treated as equally spaced for
smoothing; the linear trend regresses against true timestamps.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from typing import Any

from .errors import BadAlpha, EmptySeries, InsufficientHistory
from .store import HistorySeries
from .timeutil import format_rfc3339

DEFAULT_ALPHA = 0.3
DEFAULT_HORIZON = 5
_DEFAULT_STEP = timedelta(days=1)


class ForecastMethod(str, Enum):
    SES = "ses"
    LINEAR_TREND = "linear_trend"


@dataclass(frozen=True)
class ForecastResult:
    element_id: str
    horizon: int
    points: tuple[tuple[datetime, float], ...]
    method: ForecastMethod
    params: dict[str, float]

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "element_id": self.element_id,
            "horizon": self.horizon,
            "method": self.method.value,
            "params": dict(self.params),
            "points": [
                {"timestamp": format_rfc3339(ts), "value": value}
                for ts, value in self.points
            ],
        }


def _clamp(value: float) -> float:
    return min(1.0, max(0.0, value))


def _step(series: HistorySeries) -> timedelta:
    points = series.points
    if len(points) < 2:
        return _DEFAULT_STEP
    span = points[-1].timestamp - points[0].timestamp
    if span <= timedelta(0):
        return _DEFAULT_STEP
    return span / (len(points) - 1)


def _future_timestamps(series: HistorySeries, horizon: int) -> list[datetime]:
    last = series.points[-1].timestamp
    step = _step(series)
    return [last + step * (i + 1) for i in range(horizon)]


def ses_forecast(series: HistorySeries, alpha: float = DEFAULT_ALPHA,
                 horizon: int = DEFAULT_HORIZON) -> ForecastResult:
    """Simple exponential smoothing; every step predicts the final level."""
    if not 0.0 < alpha <= 1.0:
        raise BadAlpha(f"alpha must lie in (0, 1], got {alpha}")
    if not series.points:
        raise EmptySeries(f"no history for {series.element_id!r}")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    level = series.points[0].value
    for point in series.points[1:]:
        level = alpha * point.value + (1.0 - alpha) * level
    prediction = _clamp(level)
    return ForecastResult(
        element_id=series.element_id,
        horizon=horizon,
        points=tuple((ts, prediction) for ts in _future_timestamps(series, horizon)),
        method=ForecastMethod.SES,
        params={"alpha": alpha, "level": level},
    )


def linear_trend_forecast(series: HistorySeries,
                          horizon: int = DEFAULT_HORIZON) -> ForecastResult:
    """OLS line over (timestamp, value), extrapolated and clamped.

    The regressor is seconds since the first point, so the reported intercept
    is the fitted value at the series start.
    """
    if len(series.points) < 2:
        raise InsufficientHistory(
            f"linear trend needs at least 2 points, got {len(series.points)}"
        )
    if horizon < 1:
        raise ValueError("horizon must be positive")
    origin = series.points[0].timestamp
    xs = [(p.timestamp - origin).total_seconds() for p in series.points]
    ys = [p.value for p in series.points]
    try:
        slope, intercept = statistics.linear_regression(xs, ys)
    except statistics.StatisticsError:
        # All timestamps equal: no trend information, hold the mean.
        slope, intercept = 0.0, statistics.fmean(ys)
    points = []
    for ts in _future_timestamps(series, horizon):
        x = (ts - origin).total_seconds()
        points.append((ts, _clamp(slope * x + intercept)))
    return ForecastResult(
        element_id=series.element_id,
        horizon=horizon,
        points=tuple(points),
        method=ForecastMethod.LINEAR_TREND,
        params={"slope": slope, "intercept": intercept},
    )
