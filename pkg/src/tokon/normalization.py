"""Affine normalization of time-series values into single-token integer indices.

A value s is mapped to round(target_std * (s - mean) / std_dev + target_mean)
and clipped into [index_min, index_max], so that every element of a series
lands on one integer the tokenizer already knows. The inverse map undoes the
affine part exactly; rounding leaves a residual bounded by
0.5 * std_dev / target_std.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DegenerateVariance, EmptyInput, NonFiniteValue


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero.

    Centralized so every caller quantizes identically (Python's built-in
    round() is banker's rounding, which is not what we want here).
    """
    if x >= 0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


@dataclass(frozen=True)
class TimeSeries:
    """An ordered sequence of finite real values in domain units."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) == 0:
            raise EmptyInput("a time series must contain at least one value")
        for v in self.values:
            if not math.isfinite(v):
                raise NonFiniteValue(f"series contains non-finite value {v!r}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DomainStats:
    """Pooled mean and sample standard deviation for one data domain."""

    mean: float
    std_dev: float
    sample_count: int

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.std_dev)):
            raise NonFiniteValue("domain stats must be finite")
        if self.std_dev <= 0:
            raise DegenerateVariance("std_dev must be positive")
        if self.sample_count < 1:
            raise EmptyInput("sample_count must be positive")


@dataclass(frozen=True)
class TargetParams:
    """Target mean/spread and the integer index range of the token dictionary."""

    target_mean: float
    target_std: float
    index_min: int
    index_max: int

    def __post_init__(self):
        if self.index_min >= self.index_max:
            raise ValueError("index_min must be below index_max")
        if not self.index_min <= self.target_mean <= self.index_max:
            raise ValueError("target_mean must lie inside the index range")
        if self.target_std <= 0 or not math.isfinite(self.target_std):
            raise ValueError("target_std must be a positive finite value")


@dataclass(frozen=True)
class NormalizationParams:
    """Domain statistics plus target parameters, bundled for one run."""

    stats: DomainStats
    target: TargetParams


@dataclass(frozen=True)
class NormalizedSeries:
    """Integer token indices produced by normalizing one series."""

    tokens: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def default_target_params(
    sigma_t: float, index_min: int = 0, index_max: int = 999
) -> TargetParams:
    """Target params with the mean fixed at the center of the index range."""
    return TargetParams(
        target_mean=(index_min + index_max) / 2,
        target_std=sigma_t,
        index_min=index_min,
        index_max=index_max,
    )


def compute_domain_stats(series_set: Iterable[TimeSeries]) -> DomainStats:
    """Pool every element of every calibration series into one flat sample.

    Returns the arithmetic mean and the sample standard deviation (n-1
    divisor) of the pool.

    Raises:
        EmptyInput: no series, or fewer than two pooled elements.
        DegenerateVariance: all pooled values are equal.
    """
    pool: list[float] = []
    for series in series_set:
        pool.extend(series.values)
    if not pool:
        raise EmptyInput("no calibration series provided")
    n = len(pool)
    if n < 2:
        raise EmptyInput("need at least two pooled values to estimate a std dev")
    mean = math.fsum(pool) / n
    ss = math.fsum((v - mean) ** 2 for v in pool)
    if ss == 0.0:
        raise DegenerateVariance("all calibration values are identical")
    return DomainStats(mean=mean, std_dev=math.sqrt(ss / (n - 1)), sample_count=n)


def normalize_value(s: float, stats: DomainStats, target: TargetParams) -> int:
    """Map one value onto an integer token index (rounding, then clipping)."""
    scaled = target.target_std * (s - stats.mean) / stats.std_dev + target.target_mean
    return max(min(round_half_away(scaled), target.index_max), target.index_min)


def normalize_series(
    series: TimeSeries, stats: DomainStats, target: TargetParams
) -> NormalizedSeries:
    return NormalizedSeries(
        tokens=tuple(normalize_value(v, stats, target) for v in series.values)
    )


def denormalize_value(v: float, stats: DomainStats, target: TargetParams) -> float:
    """Exact affine inverse of the pre-rounding map."""
    return (v - target.target_mean) * stats.std_dev / target.target_std + stats.mean


def denormalize_values(
    values: Sequence[float], stats: DomainStats, target: TargetParams
) -> list[float]:
    return [denormalize_value(v, stats, target) for v in values]


def quantization_error_bound(stats: DomainStats, target: TargetParams) -> float:
    """Worst-case |denormalize(normalize(s)) - s| for values that do not clip."""
    return 0.5 * stats.std_dev / target.target_std
