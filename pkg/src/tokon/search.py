"""Golden-section search for the target scale parameter.

The scale is tuned by minimizing the summed forecast cost over a calibration
subset: each probe value becomes the target standard deviation, the subset
is normalized with it, forecast, and scored. Two interior probes are placed
with the golden-ratio conjugate each iteration and the bracket shrinks by
that same factor until it is narrower than epsilon; the midpoint of the
final bracket is returned.

Two interval-update rules are selectable. The default is the textbook
minimization rule: the bracket keeps the side containing the lower-cost
probe. The inverted rule ("if C_d1 < C_d2 then hi = d2, else lo = d1")
clips toward the worse probe instead, moving the bracket away from the
observed minimum; it is kept behind `inverted_update_rule` so runs that
used it can be audited and reproduced.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

from .datasets import Dataset, DatasetRecord
from .errors import AllForecastsFailed, EmptyInput
from .forecasting import Forecaster, build_request, domain_predictions
from .normalization import DomainStats, NormalizationParams, TargetParams
from .prompting import PromptKind

# Probes are floored here before being used as a target std, so a bracket
# that touches zero never produces a degenerate scale.
PROBE_FLOOR = 1e-6


def golden_ratio_conjugate() -> float:
    return (math.sqrt(5.0) - 1.0) / 2.0


class CostKind(Enum):
    SUM_SQUARED_ERROR = "sse"
    SUM_ABSOLUTE_ERROR = "sae"


@dataclass(frozen=True)
class SearchConfig:
    calibration_ids: tuple[str, ...]
    epsilon: float = 1.0
    initial_lo: float = 0.0
    initial_hi: float = 999.0
    cost_kind: CostKind = CostKind.SUM_SQUARED_ERROR
    max_iterations: int = 50
    inverted_update_rule: bool = False
    prompt_kind: PromptKind = PromptKind.BASELINE

    def __post_init__(self):
        if not self.calibration_ids:
            raise EmptyInput("calibration_ids must be non-empty")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.initial_lo >= self.initial_hi:
            raise ValueError("initial_lo must be below initial_hi")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    @property
    def target_mean(self) -> float:
        return (self.initial_lo + self.initial_hi) / 2


@dataclass(frozen=True)
class SearchIteration:
    iteration: int
    lo: float
    hi: float
    probe_lower: float
    probe_upper: float
    cost_lower: float
    cost_upper: float


@dataclass
class SearchTrace:
    iterations: list[SearchIteration] = field(default_factory=list)
    final_sigma_t: float = 0.0
    converged: bool = True
    evaluations: int = 0
    best_probe: float | None = None
    best_cost: float | None = None

    def write_csv(self, path: str | os.PathLike) -> None:
        """One row per iteration, consumable by any plotting tool."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iteration", "lo", "hi", "probe_lower", "probe_upper",
                 "cost_lower", "cost_upper"]
            )
            for row in self.iterations:
                writer.writerow(
                    [row.iteration, row.lo, row.hi, row.probe_lower,
                     row.probe_upper, row.cost_lower, row.cost_upper]
                )


def golden_section_minimize(
    cost_fn: Callable[[float], float],
    lo: float,
    hi: float,
    epsilon: float,
    max_iterations: int = 50,
    inverted_update_rule: bool = False,
) -> tuple[float, SearchTrace]:
    """Shrink [lo, hi] until its width is <= epsilon; return the midpoint.

    Both probes are evaluated fresh every iteration (no probe reuse), so the
    total number of cost evaluations is exactly 2 * iterations.
    """
    rho = golden_ratio_conjugate()
    trace = SearchTrace()
    while hi - lo > epsilon and len(trace.iterations) < max_iterations:
        width = hi - lo
        probe_upper = lo + width * rho
        probe_lower = hi - width * rho
        cost_upper = cost_fn(max(probe_upper, PROBE_FLOOR))
        cost_lower = cost_fn(max(probe_lower, PROBE_FLOOR))
        trace.evaluations += 2
        trace.iterations.append(
            SearchIteration(
                iteration=len(trace.iterations) + 1,
                lo=lo,
                hi=hi,
                probe_lower=probe_lower,
                probe_upper=probe_upper,
                cost_lower=cost_lower,
                cost_upper=cost_upper,
            )
        )
        for probe, cost in ((probe_lower, cost_lower), (probe_upper, cost_upper)):
            if trace.best_cost is None or cost < trace.best_cost:
                trace.best_cost = cost
                trace.best_probe = probe
        if inverted_update_rule:
            # Clips toward the worse probe (see module docstring).
            if cost_upper < cost_lower:
                hi = probe_lower
            else:
                lo = probe_upper
        else:
            if cost_lower < cost_upper:
                hi = probe_upper
            else:
                lo = probe_lower
    trace.converged = hi - lo <= epsilon
    trace.final_sigma_t = (hi + lo) / 2
    return trace.final_sigma_t, trace


def _record_cost(
    predictions: Sequence[float], target: Sequence[float], kind: CostKind
) -> float:
    if kind is CostKind.SUM_SQUARED_ERROR:
        return math.fsum((p - t) ** 2 for p, t in zip(predictions, target))
    return math.fsum(abs(p - t) for p, t in zip(predictions, target))


def target_params_for_probe(delta: float, config: SearchConfig) -> TargetParams:
    return TargetParams(
        target_mean=config.target_mean,
        target_std=delta,
        index_min=round(config.initial_lo),
        index_max=round(config.initial_hi),
    )


def evaluate_probe_cost(
    delta: float,
    calibration: Sequence[DatasetRecord],
    stats: DomainStats,
    forecaster: Forecaster,
    config: SearchConfig,
) -> float:
    """Summed forecast cost over the calibration subset at one probe scale.

    A record whose forecast fails contributes the cost of the naive
    last-value forecast instead, which keeps probe costs comparable.

    Raises:
        AllForecastsFailed: when every calibration record failed.
    """
    if delta <= 0:
        raise ValueError("probe scale must be positive")
    if not calibration:
        raise EmptyInput("calibration subset is empty")
    params = NormalizationParams(stats=stats, target=target_params_for_probe(delta, config))
    requests = [build_request(rec, config.prompt_kind, params) for rec in calibration]
    responses = forecaster.run_batch(requests)
    total = 0.0
    any_succeeded = False
    for record, response in zip(calibration, responses):
        predictions = domain_predictions(response, forecaster, params)
        if predictions is None:
            predictions = [record.context.values[-1]] * len(record.target)
        else:
            any_succeeded = True
        total += _record_cost(predictions, record.target.values, config.cost_kind)
    if not any_succeeded:
        raise AllForecastsFailed("every calibration record failed at this probe")
    return total


def select_calibration(
    dataset: Dataset, calibration_ids: Sequence[str]
) -> list[DatasetRecord]:
    wanted = set(calibration_ids)
    picked = [r for r in dataset.records if r.id in wanted]
    if not picked:
        raise EmptyInput("no calibration records matched the configured ids")
    return picked


def golden_section_search(
    config: SearchConfig,
    dataset: Dataset,
    stats: DomainStats,
    forecaster: Forecaster,
) -> tuple[float, SearchTrace]:
    """Run the full scale-parameter search against a dataset and backend."""
    calibration = select_calibration(dataset, config.calibration_ids)

    def cost_fn(delta: float) -> float:
        return evaluate_probe_cost(delta, calibration, stats, forecaster, config)

    return golden_section_minimize(
        cost_fn,
        config.initial_lo,
        config.initial_hi,
        config.epsilon,
        max_iterations=config.max_iterations,
        inverted_update_rule=config.inverted_update_rule,
    )
