"""Experiment runs, error metrics, and persisted results documents.

Metrics are always computed in original domain units: normalization changes
what the forecaster sees, never the scoring scale. Step-k errors pool the
k-th prediction error across series; the averaged figures are the mean over
steps of the per-step metrics. A results document is self-contained (config
echo, per-series predictions and targets, metric block), so re-scoring the
file reproduces the metric block exactly.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .datasets import read_records
from .errors import (
    EmptyInput,
    LengthMismatch,
    NonPositiveBaseline,
    NoSuccessfulSeries,
)
from .forecasting import (
    BackendConfig,
    BackendKind,
    Forecaster,
    build_request,
    domain_predictions,
)
from .normalization import DomainStats, NormalizationParams, TargetParams
from .prompting import PromptKind


def _check_pair(predictions: Sequence[float], targets: Sequence[float]) -> None:
    if len(predictions) != len(targets):
        raise LengthMismatch(
            f"prediction length {len(predictions)} != target length {len(targets)}"
        )
    if len(predictions) == 0:
        raise EmptyInput("cannot score empty sequences")


def rmse(predictions: Sequence[float], targets: Sequence[float]) -> float:
    _check_pair(predictions, targets)
    return math.sqrt(
        math.fsum((p - t) ** 2 for p, t in zip(predictions, targets)) / len(predictions)
    )


def mae(predictions: Sequence[float], targets: Sequence[float]) -> float:
    _check_pair(predictions, targets)
    return math.fsum(abs(p - t) for p, t in zip(predictions, targets)) / len(predictions)


@dataclass(frozen=True)
class MetricReport:
    """Per-step and step-averaged errors for the scored series of one run."""

    rmse_per_step: tuple[float, ...]
    mae_per_step: tuple[float, ...]
    rmse_avg: float
    mae_avg: float
    n_series: int
    n_failed: int


def per_step_metrics(
    results: Sequence[tuple[Sequence[float], Sequence[float]]],
    horizon: int,
    n_failed: int = 0,
) -> MetricReport:
    """Aggregate (prediction, target) pairs into a MetricReport.

    Raises:
        NoSuccessfulSeries: there is nothing to score.
        LengthMismatch: a pair does not match the horizon.
    """
    if not results:
        raise NoSuccessfulSeries("no successful series to score")
    for predictions, targets in results:
        if len(predictions) != horizon or len(targets) != horizon:
            raise LengthMismatch("every prediction and target must match the horizon")
    rmse_steps = []
    mae_steps = []
    for k in range(horizon):
        step_preds = [p[k] for p, _ in results]
        step_targets = [t[k] for _, t in results]
        rmse_steps.append(rmse(step_preds, step_targets))
        mae_steps.append(mae(step_preds, step_targets))
    return MetricReport(
        rmse_per_step=tuple(rmse_steps),
        mae_per_step=tuple(mae_steps),
        rmse_avg=math.fsum(rmse_steps) / horizon,
        mae_avg=math.fsum(mae_steps) / horizon,
        n_series=len(results),
        n_failed=n_failed,
    )


def improvement_percent(baseline_value: float, improved_value: float) -> float:
    """Relative improvement of `improved_value` over `baseline_value`, in percent."""
    if baseline_value <= 0:
        raise NonPositiveBaseline(f"baseline must be positive, got {baseline_value}")
    return 100.0 * (baseline_value - improved_value) / baseline_value


def normalized_per_step_table(
    reports: Mapping[PromptKind, MetricReport]
) -> dict[PromptKind, tuple[float, ...]]:
    """Per-step RMSE divided by the global minimum across steps and kinds."""
    if not reports:
        raise EmptyInput("no reports to normalize")
    horizons = {len(r.rmse_per_step) for r in reports.values()}
    if len(horizons) != 1:
        raise LengthMismatch("all reports must share the same horizon")
    global_min = min(min(r.rmse_per_step) for r in reports.values())
    if global_min <= 0:
        raise NonPositiveBaseline("minimum per-step RMSE must be positive")
    return {
        kind: tuple(v / global_min for v in report.rmse_per_step)
        for kind, report in reports.items()
    }


def write_plot_table(
    table: Mapping[PromptKind, Sequence[float]], path: str | os.PathLike
) -> None:
    """Emit the normalized per-step table as a comma-separated file."""
    kinds = list(table.keys())
    steps = len(next(iter(table.values())))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step," + ",".join(k.value for k in kinds) + "\n")
        for step in range(steps):
            row = [str(step + 1)] + [repr(float(table[k][step])) for k in kinds]
            fh.write(",".join(row) + "\n")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str
    prompt_kind: PromptKind
    use_tokon: bool
    backend: BackendConfig
    normalization: NormalizationParams | None = None
    horizon_eval: int | None = None
    limit: int | None = None

    def __post_init__(self):
        if self.use_tokon and self.normalization is None:
            raise ValueError("use_tokon requires normalization parameters")


def _config_doc(config: ExperimentConfig) -> dict:
    backend = config.backend
    doc = {
        "dataset_path": str(config.dataset_path),
        "prompt_kind": config.prompt_kind.value,
        "use_tokon": config.use_tokon,
        "horizon_eval": config.horizon_eval,
        "limit": config.limit,
        "backend": {
            "kind": backend.kind.value,
            "api_base_url": backend.api_base_url,
            "model_name": backend.model_name,
            "temperature": backend.temperature,
            "max_retries": backend.max_retries,
            "parallelism": backend.parallelism,
            "seasonal_period": backend.seasonal_period,
            "replay_path": backend.replay_path,
            "requests_per_minute": backend.requests_per_minute,
            "seed": backend.seed,
        },
        "normalization": None,
    }
    if config.normalization is not None:
        stats = config.normalization.stats
        target = config.normalization.target
        doc["normalization"] = {
            "stats": {
                "mean": stats.mean,
                "std_dev": stats.std_dev,
                "sample_count": stats.sample_count,
            },
            "target": {
                "target_mean": target.target_mean,
                "target_std": target.target_std,
                "index_min": target.index_min,
                "index_max": target.index_max,
            },
        }
    return doc


def _report_doc(report: MetricReport) -> dict:
    return {
        "rmse_per_step": list(report.rmse_per_step),
        "mae_per_step": list(report.mae_per_step),
        "rmse_avg": report.rmse_avg,
        "mae_avg": report.mae_avg,
        "n_series": report.n_series,
        "n_failed": report.n_failed,
    }


def _report_from_doc(doc: dict) -> MetricReport:
    return MetricReport(
        rmse_per_step=tuple(doc["rmse_per_step"]),
        mae_per_step=tuple(doc["mae_per_step"]),
        rmse_avg=doc["rmse_avg"],
        mae_avg=doc["mae_avg"],
        n_series=doc["n_series"],
        n_failed=doc["n_failed"],
    )


def _score_series_docs(
    series: Sequence[dict], horizon: int, first_steps: int | None
) -> MetricReport:
    steps = horizon if first_steps is None else min(first_steps, horizon)
    pairs = []
    n_failed = 0
    for entry in series:
        if entry["failed"] or entry["prediction"] is None:
            n_failed += 1
            continue
        pairs.append((entry["prediction"][:steps], entry["target"][:steps]))
    return per_step_metrics(pairs, horizon=steps, n_failed=n_failed)


def run_experiment(
    config: ExperimentConfig, out_path: str | os.PathLike
) -> tuple[MetricReport, Path]:
    """Forecast every record of the dataset and persist a results document.

    Failed series are recorded with their attempt count and excluded from
    the metric block. The document is written once, atomically.
    """
    dataset = read_records(config.dataset_path)
    records = dataset.records
    if config.limit is not None:
        records = records[: config.limit]
    if not records:
        raise EmptyInput(f"dataset {config.dataset_path} has no records")
    params = config.normalization if config.use_tokon else None
    forecaster = Forecaster(config.backend)
    requests = [build_request(r, config.prompt_kind, params) for r in records]
    responses = forecaster.run_batch(requests)

    series_docs = []
    for record, response in zip(records, responses):
        predictions = domain_predictions(response, forecaster, params)
        series_docs.append(
            {
                "id": record.id,
                "failed": predictions is None,
                "attempts": response.attempts,
                "prediction": predictions,
                "target": list(record.target.values),
            }
        )

    report = _score_series_docs(series_docs, dataset.horizon, config.horizon_eval)
    document = {
        "created": datetime.now(timezone.utc).isoformat(),
        "config": _config_doc(config),
        "series": series_docs,
        "metrics": _report_doc(report),
    }
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = out_path.with_suffix(out_path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=1)
        fh.write("\n")
    tmp.replace(out_path)
    return report, out_path


def score_results(
    results_path: str | os.PathLike, first_steps: int | None = None
) -> MetricReport:
    """Recompute the MetricReport of a persisted results document.

    With first_steps=None the stored horizon_eval is honored, so the
    returned report matches the persisted metric block exactly.
    """
    with open(results_path, "r", encoding="utf-8") as fh:
        document = json.load(fh)
    series = document["series"]
    horizon = max(
        (len(e["target"]) for e in series), default=0
    )
    if horizon == 0:
        raise NoSuccessfulSeries("results document contains no series")
    if first_steps is None:
        first_steps = document["config"].get("horizon_eval")
    return _score_series_docs(series, horizon, first_steps)


def stored_report(results_path: str | os.PathLike) -> MetricReport:
    """The metric block exactly as persisted in the document."""
    with open(results_path, "r", encoding="utf-8") as fh:
        document = json.load(fh)
    return _report_from_doc(document["metrics"])


def backend_config_from_doc(doc: dict) -> BackendConfig:
    return BackendConfig(
        kind=BackendKind(doc["kind"]),
        api_base_url=doc.get("api_base_url", "https://api.openai.com/v1"),
        model_name=doc.get("model_name", "gpt-4o-mini"),
        temperature=doc.get("temperature", 0.0),
        max_retries=doc.get("max_retries", 2),
        parallelism=doc.get("parallelism", 1),
        seasonal_period=doc.get("seasonal_period"),
        replay_path=doc.get("replay_path"),
        requests_per_minute=doc.get("requests_per_minute"),
        seed=doc.get("seed"),
    )


def normalization_from_doc(doc: dict | None) -> NormalizationParams | None:
    if doc is None:
        return None
    return NormalizationParams(
        stats=DomainStats(
            mean=doc["stats"]["mean"],
            std_dev=doc["stats"]["std_dev"],
            sample_count=doc["stats"]["sample_count"],
        ),
        target=TargetParams(
            target_mean=doc["target"]["target_mean"],
            target_std=doc["target"]["target_std"],
            index_min=doc["target"]["index_min"],
            index_max=doc["target"]["index_max"],
        ),
    )
