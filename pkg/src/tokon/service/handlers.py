"""One handler per endpoint; the FastAPI routes and the CLI both call these."""

from __future__ import annotations

import json
from pathlib import Path

from .. import __version__
from ..datasets import Dataset, ingest_ihepc, ingest_m4, pooled_stats, read_records, write_records
from ..errors import EmptyInput, TokonError
from ..evaluation import (
    ExperimentConfig,
    normalized_per_step_table,
    run_experiment,
    score_results,
    write_plot_table,
)
from ..forecasting import Forecaster, build_request
from ..normalization import DomainStats, NormalizationParams, TargetParams
from ..prompting import PromptKind
from ..search import CostKind, SearchConfig, golden_section_search, target_params_for_probe
from ..tokenization import (
    count_series_tokens,
    encode_count,
    load_vocab,
    synthetic_integer_vocab,
)
from . import schemas


def ingest_ihepc_handler(req: schemas.IngestIhepcRequest) -> schemas.IngestResponse:
    dataset = ingest_ihepc(
        req.input_path,
        horizon=req.horizon,
        context_len=req.context_len,
        max_series=req.max_series,
    )
    return _persist(dataset, req.out_dir)


def ingest_m4_handler(req: schemas.IngestM4Request) -> schemas.IngestResponse:
    dataset = ingest_m4(
        req.input_path,
        lengths=req.lengths,
        horizon=req.horizon,
        counts=req.counts,
    )
    return _persist(dataset, req.out_dir)


def _persist(dataset: Dataset, out_dir: str) -> schemas.IngestResponse:
    records_path = Path(out_dir) / "records.ndjson"
    manifest = write_records(dataset, records_path)
    return schemas.IngestResponse(
        name=manifest.name,
        records_path=str(records_path),
        manifest_path=str(records_path.with_suffix(".manifest.json")),
        record_count=manifest.record_count,
        context_lengths=list(manifest.context_lengths),
        horizon=manifest.horizon,
    )


def stats_handler(req: schemas.StatsRequest) -> schemas.StatsResponse:
    dataset = read_records(req.dataset_path)
    stats = pooled_stats(dataset.records, first_n=req.first_n)
    model = schemas.DomainStatsModel.from_stats(stats)
    out_path = None
    if req.out_path:
        out_path = str(req.out_path)
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(model.model_dump(), fh, indent=2)
            fh.write("\n")
    return schemas.StatsResponse(stats=model, out_path=out_path)


def _resolve_stats(
    req_stats: schemas.DomainStatsModel | None, dataset: Dataset, first_n: int
) -> DomainStats:
    if req_stats is not None:
        return req_stats.to_stats()
    return pooled_stats(dataset.records, first_n=first_n)


def search_handler(req: schemas.SearchRequest) -> schemas.SearchResponse:
    dataset = read_records(req.dataset_path)
    if not dataset.records:
        raise EmptyInput(f"dataset {req.dataset_path} has no records")
    ids = req.calibration_ids or [r.id for r in dataset.records[: req.calibration_n]]
    config = SearchConfig(
        calibration_ids=tuple(ids),
        epsilon=req.epsilon,
        initial_lo=req.initial_lo,
        initial_hi=req.initial_hi,
        cost_kind=CostKind(req.cost_kind),
        max_iterations=req.max_iterations,
        inverted_update_rule=req.inverted_update_rule,
        prompt_kind=PromptKind(req.prompt_kind),
    )
    stats = _resolve_stats(req.stats, dataset, req.calibration_n)
    stats_model = schemas.DomainStatsModel.from_stats(stats)

    if req.dry_run:
        midpoint = (req.initial_lo + req.initial_hi) / 2
        params = NormalizationParams(
            stats=stats, target=target_params_for_probe(midpoint, config)
        )
        wanted = set(ids)
        vocab = synthetic_integer_vocab()
        rendered = 0
        total_tokens = 0
        for record in dataset.records:
            if record.id not in wanted:
                continue
            request = build_request(record, config.prompt_kind, params)
            rendered += 1
            total_tokens += encode_count(request.prompt.text, vocab)
        return schemas.SearchResponse(
            target_mean=config.target_mean,
            stats=stats_model,
            prompts_rendered=rendered,
            total_prompt_tokens=total_tokens,
        )

    forecaster = Forecaster(req.backend.to_config())
    sigma_t, trace = golden_section_search(config, dataset, stats, forecaster)
    trace_path = req.trace_path or str(
        Path(req.dataset_path).with_suffix(".trace.csv")
    )
    trace.write_csv(trace_path)
    return schemas.SearchResponse(
        sigma_t=sigma_t,
        target_mean=config.target_mean,
        converged=trace.converged,
        iterations=len(trace.iterations),
        evaluations=trace.evaluations,
        trace_path=trace_path,
        best_probe=trace.best_probe,
        best_cost=trace.best_cost,
        stats=stats_model,
    )


def _resolve_normalization(
    dataset: Dataset,
    use_tokon: bool,
    sigma_t: float | None,
    stats_model: schemas.DomainStatsModel | None,
    stats_first_n: int,
    index_min: int,
    index_max: int,
) -> NormalizationParams | None:
    if not use_tokon:
        return None
    if sigma_t is None:
        raise ValueError("normalization requires sigma_t (run the search first)")
    stats = _resolve_stats(stats_model, dataset, stats_first_n)
    target = TargetParams(
        target_mean=(index_min + index_max) / 2,
        target_std=sigma_t,
        index_min=index_min,
        index_max=index_max,
    )
    return NormalizationParams(stats=stats, target=target)


def forecast_handler(req: schemas.ForecastRunRequest) -> schemas.ForecastRunResponse:
    dataset = read_records(req.dataset_path)
    if not dataset.records:
        raise EmptyInput(f"dataset {req.dataset_path} has no records")
    params = _resolve_normalization(
        dataset, req.use_tokon, req.sigma_t, req.stats, req.stats_first_n,
        req.index_min, req.index_max,
    )
    norm_model = None
    if params is not None:
        norm_model = schemas.NormalizationModel(
            stats=schemas.DomainStatsModel.from_stats(params.stats),
            target_mean=params.target.target_mean,
            target_std=params.target.target_std,
            index_min=params.target.index_min,
            index_max=params.target.index_max,
        )

    if req.dry_run:
        vocab = synthetic_integer_vocab()
        records = dataset.records[: req.limit] if req.limit else dataset.records
        kind = PromptKind(req.prompt_kind)
        total_tokens = 0
        for record in records:
            request = build_request(record, kind, params)
            total_tokens += encode_count(request.prompt.text, vocab)
        return schemas.ForecastRunResponse(
            normalization=norm_model,
            prompts_rendered=len(records),
            total_prompt_tokens=total_tokens,
        )

    config = ExperimentConfig(
        dataset_path=req.dataset_path,
        prompt_kind=PromptKind(req.prompt_kind),
        use_tokon=req.use_tokon,
        backend=req.backend.to_config(),
        normalization=params,
        horizon_eval=req.horizon_eval,
        limit=req.limit,
    )
    report, results_path = run_experiment(config, req.out_path)
    return schemas.ForecastRunResponse(
        results_path=str(results_path),
        report=schemas.MetricReportModel.from_report(report),
        normalization=norm_model,
    )


def evaluate_handler(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
    if not req.results_paths:
        raise EmptyInput("no results files given")
    evaluated = []
    reports_by_kind = {}
    for path in req.results_paths:
        report = score_results(path, first_steps=req.first_steps)
        with open(path, "r", encoding="utf-8") as fh:
            kind = json.load(fh)["config"]["prompt_kind"]
        evaluated.append(
            schemas.EvaluatedFile(
                results_path=str(path),
                prompt_kind=kind,
                report=schemas.MetricReportModel.from_report(report),
            )
        )
        reports_by_kind[PromptKind(kind)] = report
    plot_path = None
    if req.plot_out:
        table = normalized_per_step_table(reports_by_kind)
        write_plot_table(table, req.plot_out)
        plot_path = str(req.plot_out)
    return schemas.EvaluateResponse(reports=evaluated, plot_path=plot_path)


def count_tokens_handler(req: schemas.CountTokensRequest) -> schemas.CountTokensResponse:
    if req.vocab == "synthetic":
        vocab = synthetic_integer_vocab()
    else:
        vocab = load_vocab(req.vocab)
    report = count_series_tokens(req.raw, req.normalized, vocab)
    return schemas.CountTokensResponse(
        raw_tokens=report.raw_tokens,
        normalized_tokens=report.normalized_tokens,
        reduction_factor=report.reduction_factor,
    )


def dump_prompt_handler(req: schemas.DumpPromptRequest) -> schemas.DumpPromptResponse:
    dataset = read_records(req.dataset_path)
    record = next((r for r in dataset.records if r.id == req.series_id), None)
    if record is None:
        raise TokonError(f"series id {req.series_id!r} not found in dataset")
    params = _resolve_normalization(
        dataset, req.use_tokon, req.sigma_t, req.stats, req.stats_first_n,
        req.index_min, req.index_max,
    )
    request = build_request(record, PromptKind(req.kind), params)
    return schemas.DumpPromptResponse(
        series_id=record.id, kind=req.kind, text=request.prompt.text
    )


def health_handler() -> schemas.HealthResponse:
    return schemas.HealthResponse(version=__version__)
