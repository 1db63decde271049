"""Request/response models for the service endpoints.

These are the wire contract: the CLI builds the same models and either
calls the handlers in-process or posts them to a running server. File
paths in requests are interpreted on the machine the handlers run on.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..evaluation import MetricReport
from ..forecasting import BackendConfig, BackendKind
from ..normalization import DomainStats, NormalizationParams, TargetParams


class DomainStatsModel(BaseModel):
    mean: float
    std_dev: float
    sample_count: int

    def to_stats(self) -> DomainStats:
        return DomainStats(
            mean=self.mean, std_dev=self.std_dev, sample_count=self.sample_count
        )

    @classmethod
    def from_stats(cls, stats: DomainStats) -> "DomainStatsModel":
        return cls(
            mean=stats.mean, std_dev=stats.std_dev, sample_count=stats.sample_count
        )


class BackendModel(BaseModel):
    kind: str = "naive-last"
    api_base_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-4o-mini"
    temperature: float = 0.0
    max_retries: int = 2
    parallelism: int = 1
    seasonal_period: int | None = None
    replay_path: str | None = None
    requests_per_minute: float | None = None
    seed: int | None = None

    def to_config(self) -> BackendConfig:
        return BackendConfig(
            kind=BackendKind(self.kind),
            api_base_url=self.api_base_url,
            model_name=self.model_name,
            temperature=self.temperature,
            max_retries=self.max_retries,
            parallelism=self.parallelism,
            seasonal_period=self.seasonal_period,
            replay_path=self.replay_path,
            requests_per_minute=self.requests_per_minute,
            seed=self.seed,
        )


class MetricReportModel(BaseModel):
    rmse_per_step: list[float]
    mae_per_step: list[float]
    rmse_avg: float
    mae_avg: float
    n_series: int
    n_failed: int

    @classmethod
    def from_report(cls, report: MetricReport) -> "MetricReportModel":
        return cls(
            rmse_per_step=list(report.rmse_per_step),
            mae_per_step=list(report.mae_per_step),
            rmse_avg=report.rmse_avg,
            mae_avg=report.mae_avg,
            n_series=report.n_series,
            n_failed=report.n_failed,
        )


class NormalizationModel(BaseModel):
    stats: DomainStatsModel
    target_mean: float
    target_std: float
    index_min: int
    index_max: int

    def to_params(self) -> NormalizationParams:
        return NormalizationParams(
            stats=self.stats.to_stats(),
            target=TargetParams(
                target_mean=self.target_mean,
                target_std=self.target_std,
                index_min=self.index_min,
                index_max=self.index_max,
            ),
        )


class IngestIhepcRequest(BaseModel):
    input_path: str
    out_dir: str
    horizon: int = 6
    context_len: int = 96
    max_series: int = 3000


class IngestM4Request(BaseModel):
    input_path: str
    out_dir: str
    lengths: list[int] = Field(default_factory=lambda: [64, 49])
    horizon: int = 18
    counts: list[int] = Field(default_factory=lambda: [965, 1104])


class IngestResponse(BaseModel):
    name: str
    records_path: str
    manifest_path: str
    record_count: int
    context_lengths: list[int]
    horizon: int


class StatsRequest(BaseModel):
    dataset_path: str
    first_n: int = 100
    out_path: str | None = None


class StatsResponse(BaseModel):
    stats: DomainStatsModel
    out_path: str | None = None


class SearchRequest(BaseModel):
    dataset_path: str
    backend: BackendModel
    epsilon: float = 1.0
    initial_lo: float = 0.0
    initial_hi: float = 999.0
    cost_kind: str = "sse"
    calibration_n: int = 100
    calibration_ids: list[str] | None = None
    max_iterations: int = 50
    inverted_update_rule: bool = False
    prompt_kind: str = "baseline"
    stats: DomainStatsModel | None = None
    trace_path: str | None = None
    dry_run: bool = False


class SearchResponse(BaseModel):
    sigma_t: float | None = None
    target_mean: float
    converged: bool | None = None
    iterations: int | None = None
    evaluations: int | None = None
    trace_path: str | None = None
    best_probe: float | None = None
    best_cost: float | None = None
    stats: DomainStatsModel
    prompts_rendered: int | None = None
    total_prompt_tokens: int | None = None


class ForecastRunRequest(BaseModel):
    dataset_path: str
    out_path: str
    backend: BackendModel
    prompt_kind: str = "baseline"
    use_tokon: bool = False
    sigma_t: float | None = None
    index_min: int = 0
    index_max: int = 999
    stats: DomainStatsModel | None = None
    stats_first_n: int = 100
    horizon_eval: int | None = None
    limit: int | None = None
    dry_run: bool = False


class ForecastRunResponse(BaseModel):
    results_path: str | None = None
    report: MetricReportModel | None = None
    normalization: NormalizationModel | None = None
    prompts_rendered: int | None = None
    total_prompt_tokens: int | None = None


class EvaluateRequest(BaseModel):
    results_paths: list[str]
    first_steps: int | None = None
    plot_out: str | None = None


class EvaluatedFile(BaseModel):
    results_path: str
    prompt_kind: str
    report: MetricReportModel


class EvaluateResponse(BaseModel):
    reports: list[EvaluatedFile]
    plot_path: str | None = None


class CountTokensRequest(BaseModel):
    raw: str
    normalized: str
    vocab: str = "synthetic"


class CountTokensResponse(BaseModel):
    raw_tokens: int
    normalized_tokens: int
    reduction_factor: float


class DumpPromptRequest(BaseModel):
    dataset_path: str
    series_id: str
    kind: str = "baseline"
    use_tokon: bool = False
    sigma_t: float | None = None
    index_min: int = 0
    index_max: int = 999
    stats: DomainStatsModel | None = None
    stats_first_n: int = 100


class DumpPromptResponse(BaseModel):
    series_id: str
    kind: str
    text: str


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str
