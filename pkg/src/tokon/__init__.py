"""tokon: single-token integer normalization for LLM time-series forecasting.

The core idea: rescale every series value onto an integer the tokenizer
already holds as one token, so a forecasting prompt spends one token per
measurement instead of several. This package bundles the normalization map
and its inverse, the golden-section search for the scale parameter, the
prompt renderers, pluggable forecaster backends, BPE token counting, the
dataset builders, and the evaluation pipeline, all reachable through a CLI
and a FastAPI service.
"""

__version__ = "0.1.0"

from .normalization import (  # noqa: F401
    DomainStats,
    NormalizationParams,
    NormalizedSeries,
    TargetParams,
    TimeSeries,
    compute_domain_stats,
    default_target_params,
    denormalize_value,
    normalize_series,
    normalize_value,
    quantization_error_bound,
)
from .prompting import Prompt, PromptKind, render_prompt  # noqa: F401
from .search import SearchConfig, golden_section_search  # noqa: F401
from .forecasting import BackendConfig, BackendKind, Forecaster  # noqa: F401
from .tokenization import encode_count, load_vocab, synthetic_integer_vocab  # noqa: F401
from .datasets import Dataset, DatasetRecord, read_records, write_records  # noqa: F401
from .evaluation import (  # noqa: F401
    ExperimentConfig,
    MetricReport,
    improvement_percent,
    mae,
    per_step_metrics,
    rmse,
    run_experiment,
)
