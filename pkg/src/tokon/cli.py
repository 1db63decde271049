"""Command-line client for the pipeline.

Every subcommand builds a service request model and either calls the
handler in-process (the default) or posts it to a running server given via
--server or the TOKON_SERVER environment variable. Machine-readable output
goes to stdout (JSON, or the bare prompt text for dump-prompt); diagnostics
go to stderr. Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Callable

import httpx
from pydantic import BaseModel

from .errors import TokonError
from .forecasting import BackendKind
from .service import handlers, schemas

CONFIG_KEYS = {
    "server",
    "api_base_url",
    "model_name",
    "temperature",
    "max_retries",
    "parallelism",
    "requests_per_minute",
    "vocab",
    "epsilon",
}

_ROUTES: dict[str, tuple[Callable, type[BaseModel]]] = {
    "/ingest/ihepc": (handlers.ingest_ihepc_handler, schemas.IngestResponse),
    "/ingest/m4": (handlers.ingest_m4_handler, schemas.IngestResponse),
    "/stats": (handlers.stats_handler, schemas.StatsResponse),
    "/search": (handlers.search_handler, schemas.SearchResponse),
    "/forecast": (handlers.forecast_handler, schemas.ForecastRunResponse),
    "/evaluate": (handlers.evaluate_handler, schemas.EvaluateResponse),
    "/count-tokens": (handlers.count_tokens_handler, schemas.CountTokensResponse),
    "/dump-prompt": (handlers.dump_prompt_handler, schemas.DumpPromptResponse),
}


class UsageError(Exception):
    pass


class RuntimeFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise UsageError(message)


class LocalClient:
    def call(self, path: str, request: BaseModel) -> BaseModel:
        handler, _ = _ROUTES[path]
        return handler(request)


class HttpClient:
    def __init__(self, base_url: str):
        self.base_url = base_url.rstrip("/")

    def call(self, path: str, request: BaseModel) -> BaseModel:
        _, response_type = _ROUTES[path]
        try:
            response = httpx.post(
                self.base_url + path, json=request.model_dump(), timeout=600.0
            )
        except httpx.HTTPError as exc:
            raise RuntimeFailure(f"cannot reach server: {exc}") from exc
        if response.status_code != 200:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise RuntimeFailure(f"server error {response.status_code}: {detail}")
        return response_type.model_validate(response.json())


def read_config(path: str | None) -> dict[str, str]:
    """Plain-text key=value overrides; unknown keys are rejected."""
    if not path:
        return {}
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{line_number}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip().lower()
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{line_number}: unknown key {key!r}")
            values[key] = value.strip()
    return values


def _pick(flag_value, config: dict[str, str], key: str, default, cast=str):
    if flag_value is not None:
        return flag_value
    if key in config:
        return cast(config[key])
    return default


def _add_backend_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--backend",
        required=True,
        choices=[k.value for k in BackendKind],
        help="forecaster backend",
    )
    parser.add_argument("--model", dest="model_name", default=None)
    parser.add_argument("--api-base", dest="api_base_url", default=None)
    parser.add_argument("--temperature", type=float, default=None)
    parser.add_argument("--max-retries", type=int, default=None)
    parser.add_argument("--parallelism", type=int, default=None)
    parser.add_argument("--seasonal-period", type=int, default=None)
    parser.add_argument("--replay", dest="replay_path", default=None)
    parser.add_argument(
        "--rpm", dest="requests_per_minute", type=float, default=None,
        help="rate limit for the remote backend, requests per minute",
    )


def _backend_model(args, config: dict[str, str]) -> schemas.BackendModel:
    return schemas.BackendModel(
        kind=args.backend,
        api_base_url=_pick(args.api_base_url, config, "api_base_url",
                           "https://api.openai.com/v1"),
        model_name=_pick(args.model_name, config, "model_name", "gpt-4o-mini"),
        temperature=_pick(args.temperature, config, "temperature", 0.0, float),
        max_retries=_pick(args.max_retries, config, "max_retries", 2, int),
        parallelism=_pick(args.parallelism, config, "parallelism", 1, int),
        seasonal_period=args.seasonal_period,
        replay_path=args.replay_path,
        requests_per_minute=_pick(args.requests_per_minute, config,
                                  "requests_per_minute", None, float),
        seed=args.seed,
    )


def _stats_model(path: str | None) -> schemas.DomainStatsModel | None:
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "stats" in doc:  # accept a stats-subcommand output file as-is
        doc = doc["stats"]
    return schemas.DomainStatsModel(
        mean=doc["mean"], std_dev=doc["std_dev"], sample_count=doc["sample_count"]
    )


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="tokon", description=__doc__)
    parser.add_argument("--server", default=None,
                        help="base URL of a running tokon server (default: in-process)")
    parser.add_argument("--config", default=None,
                        help="plain-text key=value config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed forwarded to backends that sample")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    p = sub.add_parser("ingest-ihepc", help="build hourly records from the UCI power file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--horizon", type=int, default=6)
    p.add_argument("--context-len", type=int, default=96)
    p.add_argument("--max-series", type=int, default=3000)

    p = sub.add_parser("ingest-m4", help="build monthly records from the M4 training table")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--lengths", default="64,49")
    p.add_argument("--horizon", type=int, default=18)
    p.add_argument("--counts", default="965,1104")

    p = sub.add_parser("stats", help="domain statistics from the first N records")
    p.add_argument("--dataset", required=True)
    p.add_argument("--first-n", type=int, default=100)
    p.add_argument("--out", default=None, help="also write the stats to this JSON file")

    p = sub.add_parser("search", help="golden-section search for the target scale")
    p.add_argument("--dataset", required=True)
    _add_backend_args(p)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=999.0)
    p.add_argument("--cost", choices=["sse", "sae"], default="sse")
    p.add_argument("--calibration-n", type=int, default=100)
    p.add_argument("--max-iterations", type=int, default=50)
    p.add_argument("--inverted-update-rule", action="store_true",
                   help="clip the bracket toward the worse probe (audit variant)")
    p.add_argument("--prompt-kind", choices=["baseline", "cot", "tsfc"],
                   default="baseline")
    p.add_argument("--stats", default=None, help="stats JSON file (default: first-N pool)")
    p.add_argument("--trace-out", default=None)
    p.add_argument("--dry-run", action="store_true",
                   help="render prompts and count tokens, no backend calls")

    p = sub.add_parser("forecast", help="run forecasts over a dataset")
    p.add_argument("--dataset", required=True)
    _add_backend_args(p)
    p.add_argument("--out", required=True, help="results document path")
    p.add_argument("--prompt-kind", choices=["baseline", "cot", "tsfc"],
                   default="baseline")
    p.add_argument("--tokon", action="store_true", help="normalize before prompting")
    p.add_argument("--sigma-t", type=float, default=None)
    p.add_argument("--index-min", type=int, default=0)
    p.add_argument("--index-max", type=int, default=999)
    p.add_argument("--stats", default=None)
    p.add_argument("--stats-first-n", type=int, default=100)
    p.add_argument("--first-steps", type=int, default=None)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--dry-run", action="store_true")

    p = sub.add_parser("evaluate", help="re-score persisted results files")
    p.add_argument("--results", required=True, nargs="+")
    p.add_argument("--first-steps", type=int, default=None)
    p.add_argument("--plot-out", default=None,
                   help="write the normalized per-step table to this CSV")

    p = sub.add_parser("count-tokens", help="token counts for raw vs normalized text")
    p.add_argument("--raw", required=True)
    p.add_argument("--normalized", required=True)
    p.add_argument("--vocab", default=None, help="'synthetic' or a BPE rank file")

    p = sub.add_parser("dump-prompt", help="print the exact rendered prompt for one record")
    p.add_argument("--dataset", required=True)
    p.add_argument("--id", required=True, dest="series_id")
    p.add_argument("--kind", choices=["baseline", "cot", "tsfc"], default="baseline")
    p.add_argument("--tokon", action="store_true")
    p.add_argument("--sigma-t", type=float, default=None)
    p.add_argument("--index-min", type=int, default=0)
    p.add_argument("--index-max", type=int, default=999)
    p.add_argument("--stats", default=None)
    p.add_argument("--stats-first-n", type=int, default=100)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _dispatch(args, config: dict[str, str]) -> int:
    server = _pick(args.server, config, "server", os.environ.get("TOKON_SERVER"))
    client = HttpClient(server) if server else LocalClient()

    if args.command == "ingest-ihepc":
        request = schemas.IngestIhepcRequest(
            input_path=args.input,
            out_dir=args.out,
            horizon=args.horizon,
            context_len=args.context_len,
            max_series=args.max_series,
        )
        return _emit(client.call("/ingest/ihepc", request))

    if args.command == "ingest-m4":
        request = schemas.IngestM4Request(
            input_path=args.input,
            out_dir=args.out,
            lengths=_int_list(args.lengths),
            horizon=args.horizon,
            counts=_int_list(args.counts),
        )
        return _emit(client.call("/ingest/m4", request))

    if args.command == "stats":
        request = schemas.StatsRequest(
            dataset_path=args.dataset, first_n=args.first_n, out_path=args.out
        )
        return _emit(client.call("/stats", request))

    if args.command == "search":
        request = schemas.SearchRequest(
            dataset_path=args.dataset,
            backend=_backend_model(args, config),
            epsilon=_pick(args.epsilon, config, "epsilon", 1.0, float),
            initial_lo=args.lo,
            initial_hi=args.hi,
            cost_kind=args.cost,
            calibration_n=args.calibration_n,
            max_iterations=args.max_iterations,
            inverted_update_rule=args.inverted_update_rule,
            prompt_kind=args.prompt_kind,
            stats=_stats_model(args.stats),
            trace_path=args.trace_out,
            dry_run=args.dry_run,
        )
        return _emit(client.call("/search", request))

    if args.command == "forecast":
        request = schemas.ForecastRunRequest(
            dataset_path=args.dataset,
            out_path=args.out,
            backend=_backend_model(args, config),
            prompt_kind=args.prompt_kind,
            use_tokon=args.tokon,
            sigma_t=args.sigma_t,
            index_min=args.index_min,
            index_max=args.index_max,
            stats=_stats_model(args.stats),
            stats_first_n=args.stats_first_n,
            horizon_eval=args.first_steps,
            limit=args.limit,
            dry_run=args.dry_run,
        )
        return _emit(client.call("/forecast", request))

    if args.command == "evaluate":
        request = schemas.EvaluateRequest(
            results_paths=args.results,
            first_steps=args.first_steps,
            plot_out=args.plot_out,
        )
        return _emit(client.call("/evaluate", request))

    if args.command == "count-tokens":
        request = schemas.CountTokensRequest(
            raw=args.raw,
            normalized=args.normalized,
            vocab=_pick(args.vocab, config, "vocab", "synthetic"),
        )
        return _emit(client.call("/count-tokens", request))

    if args.command == "dump-prompt":
        request = schemas.DumpPromptRequest(
            dataset_path=args.dataset,
            series_id=args.series_id,
            kind=args.kind,
            use_tokon=args.tokon,
            sigma_t=args.sigma_t,
            index_min=args.index_min,
            index_max=args.index_max,
            stats=_stats_model(args.stats),
            stats_first_n=args.stats_first_n,
        )
        response = client.call("/dump-prompt", request)
        sys.stdout.write(response.text + "\n")
        return 0

    if args.command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    raise UsageError("a subcommand is required (see --help)")


def _emit(response: BaseModel) -> int:
    sys.stdout.write(response.model_dump_json(indent=2) + "\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = read_config(args.config)
        return _dispatch(args, config)
    except UsageError as exc:
        print(f"tokon: {exc}", file=sys.stderr)
        return 1
    except (TokonError, RuntimeFailure, OSError, ValueError) as exc:
        print(f"tokon: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
