"""Uniform forecaster interface over remote and deterministic local backends.

Every backend produces a raw text reply which is then run through the same
numeric parser, so the local backends exercise exactly the code path a live
model reply takes. Local backends answer in the same value space as the
prompt (normalized token indices when normalization is active); the
quantizing oracle is the exception and answers in original domain units,
having applied the normalize/denormalize round trip itself.
"""

from __future__ import annotations

import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import httpx

from .datasets import DatasetRecord, Granularity
from .errors import AuthError, NetworkError, NoNumbers, TooFewNumbers
from .normalization import (
    NormalizationParams,
    TimeSeries,
    denormalize_values,
    normalize_series,
)
from .prompting import Prompt, PromptKind, SpanUnit, make_context, render_prompt

API_KEY_ENV = "TOKON_API_KEY"

_NUMBER_RE = re.compile(r"[-+]?\d+(?:\.\d+)?")


class BackendKind(Enum):
    REMOTE_LLM = "remote-llm"
    NAIVE_LAST = "naive-last"
    SEASONAL_NAIVE = "seasonal-naive"
    QUANTIZING_ORACLE = "quantizing-oracle"
    REPLAY = "replay"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind
    api_base_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-4o-mini"
    temperature: float = 0.0
    max_retries: int = 2
    parallelism: int = 1
    seasonal_period: int | None = None
    replay_path: str | None = None
    requests_per_minute: float | None = None
    seed: int | None = None
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind is BackendKind.SEASONAL_NAIVE and not self.seasonal_period:
            raise ValueError("seasonal-naive backend requires seasonal_period")
        if self.kind is BackendKind.REPLAY and not self.replay_path:
            raise ValueError("replay backend requires replay_path")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")


@dataclass(frozen=True)
class ForecastRequest:
    """One forecasting call.

    context_values carry the series in the same value space as the prompt
    text (token indices when normalization is active) so that deterministic
    local backends can answer without re-parsing the prompt. target_values
    and params are only consulted by the quantizing oracle.
    """

    prompt: Prompt
    horizon: int
    series_id: str
    context_values: tuple[float, ...] = ()
    target_values: tuple[float, ...] | None = None
    params: NormalizationParams | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")


@dataclass(frozen=True)
class ForecastResponse:
    series_id: str
    raw_text: str
    parsed_values: tuple[float, ...] | None
    attempts: int
    failed: bool


def parse_numeric_response(raw_text: str, horizon: int) -> list[float]:
    """Extract the first `horizon` decimal numbers from a model reply.

    Numbers are maximal substrings of the form [sign]digits[.digits];
    surrounding prose, brackets, commas and newlines are ignored.

    Raises:
        NoNumbers: the reply contains no numbers at all.
        TooFewNumbers: fewer than `horizon` numbers were found.
    """
    matches = _NUMBER_RE.findall(raw_text)
    if not matches:
        raise NoNumbers(f"no numbers in reply: {raw_text[:80]!r}")
    if len(matches) < horizon:
        raise TooFewNumbers(found=len(matches), needed=horizon)
    return [float(m) for m in matches[:horizon]]


def _number_text(v: float) -> str:
    text = repr(float(v))
    if "e" in text or "E" in text:
        text = format(v, ".17f")
    return text


def render_values_text(values: Sequence[float]) -> str:
    """Render numbers the way local backends reply (parser round-trips it)."""
    return ", ".join(_number_text(v) for v in values)


class _RateLimiter:
    """Token bucket allowing `rate_per_minute` acquisitions per minute."""

    def __init__(self, rate_per_minute: float):
        self._interval = 60.0 / rate_per_minute
        self._lock = threading.Lock()
        self._next_free = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = time.monotonic()
            wait = self._next_free - now
            self._next_free = max(now, self._next_free) + self._interval
        if wait > 0:
            time.sleep(wait)


class Forecaster:
    """A configured backend, safe for concurrent use up to `parallelism`."""

    def __init__(self, cfg: BackendConfig):
        self.cfg = cfg
        self._replay: dict[str, str] = {}
        self._limiter = (
            _RateLimiter(cfg.requests_per_minute)
            if cfg.kind is BackendKind.REMOTE_LLM and cfg.requests_per_minute
            else None
        )
        if cfg.kind is BackendKind.REPLAY:
            self._replay = _load_replay(cfg.replay_path)

    @property
    def output_space(self) -> str:
        """"prompt" when replies share the prompt's value space, else "original"."""
        if self.cfg.kind is BackendKind.QUANTIZING_ORACLE:
            return "original"
        return "prompt"

    def run(self, req: ForecastRequest) -> ForecastResponse:
        remote = self.cfg.kind is BackendKind.REMOTE_LLM
        max_attempts = 1 + self.cfg.max_retries if remote else 1
        attempts = 0
        raw_text = ""
        while attempts < max_attempts:
            attempts += 1
            try:
                raw_text = self._reply_text(req)
            except NetworkError:
                if attempts >= max_attempts:
                    return ForecastResponse(
                        series_id=req.series_id,
                        raw_text="",
                        parsed_values=None,
                        attempts=attempts,
                        failed=True,
                    )
                continue
            try:
                values = parse_numeric_response(raw_text, req.horizon)
            except (NoNumbers, TooFewNumbers):
                if attempts >= max_attempts:
                    break
                continue
            return ForecastResponse(
                series_id=req.series_id,
                raw_text=raw_text,
                parsed_values=tuple(values),
                attempts=attempts,
                failed=False,
            )
        return ForecastResponse(
            series_id=req.series_id,
            raw_text=raw_text,
            parsed_values=None,
            attempts=attempts,
            failed=True,
        )

    def run_batch(self, requests: Sequence[ForecastRequest]) -> list[ForecastResponse]:
        """Forecast every request, preserving input order in the output."""
        if not requests:
            return []
        if self.cfg.parallelism == 1 or len(requests) == 1:
            return [self.run(req) for req in requests]
        with ThreadPoolExecutor(max_workers=self.cfg.parallelism) as pool:
            return list(pool.map(self.run, requests))

    def _reply_text(self, req: ForecastRequest) -> str:
        kind = self.cfg.kind
        if kind is BackendKind.NAIVE_LAST:
            if not req.context_values:
                return ""
            return render_values_text([req.context_values[-1]] * req.horizon)
        if kind is BackendKind.SEASONAL_NAIVE:
            period = self.cfg.seasonal_period or 1
            ctx = req.context_values
            if len(ctx) < period:
                return ""
            season = ctx[-period:]
            return render_values_text(
                [season[k % period] for k in range(req.horizon)]
            )
        if kind is BackendKind.QUANTIZING_ORACLE:
            if req.target_values is None:
                return ""
            values: Sequence[float] = req.target_values
            if req.params is not None:
                tokens = normalize_series(
                    TimeSeries(tuple(values)), req.params.stats, req.params.target
                )
                values = denormalize_values(
                    tokens.tokens, req.params.stats, req.params.target
                )
            return render_values_text(values)
        if kind is BackendKind.REPLAY:
            return self._replay.get(req.series_id, "")
        return self._remote_reply(req.prompt)

    def _remote_reply(self, prompt: Prompt) -> str:
        api_key = os.environ.get(API_KEY_ENV, "")
        if not api_key:
            raise AuthError(f"set the {API_KEY_ENV} environment variable")
        if self._limiter is not None:
            self._limiter.acquire()
        payload = {
            "model": self.cfg.model_name,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": self.cfg.temperature,
        }
        if self.cfg.seed is not None:
            payload["seed"] = self.cfg.seed
        url = self.cfg.api_base_url.rstrip("/") + "/chat/completions"
        try:
            response = httpx.post(
                url,
                json=payload,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.cfg.timeout,
            )
        except httpx.HTTPError as exc:
            raise NetworkError(str(exc)) from exc
        if response.status_code in (401, 403):
            raise AuthError(f"backend rejected credentials ({response.status_code})")
        if response.status_code != 200:
            raise NetworkError(f"backend returned HTTP {response.status_code}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise NetworkError(f"malformed completion payload: {exc}") from exc


def forecast(req: ForecastRequest, cfg: BackendConfig) -> ForecastResponse:
    return Forecaster(cfg).run(req)


def _load_replay(path: str) -> dict[str, str]:
    replay: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            series_id, _, raw_text = line.partition("\t")
            replay[series_id] = raw_text
    return replay


def build_request(
    record: DatasetRecord,
    kind: PromptKind,
    params: NormalizationParams | None,
) -> ForecastRequest:
    """Render the prompt for a record and package it as a request.

    With params set, the context is normalized before embedding and
    context_values carry the token indices; otherwise raw values are used.
    """
    horizon = len(record.target)
    unit = SpanUnit.HOURS if record.granularity is Granularity.HOURLY else SpanUnit.MONTHS
    if params is not None:
        normalized = normalize_series(record.context, params.stats, params.target)
        ctx = make_context(record.start_date, unit, normalized, horizon, normalized=True)
        context_values = tuple(float(t) for t in normalized.tokens)
    else:
        ctx = make_context(record.start_date, unit, record.context, horizon, normalized=False)
        context_values = record.context.values
    return ForecastRequest(
        prompt=render_prompt(kind, ctx),
        horizon=horizon,
        series_id=record.id,
        context_values=context_values,
        target_values=record.target.values,
        params=params,
    )


def domain_predictions(
    response: ForecastResponse,
    forecaster: Forecaster,
    params: NormalizationParams | None,
) -> list[float] | None:
    """Map a parsed reply back to original domain units (None when failed)."""
    if response.failed or response.parsed_values is None:
        return None
    values = list(response.parsed_values)
    if params is not None and forecaster.output_space == "prompt":
        values = denormalize_values(values, params.stats, params.target)
    return values
