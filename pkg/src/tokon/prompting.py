"""Query-text rendering for the three zero-shot forecasting prompt styles.

All variants share one baseline sentence carrying the date span and the
serialized values; the chain-of-thought and care-focused variants append a
fixed suffix, and every variant ends with the same answer-only directive.
The rendered strings are a stable external contract (golden-file tested),
so any edit here is a breaking change.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from typing import Sequence, Union

from .errors import EmptyInput
from .normalization import NormalizedSeries, TimeSeries


class PromptKind(Enum):
    BASELINE = "baseline"
    COT = "cot"
    TSFC = "tsfc"


class SpanUnit(Enum):
    MONTHS = "months"
    HOURS = "hours"


BASELINE_TEMPLATE = (
    "Given the recorded measurements from {start} to {end} spanning "
    "{count} {unit}, with the values: {values}, predict the next "
    "{horizon} measurements."
)

COT_SUFFIX = "Let's think step by step."

TSFC_SUFFIX = (
    "Analyze the time series step by step, focusing on identifying and "
    "leveraging trends and seasonal patterns. Execute each algebraic "
    "operation carefully, ensuring precision and accuracy at every stage. "
    "Pay close attention to trends and seasonal patterns, especially when "
    "determining the final answer"
)

ANSWER_DIRECTIVE = "please answer the predicted values only"

_SUFFIXES = {
    PromptKind.BASELINE: None,
    PromptKind.COT: COT_SUFFIX,
    PromptKind.TSFC: TSFC_SUFFIX,
}


@dataclass(frozen=True)
class PromptContext:
    """Everything the baseline sentence needs for one series."""

    start_date: datetime
    end_date: datetime
    span_count: int
    span_unit: SpanUnit
    horizon: int
    values_text: str

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.span_count < 1:
            raise ValueError("span_count must be at least 1")


@dataclass(frozen=True)
class Prompt:
    text: str
    kind: PromptKind


def format_values(
    values: Union[NormalizedSeries, TimeSeries, Sequence[float]],
    normalized: bool,
) -> str:
    """Serialize values for embedding in a prompt.

    Normalized series render as bare integers; raw series with one decimal
    place ("1000.0, 1032.0" style).
    """
    if isinstance(values, NormalizedSeries):
        seq: Sequence[float] = values.tokens
    elif isinstance(values, TimeSeries):
        seq = values.values
    else:
        seq = values
    if len(seq) == 0:
        raise EmptyInput("cannot format an empty value list")
    if normalized:
        return ", ".join(str(int(v)) for v in seq)
    return ", ".join(f"{v:.1f}" for v in seq)


def add_months(moment: datetime, months: int) -> datetime:
    month_index = moment.year * 12 + (moment.month - 1) + months
    year, month = divmod(month_index, 12)
    month += 1
    day = min(moment.day, _days_in_month(year, month))
    return moment.replace(year=year, month=month, day=day)


def _days_in_month(year: int, month: int) -> int:
    if month == 12:
        return 31
    return (datetime(year, month + 1, 1) - timedelta(days=1)).day


def _render_date(moment: datetime, unit: SpanUnit) -> str:
    if unit is SpanUnit.HOURS:
        return moment.strftime("%Y-%m-%d %H:%M")
    return moment.strftime("%Y-%m-%d")


def make_context(
    start: datetime,
    unit: SpanUnit,
    values: Union[NormalizedSeries, TimeSeries, Sequence[float]],
    horizon: int,
    normalized: bool,
) -> PromptContext:
    """Build a PromptContext, deriving the exclusive end date from the span."""
    values_text = format_values(values, normalized=normalized)
    count = len(values)
    if unit is SpanUnit.MONTHS:
        end = add_months(start, count)
    else:
        end = start + timedelta(hours=count)
    return PromptContext(
        start_date=start,
        end_date=end,
        span_count=count,
        span_unit=unit,
        horizon=horizon,
        values_text=values_text,
    )


def render_prompt(kind: PromptKind, ctx: PromptContext) -> Prompt:
    """Render the full query text for one series under the given style."""
    text = BASELINE_TEMPLATE.format(
        start=_render_date(ctx.start_date, ctx.span_unit),
        end=_render_date(ctx.end_date, ctx.span_unit),
        count=ctx.span_count,
        unit=ctx.span_unit.value,
        values=ctx.values_text,
        horizon=ctx.horizon,
    )
    suffix = _SUFFIXES[kind]
    if suffix is not None:
        text = text + " " + suffix
    text = text + " " + ANSWER_DIRECTIVE
    return Prompt(text=text, kind=kind)
