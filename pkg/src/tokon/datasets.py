"""Dataset construction and the line-delimited canonical record format.

Two sources are supported: the UCI household power file (minute rows,
semicolon-separated, averaged into hourly values) and the M4 monthly
training table (one ragged comma-separated series per row). Both are
reduced to DatasetRecord objects -- a context window plus a fixed-horizon
target -- and persisted as one JSON object per line with a manifest file
next to the records.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    InsufficientSeries,
    MissingColumn,
    SchemaViolation,
    UnparsableRow,
)
from .normalization import DomainStats, TimeSeries
from .prompting import add_months

# Hours with fewer valid minutes than this are dropped, and any window
# touching them is skipped.
MIN_VALID_MINUTES_PER_HOUR = 30

# Start date used for M4 series whose row carries no date metadata.
M4_SYNTHETIC_EPOCH = datetime(1990, 1, 1)


class Granularity(Enum):
    HOURLY = "hourly"
    MONTHLY = "monthly"


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    granularity: Granularity
    start_date: datetime
    context: TimeSeries
    target: TimeSeries


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    horizon: int
    context_lengths: tuple[int, ...]
    record_count: int
    stats: DomainStats | None = None


@dataclass
class Dataset:
    name: str
    horizon: int
    records: list[DatasetRecord] = field(default_factory=list)

    def manifest(self, stats: DomainStats | None = None) -> DatasetManifest:
        lengths = sorted({len(r.context) for r in self.records}, reverse=True)
        return DatasetManifest(
            name=self.name,
            horizon=self.horizon,
            context_lengths=tuple(lengths),
            record_count=len(self.records),
            stats=stats,
        )


def _parse_ihepc_timestamp(date_text: str, time_text: str) -> datetime:
    day, month, year = date_text.split("/")
    hour = int(time_text.split(":")[0])
    return datetime(int(year), int(month), int(day), hour)


def ingest_ihepc(
    input_path: str | os.PathLike,
    horizon: int = 6,
    context_len: int = 96,
    max_series: int = 3000,
) -> Dataset:
    """Build hourly-average records from the UCI household power file.

    Minute rows are averaged per clock hour (missing '?' rows dropped; an
    hour needs at least 30 valid minutes). The hourly timeline is then cut
    into consecutive non-overlapping windows of context_len + horizon;
    windows containing an invalid hour are skipped.
    """
    per_hour: dict[datetime, list[float]] = {}
    with open(input_path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        columns = header.strip().split(";")
        for name in ("Date", "Time", "Global_intensity"):
            if name not in columns:
                raise MissingColumn(f"input file lacks a {name} column")
        date_idx = columns.index("Date")
        time_idx = columns.index("Time")
        value_idx = columns.index("Global_intensity")
        for row_number, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(";")
            if len(parts) <= max(date_idx, time_idx, value_idx):
                raise UnparsableRow(row_number, "too few columns")
            raw = parts[value_idx]
            try:
                stamp = _parse_ihepc_timestamp(parts[date_idx], parts[time_idx])
            except (ValueError, IndexError) as exc:
                raise UnparsableRow(row_number, f"bad timestamp: {exc}") from exc
            if raw == "?" or raw == "":
                continue
            try:
                value = float(raw)
            except ValueError as exc:
                raise UnparsableRow(row_number, f"bad value {raw!r}") from exc
            per_hour.setdefault(stamp, []).append(value)

    dataset = Dataset(name="aihepc", horizon=horizon)
    if not per_hour:
        return dataset

    first = min(per_hour)
    last = max(per_hour)
    hours: list[tuple[datetime, float | None]] = []
    stamp = first
    while stamp <= last:
        minutes = per_hour.get(stamp, [])
        if len(minutes) >= MIN_VALID_MINUTES_PER_HOUR:
            hours.append((stamp, math.fsum(minutes) / len(minutes)))
        else:
            hours.append((stamp, None))
        stamp += timedelta(hours=1)

    window = context_len + horizon
    for offset in range(0, len(hours) - window + 1, window):
        if len(dataset.records) >= max_series:
            break
        chunk = hours[offset : offset + window]
        values = [v for _, v in chunk]
        if any(v is None for v in values):
            continue
        dataset.records.append(
            DatasetRecord(
                id=f"aihepc-{len(dataset.records):05d}",
                granularity=Granularity.HOURLY,
                start_date=chunk[0][0],
                context=TimeSeries(tuple(values[:context_len])),
                target=TimeSeries(tuple(values[context_len:])),
            )
        )
    return dataset


def _split_m4_row(row_number: int, line: str) -> tuple[str, datetime | None, list[float]]:
    fields = [f.strip().strip('"') for f in line.split(",")]
    if not fields or not fields[0]:
        raise UnparsableRow(row_number, "missing series id")
    series_id = fields[0]
    start: datetime | None = None
    rest = fields[1:]
    if rest and rest[0] and not _is_number(rest[0]):
        try:
            start = datetime.fromisoformat(rest[0])
            rest = rest[1:]
        except ValueError:
            raise UnparsableRow(row_number, f"unrecognized field {rest[0]!r}")
    values: list[float] = []
    for cell in rest:
        if cell == "":
            break
        if not _is_number(cell):
            raise UnparsableRow(row_number, f"bad value {cell!r}")
        values.append(float(cell))
    return series_id, start, values


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def ingest_m4(
    input_path: str | os.PathLike,
    lengths: Sequence[int] = (64, 49),
    horizon: int = 18,
    counts: Sequence[int] = (965, 1104),
) -> Dataset:
    """Select fixed-length monthly records from the M4 training table.

    A series qualifies for context length L when it holds at least
    L + horizon values; the trailing L + horizon values are split into
    context and target. Rows are consumed in file order, each series
    assigned to the first length bucket that still needs records.
    """
    if len(lengths) != len(counts):
        raise ValueError("lengths and counts must pair up")
    remaining = {length: count for length, count in zip(lengths, counts)}
    dataset = Dataset(name="sm4", horizon=horizon)
    with open(input_path, "r", encoding="utf-8") as fh:
        for row_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if row_number == 1 and _looks_like_header(line):
                continue
            series_id, start, values = _split_m4_row(row_number, line)
            for length in lengths:
                if remaining[length] <= 0:
                    continue
                needed = length + horizon
                if len(values) < needed:
                    continue
                window = values[-needed:]
                window_start = add_months(
                    start if start is not None else M4_SYNTHETIC_EPOCH,
                    len(values) - needed,
                )
                dataset.records.append(
                    DatasetRecord(
                        id=f"sm4-{series_id}-L{length}",
                        granularity=Granularity.MONTHLY,
                        start_date=window_start,
                        context=TimeSeries(tuple(window[:length])),
                        target=TimeSeries(tuple(window[length:])),
                    )
                )
                remaining[length] -= 1
                break
            if all(v <= 0 for v in remaining.values()):
                break
    unfilled = {k: v for k, v in remaining.items() if v > 0}
    if unfilled:
        raise InsufficientSeries(
            f"source exhausted with unfilled counts: {unfilled}"
        )
    return dataset


def _looks_like_header(line: str) -> bool:
    fields = [f.strip().strip('"') for f in line.split(",")]
    return len(fields) > 1 and not any(_is_number(f) for f in fields[1:] if f)


def manifest_path_for(records_path: str | os.PathLike) -> Path:
    return Path(records_path).with_suffix(".manifest.json")


def write_records(
    dataset: Dataset,
    path: str | os.PathLike,
    stats: DomainStats | None = None,
) -> DatasetManifest:
    """Persist records as one JSON object per line, manifest alongside."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for record in dataset.records:
            fh.write(
                json.dumps(
                    {
                        "id": record.id,
                        "granularity": record.granularity.value,
                        "start": record.start_date.isoformat(),
                        "context": list(record.context.values),
                        "target": list(record.target.values),
                    }
                )
                + "\n"
            )
    tmp.replace(path)
    manifest = dataset.manifest(stats=stats)
    _write_manifest(manifest, manifest_path_for(path))
    return manifest


def _write_manifest(manifest: DatasetManifest, path: Path) -> None:
    doc = {
        "name": manifest.name,
        "horizon": manifest.horizon,
        "context_lengths": list(manifest.context_lengths),
        "record_count": manifest.record_count,
        "stats": None
        if manifest.stats is None
        else {
            "mean": manifest.stats.mean,
            "std_dev": manifest.stats.std_dev,
            "sample_count": manifest.stats.sample_count,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_manifest(path: str | os.PathLike) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    stats = None
    if doc.get("stats"):
        stats = DomainStats(
            mean=doc["stats"]["mean"],
            std_dev=doc["stats"]["std_dev"],
            sample_count=doc["stats"]["sample_count"],
        )
    return DatasetManifest(
        name=doc["name"],
        horizon=doc["horizon"],
        context_lengths=tuple(doc["context_lengths"]),
        record_count=doc["record_count"],
        stats=stats,
    )


def read_records(path: str | os.PathLike) -> Dataset:
    """Load a line-delimited record file, validating against its manifest.

    Raises SchemaViolation (with the offending line number) on malformed
    lines, target lengths that disagree with the declared horizon, or a
    record count that disagrees with the manifest.
    """
    path = Path(path)
    manifest = None
    mpath = manifest_path_for(path)
    if mpath.exists():
        manifest = read_manifest(mpath)

    records: list[DatasetRecord] = []
    horizon = manifest.horizon if manifest else None
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(line_number, f"invalid JSON: {exc}") from exc
            try:
                record = DatasetRecord(
                    id=str(doc["id"]),
                    granularity=Granularity(doc["granularity"]),
                    start_date=datetime.fromisoformat(doc["start"]),
                    context=TimeSeries(tuple(float(v) for v in doc["context"])),
                    target=TimeSeries(tuple(float(v) for v in doc["target"])),
                )
            except SchemaViolation:
                raise
            except Exception as exc:
                raise SchemaViolation(line_number, str(exc)) from exc
            if horizon is None:
                horizon = len(record.target)
            if len(record.target) != horizon:
                raise SchemaViolation(
                    line_number,
                    f"target length {len(record.target)} != horizon {horizon}",
                )
            if manifest and len(record.context) not in manifest.context_lengths:
                raise SchemaViolation(
                    line_number,
                    f"context length {len(record.context)} not declared in manifest",
                )
            records.append(record)

    if manifest and manifest.record_count != len(records):
        raise SchemaViolation(
            0, f"manifest declares {manifest.record_count} records, file has {len(records)}"
        )
    name = manifest.name if manifest else path.stem
    return Dataset(name=name, horizon=horizon or 0, records=records)


def pooled_stats(records: Iterable[DatasetRecord], first_n: int | None = None) -> DomainStats:
    """Domain stats over the first N records, pooling context and target."""
    from .normalization import compute_domain_stats

    picked = list(records)
    if first_n is not None:
        picked = picked[:first_n]
    series: list[TimeSeries] = []
    for record in picked:
        series.append(record.context)
        series.append(record.target)
    return compute_domain_stats(series)
