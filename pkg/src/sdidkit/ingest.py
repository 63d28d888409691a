"""Innovation-Graph-style CSV ingestion, sample filters and panel building.

Input files are read with the standard :mod:`csv` module so that every
malformed row can be reported with its line number instead of being
dropped silently.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

from .exceptions import (
    EmptyAfterFilters,
    InputError,
    MissingPopulation,
    NoControls,
    NoTreated,
    NoValidRows,
    PeriodParseError,
    SchemaMismatch,
)
from .panel import Panel, QUARTER_RE, build_panel, parse_period, set_treatment

logger = logging.getLogger(__name__)

METRICS = ("pushes", "repositories", "developers", "developers_by_language")
EU_LABELS = ("EU", "European Union")
EXCLUDED_LABELS = ("Hong Kong", "Hong Kong SAR", "Hong Kong SAR, China", "HK", "HKG")
DEFAULT_TREATMENT_START = "2022Q4"

RECORD_COLUMNS = ("economy", "period", "metric", "language", "value")


@dataclass(frozen=True)
class MetricRecord:
    economy: str
    period: str
    metric: str
    value: float
    language: str | None = None


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str
    row: str


@dataclass(frozen=True)
class FilterLogEntry:
    economy: str
    rule: str
    detail: str = ""


@dataclass(frozen=True)
class TreatmentRoster:
    treated_economies: frozenset
    treatment_start: str = DEFAULT_TREATMENT_START

    def __post_init__(self):
        if not self.treated_economies:
            raise InputError("treatment roster is empty")
        parse_period(self.treatment_start)


@dataclass(frozen=True)
class Schema:
    """Maps file columns onto record fields.

    Either ``period`` or both ``year`` and ``quarter`` name the time
    column(s). ``metric`` names a column holding the metric tag; when the
    file holds a single metric, leave it ``None`` and set ``metric_name``.
    """

    economy: str = "economy"
    value: str = "value"
    period: str | None = "period"
    year: str | None = None
    quarter: str | None = None
    metric: str | None = "metric"
    metric_name: str | None = None
    language: str | None = "language"

    def required_columns(self) -> list[str]:
        cols = [self.economy, self.value]
        cols += [self.period] if self.period else [self.year, self.quarter]
        if self.metric:
            cols.append(self.metric)
        if self.language:
            cols.append(self.language)
        return [c for c in cols if c]


_IG = dict(economy="economy_name", period=None, year="year", quarter="quarter", metric=None)

SCHEMA_PRESETS = {
    "long": Schema(),
    "innovation_graph_pushes": Schema(value="num_pushes", metric_name="pushes", language=None, **_IG),
    "innovation_graph_repositories": Schema(
        value="num_repositories", metric_name="repositories", language=None, **_IG
    ),
    "innovation_graph_developers": Schema(
        value="num_developers", metric_name="developers", language=None, **_IG
    ),
    "innovation_graph_languages": Schema(
        value="num_pushers", metric_name="developers_by_language", language="language", **_IG
    ),
}


def resolve_schema(schema) -> Schema:
    """Schema from a preset name, a JSON file path, a dict or a Schema."""
    if schema is None:
        return SCHEMA_PRESETS["long"]
    if isinstance(schema, Schema):
        return schema
    if isinstance(schema, dict):
        known = {f.name for f in fields(Schema)}
        unknown = set(schema) - known
        if unknown:
            raise InputError(f"unknown schema keys: {sorted(unknown)}")
        return Schema(**schema)
    text = str(schema)
    if text in SCHEMA_PRESETS:
        return SCHEMA_PRESETS[text]
    path = Path(text)
    if path.exists():
        return resolve_schema(json.loads(path.read_text()))
    raise InputError(
        f"unknown schema {text!r}; use one of {sorted(SCHEMA_PRESETS)} or a JSON file"
    )


def _clean(value) -> str:
    return "" if value is None else str(value).strip()


def load_metrics(path, schema=None) -> tuple[list[MetricRecord], list[Reject]]:
    """Parse a metrics CSV into records plus a rejects report.

    Raises
    ------
    FileNotFoundError
    SchemaMismatch
        A column named by the schema is absent from the header.
    NoValidRows
        No row survived validation.
    """
    schema = resolve_schema(schema)
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    records: list[MetricRecord] = []
    rejects: list[Reject] = []
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in schema.required_columns() if c not in header]
        if missing:
            raise SchemaMismatch(missing)
        for row in reader:
            line = reader.line_num
            raw = ",".join(_clean(row.get(c)) for c in header)
            try:
                records.append(_parse_row(row, schema))
            except _RowError as exc:
                rejects.append(Reject(line, str(exc), raw))
    if not records:
        raise NoValidRows(f"{path}: no valid rows ({len(rejects)} rejected)")
    if rejects:
        logger.warning("%s: rejected %d malformed rows", path, len(rejects))
    return records, rejects


class _RowError(Exception):
    pass


def _parse_row(row: dict, schema: Schema) -> MetricRecord:
    economy = _clean(row.get(schema.economy))
    if not economy:
        raise _RowError("missing economy")
    if schema.period:
        period = _clean(row.get(schema.period))
    else:
        year, quarter = _clean(row.get(schema.year)), _clean(row.get(schema.quarter))
        quarter = quarter.upper().lstrip("Q")
        period = f"{year}Q{quarter}"
    m = QUARTER_RE.match(period)
    if m:
        period = f"{m.group(1)}Q{m.group(2)}"
    try:
        parse_period(period)
    except PeriodParseError:
        raise _RowError("bad period") from None
    metric = _clean(row.get(schema.metric)) if schema.metric else (schema.metric_name or "")
    if metric not in METRICS:
        raise _RowError("unknown metric")
    language = _clean(row.get(schema.language)) if schema.language else ""
    if metric == "developers_by_language" and not language:
        raise _RowError("language required")
    if metric != "developers_by_language" and language:
        raise _RowError("unexpected language")
    text = _clean(row.get(schema.value))
    try:
        value = float(text)
    except ValueError:
        raise _RowError("non-numeric value") from None
    if not math.isfinite(value):
        raise _RowError("non-numeric value")
    if value < 0:
        raise _RowError("negative value")
    return MetricRecord(economy, period, metric, value, language or None)


def quarter_range(first: str, last: str) -> list[str]:
    """All quarter labels from ``first`` to ``last`` inclusive."""
    a, b = QUARTER_RE.match(first), QUARTER_RE.match(last)
    if not (a and b):
        raise PeriodParseError(f"span bounds must be quarters, got {first!r}, {last!r}")
    q, q_end = int(a.group(1)) * 4 + int(a.group(2)) - 1, int(b.group(1)) * 4 + int(b.group(2)) - 1
    return [f"{k // 4}Q{k % 4 + 1}" for k in range(q, q_end + 1)]


def _span_periods(records: Sequence[MetricRecord], span) -> list[str]:
    observed = {r.period for r in records}
    if span is None:
        keys = sorted(observed, key=parse_period)
        span = (keys[0], keys[-1])
    first, last = span
    if QUARTER_RE.match(str(first)) and QUARTER_RE.match(str(last)):
        return quarter_range(str(first), str(last))
    lo, hi = parse_period(first), parse_period(last)
    return sorted((p for p in observed if lo <= parse_period(p) <= hi), key=parse_period)


def apply_sample_filters(
    records: Iterable[MetricRecord],
    span: tuple[str, str] | None = None,
    eu_labels: Sequence[str] = EU_LABELS,
    excluded_labels: Sequence[str] = EXCLUDED_LABELS,
) -> tuple[list[MetricRecord], list[FilterLogEntry]]:
    """Sample restrictions applied before estimation.

    In order: economies missing any quarter of ``span`` are dropped, then
    the EU aggregate, then the excluded outlier economies (Hong Kong by
    default). Records outside ``span`` are trimmed. Each dropped economy
    appears exactly once in the log, under the first rule that caught it.
    ``span=None`` uses the full observed range.
    """
    records = list(records)
    if not records:
        raise EmptyAfterFilters("no records to filter")
    periods = _span_periods(records, span)
    in_span = set(periods)
    seen: dict[str, set] = {}
    for r in records:
        seen.setdefault(r.economy, set())
        if r.period in in_span:
            seen[r.economy].add(r.period)

    eu = set(eu_labels)
    excluded = set(excluded_labels)
    log: list[FilterLogEntry] = []
    dropped = set()
    for economy, have in seen.items():
        lacking = [p for p in periods if p not in have]
        if lacking:
            detail = f"missing {len(lacking)} of {len(periods)} periods (first: {lacking[0]})"
            log.append(FilterLogEntry(economy, "incomplete_span", detail))
        elif economy in eu:
            log.append(FilterLogEntry(economy, "eu_aggregate", "collinear with member states"))
        elif economy in excluded:
            log.append(FilterLogEntry(economy, "excluded_outlier", "atypically high activity"))
        else:
            continue
        dropped.add(economy)

    kept = [r for r in records if r.economy not in dropped and r.period in in_span]
    if not kept:
        raise EmptyAfterFilters("every economy was removed by the sample filters")
    return kept, log


def load_population(path) -> dict[str, float]:
    """Two-column CSV (economy, population) into a dict."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    table: dict[str, float] = {}
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise SchemaMismatch(["economy", "population"])
        for row in reader:
            if not row or not any(c.strip() for c in row):
                continue
            economy, pop = row[0].strip(), row[1].strip()
            try:
                value = float(pop)
            except ValueError:
                raise InputError(f"{path}:{reader.line_num}: bad population {pop!r}") from None
            if not value > 0:
                raise InputError(f"{path}:{reader.line_num}: population must be positive")
            table[economy] = value
    return table


def per_100k(records: Iterable[MetricRecord], population: dict) -> list[MetricRecord]:
    """Rescale values to counts per 100,000 people."""
    records = list(records)
    missing = sorted({r.economy for r in records if r.economy not in population})
    if missing:
        raise MissingPopulation(missing)
    return [replace(r, value=r.value * 100000.0 / population[r.economy]) for r in records]


def load_roster(path) -> TreatmentRoster:
    """Plain-text roster: one treated economy per line plus a start line.

    The start line reads ``treatment_start: 2022Q4`` (``=`` also works);
    ``#`` starts a comment. Without a start line the default 2022Q4 is used.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    treated = []
    start = DEFAULT_TREATMENT_START
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.replace("=", ":", 1).partition(":")
        if sep and key.strip().lower() == "treatment_start":
            start = val.strip()
        else:
            treated.append(line)
    return TreatmentRoster(frozenset(treated), start)


def write_roster(path, roster: TreatmentRoster) -> None:
    lines = [f"treatment_start: {roster.treatment_start}"]
    lines += sorted(roster.treated_economies)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_outcome_panel(
    records: Iterable[MetricRecord],
    roster: TreatmentRoster,
    metric: str,
    language: str | None = None,
) -> tuple[Panel, list[FilterLogEntry]]:
    """Panel of one metric (and language) with the roster's treatment.

    Economies without a value in every period observed for the selected
    series are dropped and logged under ``incomplete_series``.
    """
    if metric not in METRICS:
        raise InputError(f"unknown metric {metric!r}")
    if metric == "developers_by_language" and not language:
        raise InputError("developers_by_language needs a language")
    chosen = [
        r for r in records
        if r.metric == metric and (language is None or r.language == language)
    ]
    if not chosen:
        what = metric if language is None else f"{metric}/{language}"
        raise EmptyAfterFilters(f"no records for {what}")
    periods = {r.period for r in chosen}
    have: dict[str, set] = {}
    for r in chosen:
        have.setdefault(r.economy, set()).add(r.period)
    log = []
    for economy, ps in have.items():
        if len(ps) < len(periods):
            log.append(FilterLogEntry(
                economy, "incomplete_series", f"{len(periods) - len(ps)} periods missing"
            ))
    dropped = {e.economy for e in log}
    kept = [e for e in have if e not in dropped]
    n_treated = sum(e in roster.treated_economies for e in kept)
    if not n_treated:
        raise NoTreated("no roster economy survives in the panel")
    if n_treated == len(kept):
        raise NoControls("every surviving economy is on the treatment roster")
    panel = build_panel((r.economy, r.period, r.value) for r in chosen if r.economy not in dropped)
    treated = [u for u in panel.unit_ids if u in roster.treated_economies]
    return set_treatment(panel, treated, roster.treatment_start), log


def write_records(path, records: Iterable[MetricRecord]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([r.economy, r.period, r.metric, r.language or "", repr(r.value)])


def write_filter_log(path, entries: Iterable[FilterLogEntry]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("economy", "rule", "detail"))
        for e in entries:
            writer.writerow((e.economy, e.rule, e.detail))


def write_rejects(path, rejects: Iterable[Reject]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("line", "reason", "row"))
        for r in rejects:
            writer.writerow((r.line, r.reason, r.row))
