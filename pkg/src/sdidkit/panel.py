"""Balanced panels and the block design every estimator consumes."""

from __future__ import annotations

import datetime as _dt
import re
from dataclasses import dataclass, field
from numbers import Real
from typing import Hashable, Iterable, Sequence

import numpy as np

from .exceptions import (
    DuplicateCell,
    EmptyInput,
    InputError,
    NoControls,
    NoPostPeriods,
    NoPrePeriods,
    NoTreated,
    PeriodParseError,
    UnbalancedPanel,
)

QUARTER_RE = re.compile(r"^\s*(\d{4})\s*-?\s*[Qq]([1-4])\s*$")


def parse_period(label) -> _dt.date | float:
    """Sort key for a period label.

    ``"2022Q4"`` (also ``"2022-Q4"``) maps to the first day of the quarter,
    ISO dates (``"2022-10-01"``, ``"2022-10"``) to that day, and plain
    numbers to themselves.
    """
    if isinstance(label, _dt.datetime):
        return label.date()
    if isinstance(label, _dt.date):
        return label
    if isinstance(label, Real) and not isinstance(label, bool):
        return float(label)
    text = str(label).strip()
    m = QUARTER_RE.match(text)
    if m:
        year, q = int(m.group(1)), int(m.group(2))
        return _dt.date(year, 3 * (q - 1) + 1, 1)
    try:
        return _dt.date.fromisoformat(text)
    except ValueError:
        pass
    try:
        return _dt.date.fromisoformat(text + "-01")
    except ValueError:
        pass
    raise PeriodParseError(f"cannot parse period label {label!r}")


def sort_periods(labels: Iterable) -> list:
    """Chronological order of period labels (by parsed value, not text)."""
    labels = list(labels)
    keys = [parse_period(p) for p in labels]
    kinds = {type(k) for k in keys}
    if len(kinds) > 1:
        raise PeriodParseError("period labels mix numeric and calendar formats")
    order = sorted(range(len(labels)), key=lambda i: keys[i])
    return [labels[i] for i in order]


@dataclass(frozen=True)
class Panel:
    """Balanced N x T outcome matrix with labels and treatment metadata.

    ``outcomes`` is stored read-only. ``treated_units`` and
    ``treatment_start`` stay empty until :func:`set_treatment` is applied.
    """

    outcomes: np.ndarray
    unit_ids: tuple
    period_ids: tuple
    treated_units: tuple = ()
    treatment_start: Hashable | None = None
    _unit_index: dict = field(init=False, repr=False, compare=False)
    _period_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        Y = np.array(self.outcomes, dtype=float, copy=True)
        if Y.ndim != 2:
            raise InputError("outcomes must be a 2-D matrix")
        units = tuple(self.unit_ids)
        periods = tuple(self.period_ids)
        if Y.shape != (len(units), len(periods)):
            raise InputError(
                f"outcomes shape {Y.shape} does not match "
                f"{len(units)} units x {len(periods)} periods"
            )
        if len(set(units)) != len(units):
            raise InputError("unit_ids contain duplicates")
        if len(set(periods)) != len(periods):
            raise InputError("period_ids contain duplicates")
        if len(units) < 2 or len(periods) < 2:
            raise InputError("a panel needs at least 2 units and 2 periods")
        if not np.all(np.isfinite(Y)):
            bad = np.argwhere(~np.isfinite(Y))
            raise UnbalancedPanel([(units[i], periods[t]) for i, t in bad])
        if list(periods) != sort_periods(periods):
            raise InputError("period_ids must be in chronological order")
        Y.setflags(write=False)
        object.__setattr__(self, "outcomes", Y)
        object.__setattr__(self, "unit_ids", units)
        object.__setattr__(self, "period_ids", periods)
        object.__setattr__(self, "treated_units", tuple(self.treated_units))
        object.__setattr__(self, "_unit_index", {u: i for i, u in enumerate(units)})
        object.__setattr__(self, "_period_index", {p: t for t, p in enumerate(periods)})
        if self.treatment_start is not None or self.treated_units:
            _check_treatment(self)

    @property
    def n_units(self) -> int:
        return len(self.unit_ids)

    @property
    def n_periods(self) -> int:
        return len(self.period_ids)

    @property
    def shape(self) -> tuple[int, int]:
        return self.outcomes.shape

    @property
    def has_treatment(self) -> bool:
        return bool(self.treated_units) and self.treatment_start is not None

    def value(self, unit, period) -> float:
        return float(self.outcomes[self._unit_index[unit], self._period_index[period]])

    def treated_mask(self) -> np.ndarray:
        treated = set(self.treated_units)
        return np.array([u in treated for u in self.unit_ids], dtype=bool)

    def post_mask(self) -> np.ndarray:
        if self.treatment_start is None:
            raise NoPostPeriods("panel has no treatment start")
        start = self._period_index[self.treatment_start]
        return np.arange(self.n_periods) >= start

    def map_outcomes(self, func) -> "Panel":
        """Copy of the panel with ``func`` applied to the outcome matrix."""
        return Panel(
            func(np.array(self.outcomes)),
            self.unit_ids,
            self.period_ids,
            self.treated_units,
            self.treatment_start,
        )

    def __repr__(self):
        return (
            f"Panel(N={self.n_units}, T={self.n_periods}, "
            f"treated={len(self.treated_units)}, start={self.treatment_start!r})"
        )


def _check_treatment(panel: Panel) -> None:
    if not panel.treated_units:
        raise NoTreated("treated_units is empty")
    unknown = [u for u in panel.treated_units if u not in panel._unit_index]
    if unknown:
        raise InputError(f"treated units not in panel: {unknown}")
    if len(set(panel.treated_units)) != len(panel.treated_units):
        raise InputError("treated_units contain duplicates")
    if len(panel.treated_units) >= panel.n_units:
        raise NoControls("every unit is treated; at least one control is required")
    if panel.treatment_start is None:
        raise NoPostPeriods("treatment_start is not set")
    if panel.treatment_start not in panel._period_index:
        raise InputError(f"treatment_start {panel.treatment_start!r} is not a panel period")
    start = panel._period_index[panel.treatment_start]
    if start == 0:
        raise NoPrePeriods("treatment starts in the first period")


def build_panel(records: Iterable[tuple]) -> Panel:
    """Assemble a balanced panel from ``(unit, period, value)`` triples.

    Units keep first-appearance order and periods are sorted
    chronologically. Treatment metadata is attached separately with
    :func:`set_treatment`.
    """
    cells: dict = {}
    units: dict = {}
    periods: dict = {}
    for unit, period, value in records:
        key = (unit, period)
        if key in cells:
            raise DuplicateCell(unit, period)
        cells[key] = float(value)
        units.setdefault(unit, None)
        periods.setdefault(period, None)
    if not cells:
        raise EmptyInput("no records")
    unit_ids = list(units)
    period_ids = sort_periods(periods)
    missing = [(u, p) for u in unit_ids for p in period_ids if (u, p) not in cells]
    if missing:
        raise UnbalancedPanel(missing)
    Y = np.array([[cells[(u, p)] for p in period_ids] for u in unit_ids], dtype=float)
    return Panel(Y, tuple(unit_ids), tuple(period_ids))


def set_treatment(panel: Panel, treated_units: Iterable, treatment_start) -> Panel:
    """Return a copy of ``panel`` with treatment metadata attached.

    Treated units are stored in panel row order.
    """
    wanted = set(treated_units)
    unknown = wanted.difference(panel.unit_ids)
    if unknown:
        raise InputError(f"treated units not in panel: {sorted(map(str, unknown))}")
    treated = tuple(u for u in panel.unit_ids if u in wanted)
    return Panel(panel.outcomes, panel.unit_ids, panel.period_ids, treated, treatment_start)


@dataclass(frozen=True)
class BlockDesign:
    """Controls-first, pre-periods-first block structure of a panel.

    ``row_order[k]`` is the panel row placed at block row ``k``; control
    rows come first, each block keeping the panel's relative order.
    """

    n0: int
    n1: int
    t0: int
    t1: int
    row_order: tuple

    @property
    def n(self) -> int:
        return self.n0 + self.n1

    @property
    def t(self) -> int:
        return self.t0 + self.t1


def to_block(panel: Panel) -> BlockDesign:
    """Block design of a panel with treatment metadata."""
    if not panel.treated_units:
        raise NoTreated("panel has no treated units")
    if panel.treatment_start is None:
        raise NoPostPeriods("panel has no treatment start")
    mask = panel.treated_mask()
    n1 = int(mask.sum())
    n0 = panel.n_units - n1
    if n0 == 0:
        raise NoControls("every unit is treated")
    if n1 == 0:
        raise NoTreated("no treated unit found in panel")
    t0 = panel._period_index[panel.treatment_start]
    t1 = panel.n_periods - t0
    if t0 == 0:
        raise NoPrePeriods("treatment starts in the first period")
    if t1 == 0:
        raise NoPostPeriods("no post-treatment period")
    order = tuple(int(i) for i in np.flatnonzero(~mask)) + tuple(
        int(i) for i in np.flatnonzero(mask)
    )
    return BlockDesign(n0=n0, n1=n1, t0=t0, t1=t1, row_order=order)


def block_matrix(panel: Panel, design: BlockDesign) -> np.ndarray:
    """Outcome matrix with rows permuted into block order."""
    return np.asarray(panel.outcomes)[list(design.row_order)]


def validate_block(
    panel: Panel,
    design: BlockDesign,
    treatment_starts: dict | None = None,
) -> list[str]:
    """Every violated block-design invariant, as human-readable strings.

    ``treatment_starts`` optionally maps each treated unit to its own
    adoption period; differing values are reported as non-block adoption.
    An empty list means the pair is consistent.
    """
    problems = []
    N, T = panel.shape
    for name in ("n0", "n1", "t0", "t1"):
        if getattr(design, name) < 1:
            problems.append(f"{name} must be at least 1 (got {getattr(design, name)})")
    if design.n0 + design.n1 != N:
        problems.append(f"count mismatch: n0 + n1 = {design.n0 + design.n1} but N = {N}")
    if design.t0 + design.t1 != T:
        problems.append(f"count mismatch: t0 + t1 = {design.t0 + design.t1} but T = {T}")
    if sorted(design.row_order) != list(range(N)):
        problems.append("row_order is not a permutation of the panel rows")
    elif design.n0 + design.n1 == N:
        mask = panel.treated_mask()
        head = [design.row_order[k] for k in range(design.n0)]
        tail = [design.row_order[k] for k in range(design.n0, N)]
        if any(mask[i] for i in head) or not all(mask[i] for i in tail):
            problems.append("row_order does not place controls before treated units")
        elif head != sorted(head) or tail != sorted(tail):
            problems.append("row_order is not stable within blocks")
    if panel.treatment_start is None:
        problems.append("panel has no treatment start")
    elif panel.treatment_start in panel._period_index:
        t0 = panel._period_index[panel.treatment_start]
        if t0 != design.t0:
            problems.append(
                f"t0 = {design.t0} disagrees with treatment start at period index {t0}"
            )
    if treatment_starts:
        starts = {treatment_starts[u] for u in panel.treated_units if u in treatment_starts}
        if panel.treatment_start is not None:
            starts.add(panel.treatment_start)
        if len(starts) > 1:
            shown = ", ".join(sorted(map(str, starts)))
            problems.append(f"non-block adoption: treated units start at {shown}")
    return problems


def panel_from_matrix(
    Y,
    n_treated: int,
    n_pre: int,
    unit_ids: Sequence | None = None,
    period_ids: Sequence | None = None,
) -> Panel:
    """Panel from a matrix already in block order (treated rows last)."""
    Y = np.asarray(Y, dtype=float)
    N, T = Y.shape
    units = tuple(unit_ids) if unit_ids is not None else tuple(f"u{i:03d}" for i in range(N))
    periods = tuple(period_ids) if period_ids is not None else tuple(range(T))
    return Panel(Y, units, periods, units[N - n_treated:], periods[n_pre])
