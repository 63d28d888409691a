"""Input validation helpers for the estimator classes."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import InputError
from .panel import Panel, set_treatment


def check_panel(X, treated_units=None, treatment_start=None) -> Panel:
    """Coerce ``X`` into a :class:`Panel` with treatment metadata.

    ``X`` may be a :class:`Panel` (its own treatment is used unless
    overridden), a wide :class:`pandas.DataFrame` with units as rows and
    periods as columns, or a 2-D array (units labelled ``0..N-1``,
    periods ``0..T-1``).
    """
    if isinstance(X, Panel):
        panel = X
    elif hasattr(X, "columns") and hasattr(X, "index") and hasattr(X, "to_numpy"):
        panel = Panel(
            X.to_numpy(dtype=float), tuple(X.index), tuple(X.columns)
        )
    else:
        Y = np.asarray(X, dtype=float)
        if Y.ndim != 2:
            raise InputError(f"expected a 2-D outcome matrix, got {Y.ndim} dimension(s)")
        panel = Panel(Y, tuple(range(Y.shape[0])), tuple(range(Y.shape[1])))

    if treated_units is None and treatment_start is None:
        if not panel.has_treatment:
            raise InputError("treatment metadata missing: pass treated_units and treatment_start")
        return panel
    treated = panel.treated_units if treated_units is None else treated_units
    start = panel.treatment_start if treatment_start is None else treatment_start
    if isinstance(treated, np.ndarray) and treated.dtype == bool:
        treated = [u for u, flag in zip(panel.unit_ids, treated) if flag]
    return set_treatment(panel, treated, start)


def check_nonnegative(name: str, value, integer: bool = False):
    kind = numbers.Integral if integer else numbers.Real
    if not isinstance(value, kind) or isinstance(value, bool) or value < 0:
        raise ValueError(f"{name} must be a non-negative {'integer' if integer else 'number'}, got {value!r}")
    return value
