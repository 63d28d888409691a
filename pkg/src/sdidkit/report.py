"""Results bundles and publication-style text tables."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .estimator import AteEstimate, TrendSeries
from .exceptions import IncompleteBundle

METHOD_ORDER = ("DID", "SC", "SDID")
COEF_LABEL = "Chat GPT Available"
LABEL_WIDTH = 23
CELL_WIDTH = 14

OUTCOME_LABELS = {
    "pushes": "Num Pushes per 100k",
    "repositories": "Num Repos per 100k",
    "developers": "Num developers per 100k",
}

FOOTNOTES = (
    "Robust standard errors.",
    "* p<.10, ** p<.05, *** p<.01.",
    "Standard errors from a unit-level (clustered) bootstrap; stars use two-sided normal critical values.",
    "Baseline Mean Outcome: mean over all units in the pre-treatment periods.",
)


def outcome_label(metric: str, language: str | None = None) -> str:
    if language:
        return language
    return OUTCOME_LABELS.get(metric, metric)


@dataclass
class OutcomeResult:
    """Estimates and figure data for one outcome panel."""

    label: str
    metric: str
    language: str | None
    estimates: dict = field(default_factory=dict)   # method -> AteEstimate
    trends: dict = field(default_factory=dict)      # method -> TrendSeries
    control_units: list = field(default_factory=list)
    periods: list = field(default_factory=list)
    t0: int = 0

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "metric": self.metric,
            "language": self.language,
            "control_units": list(self.control_units),
            "periods": list(self.periods),
            "t0": self.t0,
            "estimates": {m: e.to_dict() for m, e in self.estimates.items()},
            "trends": {m: s.to_dict() for m, s in self.trends.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OutcomeResult":
        return cls(
            label=d["label"],
            metric=d["metric"],
            language=d.get("language"),
            estimates={m: AteEstimate.from_dict(e) for m, e in d["estimates"].items()},
            trends={m: TrendSeries.from_dict(s) for m, s in d.get("trends", {}).items()},
            control_units=list(d.get("control_units", [])),
            periods=list(d.get("periods", [])),
            t0=d.get("t0", 0),
        )


@dataclass
class ResultsBundle:
    outcomes: list = field(default_factory=list)   # OutcomeResult
    manifest: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "manifest": self.manifest,
            "outcomes": [o.to_dict() for o in self.outcomes],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultsBundle":
        d = json.loads(text)
        return cls(
            outcomes=[OutcomeResult.from_dict(o) for o in d.get("outcomes", [])],
            manifest=d.get("manifest", {}),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "ResultsBundle":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def format_coef(ate: float, stars: int) -> str:
    return f"{ate:.3f}" + "*" * stars


def format_se(se: float | None) -> str:
    return "" if se is None else f"({se:.3f})"


def format_baseline(x: float) -> str:
    """Four significant figures, but never fewer than one decimal.

    For example 741.5, 1097.8, 12.65, 6.137 and 0.402.
    """
    if not math.isfinite(x):
        return str(x)
    decimals = 3
    for _ in range(2):
        int_digits = len(str(int(abs(round(x, decimals)))))
        new = max(1, 4 - int_digits)
        if new == decimals:
            break
        decimals = new
    return f"{x:.{decimals}f}"


def _row(label: str, cells) -> str:
    return (label.ljust(LABEL_WIDTH) + "".join(c.ljust(CELL_WIDTH) for c in cells)).rstrip()


def render_table(
    bundle: ResultsBundle,
    methods=METHOD_ORDER,
    style: str = "academic",
    title: str | None = None,
) -> str:
    """Plain-text table with one block per outcome, in a journal-table layout.

    Raises
    ------
    IncompleteBundle
        An outcome lacks one of ``methods``.
    """
    if style != "academic":
        raise ValueError(f"unknown table style {style!r}")
    methods = [str(m).upper() for m in methods]
    if not bundle.outcomes:
        raise IncompleteBundle("bundle holds no outcomes")
    lines = []
    if title:
        lines.append(title)
    lines.append(_row("", methods))
    rule = "-" * (LABEL_WIDTH + CELL_WIDTH * len(methods))
    lines.append(rule)
    for k, outcome in enumerate(bundle.outcomes):
        missing = [m for m in methods if m not in outcome.estimates]
        if missing:
            raise IncompleteBundle(f"{outcome.label}: missing {', '.join(missing)}")
        ests = [outcome.estimates[m] for m in methods]
        letter = chr(ord("A") + k) if k < 26 else str(k + 1)
        lines.append(f"Panel {letter}. {outcome.label}")
        lines.append(_row(COEF_LABEL, [format_coef(e.ate, e.stars) for e in ests]))
        lines.append(_row("", [format_se(e.se) for e in ests]))
        lines.append("")
        lines.append(_row("Observations", [str(e.n_obs) for e in ests]))
        lines.append(_row("Baseline Mean Outcome", [format_baseline(e.baseline_mean) for e in ests]))
        lines.append(rule)
    lines.extend(FOOTNOTES)
    return "\n".join(lines) + "\n"
