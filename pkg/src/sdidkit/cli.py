"""Command-line entry point: ``sdidkit <subcommand> ...``.

Subcommands
-----------
estimate   ingest -> filter -> normalise -> estimate -> bootstrap, writes a bundle
bootstrap  bootstrap replicates only, written as CSV
report     render a bundle as a publication-style text table
plot       trend and weight charts (SVG + CSV) from a bundle
simulate   synthetic panel in the ingestion schema, plus roster and population files

Exit codes: 0 success, 1 estimation error, 2 input/data error,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dgp import DgpSpec, generate_panel
from .estimator import estimate, trend_series
from .exceptions import InputError, MissingPopulation, SdidError, exit_code
from .inference import attach_inference, bootstrap_se
from .ingest import (
    METRICS,
    MetricRecord,
    TreatmentRoster,
    apply_sample_filters,
    build_outcome_panel,
    load_metrics,
    load_population,
    load_roster,
    per_100k,
    write_filter_log,
    write_records,
    write_rejects,
    write_roster,
)
from .panel import block_matrix, to_block
from .plots import emit_trend_plot, emit_weight_plot
from .report import OutcomeResult, ResultsBundle, outcome_label, render_table
from .solver import SolverOptions
from .weights import Method

logger = logging.getLogger("sdidkit")

# arguments that define a run; --out and logging flags are excluded so a
# bundle re-run elsewhere reproduces byte-for-byte
MANIFEST_KEYS = (
    "data", "schema", "population", "raw", "roster", "metric", "language", "methods",
    "span", "tol", "max_iter", "lambda_ridge", "bootstrap_reps", "seed", "max_redraws",
)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _methods(text: str) -> list[Method]:
    out = []
    for tok in str(text).split(","):
        if tok.strip():
            m = Method.parse(tok)
            if m not in out:
                out.append(m)
    if not out:
        raise InputError("no methods requested")
    return out


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", action="append", help="metrics CSV (repeatable)")
    p.add_argument("--schema", action="append",
                   help="schema preset or JSON file, one per --data or one for all (default: long)")
    p.add_argument("--population", help="CSV of economy,population for per-100k rates")
    p.add_argument("--raw", action="store_true", help="skip per-100k normalisation")
    p.add_argument("--roster", help="treatment roster file")
    p.add_argument("--metric", action="append", choices=METRICS,
                   help="outcome metric (repeatable, default pushes)")
    p.add_argument("--language", action="append",
                   help="language for developers_by_language (repeatable)")
    p.add_argument("--methods", default="did,sc,sdid")
    p.add_argument("--span", help="FIRST,LAST quarter of the balance window (default: data range)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--lambda-ridge", type=float, default=0.0)
    p.add_argument("--bootstrap-reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-redraws", type=int, default=None)
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--from-manifest", help="re-run with the arguments stored in a bundle")


def _apply_manifest(args) -> None:
    if not args.from_manifest:
        return
    bundle = ResultsBundle.load(args.from_manifest)
    stored = bundle.manifest.get("args", {})
    for key in MANIFEST_KEYS:
        if key in stored:
            setattr(args, key, stored[key])


def _manifest_args(args) -> dict:
    return {key: getattr(args, key) for key in MANIFEST_KEYS}


def _outcomes(args) -> list[tuple[str, str | None]]:
    metrics = args.metric or ["pushes"]
    languages = args.language or []
    out = []
    for metric in metrics:
        if metric == "developers_by_language":
            if not languages:
                raise InputError("--metric developers_by_language needs --language")
            out.extend((metric, lang) for lang in languages)
        else:
            out.append((metric, None))
    return out


def _prepare(args, out_dir: Path | None):
    """Load, filter and normalise the input files; build one panel per outcome."""
    if not args.data:
        raise InputError("--data is required")
    if not args.roster:
        raise InputError("--roster is required")
    schemas = args.schema or ["long"]
    if len(schemas) == 1:
        schemas = schemas * len(args.data)
    if len(schemas) != len(args.data):
        raise InputError("give one --schema per --data file, or a single one for all")

    records: list[MetricRecord] = []
    rejects = []
    for path, schema in zip(args.data, schemas):
        recs, rej = load_metrics(path, schema)
        records.extend(recs)
        rejects.extend(rej)

    span = tuple(s.strip() for s in args.span.split(",")) if args.span else None
    if span is not None and len(span) != 2:
        raise InputError("--span expects FIRST,LAST")
    kept, log = apply_sample_filters(records, span)

    if not args.raw:
        if not args.population:
            raise MissingPopulation(["(no --population file given)"])
        if not Path(args.population).exists():
            raise MissingPopulation([f"(population file not found: {args.population})"])
        kept = per_100k(kept, load_population(args.population))

    roster = load_roster(args.roster)
    panels = []
    for metric, language in _outcomes(args):
        panel, plog = build_outcome_panel(kept, roster, metric, language)
        log = log + plog
        panels.append((metric, language, panel))

    if out_dir is not None:
        write_filter_log(out_dir / "filter_log.csv", log)
        write_rejects(out_dir / "rejects.csv", rejects)

    files = {str(p): _sha256(p) for p in args.data}
    if args.population and not args.raw:
        files[str(args.population)] = _sha256(args.population)
    files[str(args.roster)] = _sha256(args.roster)
    log_digest = hashlib.sha256(
        "\n".join(f"{e.economy},{e.rule},{e.detail}" for e in log).encode()
    ).hexdigest()
    manifest = {
        "version": __version__,
        "args": _manifest_args(args),
        "files": files,
        "filter_log_sha256": log_digest,
        "n_rejects": len(rejects),
    }
    return panels, manifest


def cmd_estimate(args) -> ResultsBundle:
    _apply_manifest(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    methods = _methods(args.methods)
    if args.bootstrap_reps == 1 or args.bootstrap_reps < 0:
        raise InputError("--bootstrap-reps must be 0 or at least 2")
    opts = SolverOptions(tol=args.tol, max_iter=args.max_iter, lambda_ridge=args.lambda_ridge)
    panels, manifest = _prepare(args, out_dir)
    manifest["command"] = "estimate"

    bundle = ResultsBundle(manifest=manifest)
    for metric, language, panel in panels:
        design = to_block(panel)
        Y = block_matrix(panel, design)
        result = OutcomeResult(
            label=outcome_label(metric, language),
            metric=metric,
            language=language,
            control_units=[panel.unit_ids[i] for i in design.row_order[: design.n0]],
            periods=list(panel.period_ids),
            t0=design.t0,
        )
        for method in methods:
            logger.info("%s: estimating %s", result.label, method.value)
            est = estimate(panel, method, opts)
            if args.bootstrap_reps:
                boot = bootstrap_se(panel, method, B=args.bootstrap_reps, seed=args.seed,
                                    opts=opts, max_redraws=args.max_redraws, n_jobs=args.n_jobs)
                est = attach_inference(est, boot)
            result.estimates[method.value] = est
            result.trends[method.value] = trend_series(Y, design, est.weights)
        bundle.outcomes.append(result)

    bundle.save(out_dir / "bundle.json")
    table = render_table(bundle, [m.value for m in methods])
    (out_dir / "table.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return bundle


def cmd_bootstrap(args) -> None:
    _apply_manifest(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.bootstrap_reps < 2:
        raise InputError("--bootstrap-reps must be at least 2")
    opts = SolverOptions(tol=args.tol, max_iter=args.max_iter, lambda_ridge=args.lambda_ridge)
    panels, _ = _prepare(args, out_dir)
    path = out_dir / "replicates.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("outcome", "method", "replicate", "ate"))
        for metric, language, panel in panels:
            label = outcome_label(metric, language)
            for method in _methods(args.methods):
                boot = bootstrap_se(panel, method, B=args.bootstrap_reps, seed=args.seed,
                                    opts=opts, max_redraws=args.max_redraws, n_jobs=args.n_jobs)
                for b, ate in enumerate(boot.estimates):
                    writer.writerow((label, method.value, b, repr(float(ate))))
                print(f"{label}\t{method.value}\tse={boot.se:.6g}\tB={boot.replicates}"
                      f"\tredraws={boot.redraws}")


def cmd_report(args) -> str:
    bundle = ResultsBundle.load(args.bundle)
    methods = [m.value for m in _methods(args.methods)] if args.methods else None
    if methods is None:
        present = []
        for o in bundle.outcomes:
            present.extend(m for m in o.estimates if m not in present)
        methods = [m for m in ("DID", "SC", "SDID") if m in present]
    table = render_table(bundle, methods)
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return table


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in text).strip("_").lower()


def cmd_plot(args) -> list[Path]:
    bundle = ResultsBundle.load(args.bundle)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for o in bundle.outcomes:
        for method, est in o.estimates.items():
            base = f"{_slug(o.label)}_{method.lower()}"
            series = o.trends[method]
            written += emit_trend_plot(
                series,
                {"periods": o.periods, "t0": o.t0, "title": f"Estimated {method} trends: {o.label}"},
                out_dir / f"{base}_trends.svg",
            )
            written += emit_weight_plot(
                est.weights, o.control_units, out_dir / f"{base}_weights.svg",
                title=f"Estimated {method} weights: {o.label}",
            )
    for p in written:
        print(p)
    return written


def cmd_simulate(args) -> None:
    spec = DgpSpec(
        n0=args.n0, n1=args.n1, t0=args.t0, t1=args.t1, effect=args.effect,
        n_factors=args.n_factors, factor_scale=args.factor_scale, noise_sd=args.noise_sd,
        unit_fe_sd=args.unit_fe_sd, time_fe_sd=args.time_fe_sd, seed=args.seed,
    )
    panel, true_ate = generate_panel(spec)
    Y = np.asarray(panel.outcomes) + args.level
    if Y.min() < 0:
        raise InputError("simulated values are negative; raise --level")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    language = args.language if args.metric == "developers_by_language" else None
    if args.metric == "developers_by_language" and not language:
        raise InputError("--metric developers_by_language needs --language")
    records = [
        MetricRecord(u, p, args.metric, float(Y[i, t]), language)
        for i, u in enumerate(panel.unit_ids)
        for t, p in enumerate(panel.period_ids)
    ]
    write_records(out_dir / "data.csv", records)
    with (out_dir / "population.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("economy", "population"))
        for u in panel.unit_ids:
            writer.writerow((u, 100000))
    write_roster(out_dir / "roster.txt",
                 TreatmentRoster(frozenset(panel.treated_units), str(panel.treatment_start)))
    print(f"wrote {len(records)} records to {out_dir / 'data.csv'} (true ATE {true_ate!r})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdidkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate DID/SC/SDID effects and write a bundle")
    _add_data_args(p)
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bootstrap", help="write bootstrap replicate ATEs")
    _add_data_args(p)
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("report", help="render a bundle as a text table")
    p.add_argument("--bundle", required=True)
    p.add_argument("--methods")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("plot", help="trend and weight charts from a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", default="figures")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("simulate", help="write a synthetic panel in the ingestion schema")
    for name, default in (("n0", 27), ("n1", 120), ("t0", 11), ("t1", 2)):
        p.add_argument(f"--{name}", type=int, default=default)
    p.add_argument("--effect", type=float, default=0.0)
    p.add_argument("--n-factors", type=int, default=0)
    p.add_argument("--factor-scale", type=float, default=1.0)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--unit-fe-sd", type=float, default=1.0)
    p.add_argument("--time-fe-sd", type=float, default=1.0)
    p.add_argument("--level", type=float, default=100.0,
                   help="constant added to every outcome so values stay non-negative")
    p.add_argument("--metric", choices=METRICS, default="pushes")
    p.add_argument("--language")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="simulated")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (SdidError, FileNotFoundError, ValueError) as exc:
        code = exit_code(exc) if isinstance(exc, (SdidError, FileNotFoundError)) else 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
