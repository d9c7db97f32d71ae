"""Command-line surface for reproducible evaluation experiments.

Subcommands: ``eval`` (per-request scores), ``compare`` (pairwise run
preferences with significance), ``ties`` (analytic or empirical tie rates),
``simulate-agreement`` (worst-case agreement over simulated pairs),
``orientation`` (precision/recall sensitivity sweeps), and ``degrade``
(label-removal stability). Every seeded subcommand is byte-identical across
repeated invocations. LEXIRANK_THREADS overrides the per-request worker
count; output order never depends on it.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import analytics, io as tables, stats
from .core import Imputation, RankedList, RelevantPositions, project_and_impute
from .errors import LexirankError, UndefinedResultError, ValidationError
from .metrics import MetricId, evaluate
from .prefs import make_method

logger = logging.getLogger(__name__)

_DEFAULT_EVAL_METRICS = ("AP", "NDCG", "recall@1000", "RPrecision", "TSE")
_DEFAULT_AGREEMENT_METRICS = ("TSE", "recall@1000", "RPrecision", "AP", "NDCG", "random")
_DEFAULT_ORIENTATION_METRICS = ("RR", "NDCG", "AP", "recall@1000", "RPrecision", "RBP", "TSE")
_DEFAULT_DEGRADE_METHODS = ("lexirecall", "metric:AP", "metric:recall@1000")


def _worker_count() -> int:
    raw = os.environ.get("LEXIRANK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("ignoring non-integer LEXIRANK_THREADS=%r", raw)
        return 1


def _map_requests(fn: Callable, items: Sequence):
    workers = _worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _load_runs(
    paths: Sequence[str], corpus_size: int, depth: int | None = None
) -> dict[str, dict[str, object]]:
    """Parse run files keyed by system tag; tag collisions fall back to stems.

    ``depth`` truncates every ranking to its top entries before projection,
    which is how retrieval-depth studies are driven on real collections.
    """
    runs: dict[str, dict[str, object]] = {}
    for path in paths:
        parsed = tables.parse_run_file(path, corpus_size)
        if not parsed:
            raise ValidationError(f"run file {path} is empty")
        if depth is not None:
            if depth < 1:
                raise ValidationError(f"depth must be positive, got {depth}")
            parsed = {
                request_id: RankedList(
                    request_id=ranked.request_id,
                    items=ranked.items[:depth],
                    corpus_size=ranked.corpus_size,
                    system_tag=ranked.system_tag,
                )
                for request_id, ranked in parsed.items()
            }
        tag = next(iter(parsed.values())).system_tag or Path(path).stem
        if tag in runs:
            fallback = Path(path).stem
            logger.warning("duplicate run tag %r; using file stem %r", tag, fallback)
            tag = fallback
        if tag in runs:
            raise ValidationError(f"cannot disambiguate run tag {tag!r}")
        runs[tag] = parsed
    return runs


def _evaluable_requests(judgments: dict) -> tuple[list[str], int]:
    evaluable = sorted(q for q, j in judgments.items() if j.evaluable)
    return evaluable, len(judgments) - len(evaluable)


def _positions_for(
    runs: dict, tag: str, request_id: str, judgment, mode: Imputation
) -> tuple[RelevantPositions, bool]:
    ranked = runs[tag].get(request_id)
    if ranked is None:
        D = next(iter(runs[tag].values())).corpus_size
        return RelevantPositions.worst_case(judgment.m, D), True
    return project_and_impute(ranked, judgment, mode), False


def _write_output(rows, columns, args) -> None:
    if args.out == "-":
        tables.write_table(rows, columns, sys.stdout, fmt=args.format)
    else:
        tables.write_table(rows, columns, args.out, fmt=args.format)


def _report(message: str) -> None:
    print(message, file=sys.stderr)


# --- subcommands -------------------------------------------------------------

def cmd_eval(args) -> int:
    judgments = tables.parse_qrels(args.qrels, args.binarize_threshold)
    runs = _load_runs(args.runs, args.corpus_size, args.depth)
    metrics = [MetricId.parse(text, args.corpus_size) for text in args.metric]
    mode = Imputation(args.imputation)
    evaluable, skipped = _evaluable_requests(judgments)
    orphans = {
        q for run in runs.values() for q in run if q not in judgments
    }
    tags = sorted(runs)

    def score_request(request_id: str):
        judgment = judgments[request_id]
        out = []
        missing = 0
        for tag in tags:
            rp, was_missing = _positions_for(runs, tag, request_id, judgment, mode)
            missing += int(was_missing)
            for metric in metrics:
                out.append(
                    {
                        "request_id": request_id,
                        "run": tag,
                        "metric": metric.label,
                        "value": evaluate(metric, rp),
                    }
                )
        return out, missing

    results = _map_requests(score_request, evaluable)
    rows = [row for chunk, _missing in results for row in chunk]
    missing_cells = sum(missing for _chunk, missing in results)
    _write_output(rows, ["request_id", "run", "metric", "value"], args)
    if skipped:
        _report(f"warning: skipped {skipped} requests with no relevant items")
    if orphans:
        _report(f"warning: {len(orphans)} ranked requests have no judgments")
    if missing_cells:
        _report(f"warning: {missing_cells} missing run entries scored as empty rankings")
    return 0


def cmd_compare(args) -> int:
    judgments = tables.parse_qrels(args.qrels, args.binarize_threshold)
    runs = _load_runs(args.runs, args.corpus_size, args.depth)
    if len(runs) < 2:
        raise ValidationError("compare needs at least two runs")
    mode = Imputation(args.imputation)
    method_name, method_fn = make_method(
        args.method, tolerance=args.tolerance, corpus_size=args.corpus_size
    )
    evaluable, skipped = _evaluable_requests(judgments)
    if not evaluable:
        raise ValidationError("no evaluable requests")
    tags = sorted(runs)

    def project_request(request_id: str):
        judgment = judgments[request_id]
        return {
            tag: _positions_for(runs, tag, request_id, judgment, mode)[0] for tag in tags
        }

    projected = dict(zip(evaluable, _map_requests(project_request, evaluable)))

    is_metric_method = args.method.lower() not in ("lexirecall", "tse")
    score_matrix = None
    if is_metric_method or args.hsd:
        metric_name = (
            args.method[len("metric:") :]
            if args.method.lower().startswith("metric:")
            else args.method
        )
        try:
            metric = MetricId.parse(metric_name, args.corpus_size)
        except ValidationError:
            if args.hsd:
                raise ValidationError(
                    "--hsd needs per-request scores; use a metric method such as metric:AP"
                )
            raise
        values = np.array(
            [[evaluate(metric, projected[q][tag]) for q in evaluable] for tag in tags]
        )
        score_matrix = stats.ScoreMatrix(tuple(tags), tuple(evaluable), values)

    pair_rows = []
    p_values = []
    hsd_grid = stats.tukey_hsd(score_matrix) if args.hsd else None
    for i, tag_a in enumerate(tags):
        for j in range(i + 1, len(tags)):
            tag_b = tags[j]
            wins_a = wins_b = ties = 0
            for q in evaluable:
                pref = method_fn(projected[q][tag_a], projected[q][tag_b])
                if pref.is_tie:
                    ties += 1
                elif pref.sign > 0:
                    wins_a += 1
                else:
                    wins_b += 1
            total = wins_a + wins_b + ties
            if is_metric_method:
                p = stats.paired_t_test(score_matrix.row(tag_a), score_matrix.row(tag_b))
            else:
                try:
                    p = stats.binomial_sign_test(wins_a, wins_b)
                except UndefinedResultError:
                    logger.warning(
                        "no decisive requests for (%s, %s); p set to 1", tag_a, tag_b
                    )
                    p = 1.0
            p_values.append(p)
            row = {
                "run_a": tag_a,
                "run_b": tag_b,
                "method": method_name,
                "wins_a": wins_a,
                "wins_b": wins_b,
                "ties": ties,
                "win_rate_a": (wins_a + ties / 2) / total,
                "p_value": p,
            }
            if hsd_grid is not None:
                row["p_hsd"] = float(hsd_grid[i, j])
            pair_rows.append(row)

    adjusted = stats.holm_bonferroni(p_values)
    for row, adj in zip(pair_rows, adjusted):
        row["p_holm"] = adj
        row["significant"] = adj < args.alpha
    columns = [
        "run_a",
        "run_b",
        "method",
        "wins_a",
        "wins_b",
        "ties",
        "win_rate_a",
        "p_value",
        "p_holm",
        "significant",
    ]
    if args.hsd:
        columns.append("p_hsd")
    _write_output(pair_rows, columns, args)
    if skipped:
        _report(f"warning: skipped {skipped} requests with no relevant items")
    return 0


def _m_values(args) -> list[int]:
    if args.m:
        return sorted(set(args.m))
    lo, hi = args.m_range
    return list(range(lo, hi + 1))


def cmd_ties(args) -> int:
    if args.mode == "analytic":
        rows = []
        for m in _m_values(args):
            for name in ("tse", "recall@k", "rprecision", "lexirecall"):
                prob = analytics.tie_probability(name, args.corpus_size, m, k=args.k)
                label = f"recall@{args.k}" if name == "recall@k" else name
                rows.append(
                    {
                        "D": args.corpus_size,
                        "m": m,
                        "metric": label,
                        "tie_probability": prob.float_view,
                    }
                )
        _write_output(rows, ["D", "m", "metric", "tie_probability"], args)
        return 0
    lo, hi = (min(_m_values(args)), max(_m_values(args)))
    config = analytics.SimulationConfig(
        corpus_size=args.corpus_size,
        m_range=(lo, hi),
        pair_count=args.pairs,
        retrieval_depth=args.depth,
        seed=args.seed,
    )
    methods = ["tse", f"metric:recall@{args.k}", "metric:rprecision", "lexirecall"]
    fractions = analytics.tie_fractions(
        analytics.simulate_pairs(config), methods, tolerance=args.tolerance
    )
    rows = [
        {
            "D": args.corpus_size,
            "m_lo": lo,
            "m_hi": hi,
            "retrieval_depth": args.depth if args.depth else args.corpus_size,
            "method": name,
            "tie_fraction": value,
        }
        for name, value in fractions.items()
    ]
    _write_output(
        rows, ["D", "m_lo", "m_hi", "retrieval_depth", "method", "tie_fraction"], args
    )
    return 0


def cmd_simulate_agreement(args) -> int:
    rows = []
    for D in args.corpus_size:
        config = analytics.SimulationConfig(
            corpus_size=D,
            m_range=tuple(args.m_range),
            pair_count=args.pairs,
            seed=args.seed,
        )
        pairs = list(analytics.simulate_pairs(config))
        for text in args.metric:
            if text.lower() == "random":
                metric: str | MetricId = "random"
                label = "random"
            else:
                metric = MetricId.parse(text, D)
                label = metric.label
            agreement, tied = analytics.agreement_with_worst_case(
                pairs,
                metric,
                tolerance=args.tolerance,
                rng=np.random.default_rng(analytics.stable_seed(args.seed, D, "coin")),
            )
            rows.append(
                {"D": D, "metric": label, "agreement": agreement, "tied_fraction": tied}
            )
    _write_output(rows, ["D", "metric", "agreement", "tied_fraction"], args)
    return 0


def cmd_orientation(args) -> int:
    rows = []
    lo, hi = args.m_range
    for m in range(lo, hi + 1):
        for text in args.metric:
            metric = MetricId.parse(text, args.corpus_size)
            precision, recall = analytics.orientation(metric, args.corpus_size, m)
            rows.append(
                {
                    "D": args.corpus_size,
                    "m": m,
                    "metric": metric.label,
                    "precision_orientation": precision,
                    "recall_orientation": recall,
                }
            )
    _write_output(
        rows, ["D", "m", "metric", "precision_orientation", "recall_orientation"], args
    )
    return 0


def cmd_degrade(args) -> int:
    judgments = tables.parse_qrels(args.qrels, args.binarize_threshold)
    runs = _load_runs(args.runs, args.corpus_size, args.depth)
    fractions = [float(f) for f in args.fractions.split(",") if f.strip() != ""]
    for fraction in fractions:
        if not 0.0 <= fraction < 1.0:
            raise ValidationError(f"fractions must lie in [0, 1), got {fraction}")
    rows = analytics.degradation_study(
        runs,
        judgments,
        fractions=fractions,
        methods=list(args.method),
        samples=args.samples,
        seed=args.seed,
        tolerance=args.tolerance,
        mode=Imputation(args.imputation),
    )
    _write_output(
        rows, ["fraction", "method", "tie_fraction", "agreement_with_full"], args
    )
    return 0


# --- argument wiring ----------------------------------------------------------

def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default="-", help="output path, or - for stdout")
    parser.add_argument("--format", choices=("tsv", "json"), default="tsv")


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--runs", action="append", required=True, help="run file (repeatable)")
    parser.add_argument("--qrels", required=True)
    parser.add_argument("--corpus-size", type=int, required=True)
    parser.add_argument("--binarize-threshold", type=int, default=1)
    parser.add_argument(
        "--depth", type=int, default=None, help="truncate runs to their top entries"
    )
    parser.add_argument(
        "--imputation",
        choices=[mode.value for mode in Imputation if mode is not Imputation.NONE],
        default=Imputation.PESSIMISTIC.value,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexirank",
        description="Recall-oriented ranking evaluation with worst-case guarantees.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="score runs per request and metric")
    _add_data_flags(p)
    p.add_argument("--metric", action="append", help="metric id (repeatable)")
    _add_output_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="pairwise run preferences with significance")
    _add_data_flags(p)
    p.add_argument("--method", default="lexirecall", help="lexirecall, tse, or metric:<id>")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.add_argument("--hsd", action="store_true", help="add Tukey HSD p-values (metric methods)")
    _add_output_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ties", help="analytic or empirical tie rates")
    p.add_argument("--mode", choices=("analytic", "empirical"), default="analytic")
    p.add_argument("--corpus-size", type=int, required=True)
    p.add_argument("--m", type=int, action="append", help="relevant-set size (repeatable)")
    p.add_argument("--m-range", type=int, nargs=2, default=(10, 10), metavar=("LO", "HI"))
    p.add_argument("--k", type=int, default=1000, help="recall cutoff")
    p.add_argument("--depth", type=int, default=None, help="simulated retrieval truncation")
    p.add_argument("--pairs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-12)
    _add_output_flags(p)
    p.set_defaults(func=cmd_ties)

    p = sub.add_parser("simulate-agreement", help="agreement with the worst-case order")
    p.add_argument("--corpus-size", type=int, action="append", required=True)
    p.add_argument("--m-range", type=int, nargs=2, default=(5, 50), metavar=("LO", "HI"))
    p.add_argument("--pairs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", action="append", help="metric id or random (repeatable)")
    p.add_argument("--tolerance", type=float, default=1e-12)
    _add_output_flags(p)
    p.set_defaults(func=cmd_simulate_agreement)

    p = sub.add_parser("orientation", help="precision/recall orientation sweep")
    p.add_argument("--corpus-size", type=int, required=True)
    p.add_argument("--m-range", type=int, nargs=2, default=(1, 15), metavar=("LO", "HI"))
    p.add_argument("--metric", action="append", help="metric id (repeatable)")
    _add_output_flags(p)
    p.set_defaults(func=cmd_orientation)

    p = sub.add_parser("degrade", help="label-degradation stability study")
    _add_data_flags(p)
    p.add_argument("--fractions", default="0,0.25,0.5,0.75", help="comma-separated fractions")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", action="append", help="comparison method (repeatable)")
    p.add_argument("--tolerance", type=float, default=1e-12)
    _add_output_flags(p)
    p.set_defaults(func=cmd_degrade)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "eval" and not args.metric:
        args.metric = list(_DEFAULT_EVAL_METRICS)
    if args.command == "simulate-agreement" and not args.metric:
        args.metric = list(_DEFAULT_AGREEMENT_METRICS)
    if args.command == "orientation" and not args.metric:
        args.metric = list(_DEFAULT_ORIENTATION_METRICS)
    if args.command == "degrade" and not args.method:
        args.method = list(_DEFAULT_DEGRADE_METHODS)
    try:
        return args.func(args)
    except (LexirankError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
