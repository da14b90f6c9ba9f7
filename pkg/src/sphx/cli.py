"""Command-line pipeline: ingest, index, search, export, simulate, eval, serve.

Exit codes: 0 ok, 1 module error, 2 usage error (bad flags, missing input
paths). Failures print a machine-readable JSON object to stderr. Output
artifacts embed the fully resolved configuration and seed, so identical
invocations produce byte-identical bodies.

The threshold h is never passed directly: subcommands take (m, r) plus an
optional query-threshold multiplier q >= 1, resolving h_index =
sqrt(2 r ln m) and h_query = sqrt(2 q r ln m).
"""

import argparse
import json
import sys

import numpy as np

from . import analysis, simulate
from .corpus import load_vectors, save_vectors, window_series
from .embedding import TransformKind, UnitVector, make_transform, map_vector
from .errors import SphxError
from .evaluate import pr_curve
from .index import (
    IndexConfig,
    NearestNeighbor,
    ThresholdLambda,
    TopK,
    build_index,
    codes_from_index,
    export_tokens,
    load_index,
    save_index,
    stats_json,
)
from .service import ServiceConfig, serve


class UsageError(SphxError):
    """Bad flag values or unreadable inputs; maps to exit code 2."""


def _floats(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _ints(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _load_store(path: str, format: str = "csv"):
    try:
        return load_vectors(path, format=format)
    except FileNotFoundError as exc:
        raise UsageError(f"cannot read vector store: {exc}") from exc


def _resolved_config(args, m: int, r: float, q: float) -> dict:
    return {
        "m": m,
        "r": r,
        "kind": args.kind,
        "seed": args.seed,
        "q_multiplier": q,
        "h_index": analysis.threshold_h(m, r),
        "h_query": analysis.threshold_h(m, q * r),
    }


def _cmd_ingest(args) -> int:
    if args.format == "series":
        rows = []
        try:
            with open(args.input) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    date, _, close = line.partition(",")
                    rows.append((date.strip(), float(close)))
        except FileNotFoundError as exc:
            raise UsageError(str(exc)) from exc
        corpus = window_series(rows, half_window=args.half_window)
    else:
        corpus = _load_store(args.input, args.format)
    save_vectors(corpus, args.output, format="csv")
    print(json.dumps({
        "config": {
            "input": args.input, "format": args.format,
            "half_window": args.half_window if args.format == "series" else None,
        },
        "records": len(corpus),
        "d": corpus.d if len(corpus) else 0,
        "output": args.output,
    }))
    return 0


def _cmd_index(args) -> int:
    corpus = _load_store(args.vectors)
    if args.q_multiplier < 1.0:
        raise UsageError("query threshold multiplier q must be >= 1")
    resolved = _resolved_config(args, args.m, args.r, args.q_multiplier)
    config = IndexConfig(
        m=args.m, r=args.r,
        h_index=resolved["h_index"], h_query=resolved["h_query"],
        kind=TransformKind(args.kind), d=corpus.d, seed=args.seed,
    )
    transform = make_transform(config.kind, corpus.d, args.m, args.seed)
    codes = [
        (doc_id, map_vector(transform, UnitVector(vec), config.h_index))
        for doc_id, vec in zip(corpus.ids, corpus.vectors)
    ]
    index = build_index(codes, config)
    save_index(index, args.output)
    print(json.dumps({"config": resolved, "docs": index.doc_count,
                      "total_postings": index.total_postings(),
                      "output": args.output}))
    return 0


def _open_index(path: str):
    try:
        return load_index(path)
    except FileNotFoundError as exc:
        raise UsageError(f"cannot read index: {exc}") from exc


def _cmd_search(args) -> int:
    index = _open_index(args.index)
    cfg = index.config
    if args.query_vector:
        vec = np.array(_floats(args.query_vector))
        query = UnitVector.normalized(vec)
        query_label = "inline"
    elif args.query_id:
        if not args.vectors:
            raise UsageError("--query-id needs --vectors for the stored corpus")
        corpus = _load_store(args.vectors)
        try:
            row = corpus.ids.index(args.query_id)
        except ValueError:
            raise UsageError(f"unknown query id {args.query_id!r}")
        query = UnitVector(corpus.vectors[row])
        query_label = args.query_id
    else:
        raise UsageError("need --query-vector or --query-id")

    if args.top_k is not None:
        cutoff = TopK(args.top_k)
    elif args.mode == "nearest_neighbor":
        if args.cut is None:
            raise UsageError("nearest_neighbor mode needs --lambda")
        cutoff = NearestNeighbor(args.cut, args.eta)
    elif args.cut is not None:
        cutoff = ThresholdLambda(args.cut)
    else:
        raise UsageError("need --top-k or --lambda")

    from .index import search as run_search
    code = map_vector(make_transform(cfg.kind, cfg.d, cfg.m, cfg.seed),
                      query, cfg.h_query)
    results = run_search(index, code, cutoff)
    artifact = {
        "config": {
            "m": cfg.m, "r": cfg.r, "h_index": cfg.h_index,
            "h_query": cfg.h_query, "kind": cfg.kind.value,
            "d": cfg.d, "seed": cfg.seed,
        },
        "query": query_label,
        "results": [
            {"doc_id": r.doc_id, "raw_count": r.raw_count,
             "score": r.score, "retrieved_by": r.retrieved_by}
            for r in results
        ],
    }
    text = json.dumps(artifact, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0


def _cmd_export_tokens(args) -> int:
    index = _open_index(args.index)
    lines = export_tokens(codes_from_index(index))
    with open(args.output, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")
    cfg = index.config
    print(json.dumps({
        "config": {"m": cfg.m, "r": cfg.r, "kind": cfg.kind.value,
                   "d": cfg.d, "seed": cfg.seed},
        "docs": len(lines),
        "output": args.output,
    }))
    return 0


def _cmd_stats(args) -> int:
    print(stats_json(_open_index(args.index)))
    return 0


def _cmd_simulate(args) -> int:
    mode = simulate.ExperimentMode(args.mode)
    if mode is simulate.ExperimentMode.DOMINATION:
        if args.lambda_hi is None:
            raise UsageError("domination mode needs --lambda and --lambda-hi")
        report = simulate.run_domination_experiment(
            args.cut, args.lambda_hi,
            h=analysis.threshold_h(args.m[0], args.r[0]),
            m=args.m[0], trials=args.trials[0], seed=args.seed,
            kind=args.kind, d=args.d,
        )
    else:
        spec = simulate.ExperimentSpec(
            mode=mode, kind=TransformKind(args.kind), d=args.d,
            m=args.m[0] if len(args.m) == 1 else tuple(args.m),
            r=args.r[0] if len(args.r) == 1 else tuple(args.r),
            lam=args.cut, eta=args.eta,
            trials=args.trials[0] if len(args.trials) == 1 else tuple(args.trials),
            seed=args.seed,
        )
        runner = {
            simulate.ExperimentMode.TYPE_I: simulate.run_error_experiment,
            simulate.ExperimentMode.TYPE_II: simulate.run_error_experiment,
            simulate.ExperimentMode.SCORE_CDF: simulate.run_cdf_experiment,
            simulate.ExperimentMode.PHASE_TRANSITION: simulate.run_phase_experiment,
            simulate.ExperimentMode.SPARSITY: simulate.run_sparsity_experiment,
        }[mode]
        report = runner(spec)
    if args.output:
        report.write_json(args.output)
    if args.csv:
        report.write_csv(args.csv)
    if not args.output and not args.csv:
        print(report.to_json())
    return 0 if report.all_passed() else 1


def _cmd_tabulate(args) -> int:
    rows = analysis.tabulate(args.lambdas, m=args.m[0], r=args.r[0], eta=args.eta)
    analysis.write_tabulation_csv(rows, args.output)
    print(json.dumps({
        "config": {"m": args.m[0], "r": args.r[0], "eta": args.eta,
                   "lambdas": args.lambdas},
        "rows": len(rows),
        "output": args.output,
    }))
    return 0


def _cmd_eval(args) -> int:
    corpus = _load_store(args.vectors)
    queries = _load_store(args.queries)
    resolved = _resolved_config(args, args.m[0], args.r[0], args.q_multiplier)
    config = IndexConfig(
        m=args.m[0], r=args.r[0],
        h_index=resolved["h_index"], h_query=resolved["h_query"],
        kind=TransformKind(args.kind), d=corpus.d, seed=args.seed,
    )
    transform = make_transform(config.kind, corpus.d, config.m, config.seed)
    codes = [
        (doc_id, map_vector(transform, UnitVector(vec), config.h_index))
        for doc_id, vec in zip(corpus.ids, corpus.vectors)
    ]
    index = build_index(codes, config)
    points = pr_curve(
        index, transform, corpus,
        [UnitVector(v) for v in queries.vectors],
        thresholds=args.thresholds,
    )
    artifact = {
        "config": resolved,
        "points": [
            {"threshold": p.threshold, "precision": p.precision,
             "recall": p.recall, "se_precision": p.se_precision,
             "se_recall": p.se_recall}
            for p in points
        ],
    }
    with open(args.output, "w") as fh:
        fh.write(json.dumps(artifact, indent=2))
    print(json.dumps({"points": len(points), "output": args.output}))
    return 0


def _cmd_serve(args) -> int:
    config = ServiceConfig(
        index_path=args.index, host=args.host, port=args.port,
        max_results=args.max_results,
        cors_origins=tuple(args.cors.split(",")) if args.cors else (),
        vectors_path=args.vectors,
    )
    try:
        serve(config)
    except FileNotFoundError as exc:
        raise UsageError(f"cannot read index: {exc}") from exc
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sphx",
        description="sparse-code similarity search pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="corpus file -> normalized vector store")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["csv", "jsonl", "series"], default="csv")
    p.add_argument("--half-window", type=int, default=5)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("index", help="vector store -> index file")
    p.add_argument("--vectors", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--kind", choices=[k.value for k in TransformKind],
                   default="structured")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q-multiplier", type=float, default=1.0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("search", help="query an index file")
    p.add_argument("--index", required=True)
    p.add_argument("--vectors", help="vector store, needed for --query-id")
    p.add_argument("--query-id")
    p.add_argument("--query-vector", help="comma-separated values")
    p.add_argument("--top-k", type=int)
    p.add_argument("--lambda", dest="cut", type=float)
    p.add_argument("--mode", choices=["threshold", "nearest_neighbor"],
                   default="threshold")
    p.add_argument("--eta", type=float, default=1.645)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("export-tokens", help="index -> token lines for text engines")
    p.add_argument("--index", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_export_tokens)

    p = sub.add_parser("stats", help="index cost report as JSON")
    p.add_argument("--index", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser(
        "simulate",
        help="Monte Carlo verification experiments "
             "(exit 1 if any statistical gate fails)",
    )
    p.add_argument("--mode", required=True,
                   choices=[m.value for m in simulate.ExperimentMode])
    p.add_argument("--kind", choices=[k.value for k in TransformKind],
                   default="gaussian")
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=_ints, default=[2**16])
    p.add_argument("--r", type=_floats, default=[0.45])
    p.add_argument("--lambda", dest="cut", type=float, default=0.9)
    p.add_argument("--lambda-hi", type=float, help="upper lambda (domination)")
    p.add_argument("--eta", type=float, default=1.645)
    p.add_argument("--trials", type=_ints, default=[20000])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="report JSON path")
    p.add_argument("--csv", help="report CSV path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("tabulate", help="CSV of mu/sigma/eps rows for plotting")
    p.add_argument("--lambdas", type=_floats, required=True)
    p.add_argument("--m", type=_ints, default=[2**16])
    p.add_argument("--r", type=_floats, default=[0.45])
    p.add_argument("--eta", type=float, default=1.645)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_tabulate)

    p = sub.add_parser("eval", help="precision/recall curve over a corpus")
    p.add_argument("--vectors", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--m", type=_ints, required=True)
    p.add_argument("--r", type=_floats, required=True)
    p.add_argument("--kind", choices=[k.value for k in TransformKind],
                   default="structured")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q-multiplier", type=float, default=1.0)
    p.add_argument("--thresholds", type=_floats, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="read-only HTTP search service")
    p.add_argument("--index", required=True)
    p.add_argument("--vectors")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--max-results", type=int, default=100)
    p.add_argument("--cors", help="comma-separated allowed origins, or *")
    p.set_defaults(func=_cmd_serve)

    return parser


def _error_json(exc: Exception) -> None:
    print(
        json.dumps({"error": type(exc).__name__, "message": str(exc)}),
        file=sys.stderr,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints usage; exit code 2 on error
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        _error_json(exc)
        return 2
    except FileNotFoundError as exc:
        _error_json(exc)
        return 2
    except SphxError as exc:
        _error_json(exc)
        return 1


def entrypoint() -> None:
    sys.exit(main())
