"""Command-line front end: ``mlstream run | stats | synth``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
violation. ``MLSTREAM_OUTPUT_DIR`` overrides the default output directory.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

from . import stats
from .core import ContractError
from .data_io import ArffError, ArffStream, SyntheticStreamConfig, generate_synthetic, \
    synthetic_header, write_arff
from .evaluation import prequential_run, summary_dict, write_series_csv, write_summary_json
from .registry import MODEL_IDS, build_model

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
OUTPUT_ENV = "MLSTREAM_OUTPUT_DIR"

logger = logging.getLogger("mlstream")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def dataset_name(path) -> str:
    name = Path(path).name
    for suffix in (".gz", ".arff"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return name


def _output_dir(args) -> Path:
    out = Path(os.environ.get(OUTPUT_ENV) or args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_one(dataset: str, model_id: str, k: int, chunk: int, window: int, seed: int,
            record_time: bool = False):
    """One prequential run; returns ``(summary, window_series)``."""
    stream = ArffStream(dataset)
    header = stream.header
    model = build_model(model_id, header.feature_schema, header.label_count, k=k,
                        chunk_size=chunk, seed=seed)
    final, series = prequential_run(model, stream, window)
    config = {"k": k, "chunk_size": chunk, "window_size": window, "dataset_path": str(dataset)}
    summary = summary_dict(final, dataset_name(dataset), model_id, seed, config, len(series),
                           record_time=record_time)
    return summary, series


def _collect(out_dir: Path, summary: dict, series) -> None:
    stem = f"{summary['dataset']}_{summary['model']}_{summary['seed']}"
    write_series_csv(out_dir / f"{stem}.csv", series)
    write_summary_json(out_dir / f"{stem}.json", summary)
    f1 = summary["metrics"]["f1_ex"]
    print(f"{stem}: f1_ex={f1:.4f} over {summary['instances_evaluated']} evaluated instances")


def cmd_run(args) -> int:
    if args.k < 2:
        raise UsageError("--k must be at least 2")
    if args.chunk < 1:
        raise UsageError("--chunk must be positive")
    window = args.window if args.window is not None else args.chunk
    if not 1 <= window <= args.chunk:
        raise UsageError("--window must lie in 1..chunk")
    for model_id in args.model:
        if model_id not in MODEL_IDS:
            raise UsageError(f"unknown model {model_id!r}; choose from {', '.join(MODEL_IDS)}")
    for path in args.dataset:
        ArffStream(path)  # fail fast on unreadable headers
    out_dir = _output_dir(args)
    jobs = [(d, m, args.k, args.chunk, window, args.seed, args.record_time)
            for d in args.dataset for m in args.model]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = [pool.submit(run_one, *job) for job in jobs]
            for future in futures:
                _collect(out_dir, *future.result())
    else:
        for job in jobs:
            _collect(out_dir, *run_one(*job))
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        datasets, models, table = stats.load_summaries(args.summaries, args.metric)
        ranks = stats.average_ranks(table, args.direction)
        chi2_f, dof, p_value = stats.friedman_statistic(table, args.direction)
        cd = stats.nemenyi_cd(len(models), len(datasets), args.alpha)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    diagram = stats.cd_diagram_data(ranks, cd, models)
    print(f"{len(models)} models x {len(datasets)} datasets, metric {args.metric} ({args.direction})")
    print(f"Friedman chi2 = {chi2_f:.4f}, dof = {dof}, p = {p_value:.4g}"
          f" ({'reject' if p_value < args.alpha else 'fail to reject'} at alpha = {args.alpha})")
    print(stats.render_cd_text(diagram), end="")
    out_dir = _output_dir(args)
    payload = {
        "metric": args.metric, "direction": args.direction, "alpha": args.alpha,
        "datasets": datasets, "models": models, "scores": table.tolist(),
        "ranks": stats.rank_table(table, args.direction).tolist(),
        "average_ranks": dict(zip(models, ranks.tolist())),
        "friedman": {"chi2": chi2_f, "dof": dof, "p_value": p_value},
        "diagram": diagram.to_dict(),
    }
    with open(out_dir / f"cd_{args.metric}.json", "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        config = SyntheticStreamConfig(
            n_labels=args.labels, n_features=args.features, n_instances=args.instances,
            seed=args.seed, drift_point=args.drift_point, drift_shift=args.drift_shift,
            swap_labels=args.swap_labels, label_density=args.label_density,
            correlation=args.correlation, binary_features=args.binary_features)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    header = synthetic_header(config, name=dataset_name(output))
    comments = [f"{key}={value}" for key, value in asdict(config).items()]
    n = write_arff(output, header, generate_synthetic(config), comments)
    print(f"wrote {n} instances to {output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlstream", description="Multi-label stream ensembles and evaluation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="prequential evaluation of models on ARFF streams")
    run.add_argument("--dataset", nargs="+", required=True, help="MEKA ARFF file(s)")
    run.add_argument("--model", nargs="+", required=True, help=f"one or more of {', '.join(MODEL_IDS)}")
    run.add_argument("--k", type=int, default=10, help="ensemble size (default 10)")
    run.add_argument("--chunk", type=int, default=500, help="chunk size h (default 500)")
    run.add_argument("--window", type=int, default=None, help="evaluation window n (default h)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--workers", type=int, default=1, help="parallel (dataset, model) runs")
    run.add_argument("--output-dir", default="results")
    run.add_argument("--record-time", action="store_true",
                     help="include wall time in the JSON summary (breaks byte-identical reruns)")
    run.set_defaults(func=cmd_run)

    st = sub.add_parser("stats", help="Friedman/Nemenyi analysis of run summaries")
    st.add_argument("--summaries", required=True, help="glob of summary JSON files")
    st.add_argument("--metric", default="f1_ex")
    st.add_argument("--direction", choices=("maximize", "minimize"), default="maximize")
    st.add_argument("--alpha", type=float, choices=(0.05, 0.10), default=0.05)
    st.add_argument("--output-dir", default="results")
    st.set_defaults(func=cmd_stats)

    syn = sub.add_parser("synth", help="write a synthetic multi-label ARFF stream")
    syn.add_argument("--output", required=True)
    syn.add_argument("--labels", type=int, default=4)
    syn.add_argument("--features", type=int, default=8)
    syn.add_argument("--instances", type=int, default=1000)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--drift-point", type=int, default=None)
    syn.add_argument("--drift-shift", type=float, default=1.0)
    syn.add_argument("--swap-labels", action="store_true")
    syn.add_argument("--label-density", type=float, default=0.3)
    syn.add_argument("--correlation", type=float, default=0.0)
    syn.add_argument("--binary-features", action="store_true")
    syn.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArffError, DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ContractError, AssertionError, ArithmeticError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
