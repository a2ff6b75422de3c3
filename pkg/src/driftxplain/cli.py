"""Command line interface.

Subcommands: ``generate`` (synthetic datasets with ground truth),
``explain`` (run the pipeline over a feature stream), ``eval`` (the
quantitative experiments). A ``--config FILE`` of key=value lines is
expanded in place before the remaining arguments, so anything given
explicitly on the command line wins.

Relative output paths are resolved against $DRIFTXPLAIN_OUTDIR when set.
Exit codes: 0 on success, 1 on any library error, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    csv_header,
    read_labels_csv,
    read_stream_named,
    read_table_csv,
    write_checkerboard_truth_json,
    write_dataset_csv,
    write_pairs_csv,
    write_reports_json,
    write_truth_csv,
)
from .errors import DriftXplainError, IngestionError
from .evalharness import (
    FLAG_RULES,
    ExperimentGrid,
    eval_benchmarks,
    eval_checkerboard,
    eval_identifiability,
    eval_prototypes,
    write_results_csv,
    write_results_json,
)
from .pipeline import (
    CLASSIFIERS,
    OracleDetector,
    StreamConfig,
    WindowMeanDetector,
    explain_stream,
    summarize_report,
)
from .proto import METHODS
from .synth import (
    CheckerboardSpec,
    GmmSpec,
    draw_checkerboard_spec,
    sample_checkerboard,
    sample_gmm,
    stream_change_positions,
)
from .timeclf import ForestConfig, KnnConfig

_FLAG_OPTIONS = {"--standardize", "--truth"}


# ---------------------------------------------------------------------------
# Config file expansion


def _config_tokens(path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read config {path}: {exc}") from exc
    tokens: list[str] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise IngestionError(f"{path}: line {ln}: expected key=value")
        if key == "config":
            raise IngestionError(f"{path}: line {ln}: config files cannot nest")
        option = "--" + key.replace("_", "-")
        if option in _FLAG_OPTIONS:
            if value.lower() in ("true", "yes", "1"):
                tokens.append(option)
            elif value.lower() not in ("false", "no", "0"):
                raise IngestionError(f"{path}: line {ln}: {key} must be a boolean")
        else:
            tokens.extend([option, value])
    return tokens


def _inject_config(argv: list[str]) -> list[str]:
    argv = list(argv)
    while "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            raise IngestionError("--config needs a file path")
        tokens = _config_tokens(argv[i + 1])
        rest = argv[:i] + argv[i + 2 :]
        # subcommand words stay in front so the options bind to their parser
        lead = 0
        while lead < min(2, len(rest)) and not rest[lead].startswith("-"):
            lead += 1
        argv = rest[:lead] + tokens + rest[lead:]
    return argv


def _resolve_out(path_str) -> Path | None:
    if path_str is None:
        return None
    p = Path(path_str)
    outdir = os.environ.get("DRIFTXPLAIN_OUTDIR")
    if outdir and not p.is_absolute():
        p = Path(outdir) / p
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _split_csv_arg(text) -> list[str]:
    return [part.strip() for part in str(text).split(",") if part.strip()]


# ---------------------------------------------------------------------------
# generate


def _positions_line(data) -> str:
    positions = stream_change_positions(data)
    return "true change at position " + ", ".join(str(p) for p in positions)


def _cmd_generate_gmm(args) -> int:
    spec = GmmSpec(
        dim=args.dim,
        n_gauss_per_class=args.gauss,
        n_class=args.classes,
        sigma=args.sigma,
        box_halfwidth=args.box_halfwidth,
        seed=args.seed,
    )
    data, truth = sample_gmm(spec, args.n, rng_seed=np.random.SeedSequence(args.seed, spawn_key=(1,)))
    out = _resolve_out(args.out)
    write_dataset_csv(out, data)
    print(f"wrote {len(data)} samples ({data.n_bins} bins) to {out}")
    print(_positions_line(data))
    if args.truth:
        truth_path = out.with_suffix(".truth.csv")
        write_truth_csv(truth_path, truth)
        print(f"wrote ground truth to {truth_path}")
    return 0


def _cmd_generate_checkerboard(args) -> int:
    if args.active:
        groups = tuple(
            tuple(int(c) for c in group.split(",") if c.strip())
            for group in args.active.split(";")
        )
        spec = CheckerboardSpec(grid=args.grid, active=groups)
    else:
        spec = draw_checkerboard_spec(args.grid, rng_seed=np.random.SeedSequence(args.seed, spawn_key=(0,)))
    data, truth = sample_checkerboard(
        spec, args.n_per_bin, rng_seed=np.random.SeedSequence(args.seed, spawn_key=(1,))
    )
    out = _resolve_out(args.out)
    write_dataset_csv(out, data)
    print(f"wrote {len(data)} samples ({data.n_bins} bins) to {out}")
    print(_positions_line(data))
    if args.truth:
        truth_path = out.with_suffix(".truth.csv")
        write_truth_csv(truth_path, truth)
        cells_path = out.with_suffix(".cells.json")
        write_checkerboard_truth_json(cells_path, truth)
        print(f"wrote ground truth to {truth_path} and {cells_path}")
    return 0


# ---------------------------------------------------------------------------
# explain


def _cmd_explain(args) -> int:
    columns = _split_csv_arg(args.columns) if args.columns else None
    x, names = read_stream_named(args.input, columns=columns)
    if args.change_at:
        detector = OracleDetector(args.change_at)
    else:
        detector = WindowMeanDetector(window=args.window, threshold=args.threshold)
    config = StreamConfig(
        classifier=args.classifier,
        knn=KnnConfig(k=args.k),
        forest=ForestConfig(n_trees=args.trees),
        method=args.method,
        prototypes_per_bin=args.prototypes_per_bin,
        m_draw=args.m_draw,
        dissimilarity=args.dissimilarity,
        standardize=args.standardize,
        archive_cap=args.archive_cap,
        seed=args.seed,
        feature_names=tuple(names) if names else None,
        bandwidth=args.bandwidth,
        preference=args.preference,
        damping=args.damping,
    )
    reports = explain_stream(x, detector, config)
    if not reports:
        print("no changes detected")
    for report in reports:
        print(summarize_report(report))
    if args.out is not None:
        out = _resolve_out(args.out)
        write_reports_json(out, reports, name=args.name)
        print(f"wrote {len(reports)} report(s) to {out}")
    if args.pairs is not None:
        if reports:
            pairs_path = _resolve_out(args.pairs)
            write_pairs_csv(pairs_path, reports)
            print(f"wrote counterpart pairs to {pairs_path}")
        else:
            print("no reports; skipping the pairs table")
    return 0


# ---------------------------------------------------------------------------
# eval


def _write_rows(rows, out_arg) -> None:
    if out_arg is None:
        for r in rows:
            print(
                f"{r.experiment} {r.config} {r.variant} {r.metric}: "
                f"{r.mean:.4f} +- {r.std:.4f} ({r.runs} runs)"
            )
        return
    out = _resolve_out(out_arg)
    if out.suffix.lower() == ".json":
        write_results_json(out, rows)
    else:
        write_results_csv(out, rows)
    print(f"wrote {len(rows)} result row(s) to {out}")


def _grid_from_args(args, methods=None) -> ExperimentGrid:
    return ExperimentGrid(
        configs=tuple(_split_csv_arg(args.configs)),
        classifiers=tuple(_split_csv_arg(args.classifiers)),
        methods=tuple(methods) if methods else ("kmeans-resampled",),
        runs=args.runs,
        seed=args.seed,
        train_n=args.train_n,
        eval_n=args.eval_n,
    )


def _cmd_eval_identifiability(args) -> int:
    _write_rows(eval_identifiability(_grid_from_args(args)), args.out)
    return 0


def _cmd_eval_prototypes(args) -> int:
    grid = _grid_from_args(args, methods=_split_csv_arg(args.methods))
    _write_rows(eval_prototypes(grid), args.out)
    return 0


def _cmd_eval_checkerboard(args) -> int:
    result = eval_checkerboard(
        grid_size=args.grid,
        n_per_bin=args.n_per_bin,
        runs=args.runs,
        seed=args.seed,
        classifier=args.classifier,
        method=args.method,
        flag_rule=args.flag_rule,
    )
    print(
        f"checkerboard {result.grid}x{result.grid} ({result.flag_rule}): "
        f"{result.wins} wins, {result.ties} ties over {result.runs} runs, "
        f"sign test p = {result.p_value:.2e}"
    )
    _write_rows(result.rows(), args.out)
    return 0


def _cmd_eval_benchmarks(args) -> int:
    if args.features:
        cols = _split_csv_arg(args.features)
    else:
        header = csv_header(args.input)
        if header is None:
            raise IngestionError(f"{args.input}: benchmark input needs a header row")
        cols = [c for c in header if c not in (args.target, "t")]
        if not cols:
            raise IngestionError(f"{args.input}: no feature columns besides the target")
    x = read_table_csv(args.input, cols)
    if args.task == "regression":
        target = read_table_csv(args.input, [args.target])[:, 0]
    else:
        target = read_labels_csv(args.input, args.target)
    name = args.name if args.name else Path(args.input).stem
    rows = eval_benchmarks(
        x,
        target,
        task=args.task,
        name=name,
        runs=args.runs,
        seed=args.seed,
        classifiers=tuple(_split_csv_arg(args.classifiers)),
    )
    _write_rows(rows, args.out)
    return 0


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftxplain",
        description="Explain detected drift by contrasting characteristic samples "
        "with counterparts from other time segments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset with ground truth")
    gen_sub = gen.add_subparsers(dest="family", required=True)

    gmm = gen_sub.add_parser("gmm", help="Gaussian mixture stream with two bins")
    gmm.add_argument("--n", type=int, default=1000, help="total samples")
    gmm.add_argument("--dim", type=int, default=2)
    gmm.add_argument("--gauss", type=int, default=2, help="gaussians per class")
    gmm.add_argument("--classes", type=int, default=2, help="degrees of bin overlap")
    gmm.add_argument("--sigma", type=float, default=1.0)
    gmm.add_argument("--box-halfwidth", type=float, default=None)
    gmm.add_argument("--seed", type=int, default=0)
    gmm.add_argument("--out", required=True, help="dataset CSV path")
    gmm.add_argument("--truth", action="store_true", help="also write the .truth.csv sidecar")
    gmm.set_defaults(func=_cmd_generate_gmm)

    board = gen_sub.add_parser("checkerboard", help="uniform draws over active grid cells")
    board.add_argument("--grid", type=int, default=3)
    board.add_argument("--n-per-bin", type=int, default=150)
    board.add_argument(
        "--active",
        default=None,
        help="explicit active cells per bin, e.g. '0,4,8;0,2,6' (default: random)",
    )
    board.add_argument("--seed", type=int, default=0)
    board.add_argument("--out", required=True, help="dataset CSV path")
    board.add_argument("--truth", action="store_true", help="also write truth sidecars")
    board.set_defaults(func=_cmd_generate_checkerboard)

    explain = sub.add_parser("explain", help="explain the changes in a feature stream")
    explain.add_argument("--input", required=True, help="CSV or .jsonl stream of samples")
    explain.add_argument("--columns", default=None, help="comma list of feature columns")
    explain.add_argument(
        "--change-at",
        type=int,
        action="append",
        default=None,
        help="known 1-based change position (repeatable); disables the detector",
    )
    explain.add_argument("--window", type=int, default=50, help="detector window size")
    explain.add_argument("--threshold", type=float, default=3.0, help="detector z threshold")
    explain.add_argument("--classifier", choices=CLASSIFIERS, default="knn")
    explain.add_argument("--k", type=int, default=5, help="neighbours for the knn classifier")
    explain.add_argument("--trees", type=int, default=10, help="trees for the rf classifier")
    explain.add_argument("--method", choices=METHODS, default="kmeans-resampled")
    explain.add_argument("--prototypes-per-bin", type=int, default=5)
    explain.add_argument("--m-draw", type=int, default=None, help="resample draw count")
    explain.add_argument(
        "--dissimilarity", choices=("euclidean", "sqeuclidean", "mahalanobis"), default="euclidean"
    )
    explain.add_argument("--standardize", action="store_true")
    explain.add_argument("--archive-cap", type=int, default=None)
    explain.add_argument("--seed", type=int, default=0)
    explain.add_argument("--bandwidth", type=float, default=None, help="mean shift bandwidth")
    explain.add_argument("--preference", type=float, default=None, help="affinity preference")
    explain.add_argument("--damping", type=float, default=0.5, help="affinity damping")
    explain.add_argument("--name", default="", help="run name stored in the report")
    explain.add_argument("--out", default=None, help="report JSON path")
    explain.add_argument("--pairs", default=None, help="counterpart pairs CSV path")
    explain.set_defaults(func=_cmd_explain)

    ev = sub.add_parser("eval", help="run a quantitative experiment")
    ev_sub = ev.add_subparsers(dest="experiment", required=True)

    def add_grid_options(p, with_methods=False):
        p.add_argument("--configs", default="2/2/2", help="comma list of d/g/c mixture sizes")
        p.add_argument("--classifiers", default="knn", help="comma list: knn,rf")
        if with_methods:
            p.add_argument("--methods", default="kmeans-resampled", help="comma list of methods")
        p.add_argument("--runs", type=int, default=30)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--train-n", type=int, default=500)
        p.add_argument("--eval-n", type=int, default=1500)
        p.add_argument("--out", default=None, help="results path (.csv or .json)")

    ident = ev_sub.add_parser("identifiability", help="MSE against the analytic value")
    add_grid_options(ident)
    ident.set_defaults(func=_cmd_eval_identifiability)

    protos = ev_sub.add_parser("prototypes", help="ground truth at the characteristic samples")
    add_grid_options(protos, with_methods=True)
    protos.set_defaults(func=_cmd_eval_prototypes)

    board_ev = ev_sub.add_parser("checkerboard", help="localization beats a random baseline")
    board_ev.add_argument("--grid", type=int, default=3)
    board_ev.add_argument("--n-per-bin", type=int, default=150)
    board_ev.add_argument("--runs", type=int, default=30)
    board_ev.add_argument("--seed", type=int, default=0)
    board_ev.add_argument("--classifier", choices=CLASSIFIERS, default="knn")
    board_ev.add_argument("--method", choices=METHODS, default="kmeans-resampled")
    board_ev.add_argument("--flag-rule", choices=FLAG_RULES, default="chars")
    board_ev.add_argument("--out", default=None, help="results path (.csv or .json)")
    board_ev.set_defaults(func=_cmd_eval_checkerboard)

    bench = ev_sub.add_parser("benchmarks", help="relabelled real feature tables")
    bench.add_argument("--input", required=True, help="header CSV with features and target")
    bench.add_argument("--target", required=True, help="target column to replace by bins")
    bench.add_argument("--features", default=None, help="comma list (default: all but target)")
    bench.add_argument("--task", choices=("regression", "classification"), default="regression")
    bench.add_argument("--name", default="", help="label in the result rows")
    bench.add_argument("--runs", type=int, default=30)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--classifiers", default="knn", help="comma list: knn,rf")
    bench.add_argument("--out", default=None, help="results path (.csv or .json)")
    bench.set_defaults(func=_cmd_eval_benchmarks)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        argv = _inject_config(list(argv))
    except DriftXplainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if isinstance(code, int) else 0 if code is None else 2
    try:
        return args.func(args)
    except DriftXplainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
