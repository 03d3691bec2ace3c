"""
Command-line driver: graph comparison, corpus checks, the triangle network,
training on synthetic data and matrix-product benchmarks.

Exit codes: 0 success or Indistinguishable, 1 Distinguished or a failed corpus
check, 2 usage or input errors, 3 numeric failures.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from src.bench import BENCH_OPS, loglog_slope, run_benchmark
from src.common import Settings, configure_logging
from src.corpus import CORPUS_MAX_N, check_properties, exhaustive_pairs, parse_algorithms, random_pairs, run_corpus, srg_pair
from src.graphio import GraphFormatError, load_graph
from src.graphs import complete, cycle, disjoint_union, empty, rook_4x4, shrikhande, star, triangle_trace
from src.refinement import compare_graphs
from src.tensornet import BLOCK_MODES, POOLINGS, NumericError, handcrafted_triangle_model, model_forward, save_model
from src.training import TrainConfig, make_cycle_union_dataset, make_triangle_count_dataset, train, training_model

logger = logging.getLogger(__name__)

EXIT_INDISTINGUISHABLE = 0
EXIT_DISTINGUISHED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

GENERATORS = {
    "cycle": lambda m: cycle(m),
    "two-cycles": lambda m: disjoint_union(cycle(m), cycle(m)),
    "complete": lambda m: complete(m),
    "star": lambda m: star(m),
    "empty": lambda m: empty(m),
    "rook": lambda _: rook_4x4(),
    "shrikhande": lambda _: shrikhande(),
}


def named_graph(text: str):
    """Builds a graph from "gen:<name>[:<size>]", e.g. "gen:cycle:6" or "gen:rook"."""
    parts = text.split(":")
    if len(parts) not in (2, 3) or parts[1] not in GENERATORS:
        raise ValueError(f"unknown generator {text!r}; expected gen:<{'|'.join(GENERATORS)}>[:<size>]")
    try:
        size = int(parts[2]) if len(parts) == 3 else 0
    except ValueError as err:
        raise ValueError(f"generator size must be an integer in {text!r}") from err
    return GENERATORS[parts[1]](size)


def read_graph(source: str, fmt: str | None):
    return named_graph(source) if source.startswith("gen:") else load_graph(source, fmt)


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from err


def _str_list(text: str) -> list:
    return [v.strip() for v in text.split(",") if v.strip()]


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc) + "\n")


def _emit_summary(doc: dict) -> None:
    """Summary line on stderr for commands whose product (CSV) goes to stdout."""
    sys.stderr.write(json.dumps(doc) + "\n")


def _config(args, settings: Settings) -> dict:
    flags = {key: value for key, value in vars(args).items() if key not in ("func", "threads", "log_level")}
    return {**settings.to_dict(), **flags}


def cmd_compare(args, settings: Settings) -> int:
    G, H = read_graph(args.graph_a, args.format), read_graph(args.graph_b, args.format)
    verdict = compare_graphs(G, H, args.k, args.variant, threads=settings.threads)
    _emit({"config": _config(args, settings), **verdict.to_dict()})
    return EXIT_DISTINGUISHED if verdict.distinguished else EXIT_INDISTINGUISHABLE


def cmd_corpus(args, settings: Settings) -> int:
    if not 1 <= args.n_max <= CORPUS_MAX_N:
        raise ValueError(f"--n-max must lie in [1, {CORPUS_MAX_N}], got {args.n_max}")
    if args.pairs < 0:
        raise ValueError("--pairs must be >= 0")
    algorithms = parse_algorithms(args.k_list, args.variant_list)
    pairs = list(exhaustive_pairs(args.n_max, 2)) if args.exhaustive else []
    pairs += random_pairs(args.pairs, args.n_max, args.seed)
    if args.include_srg:
        pairs.append(srg_pair())
    df = run_corpus(pairs, algorithms, threads=settings.threads)

    if args.out:
        df.to_csv(args.out, index=False)
        Path(str(args.out) + ".config.json").write_text(json.dumps(_config(args, settings), indent=2), encoding="utf-8")
        _emit({"config": _config(args, settings), "pairs": len(pairs), "rows": len(df), "out": str(args.out)})
    else:
        sys.stdout.write(df.to_csv(index=False))
        _emit_summary({"config": _config(args, settings), "pairs": len(pairs), "rows": len(df)})

    if args.check:
        violations = check_properties(df)
        for row in violations.itertuples(index=False):
            logger.error("pair %d violates %s (%s vs %s)", row.pair, row.relation, row.left_distinguished, row.right_distinguished)
        if len(violations):
            return 1
    return 0


def cmd_triangles(args, settings: Settings) -> int:
    spec, params = handcrafted_triangle_model()
    doc = {"config": _config(args, settings)}
    for key, source in (("a", args.graph_a), ("b", args.graph_b)):
        G = read_graph(source, args.format).uncolored()
        trace = triangle_trace(G)
        output = float(model_forward(G, spec, params)[0])
        if output != trace:
            raise NumericError(f"model output {output} differs from tr(A^3) = {trace} for graph {key}")
        doc[key] = trace
        doc[f"model_output_{key}"] = output
    _emit(doc)
    return 0


def cmd_train(args, settings: Settings) -> int:
    mode = "mlp" if args.baseline == "mlp-only" else args.mode
    if args.dataset == "cycle-union":
        dataset = make_cycle_union_dataset(args.m_list, args.seed)
        model = training_model(2, 2, args.blocks, args.width, mode, args.suffix, args.pooling)
    else:
        dataset = make_triangle_count_dataset(args.n, args.count, args.seed)
        model = training_model(2, 1, args.blocks, args.width, mode, args.suffix, args.pooling)
    config = TrainConfig(
        learning_rate=args.lr,
        decay=args.decay,
        decay_every=args.decay_every,
        epochs=args.epochs,
        seed=args.seed,
        batch_size=args.batch_size,
        momentum=args.momentum,
    )
    logger.info("training %d parameters on %s", model.parameter_count, dataset.family)
    params, history = train(model, dataset, config)

    final = history.iloc[-1]
    doc = {
        "config": _config(args, settings),
        "dataset": dataset.family,
        "parameters": model.parameter_count,
        "epochs": int(final["epoch"]),
        "final_loss": float(final["loss"]),
        "final_accuracy": float(final["accuracy"]),
    }
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        history.to_csv(str(prefix) + ".history.csv", index=False)
        save_model(prefix, model, params)
        Path(str(prefix) + ".config.json").write_text(json.dumps(doc["config"], indent=2), encoding="utf-8")
        doc["out"] = str(prefix)
    _emit(doc)
    return 0


def cmd_bench(args, settings: Settings) -> int:
    df = run_benchmark(args.op, args.sizes, args.reps, args.channels, args.seed)
    slope = loglog_slope(df)
    if args.out:
        df.to_csv(args.out, index=False)
        Path(str(args.out) + ".config.json").write_text(json.dumps(_config(args, settings), indent=2), encoding="utf-8")
        _emit({"config": _config(args, settings), "slope": slope, "rows": len(df), "out": str(args.out)})
    else:
        sys.stdout.write(df.to_csv(index=False))
        _emit_summary({"config": _config(args, settings), "slope": slope, "rows": len(df)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wltool", description=__doc__.strip().splitlines()[0])
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads for graph refinement in compare and corpus (default: WLTOOL_THREADS or 1). "
        "numpy's BLAS threads follow the environment.",
    )
    parser.add_argument("--log-level", default=None, help="Logging level (default: WLTOOL_LOG_LEVEL or WARNING).")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_pair(p):
        p.add_argument("graph_a", help='Graph file (graph6 or JSON) or a generator like "gen:cycle:6".')
        p.add_argument("graph_b", help="Second graph, same forms.")
        p.add_argument("--format", choices=("graph6", "json"), default=None, help="Input format (default: from suffix).")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("compare", help="Compare two graphs with a refinement algorithm.")
    graph_pair(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--variant", choices=("wl", "fwl", "cr1"), default="fwl")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("corpus", help="Verdict table over a corpus of non-isomorphic pairs.")
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pairs", type=int, default=100, help="Seeded random pairs at n <= n-max.")
    p.add_argument("--exhaustive", action="store_true", help="Add every pair of non-isomorphic graphs with n <= n-max (n-max <= 7).")
    p.add_argument("--include-srg", action="store_true", help="Add the 4x4 rook graph vs. the Shrikhande graph.")
    p.add_argument("--k-list", type=_int_list, default=[1, 2, 3])
    p.add_argument("--variant-list", type=_str_list, default=["cr1", "wl", "fwl"])
    p.add_argument("--out", default=None, help="CSV output path (default: CSV on stdout).")
    p.add_argument("--check", action="store_true", help="Exit 1 if a known relation between algorithms fails.")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("triangles", help="Run the hand-set triangle network.")
    graph_pair(p)
    p.set_defaults(func=cmd_triangles)

    p = sub.add_parser("train", help="Train a matrix-product network on synthetic graphs.")
    p.add_argument("--dataset", choices=("cycle-union", "triangle-count"), default="cycle-union")
    p.add_argument("--m-list", type=_int_list, default=[3, 4, 5])
    p.add_argument("--n", type=int, default=8, help="Vertices per graph for triangle-count.")
    p.add_argument("--count", type=int, default=32, help="Graphs for triangle-count.")
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--decay", type=float, default=0.95)
    p.add_argument("--decay-every", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--mode", choices=BLOCK_MODES, default="mp", help="Block type: matrix product, plus linear basis, linear basis only, or feature-wise MLP only.")
    p.add_argument("--baseline", choices=("none", "mlp-only"), default="none", help="mlp-only is shorthand for --mode mlp.")
    p.add_argument("--pooling", choices=POOLINGS, default="mean")
    p.add_argument("--suffix", choices=("i", "ii"), default="i")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="Output prefix for history CSV, model spec and parameters.")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="Time matrix products over growing n.")
    p.add_argument("--op", choices=BENCH_OPS, default="feature-matmul")
    p.add_argument("--sizes", type=_int_list, default=[64, 128, 256, 512])
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV output path.")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = Settings.from_env(threads=args.threads, log_level=args.log_level)
        configure_logging(settings.log_level)
        return args.func(args, settings)
    except NumericError as err:
        logger.error("%s", err)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GraphFormatError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
