"""Command-line interface.

Subcommands: embed, fit, eval, grid, dtm, report, plot-data. Dataset paths
in grid spec files resolve against --data-dir (or $LAYERTOPIC_DATA_DIR).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import formats
from .corpus import Document, default_stoplist, load_corpus, load_stoplist, remove_stopwords, tokenize
from .embedding import EmbeddingConfig, embed_corpus
from .errors import LayerTopicError
from .harness import (
    GridSpec,
    build_report,
    emit_plot_data,
    read_records,
    render_report,
    run_grid,
)
from .metrics import MetricParams, npmi_coherence, topic_diversity
from .topic_model import FitParams, fit, save_model, save_time_slices, topics_over_time

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out-dir", type=Path, default=Path("."))
    parser.add_argument("--arm", choices=["with", "without"], default=None,
                        help="stop-word arm (default: 'with', or the spec file's arms for grids)")
    parser.add_argument("--data-dir", type=Path, default=None, help="dataset root (default $LAYERTOPIC_DATA_DIR)")


def _load_arm_docs(args) -> list[Document]:
    docs = load_corpus(args.corpus, args.text_column, args.time_column, args.delimiter)
    if (args.arm or "with") == "without":
        stop = load_stoplist(args.stoplist) if args.stoplist else default_stoplist()
        docs = [Document(d.doc_id, remove_stopwords(d.raw_text, stop), d.timestamp) for d in docs]
    return docs


def _fit_from_args(args):
    from .clusterer import ClusterParams
    from .reducer import ReducerParams

    reader = formats.DumpReader(args.dump)
    config = EmbeddingConfig.from_tag(args.config)
    matrix = embed_corpus(reader, config, workers=args.workers)
    docs = _load_arm_docs(args)
    params = FitParams(
        reducer=ReducerParams(
            mode=args.reducer_mode,
            n_neighbors=args.n_neighbors,
            n_components=args.n_components,
        ),
        cluster=ClusterParams(min_cluster_size=args.min_cluster_size),
        nr_topics=args.nr_topics,
        top_n=args.top_n,
        min_df=args.min_df,
        seed=args.seed,
    )
    return fit(matrix, docs, params), docs


def cmd_embed(args) -> int:
    reader = formats.DumpReader(args.dump)
    configs = (
        EmbeddingConfig.all_configs() if args.config == "all" else [EmbeddingConfig.from_tag(args.config)]
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for config in configs:
        matrix = embed_corpus(reader, config, workers=args.workers)
        out = args.out_dir / f"{Path(args.dump).stem}.{config.tag()}.emb1"
        formats.write_embeddings(out, matrix)
        print(f"wrote {out} ({matrix.num_docs} x {matrix.embed_dim})")
    return 0


def cmd_fit(args) -> int:
    model, _ = _fit_from_args(args)
    out = args.out or (args.out_dir / "model.jsonl")
    save_model(out, model)
    print(f"wrote {out} ({model.num_topics} topics, {model.labels.noise_count} noise docs)")
    return 0


def cmd_eval(args) -> int:
    model, docs = _fit_from_args(args)
    params = MetricParams(window=args.window, diversity_top_k=args.diversity_top_k)
    reference = [tokenize(d.raw_text) for d in docs]
    tc = npmi_coherence(model.top_terms(params.coherence_top_n), reference, params)
    td = topic_diversity(model.top_terms(params.diversity_top_k), params.diversity_top_k)
    result = {
        "tc": tc,
        "td": td,
        "topics_found": model.num_topics,
        "under_count": model.under_count,
    }
    if args.dtm_bins:
        sliced = topics_over_time(model, docs, num_bins=args.dtm_bins)
        out = args.out_dir / "time_slices.json"
        save_time_slices(out, sliced)
        result["time_slices"] = str(out)
    print(json.dumps(result, indent=2))
    return 0


def cmd_grid(args, mode: str | None = None) -> int:
    raw = _spec_to_dict(args.spec)
    if mode is not None:
        raw["mode"] = mode
    if args.arm is not None:
        raw["arms"] = [args.arm]
    spec = GridSpec.from_dict(raw)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    records_path = args.records or (args.out_dir / f"{spec.dataset.dataset_id}.{spec.mode}.records.jsonl")
    result = run_grid(
        spec,
        records_path,
        workers=args.workers,
        resume=not args.no_resume,
        data_root=args.data_dir,
    )
    print(
        f"grid complete: {result.new_records} new record(s), {result.skipped} cell(s) resumed, "
        f"{result.failures} failure(s) -> {result.records_path}"
    )
    return 1 if result.failures else 0


def _spec_to_dict(path: str | Path) -> dict:
    import yaml

    return yaml.safe_load(Path(path).read_text(encoding="utf-8"))


def cmd_report(args) -> int:
    records = read_records(args.records)
    cells = build_report(records, group_by=args.group_by)
    text = render_report(cells, style=args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_plot_data(args) -> int:
    if args.kind == "metric_curves":
        if not args.records:
            raise LayerTopicError("metric_curves needs --records")
        source = read_records(args.records)
    elif args.kind == "word_scores" and args.model:
        source = args.model  # saved model export
    elif args.kind == "topic_frequency" and args.slices:
        source = args.slices  # saved time-slices export
    elif not args.dump or not args.corpus:
        raise LayerTopicError(
            f"{args.kind} needs --model/--slices (saved exports) or --dump and --corpus to refit"
        )
    elif args.kind == "word_scores":
        model, _ = _fit_from_args(args)
        source = model
    else:
        model, docs = _fit_from_args(args)
        source = topics_over_time(model, docs, num_bins=args.dtm_bins or 9)
    out = args.out or (args.out_dir / f"{args.kind}.json")
    emit_plot_data(args.kind, source, out, top_n=args.top_bars)
    print(f"wrote {out}")
    return 0


def _add_fit_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--dump", required=required, help="HSD1 hidden-state dump")
    p.add_argument("--corpus", required=required)
    p.add_argument("--text-column", default="text")
    p.add_argument("--time-column", default=None)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--stoplist", default=None)
    p.add_argument("--config", default="last_layer+mean", help="aggregation+pooling tag")
    p.add_argument("--nr-topics", type=int, default=None)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--reducer-mode", choices=["umap", "pca"], default="umap")
    p.add_argument("--n-neighbors", type=int, default=15)
    p.add_argument("--n-components", type=int, default=5)
    p.add_argument("--min-cluster-size", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="layertopic", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="turn a dump + config into an EMB1 embedding file")
    p.add_argument("--dump", required=True)
    p.add_argument("--config", default="last_layer+mean", help="tag or 'all'")
    _add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("fit", help="fit a topic model and export it")
    _add_fit_args(p)
    p.add_argument("--out", type=Path, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="fit and score one configuration")
    _add_fit_args(p)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--diversity-top-k", type=int, default=25)
    p.add_argument("--dtm-bins", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="run a benchmark grid from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--records", type=Path, default=None)
    p.add_argument("--no-resume", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("dtm", help="run a dynamic-topic-modeling grid from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--records", type=Path, default=None)
    p.add_argument("--no-resume", action="store_true")
    _add_common(p)
    p.set_defaults(func=lambda a: cmd_grid(a, mode="dtm"))

    p = sub.add_parser("report", help="aggregate run records into a table")
    p.add_argument("--records", required=True)
    p.add_argument("--format", choices=["text", "csv", "markdown"], default="text")
    p.add_argument("--group-by", choices=["config", "config+nr_topics"], default="config")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("plot-data", help="emit figure-backing series files")
    p.add_argument("--kind", choices=["metric_curves", "word_scores", "topic_frequency"], required=True)
    p.add_argument("--records", default=None)
    p.add_argument("--model", default=None, help="saved model export (word_scores)")
    p.add_argument("--slices", default=None, help="saved time-slices export (topic_frequency)")
    p.add_argument("--top-bars", type=int, default=8)
    p.add_argument("--dtm-bins", type=int, default=9)
    p.add_argument("--out", type=Path, default=None)
    _add_fit_args(p, required=False)
    _add_common(p)
    p.set_defaults(func=cmd_plot_data)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LayerTopicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
