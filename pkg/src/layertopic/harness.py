"""Experiment engine: single runs, benchmark grids, ablation arms, DTM.

Results persist as append-only JSONL, one record per line, each carrying a
hash of its parameter snapshot so interrupted grids can resume without
duplicating or silently mixing incompatible runs. Seeds derive purely from
(base_seed, dataset, arm, config, nr_topics, run_idx), so any cell can be
reproduced in isolation.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import formats
from .clusterer import ClusterParams
from .corpus import Document, StopList, default_stoplist, load_corpus, remove_stopwords, tokenize
from .embedding import EmbeddingConfig, embed_corpus
from .errors import ConfigurationError, DumpIOError, InvalidInputError, ModelError, ReportError
from .metrics import MetricParams, npmi_coherence, topic_diversity
from .reducer import ReducerParams
from .topic_model import FitParams, TimeSlicedTopics, TopicModel, fit, top_words, topics_over_time

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "LAYERTOPIC_DATA_DIR"
ARMS = ("with", "without")


def data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "."))


@dataclass(frozen=True)
class DatasetSpec:
    dataset_id: str
    corpus_path: str
    text_column: str
    time_column: str | None = None
    delimiter: str = ","
    #: HSD1 dump per stop-word arm; the "without" dump must come from the
    #: stop-word-removed text, since cleaning changes the embeddings.
    dumps: dict = field(default_factory=dict)
    stoplist_path: str | None = None

    def dump_path(self, arm: str, root: Path | None = None) -> Path:
        if arm not in ARMS:
            raise ConfigurationError(f"unknown stop-word arm {arm!r}")
        if arm not in self.dumps:
            raise DumpIOError(f"dataset {self.dataset_id}: no dump registered for arm {arm!r}")
        path = Path(self.dumps[arm])
        if not path.is_absolute():
            path = (root or data_dir()) / path
        return path


@dataclass(frozen=True)
class GridSpec:
    dataset: DatasetSpec
    configs: tuple[EmbeddingConfig, ...] = tuple(EmbeddingConfig.all_configs())
    nr_topics_list: tuple[int, ...] = (10, 20, 30, 40, 50)
    runs_per_cell: int = 3
    base_seed: int = 0
    arms: tuple[str, ...] = ("with",)
    mode: str = "static"
    dtm_bins: int = 9
    reducer: ReducerParams = ReducerParams()
    cluster: ClusterParams = ClusterParams()
    metrics: MetricParams = MetricParams()
    top_n: int = 10
    min_df: int = 1

    def __post_init__(self) -> None:
        if not self.configs or not self.nr_topics_list or not self.arms:
            raise ConfigurationError("configs, nr_topics_list and arms must be non-empty")
        if self.runs_per_cell < 1:
            raise ConfigurationError("runs_per_cell must be >= 1")
        if self.mode not in ("static", "dtm"):
            raise ConfigurationError(f"unknown grid mode {self.mode!r}")

    def cell_count(self) -> int:
        return len(self.arms) * len(self.configs) * len(self.nr_topics_list) * self.runs_per_cell

    @classmethod
    def from_file(cls, path: str | Path) -> "GridSpec":
        """Build a spec from a key-value config file (YAML or JSON)."""
        text = Path(path).read_text(encoding="utf-8")
        try:
            import yaml

            raw = yaml.safe_load(text)
        except ImportError:  # pragma: no cover - yaml ships with the env
            raw = json.loads(text)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "GridSpec":
        ds = raw["dataset"]
        dataset = DatasetSpec(
            dataset_id=ds["dataset_id"],
            corpus_path=ds["corpus_path"],
            text_column=ds["text_column"],
            time_column=ds.get("time_column"),
            delimiter=ds.get("delimiter", ","),
            dumps=dict(ds.get("dumps", {})),
            stoplist_path=ds.get("stoplist_path"),
        )
        configs = raw.get("configs", "all")
        if configs == "all":
            config_list = tuple(EmbeddingConfig.all_configs())
        else:
            config_list = tuple(EmbeddingConfig.from_tag(tag) for tag in configs)
        kwargs = {}
        for key in ("nr_topics_list", "arms"):
            if key in raw:
                kwargs[key] = tuple(raw[key])
        for key in ("runs_per_cell", "base_seed", "mode", "dtm_bins", "top_n", "min_df"):
            if key in raw:
                kwargs[key] = raw[key]
        if "reducer" in raw:
            kwargs["reducer"] = ReducerParams(**raw["reducer"])
        if "cluster" in raw:
            kwargs["cluster"] = ClusterParams(**raw["cluster"])
        if "metrics" in raw:
            kwargs["metrics"] = MetricParams(**raw["metrics"])
        return cls(dataset=dataset, configs=config_list, **kwargs)


def derive_seed(
    base_seed: int, dataset: str, arm: str, config: EmbeddingConfig, nr_topics: int, run_idx: int
) -> int:
    """Pure, collision-resistant seed for one grid cell run."""
    key = f"{base_seed}|{dataset}|{arm}|{config.tag()}|{nr_topics}|{run_idx}"
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF


def snapshot_hash(snapshot: dict) -> str:
    return hashlib.sha256(json.dumps(snapshot, sort_keys=True).encode("utf-8")).hexdigest()[:16]


@dataclass
class RunRecord:
    dataset: str
    arm: str
    aggregation: str
    pooling: str
    nr_topics: int
    run_idx: int
    seed: int
    tc: float | None
    td: float | None
    topic_count_found: int
    under_count: bool
    runtime_seconds: float
    snapshot: dict
    snapshot_hash: str
    error: str | None = None
    # dynamic-topic-modeling fields (None for static runs)
    bin_index: int | None = None
    bin_start: float | None = None
    bin_end: float | None = None
    bin_size: int | None = None
    bin_noise: int | None = None
    bin_topic_freq_sum: int | None = None
    conservation_ok: bool | None = None

    def cell_key(self) -> tuple:
        key = (self.dataset, self.arm, self.aggregation, self.pooling, self.nr_topics, self.run_idx)
        if self.bin_index is not None:
            key = key + (self.bin_index,)
        return key

    def to_json(self) -> str:
        payload = {k: v for k, v in self.__dict__.items()}
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        return cls(**json.loads(line))


def append_records(path: str | Path, records: Iterable[RunRecord]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")
            fh.flush()


def read_records(path: str | Path) -> list[RunRecord]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(RunRecord.from_json(line))
    return out


class Runner:
    """Caches a dataset's texts, tokens, and per-(arm, config) embeddings so a
    grid does file IO and embedding work once per process."""

    def __init__(self, spec: GridSpec, data_root: Path | None = None):
        self.spec = spec
        self.data_root = data_root
        self._docs: dict[str, list[Document]] = {}
        self._tokens: dict[str, list[list[str]]] = {}
        self._embeddings: dict[tuple[str, str], np.ndarray] = {}
        self._stoplist: StopList | None = None

    def stoplist(self) -> StopList:
        if self._stoplist is None:
            if self.spec.dataset.stoplist_path:
                from .corpus import load_stoplist

                self._stoplist = load_stoplist(self.spec.dataset.stoplist_path)
            else:
                self._stoplist = default_stoplist()
        return self._stoplist

    def documents(self, arm: str) -> list[Document]:
        if arm not in self._docs:
            ds = self.spec.dataset
            corpus_path = Path(ds.corpus_path)
            if not corpus_path.is_absolute():
                corpus_path = (self.data_root or data_dir()) / corpus_path
            docs = load_corpus(corpus_path, ds.text_column, ds.time_column, ds.delimiter)
            if arm == "without":
                stop = self.stoplist()
                docs = [
                    Document(d.doc_id, remove_stopwords(d.raw_text, stop), d.timestamp)
                    for d in docs
                ]
            self._docs[arm] = docs
        return self._docs[arm]

    def reference_tokens(self, arm: str) -> list[list[str]]:
        if arm not in self._tokens:
            self._tokens[arm] = [tokenize(d.raw_text) for d in self.documents(arm)]
        return self._tokens[arm]

    def embeddings(self, arm: str, config: EmbeddingConfig) -> np.ndarray:
        key = (arm, config.tag())
        if key not in self._embeddings:
            path = self.spec.dataset.dump_path(arm, self.data_root)
            if not path.exists():
                raise DumpIOError(f"expected dump for arm {arm!r} at {path}")
            reader = formats.DumpReader(path)
            self._embeddings[key] = embed_corpus(reader, config).data
        return self._embeddings[key]

    def _fit_params(self, nr_topics: int, seed: int) -> FitParams:
        return FitParams(
            reducer=self.spec.reducer,
            cluster=self.spec.cluster,
            nr_topics=nr_topics,
            top_n=self.spec.top_n,
            min_df=self.spec.min_df,
            seed=seed,
        )

    def _snapshot(self, arm: str, config: EmbeddingConfig, nr_topics: int) -> dict:
        """Run-invariant parameter snapshot; the derived per-run seed stays out
        so all runs of a cell hash identically."""
        snap = self._fit_params(nr_topics, 0).snapshot()
        snap.pop("seed", None)
        snap.update(
            {
                "dataset": self.spec.dataset.dataset_id,
                "arm": arm,
                "config": config.tag(),
                "mode": self.spec.mode,
                "base_seed": self.spec.base_seed,
                "metrics": {
                    "coherence_top_n": self.spec.metrics.coherence_top_n,
                    "diversity_top_k": self.spec.metrics.diversity_top_k,
                    "window": self.spec.metrics.window,
                    "zero_pair_mode": self.spec.metrics.zero_pair_mode,
                },
            }
        )
        if self.spec.mode == "dtm":
            snap["dtm_bins"] = self.spec.dtm_bins
        return snap

    def run_single(
        self, config: EmbeddingConfig, nr_topics: int, run_idx: int, arm: str = "with"
    ) -> RunRecord:
        """One static evaluation: embed -> fit -> score."""
        seed = derive_seed(
            self.spec.base_seed, self.spec.dataset.dataset_id, arm, config, nr_topics, run_idx
        )
        snap = self._snapshot(arm, config, nr_topics)
        started = time.perf_counter()
        record = RunRecord(
            dataset=self.spec.dataset.dataset_id,
            arm=arm,
            aggregation=config.aggregation.value,
            pooling=config.pooling.value,
            nr_topics=nr_topics,
            run_idx=run_idx,
            seed=seed,
            tc=None,
            td=None,
            topic_count_found=0,
            under_count=False,
            runtime_seconds=0.0,
            snapshot=snap,
            snapshot_hash=snapshot_hash(snap),
        )
        try:
            X = self.embeddings(arm, config)
            docs = self.documents(arm)
            model = fit(X, docs, self._fit_params(nr_topics, seed))
            mp = self.spec.metrics
            topics_tc = model.top_terms(mp.coherence_top_n)
            topics_td = model.top_terms(mp.diversity_top_k)
            record.tc = npmi_coherence(topics_tc, self.reference_tokens(arm), mp)
            record.td = topic_diversity(topics_td, mp.diversity_top_k)
            record.topic_count_found = model.num_topics
            record.under_count = model.under_count
        except (ModelError, InvalidInputError) as exc:
            record.error = str(exc)
            logger.warning("run failed (%s, %s, k=%d, run %d): %s", arm, config.tag(), nr_topics, run_idx, exc)
        record.runtime_seconds = time.perf_counter() - started
        return record

    def run_dtm_cell(
        self, config: EmbeddingConfig, nr_topics: int, run_idx: int, arm: str = "with"
    ) -> list[RunRecord]:
        """One DTM evaluation: fit a global model, slice it, score each bin."""
        seed = derive_seed(
            self.spec.base_seed, self.spec.dataset.dataset_id, arm, config, nr_topics, run_idx
        )
        snap = self._snapshot(arm, config, nr_topics)
        snap_hash = snapshot_hash(snap)
        started = time.perf_counter()

        def bin_record(bin_idx: int) -> RunRecord:
            return RunRecord(
                dataset=self.spec.dataset.dataset_id,
                arm=arm,
                aggregation=config.aggregation.value,
                pooling=config.pooling.value,
                nr_topics=nr_topics,
                run_idx=run_idx,
                seed=seed,
                tc=None,
                td=None,
                topic_count_found=0,
                under_count=False,
                runtime_seconds=0.0,
                snapshot=snap,
                snapshot_hash=snap_hash,
                bin_index=bin_idx,
            )

        try:
            X = self.embeddings(arm, config)
            docs = self.documents(arm)
            model = fit(X, docs, self._fit_params(nr_topics, seed))
            sliced = topics_over_time(model, docs, num_bins=self.spec.dtm_bins)
        except (ModelError, InvalidInputError, ConfigurationError) as exc:
            rec = bin_record(-1)
            rec.error = str(exc)
            rec.runtime_seconds = time.perf_counter() - started
            return [rec]

        mp = self.spec.metrics
        reference = self.reference_tokens(arm)
        records = []
        for b in range(sliced.num_bins):
            rec = bin_record(b)
            rec.bin_start, rec.bin_end = sliced.bin_edges[b]
            rec.bin_size = int(sliced.bin_sizes[b])
            rec.bin_noise = int(sliced.noise[b])
            rec.bin_topic_freq_sum = int(sliced.frequencies[b].sum())
            rec.conservation_ok = bool(rec.bin_topic_freq_sum + rec.bin_noise == rec.bin_size)
            rec.topic_count_found = model.num_topics
            rec.under_count = model.under_count
            present = np.nonzero(sliced.frequencies[b] > 0)[0]
            if present.size:
                try:
                    k_td = min(mp.diversity_top_k, len(sliced.vocab))
                    ranked_tc, _ = top_words(
                        sliced.topic_term[b][present], sliced.vocab, n=min(mp.coherence_top_n, len(sliced.vocab))
                    )
                    ranked_td, _ = top_words(sliced.topic_term[b][present], sliced.vocab, n=k_td)
                    rec.tc = npmi_coherence([[w for w, _ in t] for t in ranked_tc], reference, mp)
                    rec.td = topic_diversity([[w for w, _ in t] for t in ranked_td], k_td)
                except (ModelError, InvalidInputError) as exc:
                    rec.error = str(exc)
            else:
                rec.error = "empty bin"
            records.append(rec)
        elapsed = time.perf_counter() - started
        for rec in records:
            rec.runtime_seconds = elapsed / len(records)
        return records


def existing_cells(path: str | Path) -> set[tuple]:
    return {(rec.cell_key(), rec.snapshot_hash) for rec in read_records(path)}


@dataclass
class GridResult:
    records_path: Path
    new_records: int
    skipped: int
    failures: int


def _cells(spec: GridSpec) -> list[tuple[str, EmbeddingConfig, int, int]]:
    return [
        (arm, config, nr, run)
        for arm in spec.arms
        for config in spec.configs
        for nr in spec.nr_topics_list
        for run in range(spec.runs_per_cell)
    ]


_WORKER_RUNNER: Runner | None = None


def _run_cell_worker(args: tuple) -> list[RunRecord]:
    spec, data_root, arm, config_tag, nr_topics, run_idx = args
    global _WORKER_RUNNER
    if _WORKER_RUNNER is None or _WORKER_RUNNER.spec != spec:
        _WORKER_RUNNER = Runner(spec, data_root)
    runner = _WORKER_RUNNER
    config = EmbeddingConfig.from_tag(config_tag)
    if runner.spec.mode == "dtm":
        return runner.run_dtm_cell(config, nr_topics, run_idx, arm)
    return [runner.run_single(config, nr_topics, run_idx, arm)]


def run_grid(
    spec: GridSpec,
    records_path: str | Path,
    workers: int = 1,
    resume: bool = True,
    data_root: Path | None = None,
) -> GridResult:
    """Run every grid cell, appending records; cells already persisted with a
    matching parameter snapshot are skipped when resume is on."""
    records_path = Path(records_path)
    records_path.parent.mkdir(parents=True, exist_ok=True)
    done = existing_cells(records_path) if resume else set()
    runner = Runner(spec, data_root)

    pending = []
    skipped = 0
    done_cells = {key[:6] for key, h in done}
    for arm, config, nr, run in _cells(spec):
        h = snapshot_hash(runner._snapshot(arm, config, nr))
        cell = (spec.dataset.dataset_id, arm, config.aggregation.value, config.pooling.value, nr, run)
        if spec.mode == "dtm":
            # skip if any bin of this cell is already persisted: a cell's bins
            # are appended as one group, so partials are never re-run blindly
            if any(key[:6] == cell and kh == h for key, kh in done):
                skipped += 1
                continue
        elif (cell, h) in done:
            skipped += 1
            continue
        if cell in done_cells:
            # never append a second record for a (cell, run_idx)
            raise ConfigurationError(
                f"cell {cell} already persisted with a different parameter snapshot; "
                "write to a fresh records file"
            )
        pending.append((arm, config, nr, run))

    new_records = 0
    failures = 0

    def sink(records: list[RunRecord]) -> None:
        nonlocal new_records, failures
        append_records(records_path, records)
        new_records += len(records)
        failures += sum(1 for r in records if r.error is not None)

    if workers <= 1:
        for arm, config, nr, run in pending:
            if spec.mode == "dtm":
                sink(runner.run_dtm_cell(config, nr, run, arm))
            else:
                sink([runner.run_single(config, nr, run, arm)])
    else:
        tasks = [(spec, data_root, arm, config.tag(), nr, run) for arm, config, nr, run in pending]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for records in pool.map(_run_cell_worker, tasks):
                sink(records)
    return GridResult(records_path=records_path, new_records=new_records, skipped=skipped, failures=failures)


@dataclass
class ReportCell:
    dataset: str
    arm: str
    aggregation: str
    pooling: str
    nr_topics: int | None
    mean_tc: float | None
    mean_td: float | None
    runs: int
    errors: int
    tc_best: bool = False
    td_best: bool = False


def build_report(records: Sequence[RunRecord], group_by: str = "config") -> list[ReportCell]:
    """Aggregate records into per-(config, pooling) cells (optionally split by
    topic count). Means drop errored records but report their count."""
    if not records:
        raise ReportError("no records to report")
    if group_by not in ("config", "config+nr_topics"):
        raise ReportError(f"unknown group_by {group_by!r}")

    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        key = (rec.dataset, rec.arm, rec.aggregation, rec.pooling)
        if group_by == "config+nr_topics":
            key = key + (rec.nr_topics,)
        groups.setdefault(key, []).append(rec)

    cells = []
    for key, recs in sorted(groups.items()):
        per_nr = {}
        for r in recs:
            per_nr.setdefault(r.nr_topics, set()).add(r.snapshot_hash)
        conflicts = [nr for nr, hs in per_nr.items() if len(hs) > 1]
        if conflicts:
            raise ReportError(
                f"cell {key}: conflicting parameter snapshots at nr_topics {sorted(conflicts)}"
            )
        ok = [r for r in recs if r.error is None and r.tc is not None and r.td is not None]
        is_dtm = any(r.bin_index is not None for r in recs)
        if is_dtm and ok:
            # average over runs per timestep, then over timesteps
            per_bin: dict[int, list[RunRecord]] = {}
            for r in ok:
                per_bin.setdefault(int(r.bin_index), []).append(r)
            tc = float(np.mean([np.mean([r.tc for r in rs]) for rs in per_bin.values()]))
            td = float(np.mean([np.mean([r.td for r in rs]) for rs in per_bin.values()]))
        elif ok:
            tc = float(np.mean([r.tc for r in ok]))
            td = float(np.mean([r.td for r in ok]))
        else:
            tc = td = None
        cells.append(
            ReportCell(
                dataset=key[0],
                arm=key[1],
                aggregation=key[2],
                pooling=key[3],
                nr_topics=key[4] if group_by == "config+nr_topics" else None,
                mean_tc=tc,
                mean_td=td,
                runs=len(ok),
                errors=len(recs) - len(ok),
            )
        )

    # bold-max markers per (dataset, arm) column
    for dataset, arm in {(c.dataset, c.arm) for c in cells}:
        column = [c for c in cells if c.dataset == dataset and c.arm == arm]
        scored_tc = [c for c in column if c.mean_tc is not None]
        scored_td = [c for c in column if c.mean_td is not None]
        if scored_tc:
            best = max(c.mean_tc for c in scored_tc)
            for c in scored_tc:
                c.tc_best = c.mean_tc == best
        if scored_td:
            best = max(c.mean_td for c in scored_td)
            for c in scored_td:
                c.td_best = c.mean_td == best
    return cells


def _fmt(value: float | None, best: bool, bold: str) -> str:
    if value is None:
        return "-"
    text = f"{value:.4f}"
    if best and bold == "markdown":
        return f"**{text}**"
    if best and bold == "text":
        return f"*{text}"
    return text


def render_report(cells: Sequence[ReportCell], style: str = "text") -> str:
    """Render report cells as aligned text, delimited (csv), or markdown."""
    headers = ["dataset", "arm", "configuration", "pooling", "nr_topics", "tc", "td", "runs", "errors"]
    rows = []
    for c in cells:
        rows.append(
            [
                c.dataset,
                c.arm,
                c.aggregation,
                c.pooling,
                "-" if c.nr_topics is None else str(c.nr_topics),
                _fmt(c.mean_tc, c.tc_best, "markdown" if style == "markdown" else "text"),
                _fmt(c.mean_td, c.td_best, "markdown" if style == "markdown" else "text"),
                str(c.runs),
                str(c.errors),
            ]
        )
    if style == "csv":
        lines = [",".join(headers)]
        lines += [",".join(row) for row in rows]
        return "\n".join(lines) + "\n"
    if style == "markdown":
        lines = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    lines.append("  ".join("-" * widths[i] for i in range(len(headers))))
    lines += ["  ".join(row[i].ljust(widths[i]) for i in range(len(headers))) for row in rows]
    return "\n".join(lines) + "\n"


def emit_plot_data(kind: str, source, out_path: str | Path, top_n: int = 8, top_topics: int = 8) -> dict:
    """Structured series files backing the three figure families.

    kind=metric_curves: records -> per-config (nr_topics, mean tc/td) series.
    kind=word_scores: a fitted/saved model -> top-n (term, score) bars for the
    top_topics largest topics.
    kind=topic_frequency: TimeSlicedTopics (or its JSON export) -> per-topic
    (bin, frequency) series.
    """
    if kind == "metric_curves":
        records = source
        cells = build_report(records, group_by="config+nr_topics")
        series: dict[tuple, dict] = {}
        for c in cells:
            key = (c.dataset, c.arm, c.aggregation, c.pooling)
            entry = series.setdefault(
                key,
                {
                    "dataset": c.dataset,
                    "arm": c.arm,
                    "configuration": c.aggregation,
                    "pooling": c.pooling,
                    "tc": [],
                    "td": [],
                },
            )
            entry["tc"].append([c.nr_topics, c.mean_tc])
            entry["td"].append([c.nr_topics, c.mean_td])
        for entry in series.values():
            entry["tc"].sort(key=lambda p: p[0])
            entry["td"].sort(key=lambda p: p[0])
        payload = {"kind": kind, "series": list(series.values())}
    elif kind == "word_scores":
        if isinstance(source, (str, Path)):
            from .topic_model import load_model_records

            _, topics = load_model_records(source)
            series = [
                {
                    "topic_id": rec["topic_id"],
                    "size": rec["size"],
                    "bars": [[w, s] for w, s in rec["top_words"][:top_n]],
                }
                for rec in topics
            ]
        else:
            model: TopicModel = source
            ranked, _ = top_words(model.topic_term, model.vocab, n=min(top_n, len(model.vocab)))
            series = [
                {"topic_id": t, "size": int(model.sizes[t]), "bars": [[w, s] for w, s in words]}
                for t, words in enumerate(ranked)
            ]
        # topics are size-ordered, so this keeps the largest ones
        payload = {"kind": kind, "series": series[:top_topics]}
    elif kind == "topic_frequency":
        if isinstance(source, (str, Path)):
            slices = json.loads(Path(source).read_text(encoding="utf-8"))
            if slices.get("kind") != "time_sliced_topics":
                raise InvalidInputError(f"{source}: not a time-slices export")
            num_topics = slices["num_topics"]
            bins = slices["bins"]
            payload = {
                "kind": kind,
                "bins": [{"index": b["bin"], "start": b["start"], "end": b["end"]} for b in bins],
                "series": [
                    {
                        "topic_id": t,
                        "frequency": [[b["bin"], b["frequencies"][t]] for b in bins],
                    }
                    for t in range(num_topics)
                ],
            }
        else:
            sliced: TimeSlicedTopics = source
            num_topics = sliced.frequencies.shape[1]
            payload = {
                "kind": kind,
                "bins": [
                    {"index": b, "start": e[0], "end": e[1]} for b, e in enumerate(sliced.bin_edges)
                ],
                "series": [
                    {
                        "topic_id": t,
                        "frequency": [[b, int(sliced.frequencies[b, t])] for b in range(sliced.num_bins)],
                    }
                    for t in range(num_topics)
                ],
            }
    else:
        raise ConfigurationError(f"unknown plot-data kind {kind!r}")
    Path(out_path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return payload
