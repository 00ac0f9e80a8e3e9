"""Pipeline orchestration: staged, resumable, deterministic runs.

Stages (corpus -> fit -> graph) persist their outputs under the run
directory; a manifest records a fingerprint per stage so rerunning with
unchanged inputs and config skips completed work. Every epoch fit draws its
seed from derive_seed(master_seed, epoch index), so results are independent
of --jobs. All writes are temp-file-then-rename.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from . import corpus as corpus_mod
from . import synth as synth_mod
from .config import RunConfig, save_config
from .errors import EmptyDocumentError, StageError, TopicflowError
from .graph import build_graph, classify_events, write_dot, write_events_csv, \
    write_graph_json
from .hdp import fit_epoch, load_topics, save_diagnostics, save_topics
from .rng import derive_seed

STAGES = ("corpus", "fit", "graph")
MANIFEST_NAME = "manifest.json"


def _atomic(path: Path, writer) -> None:
    tmp = path.with_name(path.name + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


def _digest_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_obj(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True).encode()).hexdigest()


class Manifest:
    def __init__(self, run_dir: Path):
        self.path = run_dir / MANIFEST_NAME
        self.data = {"stages": {}}
        if self.path.exists():
            self.data = json.loads(self.path.read_text(encoding="utf-8"))
            self.data.setdefault("stages", {})
        self.data["engine_version"] = __version__
        self.data["python_version"] = platform.python_version()

    def set_config(self, config: RunConfig):
        self.data["config"] = config.to_dict()

    def stage_fingerprint(self, stage: str):
        return self.data["stages"].get(stage, {}).get("fingerprint")

    def record(self, stage: str, fingerprint: str, outputs, seconds: float):
        self.data["stages"][stage] = {
            "fingerprint": fingerprint,
            "outputs": sorted(str(p) for p in outputs),
            "seconds": round(seconds, 3),
        }
        self.save()

    def save(self):
        def write(tmp):
            tmp.write_text(json.dumps(self.data, sort_keys=True, indent=1)
                           + "\n", encoding="utf-8")
        _atomic(self.path, write)


def _stage_done(manifest: Manifest, stage: str, fingerprint: str,
                outputs) -> bool:
    if manifest.stage_fingerprint(stage) != fingerprint:
        return False
    return all(Path(p).exists() for p in outputs)


class RunLayout:
    def __init__(self, run_dir):
        self.root = Path(run_dir)
        self.corpus = self.root / "corpus"
        self.epochs = self.root / "epochs"
        self.graph = self.root / "graph"
        self.archive = self.corpus / "archive.jsonl"
        self.documents = self.corpus / "documents.jsonl"
        self.vocabulary = self.corpus / "vocabulary.txt"
        self.epochs_json = self.corpus / "epochs.json"
        self.filter_report = self.corpus / "filter_report.json"
        self.ground_truth = self.corpus / "ground_truth.json"
        self.graph_json = self.graph / "graph.json"
        self.graph_dot = self.graph / "graph.dot"
        self.events_csv = self.graph / "events.csv"

    def topics_file(self, index: int) -> Path:
        return self.epochs / f"epoch_{index:03d}.topics.json"

    def diag_file(self, index: int) -> Path:
        return self.epochs / f"epoch_{index:03d}.diag.txt"


# ---------------------------------------------------------------------------
# stage: corpus

def _corpus_fingerprint(config: RunConfig) -> str:
    # master_seed is deliberately absent: corpus outputs do not depend on it
    # (the synthetic generator is seeded by the spec file itself)
    parts = {"fields": [config.language, config.min_token_len,
                        config.energy_fraction, config.window_years,
                        config.lag_years]}
    if config.synth_spec:
        parts["synth_spec"] = _digest_file(config.synth_spec)
    else:
        parts["archive"] = _digest_file(config.archive)
    for name in ("stopwords", "lemma_lexicon"):
        path = getattr(config, name)
        parts[name] = _digest_file(path) if path else None
    return _digest_obj(parts)


def _run_corpus_stage(config: RunConfig, layout: RunLayout) -> None:
    layout.corpus.mkdir(parents=True, exist_ok=True)

    if config.synth_spec:
        spec = synth_mod.load_spec(config.synth_spec)
        docs_by_epoch, planted = synth_mod.generate_corpus(spec)
        records = synth_mod.archive_records(docs_by_epoch)
        _atomic(layout.archive,
                lambda p: corpus_mod.save_archive(records, p))
        _atomic(layout.ground_truth,
                lambda p: synth_mod.save_ground_truth(planted, p))
    else:
        records = corpus_mod.load_archive(config.archive)

    stopwords = (corpus_mod.load_stopwords(config.stopwords)
                 if config.stopwords else set())
    lexicon = (corpus_mod.load_lemma_lexicon(config.lemma_lexicon)
               if config.lemma_lexicon else {})

    kept, report = corpus_mod.filter_records(records, config.language)
    docs = []
    empty_after_preprocessing = 0
    for rec in kept:
        try:
            docs.append(corpus_mod.preprocess(rec, stopwords, lexicon,
                                              config.min_token_len))
        except EmptyDocumentError:
            empty_after_preprocessing += 1
    if not docs:
        raise StageError("corpus: no documents survived preprocessing")

    vocab = corpus_mod.build_vocabulary(docs, config.energy_fraction)
    docs = [corpus_mod.encode(d, vocab) for d in docs]
    excluded = sum(1 for d in docs if d.excluded)
    docs = [d for d in docs if not d.excluded]
    if not docs:
        raise StageError("corpus: every document lost all tokens in encoding")
    epochs = corpus_mod.slice_epochs(docs, config.window_years,
                                     config.lag_years)

    _atomic(layout.documents, lambda p: corpus_mod.save_documents(docs, p))
    _atomic(layout.vocabulary, lambda p: corpus_mod.save_vocabulary(vocab, p))
    _atomic(layout.epochs_json, lambda p: corpus_mod.save_epochs(epochs, p))
    report_payload = {
        "input_records": len(records),
        "kept": report.kept,
        "dropped_no_abstract": report.dropped_no_abstract,
        "dropped_language": report.dropped_language,
        "empty_after_preprocessing": empty_after_preprocessing,
        "empty_after_encoding": excluded,
        "documents": len(docs),
        "vocabulary_terms": len(vocab),
        "epochs": len(epochs),
        "dropped_ids": report.dropped_ids,
    }
    _atomic(layout.filter_report, lambda p: p.write_text(
        json.dumps(report_payload, sort_keys=True, indent=1) + "\n",
        encoding="utf-8"))


def _corpus_outputs(config: RunConfig, layout: RunLayout):
    outputs = [layout.documents, layout.vocabulary, layout.epochs_json,
               layout.filter_report]
    if config.synth_spec:
        outputs += [layout.archive, layout.ground_truth]
    return outputs


# ---------------------------------------------------------------------------
# stage: fit

def _fit_fingerprint(config: RunConfig, layout: RunLayout) -> str:
    return _digest_obj({
        "inputs": [_digest_file(layout.documents),
                   _digest_file(layout.vocabulary),
                   _digest_file(layout.epochs_json)],
        "fields": [config.gamma, config.alpha0, config.eta,
                   config.gamma_prior_shape, config.gamma_prior_rate,
                   config.alpha0_prior_shape, config.alpha0_prior_rate,
                   config.k_init, config.burn_in, config.sweeps,
                   config.resample_every, config.min_mass,
                   config.shuffle_tokens, config.master_seed],
    })


def _fit_one_epoch(args):
    (epoch_index, docs, vocab_terms, vocab_size, config_dict, seed) = args
    config = RunConfig(**config_dict)
    topics, diagnostics = fit_epoch(
        docs, config.hyperparams(), config.schedule(), seed,
        epoch=epoch_index, terms=vocab_terms, min_mass=config.min_mass,
        k_init=config.k_init, shuffle=config.shuffle_tokens,
        vocab_size=vocab_size)
    return epoch_index, topics, diagnostics


def _run_fit_stage(config: RunConfig, layout: RunLayout, jobs: int) -> None:
    layout.epochs.mkdir(parents=True, exist_ok=True)
    docs = corpus_mod.load_documents(layout.documents)
    vocab = corpus_mod.load_vocabulary(layout.vocabulary,
                                       config.energy_fraction)
    epochs = corpus_mod.load_epochs(layout.epochs_json)

    tasks = []
    for epoch in epochs:
        epoch_docs = [d for d in docs if d.id in epoch.doc_ids]
        if not epoch_docs:  # empty epochs are retained but produce no topics
            _atomic(layout.topics_file(epoch.index),
                    lambda p, i=epoch.index: save_topics([], p, i, len(vocab)))
            _atomic(layout.diag_file(epoch.index),
                    lambda p: p.write_text("", encoding="utf-8"))
            continue
        seed = derive_seed(config.master_seed, epoch.index)
        tasks.append((epoch.index, epoch_docs, vocab.terms, len(vocab),
                      config.to_dict(), seed))

    def handle(result):
        epoch_index, topics, diagnostics = result
        _atomic(layout.topics_file(epoch_index),
                lambda p: save_topics(topics, p, epoch_index, len(vocab)))
        _atomic(layout.diag_file(epoch_index),
                lambda p: save_diagnostics(diagnostics, p))

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for result in pool.map(_fit_one_epoch, tasks):
                handle(result)
    else:
        for task in tasks:
            handle(_fit_one_epoch(task))


def _fit_outputs(layout: RunLayout):
    epochs = corpus_mod.load_epochs(layout.epochs_json)
    outputs = []
    for epoch in epochs:
        outputs += [layout.topics_file(epoch.index),
                    layout.diag_file(epoch.index)]
    return outputs


# ---------------------------------------------------------------------------
# stage: graph

def _graph_fingerprint(config: RunConfig, layout: RunLayout) -> str:
    return _digest_obj({
        "inputs": sorted(_digest_file(p) for p in _fit_outputs(layout)
                         if p.name.endswith(".topics.json")),
        "fields": [config.measure, config.threshold, config.jaccard_top_k,
                   config.master_seed],
    })


def _run_graph_stage(config: RunConfig, layout: RunLayout) -> None:
    layout.graph.mkdir(parents=True, exist_ok=True)
    epochs = corpus_mod.load_epochs(layout.epochs_json)
    epoch_topics = []
    for epoch in epochs:
        index, topics = load_topics(layout.topics_file(epoch.index))
        epoch_topics.append((index, topics))

    graph = build_graph(epoch_topics, measure=config.measure,
                        threshold=config.threshold,
                        top_k_jaccard=config.jaccard_top_k)
    events = classify_events(graph)
    _atomic(layout.graph_json,
            lambda p: write_graph_json(graph, p, __version__,
                                       config.master_seed))
    _atomic(layout.graph_dot, lambda p: write_dot(graph, events, p))
    _atomic(layout.events_csv, lambda p: write_events_csv(events, p))


def _graph_outputs(layout: RunLayout):
    return [layout.graph_json, layout.graph_dot, layout.events_csv]


# ---------------------------------------------------------------------------
# orchestration

def run_pipeline(config: RunConfig, out_dir=None, jobs: int | None = None,
                 through: str = "graph") -> Path:
    """Execute stages in order through `through`, skipping stages whose
    fingerprints match the manifest. Returns the run directory."""
    config.validate()
    if through not in STAGES:
        raise TopicflowError(f"unknown stage {through!r}")
    layout = RunLayout(out_dir or config.out_dir)
    layout.root.mkdir(parents=True, exist_ok=True)
    jobs = jobs or config.jobs

    manifest = Manifest(layout.root)
    manifest.set_config(config)
    manifest.save()
    _atomic(layout.root / "config.json", lambda p: save_config(config, p))

    # fingerprints depend on upstream outputs, so they are computed only
    # once the loop reaches each stage (upstream has run or been skipped)
    plan = {
        "corpus": (lambda: _corpus_fingerprint(config),
                   lambda: _corpus_outputs(config, layout),
                   lambda: _run_corpus_stage(config, layout)),
        "fit": (lambda: _fit_fingerprint(config, layout),
                lambda: _fit_outputs(layout),
                lambda: _run_fit_stage(config, layout, jobs)),
        "graph": (lambda: _graph_fingerprint(config, layout),
                  lambda: _graph_outputs(layout),
                  lambda: _run_graph_stage(config, layout)),
    }
    for stage in STAGES[:STAGES.index(through) + 1]:
        fingerprint_of, outputs_of, runner = plan[stage]
        fingerprint = fingerprint_of()
        if _stage_done(manifest, stage, fingerprint, outputs_of()):
            continue
        started = time.perf_counter()
        try:
            runner()
        except TopicflowError as exc:
            raise StageError(f"stage {stage!r} failed: {exc}") from exc
        manifest.record(stage, fingerprint, outputs_of(),
                        time.perf_counter() - started)
    return layout.root
