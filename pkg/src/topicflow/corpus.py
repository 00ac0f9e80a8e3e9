"""Corpus ingestion: raw records, preprocessing, vocabulary, epoch slicing.

Everything here is deterministic and pure (no RNG), so preprocessing output
is byte-identical across runs. The raw-record archive (JSONL) is the only
interface the rest of the engine reads; the network client in `fetch.py`
writes one and is never needed again afterwards.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCorpusError, EmptyDocumentError, TopicflowError

YEAR_RANGE = (1900, 2100)  # sane-year guard for incoming records
DEFAULT_MIN_TOKEN_LEN = 2

_TOKEN_RE = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class RawRecord:
    """One harvested article: id, title, abstract, publication year, language."""

    id: str
    title: str
    abstract: str
    year: int
    language: str


@dataclass
class Document:
    """A preprocessed abstract: lemmatized tokens, later index-encoded."""

    id: str
    year: int
    tokens: list[str]
    encoded: np.ndarray | None = None

    @property
    def excluded(self) -> bool:
        """True once encoding dropped every token (out-of-vocabulary doc)."""
        return self.encoded is not None and len(self.encoded) == 0


@dataclass(frozen=True)
class Vocabulary:
    """Frequency-ranked term list covering `energy_fraction` of token mass.

    Terms are ordered by descending corpus frequency, ties ascending
    lexicographic; `index` is the exact inverse of that ordering.
    """

    terms: tuple[str, ...]
    counts: tuple[int, ...]
    energy_fraction: float
    index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.index:
            object.__setattr__(
                self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


@dataclass
class Epoch:
    """A [start_year, end_year) document window; epochs overlap by design."""

    index: int
    start_year: int
    end_year: int
    doc_ids: set[str]

    @property
    def empty(self) -> bool:
        return not self.doc_ids


@dataclass
class FilterReport:
    """Kept/dropped accounting emitted by filter_records."""

    kept: int = 0
    dropped_no_abstract: int = 0
    dropped_language: int = 0
    dropped_ids: list[tuple[str, str]] = field(default_factory=list)

    @property
    def dropped(self) -> int:
        return self.dropped_no_abstract + self.dropped_language


def filter_records(records, language: str = "english"):
    """Keep records with a nonempty abstract and a matching language tag.

    Order-preserving and total. Returns (kept, FilterReport); the report
    lists every dropped id with its reason.
    """
    kept = []
    report = FilterReport()
    want = language.lower()
    for rec in records:
        if not rec.abstract.strip():
            report.dropped_no_abstract += 1
            report.dropped_ids.append((rec.id, "no-abstract"))
        elif rec.language.lower() != want:
            report.dropped_language += 1
            report.dropped_ids.append((rec.id, "language"))
        else:
            kept.append(rec)
    report.kept = len(kept)
    return kept, report


def preprocess(record: RawRecord, stopwords: set[str],
               lemma_lexicon: dict[str, str],
               min_token_len: int = DEFAULT_MIN_TOKEN_LEN) -> Document:
    """Lowercase, split on non-alphabetic characters, lemmatize, drop stopwords.

    Lemma lookup falls back to the surface form (soft lemmatization, no
    stemming). Length and stopword filters apply after lemmatization.
    Raises EmptyDocumentError when nothing survives.
    """
    out = []
    for tok in _TOKEN_RE.findall(record.abstract.lower()):
        lemma = lemma_lexicon.get(tok, tok)
        if len(lemma) < min_token_len or lemma in stopwords:
            continue
        out.append(lemma)
    if not out:
        raise EmptyDocumentError(
            f"record {record.id!r} is empty after preprocessing")
    return Document(id=record.id, year=record.year, tokens=out)


def build_vocabulary(documents, energy_fraction: float) -> Vocabulary:
    """Smallest descending-frequency prefix covering `energy_fraction` of
    the corpus token mass. Frequency ties break lexicographically so the
    result is unique."""
    if not 0.0 < energy_fraction <= 1.0:
        raise TopicflowError(
            f"energy_fraction must be in (0, 1], got {energy_fraction}")
    counts = Counter()
    for doc in documents:
        counts.update(doc.tokens)
    total = sum(counts.values())
    if total == 0:
        raise EmptyCorpusError("cannot build a vocabulary from an empty corpus")

    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    terms, freqs = [], []
    cum = 0
    for term, c in ranked:
        terms.append(term)
        freqs.append(c)
        cum += c
        if cum / total >= energy_fraction:
            break
    return Vocabulary(terms=tuple(terms), counts=tuple(freqs),
                      energy_fraction=energy_fraction)


def encode(document: Document, vocab: Vocabulary) -> Document:
    """Replace in-vocabulary tokens with their indices; drop the rest.

    Returns the same Document with `encoded` set. A document that loses
    every token is flagged (see Document.excluded) rather than erroring.
    """
    if len(vocab) == 0:
        raise TopicflowError("cannot encode against an empty vocabulary")
    idx = vocab.index
    document.encoded = np.array(
        [idx[t] for t in document.tokens if t in idx], dtype=np.int32)
    return document


def decode(document: Document, vocab: Vocabulary) -> list[str]:
    """Inverse of encode over the in-vocabulary subsequence."""
    if document.encoded is None:
        raise TopicflowError(f"document {document.id!r} is not encoded")
    return [vocab.terms[i] for i in document.encoded]


def slice_epochs(documents, window_years: int, lag_years: int) -> list[Epoch]:
    """Overlapping epochs: starts y_min, y_min+lag, ... keeping full windows
    only (s + window <= y_max + 1). A document belongs to every window
    covering its year. Empty epochs are kept (Epoch.empty flags them)."""
    docs = list(documents)
    if not docs:
        raise EmptyCorpusError("cannot slice an empty corpus into epochs")
    if window_years < 1:
        raise TopicflowError(f"window_years must be >= 1, got {window_years}")
    if not 1 <= lag_years <= window_years:
        raise TopicflowError(
            f"lag_years must be in [1, window_years], got {lag_years}")

    y_min = min(d.year for d in docs)
    y_max = max(d.year for d in docs)
    epochs = []
    start = y_min
    while start + window_years <= y_max + 1:
        end = start + window_years
        ids = {d.id for d in docs if start <= d.year < end}
        epochs.append(Epoch(index=len(epochs), start_year=start,
                            end_year=end, doc_ids=ids))
        start += lag_years
    if not epochs:
        # only full windows are allowed, so a span shorter than the window
        # is a config problem, not something to paper over
        raise TopicflowError(
            f"corpus spans {y_max - y_min + 1} year(s); no full "
            f"{window_years}-year window fits (shrink window_years)")
    return epochs


# ---------------------------------------------------------------------------
# file formats

def load_archive(path) -> list[RawRecord]:
    """Read a raw-record archive: one JSON object per line with fields
    id, title, abstract, year, language."""
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rec = RawRecord(id=str(obj["id"]), title=str(obj["title"]),
                                abstract=str(obj["abstract"]),
                                year=int(obj["year"]),
                                language=str(obj["language"]))
            except (KeyError, ValueError, TypeError) as exc:
                raise TopicflowError(
                    f"{path}:{lineno}: malformed archive record: {exc}") from exc
            if rec.id in seen:
                raise TopicflowError(
                    f"{path}:{lineno}: duplicate record id {rec.id!r}")
            if not YEAR_RANGE[0] <= rec.year <= YEAR_RANGE[1]:
                raise TopicflowError(
                    f"{path}:{lineno}: record {rec.id!r} year {rec.year} "
                    f"outside sane range {YEAR_RANGE}")
            seen.add(rec.id)
            records.append(rec)
    return records


def save_archive(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(
                {"id": rec.id, "title": rec.title, "abstract": rec.abstract,
                 "year": rec.year, "language": rec.language},
                sort_keys=True) + "\n")


def load_stopwords(path) -> set[str]:
    """One term per line; blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip()}


def load_lemma_lexicon(path) -> dict[str, str]:
    """Two whitespace-separated columns: surface form, lemma."""
    lexicon = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise TopicflowError(
                    f"{path}:{lineno}: expected 'surface lemma', got {line!r}")
            lexicon[parts[0]] = parts[1]
    return lexicon


def save_vocabulary(vocab: Vocabulary, path) -> None:
    """Text export: `rank term count` per line, rank starting at 1."""
    with open(path, "w", encoding="utf-8") as fh:
        for rank, (term, count) in enumerate(zip(vocab.terms, vocab.counts), 1):
            fh.write(f"{rank} {term} {count}\n")


def load_vocabulary(path, energy_fraction: float) -> Vocabulary:
    terms, counts = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            _, term, count = line.split()
            terms.append(term)
            counts.append(int(count))
    return Vocabulary(terms=tuple(terms), counts=tuple(counts),
                      energy_fraction=energy_fraction)


def save_documents(documents, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            enc = None if doc.encoded is None else [int(i) for i in doc.encoded]
            fh.write(json.dumps(
                {"id": doc.id, "year": doc.year, "tokens": doc.tokens,
                 "encoded": enc}, sort_keys=True) + "\n")


def load_documents(path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            enc = obj.get("encoded")
            docs.append(Document(
                id=obj["id"], year=obj["year"], tokens=obj["tokens"],
                encoded=None if enc is None else np.array(enc, dtype=np.int32)))
    return docs


def save_epochs(epochs, path) -> None:
    payload = [{"index": e.index, "start_year": e.start_year,
                "end_year": e.end_year, "doc_ids": sorted(e.doc_ids)}
               for e in epochs]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_epochs(path) -> list[Epoch]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [Epoch(index=e["index"], start_year=e["start_year"],
                  end_year=e["end_year"], doc_ids=set(e["doc_ids"]))
            for e in payload]
