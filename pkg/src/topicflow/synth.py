"""Synthetic longitudinal corpora with planted topic dynamics.

The desk-scale stand-in for a real literature corpus: plant topics with
known term distributions, lifespans, and scripted relations (split, merge,
drift), generate documents epoch by epoch, then score how much of the
planted structure the pipeline recovers.

Generation uses numpy's seeded Generator (documents are plain data, not
sampler state, so cross-backend bit-identity is not needed here).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import Document, RawRecord, Vocabulary
from .errors import TopicflowError
from .graph import TopicEvent, similarity
from .hdp import Topic

RELATIONS = ("split_from", "merged_from", "drift_of")
SYNTH_BASE_YEAR = 2000  # epoch e -> document year SYNTH_BASE_YEAR + e


def synth_terms(vocab_size: int) -> list[str]:
    """Purely alphabetic term names ("waa", "wab", ...) so generated text
    survives the standard tokenizer unchanged."""
    if vocab_size > 26 * 26:
        raise TopicflowError("synthetic vocabulary capped at 676 terms")
    return [f"w{chr(97 + i // 26)}{chr(97 + i % 26)}" for i in range(vocab_size)]


@dataclass
class PlantedTopic:
    """Ground-truth topic: base distribution, inclusive epoch lifespan, and
    an optional lineage relation to parent topics."""

    id: int
    phi_true: np.ndarray
    lifespan: tuple[int, int]
    relation: str | None = None
    parents: tuple[int, ...] = ()
    # realized per-epoch distributions (drifted copies); filled by the
    # generator, equal to phi_true everywhere when drift_rate is 0
    phi_by_epoch: dict[int, np.ndarray] = field(default_factory=dict)

    def alive_at(self, epoch: int) -> bool:
        return self.lifespan[0] <= epoch <= self.lifespan[1]


@dataclass
class GenerativeSpec:
    vocab_size: int
    epochs: int
    docs_per_epoch: int
    tokens_per_doc: int
    planted: list[PlantedTopic]
    mixing_concentration: float = 1.0
    drift_rate: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.vocab_size < 1 or self.epochs < 1:
            raise TopicflowError("vocab_size and epochs must be >= 1")
        if self.docs_per_epoch < 1 or self.tokens_per_doc < 1:
            raise TopicflowError(
                "docs_per_epoch and tokens_per_doc must be >= 1")
        if self.mixing_concentration <= 0:
            raise TopicflowError("mixing_concentration must be > 0")
        if not 0.0 <= self.drift_rate < 1.0:
            raise TopicflowError("drift_rate must be in [0, 1)")
        if not self.planted:
            raise TopicflowError("at least one planted topic required")
        ids = [t.id for t in self.planted]
        if len(set(ids)) != len(ids):
            raise TopicflowError("planted topic ids must be unique")
        for t in self.planted:
            first, last = t.lifespan
            if not (0 <= first <= last < self.epochs):
                raise TopicflowError(
                    f"topic {t.id} lifespan {t.lifespan} outside "
                    f"[0, {self.epochs})")
            if t.phi_true.shape != (self.vocab_size,):
                raise TopicflowError(
                    f"topic {t.id} phi has wrong length")
            if abs(float(t.phi_true.sum()) - 1.0) > 1e-9:
                raise TopicflowError(f"topic {t.id} phi does not sum to 1")
            if t.relation is not None and t.relation not in RELATIONS:
                raise TopicflowError(
                    f"topic {t.id} relation {t.relation!r} not in {RELATIONS}")
        for e in range(self.epochs):
            if not any(t.alive_at(e) for t in self.planted):
                raise TopicflowError(f"epoch {e} has no live planted topic")


def uniform_support_phi(support, vocab_size: int) -> np.ndarray:
    """Uniform distribution over a word-index support set."""
    phi = np.zeros(vocab_size, dtype=np.float64)
    phi[list(support)] = 1.0 / len(support)
    return phi


def generate_corpus(spec: GenerativeSpec):
    """Sample the corpus: per document a Dirichlet mixture over the epoch's
    live topics, per token a topic then a word from its (possibly drifted)
    distribution. Deterministic in spec.seed.

    Returns (docs_by_epoch, planted) where docs_by_epoch[e] is the list of
    Documents for epoch e (years SYNTH_BASE_YEAR + e, encoded in generator
    word-id space) and planted carries the realized phi_by_epoch.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    terms = synth_terms(spec.vocab_size)

    for topic in spec.planted:
        first, last = topic.lifespan
        topic.phi_by_epoch = {}
        phi = topic.phi_true
        for e in range(first, last + 1):
            if e > first and spec.drift_rate > 0.0:
                fresh = rng.dirichlet(np.ones(spec.vocab_size))
                phi = (1.0 - spec.drift_rate) * phi + spec.drift_rate * fresh
            topic.phi_by_epoch[e] = phi

    docs_by_epoch = []
    for e in range(spec.epochs):
        live = sorted((t for t in spec.planted if t.alive_at(e)),
                      key=lambda t: t.id)
        phis = np.stack([t.phi_by_epoch[e] for t in live])
        docs = []
        for d in range(spec.docs_per_epoch):
            mix = rng.dirichlet(
                np.full(len(live), spec.mixing_concentration))
            topic_of = rng.choice(len(live), size=spec.tokens_per_doc, p=mix)
            words = np.empty(spec.tokens_per_doc, dtype=np.int32)
            for ti in range(len(live)):
                where = np.nonzero(topic_of == ti)[0]
                if len(where):
                    words[where] = rng.choice(
                        spec.vocab_size, size=len(where), p=phis[ti])
            doc = Document(id=f"e{e:03d}d{d:05d}",
                           year=SYNTH_BASE_YEAR + e,
                           tokens=[terms[w] for w in words],
                           encoded=words)
            docs.append(doc)
        docs_by_epoch.append(docs)
    return docs_by_epoch, spec.planted


def archive_records(docs_by_epoch) -> list[RawRecord]:
    """Raw records (abstract = token stream) for writing a standard archive,
    so synthetic corpora flow through the exact ingestion path."""
    records = []
    for docs in docs_by_epoch:
        for doc in docs:
            records.append(RawRecord(id=doc.id, title="",
                                     abstract=" ".join(doc.tokens),
                                     year=doc.year, language="english"))
    return records


def planted_phi_in_vocab(phi: np.ndarray, vocab: Vocabulary,
                         vocab_size: int) -> np.ndarray:
    """Re-express a generator-space distribution in Vocabulary index space.

    Terms the corpus never realized are absent from the vocabulary; their
    (tiny) mass is dropped and the vector renormalized.
    """
    terms = synth_terms(vocab_size)
    out = np.zeros(len(vocab), dtype=np.float64)
    for g, term in enumerate(terms):
        if term in vocab:
            out[vocab.index[term]] = phi[g]
    total = out.sum()
    if total <= 0:
        raise TopicflowError("planted distribution lost all mass in vocab")
    return out / total


@dataclass
class MatchResult:
    pairs: list[tuple[Topic, PlantedTopic]]
    similarities: list[float]
    score: float

    def node_to_planted(self) -> dict[tuple[int, int], int]:
        """(epoch, topic_id) -> planted id for every matched inferred topic."""
        return {(t.epoch, t.topic_id): p.id for t, p in self.pairs}


def match_topics(inferred, planted, measure: str = "jaccard",
                 epoch: int | None = None, vocab: Vocabulary | None = None,
                 vocab_size: int | None = None) -> MatchResult:
    """Greedy maximum-similarity matching between inferred and planted topics.

    Repeatedly pairs the globally most similar unmatched pair (ties towards
    the lowest indices) until one side runs out; score is the mean matched
    similarity. With `epoch` set, planted topics are compared via their
    realized drifted copy; with `vocab` set, planted vectors are remapped
    into vocabulary space first.
    """
    inferred = list(inferred)
    planted = list(planted)
    if not inferred or not planted:
        raise TopicflowError("match_topics needs nonempty topic sets")

    targets = []
    for p in planted:
        phi = p.phi_by_epoch.get(epoch, p.phi_true) if epoch is not None \
            else p.phi_true
        if vocab is not None:
            phi = planted_phi_in_vocab(phi, vocab,
                                       vocab_size or len(phi))
        targets.append(phi)

    sim = np.empty((len(inferred), len(planted)))
    for i, t in enumerate(inferred):
        for j, phi in enumerate(targets):
            sim[i, j] = similarity(t.phi, phi, measure)

    pairs, sims = [], []
    used_i, used_j = set(), set()
    for _ in range(min(len(inferred), len(planted))):
        best = None
        for i in range(len(inferred)):
            if i in used_i:
                continue
            for j in range(len(planted)):
                if j in used_j:
                    continue
                if best is None or sim[i, j] > sim[best]:
                    best = (i, j)
        used_i.add(best[0])
        used_j.add(best[1])
        pairs.append((inferred[best[0]], planted[best[1]]))
        sims.append(float(sim[best]))
    return MatchResult(pairs=pairs, similarities=sims,
                       score=float(np.mean(sims)))


# ---------------------------------------------------------------------------
# event scoring against the planted script

@dataclass(frozen=True)
class PlantedEvent:
    kind: str
    topic_id: int
    epoch: int


@dataclass
class EventScore:
    true_positives: int = 0
    false_positives: int = 0
    false_negatives: int = 0

    @property
    def precision(self) -> float:
        detected = self.true_positives + self.false_positives
        # empty-set convention: nothing detected -> precision 1.0
        return self.true_positives / detected if detected else 1.0

    @property
    def recall(self) -> float:
        actual = self.true_positives + self.false_negatives
        # symmetric convention: nothing planted -> recall 1.0
        return self.true_positives / actual if actual else 1.0


def planted_events(planted, n_epochs: int) -> list[PlantedEvent]:
    """Ground-truth events implied by lifespans and lineage relations.

    Conventions mirror the graph rules: a split sits at the parent's node in
    the epoch before the children start; a merge at the merged topic's first
    epoch; emergences only for fresh (relation-free) topics born after epoch
    0; disappearances for topics that end early with no outgoing relation.
    """
    by_id = {t.id: t for t in planted}
    events: list[PlantedEvent] = []
    has_out_edge: dict[tuple[int, int], bool] = {}

    def mark_out(topic_id: int, epoch: int):
        has_out_edge[(topic_id, epoch)] = True

    split_groups: dict[tuple[int, int], list[int]] = {}
    for t in planted:
        first, last = t.lifespan
        for e in range(first, last):
            mark_out(t.id, e)  # self-continuation within lifespan
        if t.relation == "split_from" and t.parents:
            split_groups.setdefault((t.parents[0], first), []).append(t.id)
        elif t.relation == "merged_from" and len(t.parents) >= 2:
            events.append(PlantedEvent("merge", t.id, first))
            for p in t.parents:
                mark_out(p, first - 1)
        elif t.relation == "drift_of" and t.parents:
            mark_out(t.parents[0], first - 1)

    for (parent_id, first), children in sorted(split_groups.items()):
        for c in children:
            mark_out(parent_id, first - 1)
        fan_out = len(children)
        parent = by_id.get(parent_id)
        if parent is not None and parent.alive_at(first):
            fan_out += 1
        if fan_out >= 2:
            events.append(PlantedEvent("split", parent_id, first - 1))

    for t in planted:
        first, last = t.lifespan
        if first > 0 and t.relation is None:
            events.append(PlantedEvent("emergence", t.id, first))
        if last < n_epochs - 1 and not has_out_edge.get((t.id, last)):
            events.append(PlantedEvent("disappearance", t.id, last))
    events.sort(key=lambda ev: (ev.epoch, ev.topic_id, ev.kind))
    return events


def score_events(detected, planted, matching, n_epochs: int) \
        -> dict[str, EventScore]:
    """Precision/recall per event kind.

    `matching` maps (epoch, topic_id) of inferred topics to planted ids
    (see MatchResult.node_to_planted). A detected event translates to
    (kind, planted id, epoch); it is a true positive iff that exact planted
    event exists (claimed at most once). Unmatched nodes count as false
    positives. Related-set contents are not compared.
    """
    truth = planted_events(planted, n_epochs)
    scores = {kind: EventScore() for kind in
              ("emergence", "disappearance", "split", "merge")}
    unclaimed = {}
    for ev in truth:
        unclaimed.setdefault((ev.kind, ev.topic_id, ev.epoch), 0)
        unclaimed[(ev.kind, ev.topic_id, ev.epoch)] += 1

    for ev in detected:
        if isinstance(ev, TopicEvent):
            kind, key, epoch = ev.kind, ev.node.key, ev.node.epoch
        else:  # (kind, (epoch, topic_id)) tuples are accepted for tests
            kind, key = ev[0], tuple(ev[1])
            epoch = key[0]
        planted_id = matching.get(key)
        translated = (kind, planted_id, epoch)
        if planted_id is not None and unclaimed.get(translated, 0) > 0:
            unclaimed[translated] -= 1
            scores[kind].true_positives += 1
        else:
            scores[kind].false_positives += 1

    for (kind, _, _), count in unclaimed.items():
        scores[kind].false_negatives += count
    return scores


# ---------------------------------------------------------------------------
# spec file format (same JSON family as the engine config)

def spec_to_dict(spec: GenerativeSpec) -> dict:
    planted = []
    for t in spec.planted:
        entry = {"id": t.id, "lifespan": list(t.lifespan),
                 "phi": [[int(i), float(p)] for i, p in
                         enumerate(t.phi_true) if p > 0]}
        if t.relation:
            entry["relation"] = t.relation
            entry["parents"] = list(t.parents)
        planted.append(entry)
    return {"config_version": 1, "vocab_size": spec.vocab_size,
            "epochs": spec.epochs, "docs_per_epoch": spec.docs_per_epoch,
            "tokens_per_doc": spec.tokens_per_doc,
            "mixing_concentration": spec.mixing_concentration,
            "drift_rate": spec.drift_rate, "seed": spec.seed,
            "planted": planted}


def spec_from_dict(obj: dict) -> GenerativeSpec:
    planted = []
    for entry in obj["planted"]:
        vocab_size = obj["vocab_size"]
        if "support" in entry:
            phi = uniform_support_phi(entry["support"], vocab_size)
        else:
            phi = np.zeros(vocab_size, dtype=np.float64)
            for i, p in entry["phi"]:
                phi[i] = p
        planted.append(PlantedTopic(
            id=entry["id"], phi_true=phi,
            lifespan=tuple(entry["lifespan"]),
            relation=entry.get("relation"),
            parents=tuple(entry.get("parents", ()))))
    spec = GenerativeSpec(
        vocab_size=obj["vocab_size"], epochs=obj["epochs"],
        docs_per_epoch=obj["docs_per_epoch"],
        tokens_per_doc=obj["tokens_per_doc"], planted=planted,
        mixing_concentration=obj.get("mixing_concentration", 1.0),
        drift_rate=obj.get("drift_rate", 0.0), seed=obj.get("seed", 0))
    spec.validate()
    return spec


def load_spec(path) -> GenerativeSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


def save_spec(spec: GenerativeSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec), fh, sort_keys=True, indent=1)
        fh.write("\n")


def save_ground_truth(planted, path) -> None:
    """Audit export: lifespans, lineage, and realized per-epoch phi."""
    payload = []
    for t in planted:
        payload.append({
            "id": t.id, "lifespan": list(t.lifespan),
            "relation": t.relation, "parents": list(t.parents),
            "phi_by_epoch": {
                str(e): [[int(i), float(p)] for i, p in enumerate(phi)
                         if p > 0]
                for e, phi in sorted(t.phi_by_epoch.items())},
        })
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
