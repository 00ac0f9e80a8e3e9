"""HDP topic inference for one epoch.

Direct-assignment Gibbs sampler over encoded documents: per-token topic
indicators z, global stick weights beta (plus a residual mass for unseen
topics), auxiliary table counts m resampled by simulating restaurant
seating, and concentration parameters refreshed by the usual
auxiliary-variable schemes. Topic count K is inferred, never fixed.

Everything random flows through one SplitMix64 stream per fit, so a fit is
a deterministic function of (documents, hyper, schedule, seed) on either
kernel backend.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .backend import kernels as _default_kernels
from .errors import EmptyCorpusError, IntegrityError, TopicflowError
from .rng import SplitMix64

STICK_TOL = 1e-9  # allowed drift of sum(beta) + beta_u from 1
SPARSE_PHI_FLOOR = 1e-8  # phi entries at or below this are dropped on export
_INITIAL_SLACK = 16  # spare topic slots beyond the active count


@dataclass
class Hyperparams:
    """Concentrations and base-measure pseudo-count, with resampling priors.

    gamma scales the corpus-level stick; alpha0 the per-document mixing; eta
    is the symmetric Dirichlet pseudo-count discretizing the base measure
    over the vocabulary. Priors are (shape, rate) Gamma hyperpriors.
    """

    gamma: float = 1.0
    alpha0: float = 1.0
    eta: float = 0.5
    gamma_prior: tuple[float, float] = (1.0, 0.1)
    alpha0_prior: tuple[float, float] = (1.0, 0.1)

    def __post_init__(self):
        for name in ("gamma", "alpha0", "eta"):
            if getattr(self, name) <= 0:
                raise TopicflowError(f"{name} must be > 0")
        for name in ("gamma_prior", "alpha0_prior"):
            shape, rate = getattr(self, name)
            if shape <= 0 or rate <= 0:
                raise TopicflowError(f"{name} must be positive (shape, rate)")


@dataclass
class Schedule:
    """Sweep plan: burn_in + sweeps total passes; concentrations refreshed
    every resample_every sweeps (0 disables resampling)."""

    burn_in: int = 500
    sweeps: int = 500
    resample_every: int = 5

    def __post_init__(self):
        if self.burn_in < 1 or self.sweeps < 1:
            raise TopicflowError("burn_in and sweeps must be >= 1")
        if self.resample_every < 0:
            raise TopicflowError("resample_every must be >= 0")


@dataclass
class Topic:
    """A posterior topic: smoothed term distribution owned by one epoch."""

    epoch: int
    topic_id: int
    phi: np.ndarray
    mass: int
    top_terms: list[tuple[str, float]]


@dataclass
class FitDiagnostics:
    k_trace: list[int] = field(default_factory=list)
    loglik_trace: list[float] = field(default_factory=list)
    gamma_trace: list[float] = field(default_factory=list)
    alpha0_trace: list[float] = field(default_factory=list)
    seconds: float = 0.0


class EncodedCorpus:
    """Flat token arrays for the kernels: one int32 word id and document id
    per token. Built once per fit; documents with empty encodings simply
    contribute no tokens."""

    def __init__(self, documents, vocab_size: int | None = None):
        words, doc_ids = [], []
        self.doc_labels = []
        for j, doc in enumerate(documents):
            if doc.encoded is None:
                raise TopicflowError(
                    f"document {doc.id!r} is not encoded; run encode() first")
            words.append(np.asarray(doc.encoded, dtype=np.int32))
            doc_ids.append(np.full(len(doc.encoded), j, dtype=np.int32))
            self.doc_labels.append(doc.id)
        if not words:
            raise EmptyCorpusError("no documents to model")
        self.words = np.concatenate(words)
        self.doc_ids = np.concatenate(doc_ids)
        self.n_docs = len(self.doc_labels)
        self.n_tokens = int(self.words.shape[0])
        if self.n_tokens == 0:
            raise EmptyCorpusError("corpus has no tokens")
        max_word = int(self.words.max())
        if vocab_size is None:
            vocab_size = max_word + 1
        elif max_word >= vocab_size:
            raise TopicflowError(
                f"token index {max_word} outside vocabulary of {vocab_size}")
        self.vocab_size = vocab_size


def as_corpus(documents, vocab_size: int | None = None) -> EncodedCorpus:
    if isinstance(documents, EncodedCorpus):
        return documents
    return EncodedCorpus(documents, vocab_size)


@dataclass
class HdpState:
    """Complete sampler state. Count arrays are capacity-sized; only slots
    below `k` are active and slots at or above `k` are kept zeroed."""

    z: np.ndarray
    n_jk: np.ndarray
    n_kw: np.ndarray
    n_k: np.ndarray
    m_jk: np.ndarray
    beta: np.ndarray
    beta_u: float
    k: int
    hyper: Hyperparams
    rng: SplitMix64
    seed: int
    sweep: int
    n_docs: int
    n_tokens: int
    vocab_size: int

    @property
    def capacity(self) -> int:
        return int(self.beta.shape[0])

    @property
    def active_beta(self) -> np.ndarray:
        return self.beta[:self.k]

    @property
    def active_n_k(self) -> np.ndarray:
        return self.n_k[:self.k]

    def doc_lengths(self) -> np.ndarray:
        return self.n_jk[:, :self.k].sum(axis=1)

    def snapshot(self):
        return (self.z.copy(), self.n_jk.copy(), self.n_kw.copy(),
                self.n_k.copy(), self.m_jk.copy(), self.beta.copy(),
                self.beta_u, self.k, self.rng.state)

    def restore(self, snap):
        (self.z, self.n_jk, self.n_kw, self.n_k, self.m_jk, self.beta,
         self.beta_u, self.k, state) = snap
        self.rng.state = state

    def grow(self):
        """Double topic capacity, preserving active slots."""
        old = self.capacity
        new = old * 2
        for name, axis in (("n_jk", 1), ("n_kw", 0), ("n_k", 0),
                           ("m_jk", 1), ("beta", 0)):
            arr = getattr(self, name)
            shape = list(arr.shape)
            shape[axis] = new
            wide = np.zeros(shape, dtype=arr.dtype)
            sel = tuple(slice(0, s) for s in arr.shape)
            wide[sel] = arr
            setattr(self, name, wide)


def _capacity_for(k: int) -> int:
    return max(32, k + _INITIAL_SLACK)


def stick_breaking(gamma: float, residual_tol: float, rng) -> np.ndarray:
    """Truncated stick-breaking draw: segments v ~ Beta(1, gamma) peeled off
    until the leftover stick is below residual_tol; the leftover is returned
    as the final entry, so the vector sums to one by construction."""
    if gamma <= 0:
        raise TopicflowError(f"gamma must be > 0, got {gamma}")
    if not 0.0 < residual_tol < 1.0:
        raise TopicflowError(
            f"residual_tol must be in (0, 1), got {residual_tol}")
    weights = []
    rest = 1.0
    while rest >= residual_tol:
        v = rng.beta(1.0, gamma)
        piece = v * rest
        weights.append(piece)
        rest = rest - piece
    weights.append(rest)
    return np.array(weights)


def init_state(documents, hyper: Hyperparams, k_init: int, seed: int,
               vocab_size: int | None = None) -> HdpState:
    """Uniformly random topic assignments over k_init topics, counts tallied,
    beta drawn from a flat Dirichlet over (k_init + residual); topics left
    empty by the random assignment are compacted away immediately."""
    if k_init < 1:
        raise TopicflowError(f"k_init must be >= 1, got {k_init}")
    corpus = as_corpus(documents, vocab_size)
    rng = SplitMix64(seed)

    z = np.empty(corpus.n_tokens, dtype=np.int32)
    for i in range(corpus.n_tokens):
        z[i] = rng.randint_below(k_init)

    cap = _capacity_for(k_init)
    n_jk = np.zeros((corpus.n_docs, cap), dtype=np.int32)
    n_kw = np.zeros((cap, corpus.vocab_size), dtype=np.int32)
    n_k = np.zeros(cap, dtype=np.int32)
    np.add.at(n_jk, (corpus.doc_ids, z), 1)
    np.add.at(n_kw, (z, corpus.words), 1)
    np.add.at(n_k, z, 1)

    conc = hyper.gamma / (k_init + 1)
    draw = rng.dirichlet([conc] * (k_init + 1))
    beta = np.zeros(cap, dtype=np.float64)
    beta[:k_init] = draw[:k_init]
    beta_u = draw[k_init]

    # compact away topics the random init left empty, returning their mass
    keep = [kk for kk in range(k_init) if n_k[kk] > 0]
    if len(keep) < k_init:
        remap = -np.ones(k_init, dtype=np.int32)
        for new, old in enumerate(keep):
            remap[old] = new
        beta_u += float(beta[[kk for kk in range(k_init)
                              if n_k[kk] == 0]].sum())
        n_jk[:, :len(keep)] = n_jk[:, keep]
        n_jk[:, len(keep):k_init] = 0
        n_kw[:len(keep)] = n_kw[keep]
        n_kw[len(keep):k_init] = 0
        n_k[:len(keep)] = n_k[keep]
        n_k[len(keep):k_init] = 0
        beta[:len(keep)] = beta[keep]
        beta[len(keep):k_init] = 0.0
        z = remap[z]
    k = len(keep)

    m_jk = (n_jk > 0).astype(np.int32)
    state = HdpState(z=z.astype(np.int32), n_jk=n_jk, n_kw=n_kw, n_k=n_k,
                     m_jk=m_jk, beta=beta, beta_u=float(beta_u), k=k,
                     hyper=replace(hyper), rng=rng, seed=seed, sweep=0,
                     n_docs=corpus.n_docs, n_tokens=corpus.n_tokens,
                     vocab_size=corpus.vocab_size)
    check_invariants(state, corpus)
    return state


def gibbs_sweep(state: HdpState, documents, shuffle: bool = False,
                kernels=None) -> HdpState:
    """One full Gibbs sweep: the token pass, then table counts and beta.

    Mutates and returns `state`. If the token pass runs out of topic slots
    the pre-sweep snapshot is restored, capacity doubled, and the sweep
    re-run - the restored RNG state makes the retry bit-identical.
    """
    kern = kernels or _default_kernels
    corpus = as_corpus(documents, state.vocab_size)
    if corpus.n_tokens != state.n_tokens:
        raise TopicflowError("documents do not match sampler state")

    while True:
        snap = state.snapshot()
        rng_arr = np.array([state.rng.state], dtype=np.uint64)
        stick = np.array([state.beta_u], dtype=np.float64)
        new_k = kern.token_pass(
            corpus.words, corpus.doc_ids, state.z, state.n_jk, state.n_kw,
            state.n_k, state.beta, stick, state.hyper.alpha0,
            state.hyper.gamma, state.hyper.eta, state.k, rng_arr,
            bool(shuffle))
        if new_k < 0:
            state.restore(snap)
            state.grow()
            continue
        state.k = int(new_k)
        state.beta_u = float(stick[0])
        state.rng.state = int(rng_arr[0])
        break

    sample_tables_and_beta(state, kernels=kern)
    state.sweep += 1
    return state


def sample_tables_and_beta(state: HdpState, kernels=None) -> HdpState:
    """Resample m_jk by simulated seating, then beta ~ Dirichlet(m.1..m.K, gamma)."""
    kern = kernels or _default_kernels
    rng_arr = np.array([state.rng.state], dtype=np.uint64)
    kern.table_pass(state.n_jk, state.m_jk, state.beta, state.hyper.alpha0,
                    state.k, rng_arr)
    state.rng.state = int(rng_arr[0])

    k = state.k
    m_dot = state.m_jk[:, :k].sum(axis=0)
    draw = state.rng.dirichlet([float(m) for m in m_dot]
                               + [state.hyper.gamma])
    state.beta[:k] = draw[:k]
    state.beta[k:] = 0.0
    state.beta_u = draw[k]
    return state


def resample_concentrations(state: HdpState) -> HdpState:
    """Refresh gamma and alpha0 from their auxiliary-variable posteriors.

    gamma: given K topics among M total tables, draw w ~ Beta(gamma+1, M)
    and a two-component Gamma mixture. alpha0: given per-document token
    counts and table totals, draw one (w_j, s_j) pair per document and a
    Gamma with table-count-adjusted shape.
    """
    rng = state.rng
    hyper = state.hyper
    k = state.k
    m_total = int(state.m_jk[:, :k].sum())

    a_g, b_g = hyper.gamma_prior
    w = rng.beta(hyper.gamma + 1.0, float(m_total))
    log_w = math.log(w)
    odds_num = a_g + k - 1
    odds_den = m_total * (b_g - log_w)
    pick_larger = rng.uniform() < odds_num / (odds_num + odds_den)
    shape = a_g + k if pick_larger else a_g + k - 1
    new_gamma = rng.gamma(shape, b_g - log_w)

    a_a, b_a = hyper.alpha0_prior
    doc_tokens = state.doc_lengths()
    log_w_sum = 0.0
    s_sum = 0
    for n_j in doc_tokens:
        n_j = int(n_j)
        if n_j == 0:
            continue
        log_w_sum += math.log(rng.beta(hyper.alpha0 + 1.0, float(n_j)))
        if rng.uniform() < n_j / (n_j + hyper.alpha0):
            s_sum += 1
    new_alpha0 = rng.gamma(a_a + m_total - s_sum, b_a - log_w_sum)

    if not (math.isfinite(new_gamma) and new_gamma > 0
            and math.isfinite(new_alpha0) and new_alpha0 > 0):
        raise IntegrityError(
            f"non-finite concentration resample: gamma={new_gamma}, "
            f"alpha0={new_alpha0}")
    hyper.gamma = new_gamma
    hyper.alpha0 = new_alpha0
    return state


def estimate_topics(state: HdpState, epoch: int, terms=None,
                    min_mass: int = 1, top_n: int = 20) -> list[Topic]:
    """Point-estimate topics from the current sample: phi smoothed by the
    base-measure pseudo-count, emitted in descending mass order (stable ids),
    topics below min_mass dropped."""
    eta = state.hyper.eta
    v = state.vocab_size
    order = sorted(range(state.k), key=lambda kk: (-int(state.n_k[kk]), kk))
    topics = []
    for kk in order:
        mass = int(state.n_k[kk])
        if mass < min_mass:
            continue
        phi = (state.n_kw[kk].astype(np.float64) + eta) / (mass + v * eta)
        ranked = np.argsort(-phi, kind="stable")[:top_n]
        top = [(terms[i] if terms is not None else str(i), float(phi[i]))
               for i in ranked]
        topics.append(Topic(epoch=epoch, topic_id=len(topics), phi=phi,
                            mass=mass, top_terms=top))
    return topics


def log_likelihood_proxy(state: HdpState, corpus: EncodedCorpus) -> float:
    """Sum of log categorical probabilities of every token under its current
    assignment (smoothed counts). A mixing diagnostic, not a marginal."""
    eta = state.hyper.eta
    num = state.n_kw[state.z, corpus.words].astype(np.float64) + eta
    den = state.n_k[state.z].astype(np.float64) + state.vocab_size * eta
    return float(np.log(num / den).sum())


def check_invariants(state: HdpState, documents) -> None:
    """Fail-fast integrity checks: count conservation, stick normalization,
    no empty topics, table-count bounds, zeroed inactive slots."""
    corpus = as_corpus(documents, state.vocab_size)
    k = state.k
    if np.any(state.z < 0) or np.any(state.z >= k):
        raise IntegrityError("token assignment outside active topics")

    doc_tokens = np.bincount(corpus.doc_ids, minlength=state.n_docs)
    if not np.array_equal(state.n_jk[:, :k].sum(axis=1), doc_tokens):
        raise IntegrityError("per-document counts do not sum to doc lengths")
    if not np.array_equal(state.n_kw[:k].sum(axis=1), state.n_k[:k]):
        raise IntegrityError("per-topic word counts do not sum to topic totals")
    if int(state.n_k[:k].sum()) != corpus.n_tokens:
        raise IntegrityError("topic totals do not sum to corpus token count")
    if np.any(state.n_k[:k] < 1):
        raise IntegrityError("empty topic present in active set")

    stick_sum = float(state.beta[:k].sum()) + state.beta_u
    if abs(stick_sum - 1.0) > STICK_TOL:
        raise IntegrityError(f"stick weights sum to {stick_sum!r}, not 1")
    if np.any(state.beta[:k] <= 0.0) or state.beta_u <= 0.0:
        raise IntegrityError("non-positive stick weight")

    occupied = state.n_jk[:, :k] > 0
    m = state.m_jk[:, :k]
    if np.any(m[occupied] < 1) or np.any(m > state.n_jk[:, :k]):
        raise IntegrityError("table counts violate 1 <= m_jk <= n_jk")

    if (np.any(state.n_k[k:] != 0) or np.any(state.n_kw[k:] != 0)
            or np.any(state.n_jk[:, k:] != 0) or np.any(state.beta[k:] != 0)):
        raise IntegrityError("inactive topic slots are not zeroed")


def fit_epoch(documents, hyper: Hyperparams, schedule: Schedule, seed: int,
              epoch: int = 0, terms=None, min_mass: int = 1,
              k_init: int = 2, shuffle: bool = False,
              validate_every: int = 0, vocab_size: int | None = None,
              kernels=None):
    """Fit one epoch end to end and extract topics from the final sweep.

    Returns (topics, FitDiagnostics). The K trace and log-likelihood proxy
    are recorded after every sweep (burn_in + sweeps entries).
    """
    corpus = as_corpus(documents, vocab_size)
    started = time.perf_counter()
    state = init_state(corpus, hyper, k_init, seed)
    diagnostics = FitDiagnostics()
    total = schedule.burn_in + schedule.sweeps
    for s in range(1, total + 1):
        gibbs_sweep(state, corpus, shuffle=shuffle, kernels=kernels)
        if schedule.resample_every and s % schedule.resample_every == 0:
            resample_concentrations(state)
        if validate_every and s % validate_every == 0:
            check_invariants(state, corpus)
        diagnostics.k_trace.append(state.k)
        diagnostics.loglik_trace.append(log_likelihood_proxy(state, corpus))
        diagnostics.gamma_trace.append(state.hyper.gamma)
        diagnostics.alpha0_trace.append(state.hyper.alpha0)
    diagnostics.seconds = time.perf_counter() - started
    topics = estimate_topics(state, epoch, terms=terms, min_mass=min_mass)
    return topics, diagnostics


# ---------------------------------------------------------------------------
# file formats owned by this module

def save_topics(topics, path, epoch: int, vocab_size: int) -> None:
    """Per-epoch topic export: mass, sparse phi (entries above the floor),
    and the top 20 terms for each topic."""
    records = []
    for t in topics:
        keep = np.nonzero(t.phi > SPARSE_PHI_FLOOR)[0]
        records.append({
            "topic_id": t.topic_id,
            "mass": t.mass,
            "phi": [[int(i), float(t.phi[i])] for i in keep],
            "top_terms": [[term, prob] for term, prob in t.top_terms],
        })
    payload = {"epoch": epoch, "vocab_size": vocab_size, "topics": records}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_topics(path) -> tuple[int, list[Topic]]:
    """Inverse of save_topics; phi is re-inflated dense with truncated
    entries as zero."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    vocab_size = payload["vocab_size"]
    topics = []
    for rec in payload["topics"]:
        phi = np.zeros(vocab_size, dtype=np.float64)
        for i, p in rec["phi"]:
            phi[i] = p
        topics.append(Topic(epoch=payload["epoch"], topic_id=rec["topic_id"],
                            phi=phi, mass=rec["mass"],
                            top_terms=[(t, p) for t, p in rec["top_terms"]]))
    return payload["epoch"], topics


def save_diagnostics(diagnostics: FitDiagnostics, path) -> None:
    """Two-column text: per-sweep active topic count and log-likelihood proxy."""
    with open(path, "w", encoding="utf-8") as fh:
        for k, ll in zip(diagnostics.k_trace, diagnostics.loglik_trace):
            fh.write(f"{k} {ll!r}\n")
