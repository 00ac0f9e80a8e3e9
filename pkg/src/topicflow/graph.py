"""Inter-epoch topic similarity graph, event classification, lineage queries.

Nodes are (epoch, topic_id) pairs; directed edges run only between adjacent
epochs and only where similarity clears the threshold. The four structural
events fall straight out of node degrees:

    emergence      no edge arrives at the node (and it is not in the first
                   epoch, where arrival is undecidable)
    disappearance  no edge leaves the node (and it is not in the last epoch)
    split          two or more edges leave the node
    merge          two or more edges arrive at the node

A node can generate several events at once; the degree conditions are
independent.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import QueryError, TopicflowError
from .hdp import Topic

MEASURES = ("jaccard", "jensen_shannon", "l2")
EVENT_KINDS = ("emergence", "disappearance", "split", "merge")
_NORMALIZATION_TOL = 1e-6


def _check_distribution(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise TopicflowError(
            f"similarity needs two equal-length vectors, got shapes "
            f"{p.shape} and {q.shape}")
    for name, vec in (("p", p), ("q", q)):
        if np.any(vec < 0):
            raise TopicflowError(f"{name} has negative entries")
        if abs(float(vec.sum()) - 1.0) > _NORMALIZATION_TOL:
            raise TopicflowError(
                f"{name} sums to {float(vec.sum())!r}, not 1")
    return p, q


def similarity(p, q, measure: str = "jaccard") -> float:
    """Similarity in [0, 1] between two term distributions.

    jaccard: generalized (weighted) Jaccard, sum(min)/sum(max).
    jensen_shannon: 1 - JSD(p, q) with base-2 logs, so JSD is in [0, 1].
    l2: 1 - ||p - q||_2 / sqrt(2).

    All three are 1 exactly iff p == q and reach 0 at disjoint supports.
    """
    p, q = _check_distribution(p, q)
    if measure == "jaccard":
        return float(np.minimum(p, q).sum() / np.maximum(p, q).sum())
    if measure == "jensen_shannon":
        m = 0.5 * (p + q)
        kl_p = float(np.sum(np.where(p > 0, p * np.log2(
            np.where(p > 0, p, 1.0) / np.where(m > 0, m, 1.0)), 0.0)))
        kl_q = float(np.sum(np.where(q > 0, q * np.log2(
            np.where(q > 0, q, 1.0) / np.where(m > 0, m, 1.0)), 0.0)))
        jsd = 0.5 * kl_p + 0.5 * kl_q
        return 1.0 - min(max(jsd, 0.0), 1.0)
    if measure == "l2":
        return 1.0 - float(np.linalg.norm(p - q)) / np.sqrt(2.0)
    raise TopicflowError(f"unknown similarity measure {measure!r}; "
                         f"expected one of {MEASURES}")


def top_k_set_jaccard(p, q, k: int) -> float:
    """Plain Jaccard over the two top-k term index sets (config alternative
    to the weighted form; ranks ties by index for determinism)."""
    p, q = _check_distribution(p, q)
    sp = set(np.argsort(-p, kind="stable")[:k].tolist())
    sq = set(np.argsort(-q, kind="stable")[:k].tolist())
    union = sp | sq
    if not union:
        return 0.0
    return len(sp & sq) / len(union)


@dataclass(frozen=True)
class TopicNode:
    epoch: int
    topic_id: int
    topic: Topic | None = None

    @property
    def key(self) -> tuple[int, int]:
        return (self.epoch, self.topic_id)

    def __repr__(self):
        return f"TopicNode({self.epoch}:{self.topic_id})"


@dataclass(frozen=True)
class TopicEvent:
    kind: str
    node: TopicNode
    related: tuple[TopicNode, ...] = ()


class SimilarityGraph:
    """Directed weighted graph over (epoch, topic_id) nodes; edges exist only
    between consecutive epochs of the (strictly increasing) epoch sequence."""

    def __init__(self, measure: str, threshold: float, epochs=()):
        if measure not in MEASURES and not measure.startswith("jaccard_top"):
            raise TopicflowError(f"unknown measure {measure!r}")
        if not 0.0 <= threshold < 1.0:
            raise TopicflowError(
                f"threshold must be in [0, 1), got {threshold}")
        self.measure = measure
        self.threshold = threshold
        self.epochs: tuple[int, ...] = tuple(epochs)
        self.nodes: dict[tuple[int, int], TopicNode] = {}
        self.weights: dict[tuple, float] = {}
        self.out_adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
        self.in_adj: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add_node(self, node: TopicNode) -> None:
        if node.key in self.nodes:
            raise TopicflowError(f"duplicate node {node.key}")
        self.nodes[node.key] = node
        self.out_adj[node.key] = []
        self.in_adj[node.key] = []

    def add_edge(self, src: tuple[int, int], dst: tuple[int, int],
                 weight: float) -> None:
        self.weights[(src, dst)] = weight
        self.out_adj[src].append(dst)
        self.in_adj[dst].append(src)

    def node(self, epoch: int, topic_id: int) -> TopicNode:
        try:
            return self.nodes[(epoch, topic_id)]
        except KeyError:
            raise QueryError(f"no topic {epoch}:{topic_id} in graph") from None

    def edges(self):
        """Edges as (src_key, dst_key, weight), deterministically ordered."""
        return [(s, d, self.weights[(s, d)])
                for s, d in sorted(self.weights)]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.weights)


def build_graph(epoch_topics, measure: str = "jaccard",
                threshold: float = 0.1,
                top_k_jaccard: int = 0) -> SimilarityGraph:
    """Assemble the thresholded similarity graph from per-epoch topic sets.

    epoch_topics: sequence of (epoch, topics) with strictly increasing
    epochs; consecutive entries are the adjacent pairs that may be linked.
    An edge src->dst is kept iff similarity > threshold (strict).
    """
    pairs = list(epoch_topics)
    epochs = [e for e, _ in pairs]
    if any(b <= a for a, b in zip(epochs, epochs[1:])):
        raise TopicflowError(f"epochs must be strictly increasing: {epochs}")
    label = (f"jaccard_top{top_k_jaccard}"
             if top_k_jaccard and measure == "jaccard" else measure)
    graph = SimilarityGraph(label, threshold, epochs)

    for epoch, topics in pairs:
        for topic in topics:
            graph.add_node(TopicNode(epoch, topic.topic_id, topic))

    for (e_from, from_topics), (e_to, to_topics) in zip(pairs, pairs[1:]):
        for a in from_topics:
            for b in to_topics:
                if top_k_jaccard and measure == "jaccard":
                    w = top_k_set_jaccard(a.phi, b.phi, top_k_jaccard)
                else:
                    w = similarity(a.phi, b.phi, measure)
                if w > threshold:
                    graph.add_edge((e_from, a.topic_id), (e_to, b.topic_id), w)
    return graph


def classify_events(graph: SimilarityGraph) -> list[TopicEvent]:
    """Read the four event kinds off node degrees.

    Boundary convention: first-epoch nodes are never emergences and
    last-epoch nodes never disappearances (undecidable at corpus ends).
    """
    if not graph.epochs:
        return []
    first, last = graph.epochs[0], graph.epochs[-1]
    events = []
    for key in sorted(graph.nodes):
        node = graph.nodes[key]
        indeg = len(graph.in_adj[key])
        outdeg = len(graph.out_adj[key])
        if indeg == 0 and node.epoch > first:
            events.append(TopicEvent("emergence", node))
        if outdeg == 0 and node.epoch < last:
            events.append(TopicEvent("disappearance", node))
        if outdeg >= 2:
            related = tuple(graph.nodes[k]
                            for k in sorted(graph.out_adj[key]))
            events.append(TopicEvent("split", node, related))
        if indeg >= 2:
            related = tuple(graph.nodes[k]
                            for k in sorted(graph.in_adj[key]))
            events.append(TopicEvent("merge", node, related))
    order = {kind: i for i, kind in enumerate(EVENT_KINDS)}
    events.sort(key=lambda ev: (ev.node.epoch, ev.node.topic_id,
                                order[ev.kind]))
    return events


def trace_lineage(graph: SimilarityGraph, seed_node, direction: str,
                  max_depth: int) -> SimilarityGraph:
    """Breadth-first closure from seed_node along edge direction ("forward")
    or against it ("backward"), up to max_depth hops; returns the sub-graph
    of visited nodes and traversed edges."""
    if direction not in ("forward", "backward"):
        raise TopicflowError(f"direction must be forward|backward, "
                             f"got {direction!r}")
    if max_depth < 0:
        raise TopicflowError(f"max_depth must be >= 0, got {max_depth}")
    key = seed_node.key if isinstance(seed_node, TopicNode) else tuple(seed_node)
    if key not in graph.nodes:
        raise QueryError(f"no topic {key[0]}:{key[1]} in graph")

    adj = graph.out_adj if direction == "forward" else graph.in_adj
    visited = {key}
    used_edges = []
    frontier = [key]
    for _ in range(max_depth):
        nxt = []
        for u in frontier:
            for v in sorted(adj[u]):
                used_edges.append((u, v) if direction == "forward"
                                  else (v, u))
                if v not in visited:
                    visited.add(v)
                    nxt.append(v)
        if not nxt:
            break
        frontier = nxt

    sub = SimilarityGraph(graph.measure, graph.threshold,
                          sorted({k[0] for k in visited}))
    for k in sorted(visited):
        sub.add_node(graph.nodes[k])
    for src, dst in sorted(set(used_edges)):
        sub.add_edge(src, dst, graph.weights[(src, dst)])
    return sub


def find_topic(epoch_topics, query_terms, vocab) -> TopicNode:
    """Topic with the highest total probability of the query terms.

    Accepts either a flat topic collection or (epoch, topics) pairs. Ties
    break toward larger mass, then smaller topic_id (then smaller epoch).
    Raises QueryError when no query term is in the vocabulary.
    """
    if not query_terms:
        raise QueryError("query_terms must be nonempty")
    indices = [vocab.index[t] for t in query_terms if t in vocab]
    if not indices:
        raise QueryError(
            f"none of {sorted(query_terms)} appear in the vocabulary")

    flat: list[Topic] = []
    for item in epoch_topics:
        if isinstance(item, Topic):
            flat.append(item)
        else:
            _, topics = item
            flat.extend(topics)
    if not flat:
        raise QueryError("no topics to search")

    best = max(flat, key=lambda t: (float(t.phi[indices].sum()), t.mass,
                                    -t.topic_id, -t.epoch))
    return TopicNode(best.epoch, best.topic_id, best)


# ---------------------------------------------------------------------------
# exports

def graph_to_dict(graph: SimilarityGraph, engine_version: str = "",
                  master_seed: int | None = None,
                  top_terms: int = 10) -> dict:
    nodes = []
    for key in sorted(graph.nodes):
        node = graph.nodes[key]
        terms = (node.topic.top_terms[:top_terms]
                 if node.topic is not None else [])
        nodes.append({"epoch": node.epoch, "topic_id": node.topic_id,
                      "mass": node.topic.mass if node.topic else 0,
                      "top_terms": [[t, p] for t, p in terms]})
    edges = [{"from": list(src), "to": list(dst),
              "weight": round(w, 6)}
             for src, dst, w in graph.edges()]
    return {"meta": {"measure": graph.measure,
                     "threshold": graph.threshold,
                     "engine_version": engine_version,
                     "master_seed": master_seed},
            "epochs": list(graph.epochs),
            "nodes": nodes,
            "edges": edges}


def write_graph_json(graph, path, engine_version: str = "",
                     master_seed: int | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(graph, engine_version, master_seed), fh,
                  sort_keys=True, indent=1)
        fh.write("\n")


def write_events_csv(events, path) -> None:
    """CSV rows kind,epoch,topic_id,related; related topics joined by ';'
    as epoch:topic_id."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "epoch", "topic_id", "related"])
        for ev in events:
            rel = ";".join(f"{n.epoch}:{n.topic_id}" for n in ev.related)
            writer.writerow([ev.kind, ev.node.epoch, ev.node.topic_id, rel])


def write_dot(graph: SimilarityGraph, events, path) -> None:
    """Graphviz export: one rank per epoch, pen width proportional to edge
    weight, emergence nodes green, disappearance red (both: yellow),
    split/merge flagged in the label."""
    by_node: dict[tuple[int, int], set[str]] = {}
    for ev in events:
        by_node.setdefault(ev.node.key, set()).add(ev.kind)

    lines = ["digraph topics {", "  rankdir=LR;",
             '  node [shape=box, style=filled, fillcolor=white];']
    for epoch in graph.epochs:
        keys = sorted(k for k in graph.nodes if k[0] == epoch)
        if keys:
            names = "; ".join(f'"{e}_{t}"' for e, t in keys)
            lines.append(f"  {{ rank=same; {names}; }}")
    for key in sorted(graph.nodes):
        node = graph.nodes[key]
        kinds = by_node.get(key, set())
        label = f"{key[0]}:{key[1]}"
        if node.topic is not None and node.topic.top_terms:
            label += r"\n" + " ".join(t for t, _ in node.topic.top_terms[:3])
        for kind in ("split", "merge"):
            if kind in kinds:
                label += rf"\n[{kind}]"
        if "emergence" in kinds and "disappearance" in kinds:
            color = "yellow"
        elif "emergence" in kinds:
            color = "palegreen"
        elif "disappearance" in kinds:
            color = "lightcoral"
        else:
            color = "white"
        lines.append(f'  "{key[0]}_{key[1]}" [label="{label}", '
                     f'fillcolor={color}];')
    for src, dst, w in graph.edges():
        lines.append(f'  "{src[0]}_{src[1]}" -> "{dst[0]}_{dst[1]}" '
                     f'[penwidth={0.5 + 4.0 * w:.3f}, label="{w:.3f}"];')
    lines.append("}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
