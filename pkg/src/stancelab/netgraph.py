"""Directed weighted user-interaction graph and per-relation communities.

Edge weights count which of the four relation types (friend, retweet, quote,
reply) are present between an ordered user pair, so they always lie in [1, 4]
and duplicated relation records never change a weight.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

RELATION_TYPES = ("friend", "retweet", "quote", "reply")


@dataclass(frozen=True)
class RelationRecord:
    src: str
    dst: str
    relation: str

    def __post_init__(self):
        if self.relation not in RELATION_TYPES:
            raise ValueError(f"unknown relation type: {self.relation!r} "
                             f"(valid: {', '.join(RELATION_TYPES)})")


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int

    @property
    def avg_in_degree(self) -> float:
        return self.edge_count / self.node_count if self.node_count else 0.0

    @property
    def avg_out_degree(self) -> float:
        # identical to avg_in_degree for any directed graph
        return self.avg_in_degree


class InteractionGraph:
    """Immutable directed graph; weight(u, v) = number of relation types on (u, v)."""

    def __init__(self, edge_relations: dict[tuple[str, str], frozenset[str]],
                 nodes: Optional[set[str]] = None):
        self._edge_relations = dict(edge_relations)
        node_set = set(nodes) if nodes is not None else set()
        for (u, v), rels in self._edge_relations.items():
            if not rels:
                raise ValueError(f"edge ({u!r}, {v!r}) has no relations")
            node_set.add(u)
            node_set.add(v)
        self._nodes = frozenset(node_set)
        adj: dict[str, list[tuple[str, float]]] = {}
        for (u, v), rels in self._edge_relations.items():
            adj.setdefault(u, []).append((v, float(len(rels))))
        # sorted out-neighbor lists make walk sampling order-independent
        self._out = {u: sorted(nbrs) for u, nbrs in adj.items()}

    @classmethod
    def from_weights(cls, weights: dict[tuple[str, str], int]) -> "InteractionGraph":
        """Build from an exported weight map (relation identities lost)."""
        synth = {}
        for (u, v), w in weights.items():
            if not 1 <= int(w) <= len(RELATION_TYPES):
                raise ValueError(f"weight {w} for edge ({u!r}, {v!r}) outside [1, 4]")
            synth[(u, v)] = frozenset(RELATION_TYPES[: int(w)])
        return cls(synth)

    @property
    def nodes(self) -> frozenset[str]:
        return self._nodes

    @property
    def edges(self) -> dict[tuple[str, str], int]:
        return {e: len(r) for e, r in self._edge_relations.items()}

    def weight(self, u: str, v: str) -> int:
        rels = self._edge_relations.get((u, v))
        return len(rels) if rels else 0

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self._edge_relations

    def out_neighbors(self, u: str) -> list[tuple[str, float]]:
        """Sorted (neighbor, weight) pairs for outgoing edges of u."""
        return self._out.get(u, [])

    def undirected_neighbors(self, u: str) -> set[str]:
        nbrs = {v for v, _ in self._out.get(u, [])}
        nbrs.update(x for (x, y) in self._edge_relations if y == u)
        return nbrs

    def relation_subgraph(self, relation: str) -> dict[tuple[str, str], int]:
        """Edges (weight 1) where the given relation type is present."""
        if relation not in RELATION_TYPES:
            raise ValueError(f"unknown relation type: {relation!r}")
        return {e: 1 for e, rels in self._edge_relations.items() if relation in rels}


def build_graph(records: Iterable[RelationRecord],
                require_friendship: bool = True) -> InteractionGraph:
    """Aggregate relation records into the weighted interaction graph.

    Relation multiplicity is ignored: ten retweets contribute the same +1 as
    one. With ``require_friendship`` (the default), pairs lacking a friend
    relation produce no edge at all. Self-loops are dropped with a warning.
    The result is invariant under permutations of the input records.
    """
    rels: dict[tuple[str, str], set[str]] = {}
    self_loops = 0
    for rec in records:
        if rec.src == rec.dst:
            self_loops += 1
            continue
        if any(ch.isspace() for ch in rec.src + rec.dst):
            raise ValueError(f"user ids must not contain whitespace: "
                             f"({rec.src!r}, {rec.dst!r})")
        rels.setdefault((rec.src, rec.dst), set()).add(rec.relation)
    if self_loops:
        warnings.warn(f"dropped {self_loops} self-loop record(s)")
    if require_friendship:
        rels = {e: r for e, r in rels.items() if "friend" in r}
    return InteractionGraph({e: frozenset(r) for e, r in rels.items()})


def load_relations(path: str | Path) -> list[RelationRecord]:
    """Read relation records from a CSV with columns ``src,dst,relation``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"relations file not found: {path}")
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ("src", "dst", "relation") if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"missing required column(s): {', '.join(missing)}")
        for line_no, row in enumerate(reader, start=2):
            try:
                records.append(RelationRecord(row["src"].strip(), row["dst"].strip(),
                                              row["relation"].strip()))
            except ValueError as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from exc
    return records


def graph_stats(g: InteractionGraph) -> GraphStats:
    return GraphStats(node_count=len(g.nodes), edge_count=len(g.edges))


def export_edge_list(g: InteractionGraph, path: str | Path) -> None:
    """Write the ``src dst weight`` edge list consumed by external walkers.

    One edge per line, space-separated, sorted by (src, dst) so the file is
    byte-reproducible.
    """
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for (u, v) in sorted(g.edges):
            fh.write(f"{u} {v} {g.weight(u, v)}\n")


def load_edge_list(path: str | Path) -> InteractionGraph:
    """Read a ``src dst weight`` edge list back into a graph."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"edge list not found: {path}")
    weights: dict[tuple[str, str], int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}: line {line_no}: expected 'src dst weight'")
            w = int(parts[2])
            if w <= 0:
                raise ValueError(f"{path}: line {line_no}: weight must be positive")
            weights[(parts[0], parts[1])] = w
    return InteractionGraph.from_weights(weights)


def community_detect(g: InteractionGraph, relation: str, seed: int = 0,
                     max_iter: int = 100) -> dict[str, int]:
    """Label-propagation communities on one relation's subgraph.

    Synchronous updates over the undirected view of the relation subgraph:
    every node adopts the most frequent label among its neighbors, keeping
    its own label when that label ties for the maximum and breaking remaining
    ties with a seeded RNG. Stops on convergence, on a period-2 oscillation,
    or after ``max_iter`` rounds. Community ids are renumbered densely from 0
    in order of first appearance over sorted node ids; the whole procedure is
    deterministic given (graph, relation, seed).
    """
    edges = g.relation_subgraph(relation)
    if not edges:
        return {}
    neighbors: dict[str, set[str]] = {}
    for (u, v) in edges:
        neighbors.setdefault(u, set()).add(v)
        neighbors.setdefault(v, set()).add(u)
    nodes = sorted(neighbors)
    rng = np.random.default_rng(seed)

    labels = {node: i for i, node in enumerate(nodes)}
    previous: list[dict[str, int]] = []
    for _ in range(max_iter):
        new_labels: dict[str, int] = {}
        for node in nodes:
            counts: dict[int, int] = {}
            for nbr in neighbors[node]:
                counts[labels[nbr]] = counts.get(labels[nbr], 0) + 1
            best = max(counts.values())
            top = sorted(lab for lab, c in counts.items() if c == best)
            if labels[node] in top:
                new_labels[node] = labels[node]
            elif len(top) == 1:
                new_labels[node] = top[0]
            else:
                new_labels[node] = top[int(rng.integers(len(top)))]
        if new_labels == labels or (previous and new_labels == previous[-1]):
            labels = new_labels
            break
        previous = [labels]
        labels = new_labels

    dense: dict[int, int] = {}
    out: dict[str, int] = {}
    for node in nodes:
        lab = labels[node]
        if lab not in dense:
            dense[lab] = len(dense)
        out[node] = dense[lab]
    return out
