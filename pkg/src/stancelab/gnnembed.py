"""Node embeddings from the interaction graph: walk generation plus SGNS.

Walks are generated from per-start-node RNG streams derived from
(seed, node index), so a corpus is reproducible regardless of scheduling
and identical (graph, config) pairs yield byte-identical walk files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .netgraph import InteractionGraph
from .nn import sigmoid

WALK_STRATEGIES = ("deepwalk", "node2vec", "struc2vec")

# struc2vec walk: probability of stepping within the current layer rather
# than moving between layers
_STAY_PROB = 0.7


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 80
    strategy: str = "deepwalk"
    p: float = 1.0
    q: float = 1.0
    layers: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.strategy not in WALK_STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; "
                             f"valid: {', '.join(WALK_STRATEGIES)}")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")


@dataclass
class WalkCorpus:
    walks: list[list[str]]

    def __len__(self) -> int:
        return len(self.walks)

    def save(self, path: str | Path) -> None:
        """One walk per line, space-separated node ids."""
        with open(path, "w", encoding="utf-8") as fh:
            for walk in self.walks:
                fh.write(" ".join(walk) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "WalkCorpus":
        walks = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    walks.append(line.split())
        return cls(walks)


def validate_walk_file(path: str | Path) -> int:
    """Check the walk-file grammar; returns the number of walks.

    Accepts output from any conforming generator: non-empty lines of
    whitespace-free node ids separated by single spaces.
    """
    count = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped:
                raise ValueError(f"line {line_no}: empty walk")
            if stripped != " ".join(stripped.split()):
                raise ValueError(f"line {line_no}: malformed spacing")
            count += 1
    return count


def deepwalk_distribution(g: InteractionGraph, node: str) -> tuple[list[str], np.ndarray]:
    """First-order transition distribution: proportional to out-edge weight."""
    nbrs = g.out_neighbors(node)
    if not nbrs:
        return [], np.zeros(0)
    names = [v for v, _ in nbrs]
    weights = np.array([w for _, w in nbrs], dtype=np.float64)
    return names, weights / weights.sum()


def node2vec_distribution(g: InteractionGraph, prev: Optional[str], node: str,
                          p: float, q: float) -> tuple[list[str], np.ndarray]:
    """Second-order biased distribution: weight / p back to the previous
    node, unchanged weight to its neighbors, weight / q elsewhere."""
    nbrs = g.out_neighbors(node)
    if not nbrs:
        return [], np.zeros(0)
    if prev is None:
        return deepwalk_distribution(g, node)
    names = []
    weights = []
    for v, w in nbrs:
        if v == prev:
            weights.append(w / p)
        elif g.has_edge(v, prev):
            weights.append(w)
        else:
            weights.append(w / q)
        names.append(v)
    arr = np.array(weights, dtype=np.float64)
    return names, arr / arr.sum()


def _sample(names: list[str], probs: np.ndarray, rng: np.random.Generator) -> str:
    cum = np.cumsum(probs)
    i = int(np.searchsorted(cum, rng.random(), side="right"))
    return names[min(i, len(names) - 1)]


def generate_walks(g: InteractionGraph, cfg: WalkConfig) -> WalkCorpus:
    """Sample r walks of length <= l from every node.

    deepwalk steps proportional to outgoing edge weight; node2vec applies the
    (p, q) second-order bias on top of the weights and collapses to deepwalk
    at p = q = 1. Walks truncate early at sink nodes; isolated nodes yield
    length-1 walks. Walks are grouped by start node in sorted-id order.
    """
    if not g.nodes:
        raise ValueError("cannot generate walks on an empty graph")
    if cfg.strategy == "struc2vec":
        return struc2vec_walks(g, cfg)
    nodes = sorted(g.nodes)
    second_order = cfg.strategy == "node2vec"
    walks: list[list[str]] = []
    for idx, start in enumerate(nodes):
        rng = np.random.default_rng((cfg.seed, idx))
        for _ in range(cfg.walks_per_node):
            walk = [start]
            prev: Optional[str] = None
            while len(walk) < cfg.walk_length:
                cur = walk[-1]
                if second_order:
                    names, probs = node2vec_distribution(g, prev, cur, cfg.p, cfg.q)
                else:
                    names, probs = deepwalk_distribution(g, cur)
                if not names:
                    break
                nxt = _sample(names, probs, rng)
                prev = cur
                walk.append(nxt)
            walks.append(walk)
    return WalkCorpus(walks)


# ---------------------------------------------------------------------------
# struc2vec (simplified): degree-sequence DTW over k-hop rings
# ---------------------------------------------------------------------------

def _dtw(a: Sequence[float], b: Sequence[float]) -> float:
    """Dynamic-time-warping distance with |x - y| element cost."""
    n, m = len(a), len(b)
    dp = np.full((n + 1, m + 1), np.inf)
    dp[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = abs(a[i - 1] - b[j - 1])
            dp[i, j] = cost + min(dp[i - 1, j], dp[i, j - 1], dp[i - 1, j - 1])
    return float(dp[n, m])


def _rings(g: InteractionGraph, node: str, max_layer: int) -> list[list[str]]:
    """Nodes at undirected distance exactly k, for k = 0 .. max_layer."""
    rings = [[node]]
    visited = {node}
    frontier = [node]
    for _ in range(max_layer):
        nxt = sorted({v for u in frontier for v in g.undirected_neighbors(u)} - visited)
        rings.append(nxt)
        visited.update(nxt)
        frontier = nxt
    return rings


def structural_distances(g: InteractionGraph, max_layer: int) -> list[dict[tuple[str, str], float]]:
    """Per-layer accumulated structural distances f_k for all node pairs.

    Layer 0 compares own degrees, so f_0(u, v) = |deg(u) - deg(v)|; layer k
    adds the DTW distance between the sorted degree sequences of the k-hop
    rings. A pair stops extending once either ring is empty. Quadratic in
    node count: intended for reference-scale graphs.
    """
    nodes = sorted(g.nodes)
    degree = {u: len(g.undirected_neighbors(u)) for u in nodes}
    rings = {u: _rings(g, u, max_layer) for u in nodes}
    degseq = {u: [sorted(degree[x] for x in ring) for ring in rings[u]] for u in nodes}
    layers: list[dict[tuple[str, str], float]] = []
    for k in range(max_layer + 1):
        dist_k: dict[tuple[str, str], float] = {}
        for i, u in enumerate(nodes):
            for v in nodes[i + 1 :]:
                if k > 0 and (u, v) not in layers[k - 1]:
                    continue
                su, sv = degseq[u][k], degseq[v][k]
                if not su or not sv:
                    continue
                d = _dtw(su, sv)
                if k > 0:
                    d += layers[k - 1][(u, v)]
                dist_k[(u, v)] = d
        if not dist_k:
            break
        layers.append(dist_k)
    return layers


def struc2vec_walks(g: InteractionGraph, cfg: WalkConfig) -> WalkCorpus:
    """Walks over the multilayer structural-similarity context graph.

    In-layer affinity between u and v is exp(-f_k(u, v)); moving up a layer
    has weight ln(gamma_k(u) + e) where gamma_k counts u's above-average
    in-layer affinities, moving down has weight 1. Only in-layer moves emit
    nodes, so consecutive walk entries are same-layer context pairs.
    """
    if not g.nodes:
        raise ValueError("cannot generate walks on an empty graph")
    nodes = sorted(g.nodes)
    layer_dists = structural_distances(g, cfg.layers)
    n_layers = len(layer_dists)

    in_layer: list[dict[str, tuple[list[str], np.ndarray]]] = []
    gammas: list[dict[str, int]] = []
    for dist_k in layer_dists:
        weights: dict[str, dict[str, float]] = {u: {} for u in nodes}
        for (u, v), d in dist_k.items():
            w = float(np.exp(-d))
            weights[u][v] = w
            weights[v][u] = w
        all_w = [w for (u, v), d in dist_k.items() for w in (np.exp(-d),)]
        avg = float(np.mean(all_w)) if all_w else 0.0
        gammas.append({u: sum(1 for w in weights[u].values() if w > avg) for u in nodes})
        table: dict[str, tuple[list[str], np.ndarray]] = {}
        for u in nodes:
            if weights[u]:
                names = sorted(weights[u])
                arr = np.array([weights[u][v] for v in names])
                table[u] = (names, arr / arr.sum())
            else:
                table[u] = ([], np.zeros(0))
        in_layer.append(table)

    walks: list[list[str]] = []
    for idx, start in enumerate(nodes):
        rng = np.random.default_rng((cfg.seed, idx))
        for _ in range(cfg.walks_per_node):
            walk = [start]
            cur, layer = start, 0
            budget = 10 * cfg.walk_length
            while len(walk) < cfg.walk_length and budget > 0:
                budget -= 1
                names, probs = in_layer[layer][cur] if n_layers else ([], None)
                can_up = layer + 1 < n_layers and in_layer[layer + 1][cur][0]
                can_down = layer > 0
                if names and (rng.random() < _STAY_PROB or not (can_up or can_down)):
                    cur = _sample(names, probs, rng)
                    walk.append(cur)
                elif can_up or can_down:
                    w_up = np.log(gammas[layer][cur] + np.e) if can_up else 0.0
                    w_down = 1.0 if can_down else 0.0
                    total = w_up + w_down
                    layer = layer + 1 if rng.random() < w_up / total else layer - 1
                else:
                    break
            walks.append(walk)
    return WalkCorpus(walks)


# ---------------------------------------------------------------------------
# Skip-gram with negative sampling
# ---------------------------------------------------------------------------

def sgns_loss_and_grads(v_center: np.ndarray, u_pos: np.ndarray, u_neg: np.ndarray,
                        neg_mask: Optional[np.ndarray] = None):
    """Negative-sampling loss for a batch of (center, context, negatives).

    v_center, u_pos: (B, D); u_neg: (B, K, D). ``neg_mask`` (B, K) zeroes
    negatives that collided with the true context. Returns the summed loss
    and gradients with respect to all three inputs.
    """
    if neg_mask is None:
        neg_mask = np.ones(u_neg.shape[:2])
    s_pos = sigmoid(np.einsum("bd,bd->b", v_center, u_pos))
    s_neg = sigmoid(np.einsum("bd,bkd->bk", v_center, u_neg))
    eps = 1e-12
    loss = -(np.log(s_pos + eps).sum()
             + (np.log(1.0 - s_neg + eps) * neg_mask).sum())
    d_pos_score = s_pos - 1.0
    d_neg_score = s_neg * neg_mask
    dv = d_pos_score[:, None] * u_pos + np.einsum("bk,bkd->bd", d_neg_score, u_neg)
    du_pos = d_pos_score[:, None] * v_center
    du_neg = d_neg_score[:, :, None] * v_center[:, None, :]
    return float(loss), dv, du_pos, du_neg


@dataclass
class NodeEmbedding:
    dim: int
    vectors: dict[str, np.ndarray]

    def user_vector(self, user_id: str) -> np.ndarray:
        """Stored vector, or a zero vector for unknown users."""
        vec = self.vectors.get(user_id)
        return vec if vec is not None else np.zeros(self.dim, dtype=np.float64)


def user_vector(emb: NodeEmbedding, user_id: str) -> np.ndarray:
    return emb.user_vector(user_id)


class SkipGram(BaseEstimator):
    """Skip-gram with negative sampling trained by mini-batched SGD.

    Center/context pairs are all ordered pairs within ``window`` of each
    other inside one walk. Negatives are drawn from the unigram^0.75 node
    distribution; draws that collide with the true context are masked out.
    Per-epoch RNG streams come from (seed, epoch), so training for k epochs
    matches the first k epochs of any longer run. Batches must stay small:
    scatter-accumulated gradients over repeated node indices act like a
    learning-rate multiplier when the vocabulary is tiny.
    """

    def __init__(self, dim: int = 128, window: int = 5, negatives: int = 5,
                 epochs: int = 5, lr: float = 0.025, batch_size: int = 64,
                 seed: int = 0):
        self.dim = dim
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, corpus: WalkCorpus | Sequence[Sequence[str]]):
        walks = corpus.walks if isinstance(corpus, WalkCorpus) else list(corpus)
        if self.dim < 2:
            raise ValueError(f"embedding dim must be >= 2, got {self.dim}")
        if not walks:
            raise ValueError("empty walk corpus")
        if self.window < 1:
            raise ValueError("window must be >= 1: no context pairs otherwise")

        vocab = sorted({node for walk in walks for node in walk})
        index = {node: i for i, node in enumerate(vocab)}
        counts = np.zeros(len(vocab))
        for walk in walks:
            for node in walk:
                counts[index[node]] += 1

        centers, contexts = [], []
        for walk in walks:
            ids = [index[n] for n in walk]
            for i, c in enumerate(ids):
                lo = max(0, i - self.window)
                hi = min(len(ids), i + self.window + 1)
                for j in range(lo, hi):
                    if j != i:
                        centers.append(c)
                        contexts.append(ids[j])
        if not centers:
            raise ValueError("no context pairs: walks too short for the window")
        centers = np.asarray(centers, dtype=np.int64)
        contexts = np.asarray(contexts, dtype=np.int64)

        noise = counts ** 0.75
        noise_cum = np.cumsum(noise / noise.sum())

        init_rng = np.random.default_rng(self.seed)
        w_in = init_rng.uniform(-0.5 / self.dim, 0.5 / self.dim, (len(vocab), self.dim))
        w_out = np.zeros((len(vocab), self.dim))

        self.history_ = []
        for epoch in range(self.epochs):
            rng = np.random.default_rng((self.seed, epoch + 1))
            order = rng.permutation(len(centers))
            total = 0.0
            for lo in range(0, len(order), self.batch_size):
                batch = order[lo : lo + self.batch_size]
                c_idx, o_idx = centers[batch], contexts[batch]
                negs = np.searchsorted(noise_cum,
                                       rng.random((len(batch), self.negatives)))
                negs = np.minimum(negs, len(vocab) - 1)
                mask = (negs != o_idx[:, None]).astype(np.float64)
                loss, dv, du_pos, du_neg = sgns_loss_and_grads(
                    w_in[c_idx], w_out[o_idx], w_out[negs], mask)
                total += loss
                np.add.at(w_in, c_idx, -self.lr * dv)
                np.add.at(w_out, o_idx, -self.lr * du_pos)
                np.add.at(w_out, negs.ravel(),
                          -self.lr * du_neg.reshape(-1, self.dim))
            self.history_.append(total / len(centers))

        self.vocab_ = vocab
        self.embedding_ = NodeEmbedding(
            dim=self.dim, vectors={node: w_in[index[node]].copy() for node in vocab})
        return self


def train_skipgram(corpus: WalkCorpus, dim: int = 128, window: int = 5,
                   negatives: int = 5, epochs: int = 5, seed: int = 0,
                   lr: float = 0.025) -> NodeEmbedding:
    model = SkipGram(dim=dim, window=window, negatives=negatives, epochs=epochs,
                     lr=lr, seed=seed)
    return model.fit(corpus).embedding_


def export_embeddings(emb: NodeEmbedding, path: str | Path) -> None:
    """Write node vectors in word2vec text format keyed by node id."""
    from .embedfeat import EmbeddingTable, save_embeddings

    table = EmbeddingTable(name="custom", dim=emb.dim, vectors=emb.vectors)
    save_embeddings(table, path)
