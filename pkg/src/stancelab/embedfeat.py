"""Pretrained word-embedding tables, sequence matrices and similarity vectors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .freqfeat import PcaReducer

# Sources with pinned dimensionalities; anything else is "custom".
NAMED_SOURCES = {
    "glove_itwiki": 300,
    "fasttext_it": 300,
    "twita100": 100,
    "twita300": 300,
    "bert_multi": 768,
}


class EmbeddingTable:
    """A word -> vector mapping where every vector shares one dimension."""

    def __init__(self, name: str, dim: int, vectors: dict[str, np.ndarray]):
        expected = NAMED_SOURCES.get(name)
        if expected is not None and expected != dim:
            raise ValueError(f"source {name!r} is {expected}-dimensional, got dim={dim}")
        self.name = name
        self.dim = dim
        self.vectors = vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def get(self, word: str) -> Optional[np.ndarray]:
        return self.vectors.get(word)

    def words(self) -> list[str]:
        return list(self.vectors)


def load_embeddings(path: str | Path, expected_dim: Optional[int] = None,
                    name: str = "custom") -> EmbeddingTable:
    """Parse a word2vec-text embedding file.

    Format: a header line ``count dim`` followed by ``word v1 ... vdim``
    lines. Ragged lines and dim mismatches raise with the offending line
    number; duplicated words keep the first occurrence with a warning.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"embedding file not found: {path}")
    vectors: dict[str, np.ndarray] = {}
    duplicates: list[str] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: line 1: expected header 'count dim'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise ValueError(f"{path}: line 1: expected integer header 'count dim'") from exc
        if expected_dim is not None and dim != expected_dim:
            raise ValueError(
                f"{path}: header declares dim={dim} but expected_dim={expected_dim}"
            )
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(
                    f"{path}: line {line_no}: expected {dim} floats after the word, "
                    f"got {len(parts) - 1}"
                )
            word = parts[0]
            try:
                vec = np.asarray([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ValueError(f"{path}: line {line_no}: non-numeric value") from exc
            if word in vectors:
                duplicates.append(word)
                continue
            vectors[word] = vec
    if duplicates:
        warnings.warn(f"{path}: {len(duplicates)} duplicated word(s) "
                      f"(kept first occurrence): {duplicates[:5]}")
    if count != len(vectors) + len(duplicates):
        warnings.warn(f"{path}: header count {count} != {len(vectors)} parsed words")
    return EmbeddingTable(name=name, dim=dim, vectors=vectors)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write a table back to word2vec text format (6-decimal precision)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.vectors)} {table.dim}\n")
        for word, vec in table.vectors.items():
            fh.write(word + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")


@dataclass(frozen=True)
class SequenceMatrix:
    """A fixed-length token-vector sequence with a validity mask.

    ``mask[t]`` is True for real steps (including OOV tokens, which carry a
    zero row) and False for right-padding; padding rows are all-zero.
    """

    rows: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if self.rows.shape[0] != self.mask.shape[0]:
            raise ValueError("rows and mask length differ")
        if self.rows[~self.mask].size and np.any(self.rows[~self.mask] != 0.0):
            raise ValueError("padding rows must be all-zero")

    @property
    def length(self) -> int:
        return int(self.mask.sum())


def embed_sequence(tokens: Sequence[str], table: EmbeddingTable,
                   max_len: int = 64) -> SequenceMatrix:
    """Look up per-token vectors, truncating/right-padding to ``max_len``.

    OOV tokens become zero rows with mask True; padding rows have mask False.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    rows = np.zeros((max_len, table.dim), dtype=np.float64)
    mask = np.zeros(max_len, dtype=bool)
    for t, tok in enumerate(tokens[:max_len]):
        vec = table.get(tok)
        if vec is not None:
            rows[t] = vec
        mask[t] = True
    return SequenceMatrix(rows=rows, mask=mask)


class SimilarityTable:
    """Per-word cosine-similarity vectors against a training anchor vocabulary.

    Entry i of the vector for ``w`` is cos(emb(w), emb(anchor_i)) in the base
    embedding space; every entry lies in [-1, 1] and a zero base vector maps
    to the zero vector.
    """

    def __init__(self, base: EmbeddingTable, anchor_vocab: Sequence[str]):
        anchors = [a for a in anchor_vocab if a in base]
        dropped = [a for a in anchor_vocab if a not in base]
        if dropped:
            warnings.warn(f"{len(dropped)} anchor word(s) absent from the base table "
                          f"were dropped: {dropped[:5]}")
        if not anchors:
            raise ValueError("empty anchor vocabulary (after dropping absent words)")
        self.base = base
        self.anchors = tuple(anchors)
        matrix = np.stack([base.vectors[a] for a in anchors])
        norms = np.linalg.norm(matrix, axis=1)
        norms[norms == 0.0] = 1.0
        self._unit_anchors = matrix / norms[:, None]

    @property
    def dim(self) -> int:
        return len(self.anchors)

    def vector(self, word: str) -> np.ndarray:
        """Similarity vector of ``word``; zero for OOV or zero-vector words."""
        vec = self.base.get(word)
        if vec is None:
            return np.zeros(self.dim, dtype=np.float64)
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            return np.zeros(self.dim, dtype=np.float64)
        return np.clip(self._unit_anchors @ (vec / norm), -1.0, 1.0)


def build_similarity_table(table: EmbeddingTable,
                           anchor_vocab: Sequence[str]) -> SimilarityTable:
    return SimilarityTable(table, anchor_vocab)


def save_sv_table(sim: SimilarityTable, words: Sequence[str], path: str | Path) -> None:
    """Cache similarity vectors for ``words`` in word2vec text format.

    The anchor vocabulary goes to a ``<path>.anchors.json`` sidecar so a
    cached table remains interpretable without the base embeddings.
    """
    import json

    path = Path(path)
    known = [w for w in words if w in sim.base]
    table = EmbeddingTable(name="custom", dim=sim.dim,
                           vectors={w: sim.vector(w) for w in known})
    save_embeddings(table, path)
    Path(str(path) + ".anchors.json").write_text(
        json.dumps({"base": sim.base.name, "anchors": list(sim.anchors)}))


def load_sv_table(path: str | Path) -> tuple[EmbeddingTable, list[str]]:
    """Load a cached SV table plus its anchor list."""
    import json

    path = Path(path)
    table = load_embeddings(path)
    sidecar = json.loads(Path(str(path) + ".anchors.json").read_text())
    anchors = sidecar["anchors"]
    if table.dim != len(anchors):
        raise ValueError(f"{path}: vector dim {table.dim} does not match "
                         f"{len(anchors)} anchors in the sidecar")
    return table, anchors


def fit_sv_pca(sim: SimilarityTable, train_vocab: Sequence[str], k: int = 100) -> PcaReducer:
    """Fit PCA on the similarity-vector rows of the training vocabulary.

    One row per distinct training word present in the base table.
    """
    words = [w for w in sorted(set(train_vocab)) if w in sim.base]
    if not words:
        raise ValueError("no training words present in the base embedding table")
    rows = np.stack([sim.vector(w) for w in words])
    return PcaReducer(k=k).fit(rows)


def sv_sequence(tokens: Sequence[str], sim: SimilarityTable,
                pca: Optional[PcaReducer] = None, max_len: int = 64) -> SequenceMatrix:
    """Per-token similarity-vector rows, optionally PCA-reduced per row.

    OOV tokens (absent from the base table) stay exactly zero, bypassing the
    PCA projection; padding follows embed_sequence.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    width = pca.k_eff_ if pca is not None else sim.dim
    rows = np.zeros((max_len, width), dtype=np.float64)
    mask = np.zeros(max_len, dtype=bool)
    for t, tok in enumerate(tokens[:max_len]):
        mask[t] = True
        if tok not in sim.base:
            continue
        sv = sim.vector(tok)
        rows[t] = pca.transform_rows(sv[None, :])[0] if pca is not None else sv
    return SequenceMatrix(rows=rows, mask=mask)


class SequenceEmbedder(BaseEstimator, TransformerMixin):
    """Estimator wrapper mapping token lists to stacked sequence matrices."""

    def __init__(self, table: EmbeddingTable, max_len: int = 64):
        self.table = table
        self.max_len = max_len

    def fit(self, docs=None, y=None):
        return self

    def transform(self, docs: Sequence[Sequence[str]]) -> tuple[np.ndarray, np.ndarray]:
        seqs = [embed_sequence(doc, self.table, self.max_len) for doc in docs]
        return (np.stack([s.rows for s in seqs]),
                np.stack([s.mask for s in seqs]))


class SvSequencer(BaseEstimator, TransformerMixin):
    """Estimator wrapper mapping token lists to stacked SV sequence matrices."""

    def __init__(self, sim: SimilarityTable, pca: Optional[PcaReducer] = None,
                 max_len: int = 64):
        self.sim = sim
        self.pca = pca
        self.max_len = max_len

    def fit(self, docs=None, y=None):
        return self

    def transform(self, docs: Sequence[Sequence[str]]) -> tuple[np.ndarray, np.ndarray]:
        seqs = [sv_sequence(doc, self.sim, self.pca, self.max_len) for doc in docs]
        return (np.stack([s.rows for s in seqs]),
                np.stack([s.mask for s in seqs]))
