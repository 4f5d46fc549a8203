"""Frequency/structural feature family and PCA reduction.

Everything here follows the train-fit discipline: vocabularies, document
frequencies, char-gram inventories and PCA models are fitted on the training
split only and frozen; transforming other data never mutates fitted state.
"""

from __future__ import annotations

import json
import string
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import Corpus, Tweet, preprocess
from ._validation import check_fitted, check_no_nonfinite

# Relation types carrying a community one-hot block, in canonical order.
COMMUNITY_RELATIONS = ("quote", "reply", "retweet", "friend")

# The named frequency/structural features, in the canonical order used when
# concatenating a feature subset into one block.
FREQ_FEATURE_NAMES = (
    "unigram",
    "Tfidf_unigram",
    "chargrams",
    "punctuationmarks",
    "hashtags",
    "length",
    "network_quote_community",
    "network_reply_community",
    "network_retweet_community",
    "network_friend_community",
    "userinfobio",
    "tweetinfocreateat",
)


@dataclass(frozen=True)
class FeatureBlock:
    """A named dense matrix flowing into fusion.

    ``kind="vector"`` blocks are (instances x dims); ``kind="sequence"``
    blocks are (instances x steps x dims) with a boolean step mask.
    """

    name: str
    matrix: np.ndarray
    kind: str = "vector"
    ordering: tuple[str, ...] = ()
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        check_no_nonfinite(self.matrix, f"feature block {self.name!r}")
        if self.kind not in ("vector", "sequence"):
            raise ValueError(f"unknown block kind: {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[-1]

    def __len__(self) -> int:
        return self.matrix.shape[0]


def save_block(block: FeatureBlock, path: str | Path) -> None:
    """Persist a block as an .npz container plus a JSON sidecar.

    The sidecar carries {name, dims, ordering} so other components can
    interpret the columns without unpickling anything.
    """
    path = Path(path)
    arrays = {"matrix": block.matrix}
    if block.mask is not None:
        arrays["mask"] = block.mask
    np.savez(path.with_suffix(".npz"), **arrays)
    sidecar = {
        "name": block.name,
        "kind": block.kind,
        "dims": list(block.matrix.shape),
        "ordering": list(block.ordering),
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))


def load_block(path: str | Path) -> FeatureBlock:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    with np.load(path.with_suffix(".npz")) as data:
        matrix = data["matrix"]
        mask = data["mask"] if "mask" in data.files else None
    return FeatureBlock(name=sidecar["name"], matrix=matrix, kind=sidecar["kind"],
                        ordering=tuple(sidecar["ordering"]), mask=mask)


class Vocabulary:
    """Ordered term list with positions contiguous from 0.

    Terms are sorted so the vocabulary is invariant under document order.
    """

    def __init__(self, terms: Sequence[str]):
        self.terms = tuple(sorted(set(terms)))
        self.index = {t: i for i, t in enumerate(self.terms)}

    @classmethod
    def from_docs(cls, docs: Sequence[Sequence[str]]) -> "Vocabulary":
        seen: set[str] = set()
        for doc in docs:
            seen.update(doc)
        return cls(sorted(seen))

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


class UnigramFeatures(BaseEstimator, TransformerMixin):
    """Raw unigram counts over a training-fit vocabulary. OOV tokens ignored."""

    def fit(self, docs: Sequence[Sequence[str]], y=None):
        self.vocabulary_ = Vocabulary.from_docs(docs)
        return self

    def transform(self, docs: Sequence[Sequence[str]]) -> FeatureBlock:
        check_fitted(self, "vocabulary_")
        vocab = self.vocabulary_
        out = np.zeros((len(docs), len(vocab)), dtype=np.float64)
        for i, doc in enumerate(docs):
            for tok in doc:
                j = vocab.index.get(tok)
                if j is not None:
                    out[i, j] += 1.0
        return FeatureBlock("unigram", out, ordering=vocab.terms)


class TfidfFeatures(BaseEstimator, TransformerMixin):
    """TF-IDF with raw term counts and smoothed idf, no normalization.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1 with N and df frozen from the
    training docs; a term present in every training doc has idf exactly 1.
    """

    def fit(self, docs: Sequence[Sequence[str]], y=None):
        self.vocabulary_ = Vocabulary.from_docs(docs)
        n_docs = len(docs)
        df = np.zeros(len(self.vocabulary_), dtype=np.int64)
        for doc in docs:
            for j in {self.vocabulary_.index[t] for t in set(doc) if t in self.vocabulary_}:
                df[j] += 1
        self.idf_ = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
        return self

    def transform(self, docs: Sequence[Sequence[str]]) -> FeatureBlock:
        check_fitted(self, "idf_")
        counts = np.zeros((len(docs), len(self.vocabulary_)), dtype=np.float64)
        for i, doc in enumerate(docs):
            for tok in doc:
                j = self.vocabulary_.index.get(tok)
                if j is not None:
                    counts[i, j] += 1.0
        return FeatureBlock("Tfidf_unigram", counts * self.idf_,
                            ordering=self.vocabulary_.terms)


class CharGramFeatures(BaseEstimator, TransformerMixin):
    """Character n-gram counts for lo <= n <= hi over train-fit grams."""

    def __init__(self, n_range: tuple[int, int] = (2, 5)):
        self.n_range = n_range

    def _check_range(self):
        lo, hi = self.n_range
        if not (1 <= lo <= hi):
            raise ValueError(f"invalid n_range {self.n_range}: need 1 <= lo <= hi")
        return lo, hi

    @staticmethod
    def _grams(text: str, lo: int, hi: int):
        for n in range(lo, hi + 1):
            for i in range(len(text) - n + 1):
                yield text[i : i + n]

    def fit(self, texts: Sequence[str], y=None):
        lo, hi = self._check_range()
        seen: set[str] = set()
        for text in texts:
            seen.update(self._grams(text, lo, hi))
        self.grams_ = tuple(sorted(seen))
        self.index_ = {g: i for i, g in enumerate(self.grams_)}
        return self

    def transform(self, texts: Sequence[str]) -> FeatureBlock:
        check_fitted(self, "grams_")
        lo, hi = self._check_range()
        out = np.zeros((len(texts), len(self.grams_)), dtype=np.float64)
        for i, text in enumerate(texts):
            for g in self._grams(text, lo, hi):
                j = self.index_.get(g)
                if j is not None:
                    out[i, j] += 1.0
        return FeatureBlock("chargrams", out, ordering=self.grams_)


def _is_punctuation(ch: str) -> bool:
    return ch in string.punctuation or unicodedata.category(ch).startswith("P")


class StructuralFeatures(BaseEstimator, TransformerMixin):
    """Per-tweet structural/profile features.

    Concatenates, in fixed order: punctuation-mark count, hashtag count,
    token length, one community one-hot block per relation type
    (quote, reply, retweet, friend), bio flag + bio token length, and a
    24-slot creation-hour one-hot. ``features`` selects a subset; authors
    missing from a community mapping get an all-zero one-hot, as do tweets
    without a parsable timestamp.
    """

    def __init__(self, features: Sequence[str] = ("punctuationmarks", "hashtags",
                                                  "length", "userinfobio",
                                                  "tweetinfocreateat"),
                 communities: Optional[dict[str, dict[str, int]]] = None,
                 preprocess_mode: str = "twita_clean"):
        self.features = features
        self.communities = communities
        self.preprocess_mode = preprocess_mode

    def fit(self, corpus: Corpus, y=None):
        self.community_sizes_ = {}
        for rel in COMMUNITY_RELATIONS:
            name = f"network_{rel}_community"
            if name in self.features:
                mapping = (self.communities or {}).get(rel)
                if mapping is None:
                    raise ValueError(f"feature {name!r} requested but no community "
                                     f"mapping given for relation {rel!r}")
                self.community_sizes_[rel] = max(mapping.values(), default=-1) + 1
        self.ordering_ = tuple(self._iter_slot_names())
        return self

    def _iter_slot_names(self):
        for feat in self.features:
            if feat == "punctuationmarks":
                yield "punctuationmarks"
            elif feat == "hashtags":
                yield "hashtags"
            elif feat == "length":
                yield "length"
            elif feat.startswith("network_"):
                rel = feat.split("_")[1]
                for k in range(self.community_sizes_[rel]):
                    yield f"{feat}={k}"
            elif feat == "userinfobio":
                yield "bio_present"
                yield "bio_length"
            elif feat == "tweetinfocreateat":
                for h in range(24):
                    yield f"created_hour={h}"
            else:
                raise ValueError(f"unknown structural feature: {feat!r}")

    def _tweet_vector(self, tweet: Tweet) -> list[float]:
        row: list[float] = []
        tokens = None
        for feat in self.features:
            if feat == "punctuationmarks":
                row.append(float(sum(1 for ch in tweet.text if _is_punctuation(ch))))
            elif feat == "hashtags":
                if tokens is None:
                    tokens = preprocess(tweet.text, self.preprocess_mode)
                row.append(float(sum(1 for t in tokens if t.startswith("#"))))
            elif feat == "length":
                if tokens is None:
                    tokens = preprocess(tweet.text, self.preprocess_mode)
                row.append(float(len(tokens)))
            elif feat.startswith("network_"):
                rel = feat.split("_")[1]
                size = self.community_sizes_[rel]
                onehot = [0.0] * size
                cid = (self.communities or {}).get(rel, {}).get(tweet.author_id)
                if cid is not None and 0 <= cid < size:
                    onehot[cid] = 1.0
                row.extend(onehot)
            elif feat == "userinfobio":
                row.append(1.0 if tweet.bio else 0.0)
                row.append(float(len(tweet.bio.split())) if tweet.bio else 0.0)
            elif feat == "tweetinfocreateat":
                onehot = [0.0] * 24
                if tweet.created_at is not None:
                    onehot[tweet.created_at.hour] = 1.0
                row.extend(onehot)
        return row

    def transform(self, corpus: Corpus | Sequence[Tweet]) -> FeatureBlock:
        check_fitted(self, "ordering_")
        rows = [self._tweet_vector(t) for t in corpus]
        matrix = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(self.ordering_))
        return FeatureBlock("structural", matrix, ordering=self.ordering_)


class PcaReducer(BaseEstimator, TransformerMixin):
    """PCA via SVD of the centered training matrix.

    k is clamped to the rank of the centered matrix, so asking for 100
    components of a 14-dimensional block yields 14. Component rows are
    orthonormal; signs are fixed so the largest-magnitude entry of each
    component is positive.
    """

    def __init__(self, k: int = 100):
        self.k = k

    def fit(self, block: FeatureBlock | np.ndarray, y=None):
        X = block.matrix if isinstance(block, FeatureBlock) else np.asarray(block, dtype=np.float64)
        if X.size == 0 or X.shape[0] == 0:
            raise ValueError("cannot fit PCA on an empty block")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        u, s, vt = np.linalg.svd(centered, full_matrices=False)
        tol = s.max(initial=0.0) * max(centered.shape) * np.finfo(np.float64).eps
        rank = int(np.sum(s > tol))
        self.k_eff_ = max(1, min(self.k, rank)) if rank > 0 else 1
        components = vt[: self.k_eff_]
        # fix the SVD sign ambiguity for reproducibility
        signs = np.sign(components[np.arange(self.k_eff_),
                                   np.argmax(np.abs(components), axis=1)])
        signs[signs == 0] = 1.0
        self.components_ = components * signs[:, None]
        var = (s ** 2) / max(X.shape[0] - 1, 1)
        self.explained_variance_ = var[: self.k_eff_]
        total = var.sum()
        self.explained_variance_ratio_ = (
            self.explained_variance_ / total if total > 0 else np.zeros(self.k_eff_)
        )
        return self

    def transform(self, block: FeatureBlock | np.ndarray) -> FeatureBlock:
        check_fitted(self, "components_")
        X = block.matrix if isinstance(block, FeatureBlock) else np.asarray(block, dtype=np.float64)
        if X.shape[-1] != self.mean_.shape[0]:
            raise ValueError(
                f"dimension mismatch: block has {X.shape[-1]} dims, PCA was fit on "
                f"{self.mean_.shape[0]}"
            )
        name = block.name if isinstance(block, FeatureBlock) else "pca"
        projected = (X - self.mean_) @ self.components_.T
        return FeatureBlock(f"PCA({name})", projected,
                            ordering=tuple(f"pc{i}" for i in range(self.k_eff_)))

    def transform_rows(self, rows: np.ndarray) -> np.ndarray:
        """Project raw rows (used for per-token similarity vectors)."""
        check_fitted(self, "components_")
        if rows.shape[-1] != self.mean_.shape[0]:
            raise ValueError(
                f"dimension mismatch: rows have {rows.shape[-1]} dims, PCA was fit on "
                f"{self.mean_.shape[0]}"
            )
        return (rows - self.mean_) @ self.components_.T


class FrequencyFeatures(BaseEstimator, TransformerMixin):
    """Build one combined block from a subset of the named frequency features.

    Sub-blocks are concatenated in the canonical FREQ_FEATURE_NAMES order, no
    matter the order given, and the combined ordering metadata names every
    column. Token-level features are computed from ``preprocess_mode``.
    """

    def __init__(self, features: Sequence[str] = FREQ_FEATURE_NAMES,
                 chargram_range: tuple[int, int] = (2, 5),
                 communities: Optional[dict[str, dict[str, int]]] = None,
                 preprocess_mode: str = "twita_clean"):
        self.features = features
        self.chargram_range = chargram_range
        self.communities = communities
        self.preprocess_mode = preprocess_mode

    def _docs(self, corpus) -> list[list[str]]:
        return [preprocess(t.text, self.preprocess_mode) for t in corpus]

    def fit(self, corpus: Corpus, y=None):
        unknown = [f for f in self.features if f not in FREQ_FEATURE_NAMES]
        if unknown:
            raise ValueError(f"unknown frequency feature(s) {unknown}; "
                             f"valid names: {', '.join(FREQ_FEATURE_NAMES)}")
        selected = [f for f in FREQ_FEATURE_NAMES if f in self.features]
        if not selected:
            raise ValueError("no frequency features selected")
        self.selected_ = selected

        docs = self._docs(corpus)
        self.parts_ = {}
        if "unigram" in selected:
            self.parts_["unigram"] = UnigramFeatures().fit(docs)
        if "Tfidf_unigram" in selected:
            self.parts_["Tfidf_unigram"] = TfidfFeatures().fit(docs)
        if "chargrams" in selected:
            self.parts_["chargrams"] = CharGramFeatures(self.chargram_range).fit(
                [t.text for t in corpus])
        structural = [f for f in selected
                      if f not in ("unigram", "Tfidf_unigram", "chargrams")]
        if structural:
            self.parts_["structural"] = StructuralFeatures(
                structural, communities=self.communities,
                preprocess_mode=self.preprocess_mode).fit(corpus)
        return self

    def transform(self, corpus: Corpus | Sequence[Tweet]) -> FeatureBlock:
        check_fitted(self, "parts_")
        docs = self._docs(corpus)
        blocks: list[FeatureBlock] = []
        if "unigram" in self.parts_:
            blocks.append(self.parts_["unigram"].transform(docs))
        if "Tfidf_unigram" in self.parts_:
            blocks.append(self.parts_["Tfidf_unigram"].transform(docs))
        if "chargrams" in self.parts_:
            blocks.append(self.parts_["chargrams"].transform([t.text for t in corpus]))
        if "structural" in self.parts_:
            blocks.append(self.parts_["structural"].transform(corpus))
        matrix = np.concatenate([b.matrix for b in blocks], axis=1) if blocks else \
            np.zeros((len(docs), 0))
        ordering = tuple(f"{b.name}:{col}" for b in blocks for col in b.ordering)
        return FeatureBlock("frequency", matrix, ordering=ordering)
