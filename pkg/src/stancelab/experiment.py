"""Randomized-configuration experiments: sampling, orchestration, reporting.

A RunConfig describes one architecture setting; ``run`` executes the full
pipeline (features -> heads -> fusion -> train -> evaluate) on it, in two
regimes when a test corpus is available: training on the stratified 80%
split (T%80) and retraining on all training data with the epoch budget the
80% run selected (T%100).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .corpus import Corpus, SplitSpec, preprocess, stratified_split, load_corpus
from .embedfeat import (EmbeddingTable, SequenceEmbedder, SimilarityTable,
                        SvSequencer, fit_sv_pca, load_embeddings)
from .freqfeat import FREQ_FEATURE_NAMES, FrequencyFeatures, PcaReducer
from .fusion import FusedClassifier, FusionConfig, OptimizerConfig
from .gnnembed import SkipGram, WalkConfig, generate_walks
from .heads import HEAD_KINDS, HeadConfig
from .metrics import accuracy, f_avg, per_class_prf
from .netgraph import RelationRecord, build_graph, community_detect, load_relations

# Official task baselines (SVM + unigrams), used as read-only report rows.
BASELINES = {"task_a": 0.578, "task_b": 0.628}

GRAPH_STRATEGIES = ("deepwalk", "node2vec", "struc2vec", "none")

# -- settings grammar -------------------------------------------------------

_HEAD_FMT = {"cnn2d_multi": "Conv2D", "cnn1d": "Conv1D",
             "bilstm": "BiLSTM", "att_bilstm": "AttLSTM"}
_HEAD_PARSE = {"conv2d": "cnn2d_multi", "conv1d": "cnn1d",
               "bilstm": "bilstm", "attlstm": "att_bilstm"}
_SOURCE_FMT = {"fasttext_it": "FastText", "twita300": "TWITA300",
               "twita100": "TWITA100", "glove_itwiki": "GloVe",
               "bert_multi": "BERT"}
_SOURCE_PARSE = {"fasttext": "fasttext_it", "twita300": "twita300",
                 "twita100": "twita100", "glove": "glove_itwiki",
                 "bert": "bert_multi"}
_GRAPH_FMT = {"deepwalk": "DeepWalk", "node2vec": "Node2Vec", "struc2vec": "Struc2Vec"}
_GRAPH_PARSE = {"deepwalk": "deepwalk", "node2vec": "node2vec",
                "struc2vec": "struc2vec", "struct2vec": "struc2vec"}
_FEATURE_PARSE = {name.lower(): name for name in FREQ_FEATURE_NAMES}
_FEATURE_PARSE["puntuactionmarks"] = "punctuationmarks"  # spelling in the wild


@dataclass(frozen=True)
class EmbedBlockSpec:
    source: str
    head: str = "cnn2d_multi"


@dataclass(frozen=True)
class SvBlockSpec:
    head: str = "cnn2d_multi"
    base_source: str = "twita300"
    pca: bool = True
    pca_k: int = 100


@dataclass(frozen=True)
class FreqBlockSpec:
    features: tuple[str, ...]
    pca_k: int = 100
    head: Optional[str] = None


@dataclass
class RunConfig:
    """One sampled architecture setting.

    ``overrides`` tunes module defaults without changing the settings string:
    recognized keys are "walk", "skipgram", "head", "optimizer", "fusion",
    "chargram_range" and "require_friendship".
    """

    embed: Optional[EmbedBlockSpec] = None
    sv: Optional[SvBlockSpec] = None
    freq: Optional[FreqBlockSpec] = None
    graph: str = "none"
    preprocess_mode: str = "twita_clean"
    split_seed: int = 0
    train_ratio: float = 0.8
    max_len: int = 64
    overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.embed is None and self.sv is None and self.freq is None:
            raise ValueError(
                "configuration has no text-derived block: at least one of the "
                "embedding head, SV head or frequency features must be active "
                "(a graph block alone cannot classify an utterance)")
        if self.graph not in GRAPH_STRATEGIES:
            raise ValueError(f"unknown graph strategy {self.graph!r}; "
                             f"valid: {', '.join(GRAPH_STRATEGIES)}")
        for head in [spec.head for spec in (self.embed, self.sv) if spec] + \
                ([self.freq.head] if self.freq and self.freq.head else []):
            if head not in HEAD_KINDS:
                raise ValueError(f"unknown head kind {head!r}; valid: {', '.join(HEAD_KINDS)}")
        if self.freq:
            unknown = [f for f in self.freq.features if f not in FREQ_FEATURE_NAMES]
            if unknown:
                raise ValueError(f"unknown frequency feature(s) {unknown}; "
                                 f"valid: {', '.join(FREQ_FEATURE_NAMES)}")

    def active_blocks(self) -> tuple[str, ...]:
        blocks = []
        if self.embed:
            blocks.append("embed_head")
        if self.sv:
            blocks.append("sv_head")
        if self.freq:
            blocks.append("freq_pca")
        if self.graph != "none":
            blocks.append("graph_user")
        return tuple(blocks)

    @property
    def settings(self) -> str:
        return format_settings(self)

    def to_dict(self) -> dict:
        out = {
            "settings": self.settings,
            "preprocess_mode": self.preprocess_mode,
            "split_seed": self.split_seed,
            "train_ratio": self.train_ratio,
            "max_len": self.max_len,
            "overrides": self.overrides,
        }
        if self.embed:
            out["embed"] = asdict(self.embed)
        if self.sv:
            out["sv"] = asdict(self.sv)
        if self.freq:
            out["freq"] = asdict(self.freq)
        out["graph"] = self.graph
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if "settings" in data and not any(k in data for k in ("embed", "sv", "freq")):
            cfg = parse_settings(data["settings"])
        else:
            cfg = cls(
                embed=EmbedBlockSpec(**data["embed"]) if data.get("embed") else None,
                sv=SvBlockSpec(**{**data["sv"],
                                  "pca_k": data["sv"].get("pca_k", 100)})
                if data.get("sv") else None,
                freq=FreqBlockSpec(**{**data["freq"],
                                      "features": tuple(data["freq"]["features"])})
                if data.get("freq") else None,
                graph=data.get("graph", "none"),
            )
        for key in ("preprocess_mode", "split_seed", "train_ratio", "max_len", "overrides"):
            if key in data:
                setattr(cfg, key, data[key])
        cfg.validate()
        return cfg


def _split_top_level(text: str, sep: str = "+") -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError(f"unbalanced parentheses in settings: {text!r}")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ValueError(f"unbalanced parentheses in settings: {text!r}")
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def _parse_call(term: str) -> Optional[tuple[str, str]]:
    if "(" not in term:
        return None
    name, rest = term.split("(", 1)
    if not rest.endswith(")"):
        raise ValueError(f"malformed term {term!r}: expected NAME(...)")
    return name.strip(), rest[:-1].strip()


def _parse_features(inner: str) -> tuple[str, ...]:
    names = []
    for raw in _split_top_level(inner):
        canonical = _FEATURE_PARSE.get(raw.strip().lower())
        if canonical is None:
            raise ValueError(f"unknown feature name {raw.strip()!r}; valid: "
                             f"{', '.join(FREQ_FEATURE_NAMES)}")
        names.append(canonical)
    # canonical order, duplicates collapsed
    return tuple(f for f in FREQ_FEATURE_NAMES if f in names)


def parse_settings(text: str) -> RunConfig:
    """Parse a Table-2-style settings string into a RunConfig.

    Grammar: ``TERM (" + " TERM)*`` with TERM one of ``HEAD(SOURCE)``,
    ``HEAD(SVs)``, ``HEAD(PCA(SVs))``, ``HEAD(PCA(FEATLIST))``,
    ``PCA(FEATLIST)`` or a graph name. A head over PCA(FEATLIST) feeds the
    reduced frequency vector to the head as a single-channel sequence.
    """
    cfg = RunConfig()
    for term in _split_top_level(text):
        if not term:
            raise ValueError(f"empty term in settings: {text!r}")
        call = _parse_call(term)
        if call is None:
            strategy = _GRAPH_PARSE.get(term.lower())
            if strategy is None:
                raise ValueError(
                    f"unknown term {term!r}; expected HEAD(...) with HEAD in "
                    f"{', '.join(sorted(set(_HEAD_FMT.values())))}, PCA(...), or a graph in "
                    f"{', '.join(sorted(set(_GRAPH_FMT.values())))}")
            if cfg.graph != "none":
                raise ValueError(f"duplicate graph term {term!r}")
            cfg.graph = strategy
            continue
        name, inner = call
        if name.lower() == "pca":
            if cfg.freq is not None:
                raise ValueError("duplicate frequency block in settings")
            cfg.freq = FreqBlockSpec(features=_parse_features(inner))
            continue
        kind = _HEAD_PARSE.get(name.lower())
        if kind is None:
            raise ValueError(f"unknown head name {name!r}; valid: "
                             f"{', '.join(sorted(set(_HEAD_FMT.values())))}")
        inner_call = _parse_call(inner)
        if inner_call and inner_call[0].lower() == "pca":
            arg = inner_call[1]
            if arg.lower() == "svs":
                if cfg.sv is not None:
                    raise ValueError("duplicate SV block in settings")
                cfg.sv = SvBlockSpec(head=kind, pca=True)
            else:
                if cfg.freq is not None:
                    raise ValueError("duplicate frequency block in settings")
                cfg.freq = FreqBlockSpec(features=_parse_features(arg), head=kind)
        elif inner.lower() == "svs":
            if cfg.sv is not None:
                raise ValueError("duplicate SV block in settings")
            cfg.sv = SvBlockSpec(head=kind, pca=False)
        else:
            if cfg.embed is not None:
                raise ValueError("duplicate embedding block in settings")
            source = _SOURCE_PARSE.get(inner.lower(), inner)
            cfg.embed = EmbedBlockSpec(source=source, head=kind)
    cfg.validate()
    return cfg


def format_settings(cfg: RunConfig) -> str:
    """Canonical settings string; format(parse(s)) is a fixpoint of format."""
    terms = []
    if cfg.embed:
        source = _SOURCE_FMT.get(cfg.embed.source, cfg.embed.source)
        terms.append(f"{_HEAD_FMT[cfg.embed.head]}({source})")
    if cfg.sv:
        inner = "PCA(SVs)" if cfg.sv.pca else "SVs"
        terms.append(f"{_HEAD_FMT[cfg.sv.head]}({inner})")
    if cfg.freq:
        core = "PCA(" + " + ".join(cfg.freq.features) + ")"
        terms.append(f"{_HEAD_FMT[cfg.freq.head]}({core})" if cfg.freq.head else core)
    if cfg.graph != "none":
        terms.append(_GRAPH_FMT[cfg.graph])
    return " + ".join(terms)


# -- randomized sampling ----------------------------------------------------

DEFAULT_SPACE: dict[str, list] = {
    "embed_source": ["fasttext_it", "twita300", "twita100", "glove_itwiki"],
    "embed_head": ["cnn2d_multi", "cnn1d", "bilstm", "att_bilstm", "none"],
    "sv_active": [True, False],
    "sv_head": ["cnn2d_multi", "cnn1d", "bilstm", "att_bilstm"],
    "sv_pca_k": [50, 100, 150],
    "freq_subset": [
        ["unigram", "Tfidf_unigram", "length"],
        ["Tfidf_unigram", "chargrams"],
        ["unigram", "length"],
        list(FREQ_FEATURE_NAMES),
        "none",
    ],
    "freq_pca_k": [50, 100, 150],
    "graph": ["deepwalk", "node2vec", "struc2vec", "none"],
    "preprocess": ["twita_clean", "none"],
}

_AXIS_ORDER = ("embed_source", "embed_head", "sv_active", "sv_head", "sv_pca_k",
               "freq_subset", "freq_pca_k", "graph", "preprocess")


def _draw_config(space: dict, rng: np.random.Generator) -> RunConfig:
    picks = {}
    for axis in _AXIS_ORDER:
        options = space.get(axis, DEFAULT_SPACE[axis])
        if not options:
            raise ValueError(f"axis {axis!r} has no options")
        picks[axis] = options[int(rng.integers(len(options)))]
    embed = None
    if picks["embed_head"] != "none":
        embed = EmbedBlockSpec(source=picks["embed_source"], head=picks["embed_head"])
    sv = SvBlockSpec(head=picks["sv_head"], pca_k=picks["sv_pca_k"]) \
        if picks["sv_active"] else None
    freq = None
    if picks["freq_subset"] != "none":
        freq = FreqBlockSpec(features=tuple(picks["freq_subset"]),
                             pca_k=picks["freq_pca_k"])
    return RunConfig(embed=embed, sv=sv, freq=freq, graph=picks["graph"],
                     preprocess_mode=picks["preprocess"])


def sample_config(space: Optional[dict] = None, seed: int = 0,
                  max_redraws: int = 100) -> RunConfig:
    """Uniform draw per axis; invalid combinations are rejected and redrawn."""
    return next(iter_sample_configs(space, 1, seed, max_redraws))


def iter_sample_configs(space: Optional[dict] = None, n: int = 1, seed: int = 0,
                        max_redraws: int = 100):
    space = space if space is not None else DEFAULT_SPACE
    rng = np.random.default_rng(seed)
    for _ in range(n):
        for attempt in range(max_redraws):
            cfg = _draw_config(space, rng)
            try:
                cfg.validate()
            except ValueError:
                continue
            break
        else:
            raise ValueError(f"configuration space exhausted after {max_redraws} redraws")
        yield cfg


def sample_configs(space: Optional[dict] = None, n: int = 1, seed: int = 0) -> list[RunConfig]:
    return list(iter_sample_configs(space, n, seed))


# -- resources and the run orchestrator -------------------------------------

class Resources:
    """Lazily resolved external inputs: embedding tables, relations, test data."""

    def __init__(self, embeddings: Optional[dict] = None,
                 relations=None, test_corpus: Optional[Corpus] = None):
        self._embeddings = dict(embeddings or {})
        self._relations = relations
        self.test_corpus = test_corpus

    @classmethod
    def from_data_dir(cls, path: str | Path) -> tuple[Corpus, "Resources"]:
        """Load the conventional data-directory layout.

        ``train.csv``/``train.jsonl`` (required), ``test.csv``/``test.jsonl``,
        ``relations.csv`` and ``embeddings/<source>.txt`` (all optional).
        """
        path = Path(path)
        corpus = None
        for name, fmt in (("train.csv", "csv"), ("train.jsonl", "jsonl")):
            if (path / name).exists():
                corpus = load_corpus(path / name, fmt)
                break
        if corpus is None:
            raise FileNotFoundError(f"no train.csv or train.jsonl under {path}")
        test = None
        for name, fmt in (("test.csv", "csv"), ("test.jsonl", "jsonl")):
            if (path / name).exists():
                test = load_corpus(path / name, fmt)
                break
        embeddings = {p.stem: p for p in sorted((path / "embeddings").glob("*.txt"))} \
            if (path / "embeddings").is_dir() else {}
        relations = path / "relations.csv" if (path / "relations.csv").exists() else None
        return corpus, cls(embeddings=embeddings, relations=relations, test_corpus=test)

    def embedding(self, source: str) -> EmbeddingTable:
        value = self._embeddings.get(source)
        if value is None:
            raise FileNotFoundError(
                f"missing embedding resource {source!r}: expected a table or a "
                f"word2vec text file named {source}.txt")
        if isinstance(value, EmbeddingTable):
            return value
        table = load_embeddings(value, name=source if source in _SOURCE_FMT else "custom")
        self._embeddings[source] = table
        return table

    def relation_records(self) -> list[RelationRecord]:
        if self._relations is None:
            raise FileNotFoundError(
                "missing relations resource: expected relations.csv with columns "
                "src,dst,relation")
        if isinstance(self._relations, (str, Path)):
            self._relations = load_relations(self._relations)
        return self._relations


@dataclass
class RunResult:
    """Metrics and provenance of one executed configuration."""

    settings: str
    config: dict
    eval_f_avg: float
    eval_accuracy: float
    test_f_avg_t80: Optional[float] = None
    test_accuracy_t80: Optional[float] = None
    test_f_avg_t100: Optional[float] = None
    test_accuracy_t100: Optional[float] = None
    per_class: dict = field(default_factory=dict)
    epochs_trained: int = 0
    best_epoch: int = 0
    timing_seconds: float = 0.0
    seeds: dict = field(default_factory=dict)
    versions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunResult":
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def save(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        digest = hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:12]
        path = out_dir / f"run_{digest}.json"
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path


def load_results(in_dir: str | Path) -> list[RunResult]:
    in_dir = Path(in_dir)
    results = []
    for path in sorted(in_dir.glob("run_*.json")):
        results.append(RunResult.from_dict(json.loads(path.read_text())))
    if not results:
        raise ValueError(f"no run_*.json results under {in_dir}")
    return results


def _head_config(kind: str, base_seed: int, block_offset: int, overrides: dict) -> HeadConfig:
    opts = dict(overrides.get("head", {}))
    if "filter_sizes_2d" in opts:
        opts["filter_sizes_2d"] = tuple(opts["filter_sizes_2d"])
    return HeadConfig(kind=kind, seed=base_seed * 10 + block_offset, **opts)


def _labels_as_indices(corpus: Corpus) -> np.ndarray:
    return np.array([t.label.index for t in corpus], dtype=np.int64)


def run(cfg: RunConfig, corpus: Corpus, resources: Resources,
        out_dir: Optional[str | Path] = None,
        with_t100: Optional[bool] = None) -> RunResult:
    """Execute one configuration end to end.

    Trains on the stratified 80% split with early stopping on the eval
    f-avg; when a test corpus is available (and ``with_t100`` is not False)
    also retrains on all training data for the epoch budget the first run
    selected and scores the test set. Deterministic given (config, seeds,
    inputs) in single-threaded mode.
    """
    t_start = time.perf_counter()
    cfg.validate()
    overrides = cfg.overrides
    fusion_opts = dict(overrides.get("fusion", {}))
    model_seed = int(fusion_opts.pop("seed", 0))

    train, evalc = stratified_split(corpus, SplitSpec(cfg.train_ratio, cfg.split_seed))
    test = resources.test_corpus
    if with_t100 is None:
        with_t100 = test is not None

    def docs_of(c: Corpus) -> list[list[str]]:
        return [preprocess(t.text, cfg.preprocess_mode) for t in c]

    train_docs = docs_of(train)
    builders: dict[str, object] = {}
    head_configs: dict[str, HeadConfig] = {}

    if cfg.embed:
        table = resources.embedding(cfg.embed.source)
        embedder = SequenceEmbedder(table, cfg.max_len)
        builders["embed_head"] = lambda c, d: embedder.transform(d)
        head_configs["embed_head"] = _head_config(cfg.embed.head, model_seed, 1, overrides)

    if cfg.sv:
        base = resources.embedding(cfg.sv.base_source)
        anchors = sorted({tok for doc in train_docs for tok in doc})
        sim = SimilarityTable(base, anchors)
        sv_pca = fit_sv_pca(sim, anchors, cfg.sv.pca_k) if cfg.sv.pca else None
        sver = SvSequencer(sim, sv_pca, cfg.max_len)
        builders["sv_head"] = lambda c, d: sver.transform(d)
        head_configs["sv_head"] = _head_config(cfg.sv.head, model_seed, 2, overrides)

    if cfg.freq:
        communities = None
        network_feats = [f for f in cfg.freq.features if f.startswith("network_")]
        if network_feats:
            records = resources.relation_records()
            # community features use each relation's own subgraph, so the
            # friendship condition is not applied here
            g_all = build_graph(records, require_friendship=False)
            communities = {f.split("_")[1]: community_detect(g_all, f.split("_")[1],
                                                             seed=cfg.split_seed)
                           for f in network_feats}
        freq_fit = FrequencyFeatures(
            cfg.freq.features,
            chargram_range=tuple(overrides.get("chargram_range", (2, 5))),
            communities=communities,
            preprocess_mode=cfg.preprocess_mode).fit(train)
        freq_pca = PcaReducer(cfg.freq.pca_k).fit(freq_fit.transform(train))
        if cfg.freq.head:
            def freq_builder(c, d):
                reduced = freq_pca.transform(freq_fit.transform(c)).matrix
                rows = reduced[:, :, None]  # (N, k, 1) single-channel sequence
                return rows, np.ones(rows.shape[:2], dtype=bool)
            builders["freq_pca"] = freq_builder
            head_configs["freq_pca"] = _head_config(cfg.freq.head, model_seed, 3, overrides)
        else:
            builders["freq_pca"] = \
                lambda c, d: freq_pca.transform(freq_fit.transform(c)).matrix

    if cfg.graph != "none":
        records = resources.relation_records()
        g = build_graph(records,
                        require_friendship=bool(overrides.get("require_friendship", True)))
        walk_opts = dict(overrides.get("walk", {}))
        wcfg = WalkConfig(strategy=cfg.graph,
                          walks_per_node=int(walk_opts.get("walks_per_node", 10)),
                          walk_length=int(walk_opts.get("walk_length", 80)),
                          p=float(walk_opts.get("p", 1.0)),
                          q=float(walk_opts.get("q", 1.0)),
                          layers=int(walk_opts.get("layers", 3)),
                          seed=int(walk_opts.get("seed", cfg.split_seed)))
        walks = generate_walks(g, wcfg)
        sg_opts = dict(overrides.get("skipgram", {}))
        node_emb = SkipGram(dim=int(sg_opts.get("dim", 128)),
                            window=int(sg_opts.get("window", 5)),
                            negatives=int(sg_opts.get("negatives", 5)),
                            epochs=int(sg_opts.get("epochs", 5)),
                            lr=float(sg_opts.get("lr", 0.025)),
                            seed=int(sg_opts.get("seed", wcfg.seed))).fit(walks).embedding_
        builders["graph_user"] = \
            lambda c, d: np.stack([node_emb.user_vector(t.author_id) for t in c])

    def build_inputs(c: Corpus, d: list[list[str]]) -> dict:
        return {name: fn(c, d) for name, fn in builders.items()}

    train_inputs = build_inputs(train, train_docs)
    eval_inputs = build_inputs(evalc, docs_of(evalc))
    y_train = _labels_as_indices(train)
    y_eval = _labels_as_indices(evalc)

    opt_cfg = OptimizerConfig(**overrides.get("optimizer", {}))
    fusion_cfg = FusionConfig(active_blocks=cfg.active_blocks(),
                              optimizer=opt_cfg, seed=model_seed, **fusion_opts)
    model = FusedClassifier(fusion_cfg, head_configs)
    model.fit(train_inputs, y_train, eval_inputs, y_eval)

    eval_pred = model.predict(eval_inputs)
    eval_gold = [t.label for t in evalc]
    result = RunResult(
        settings=cfg.settings,
        config=cfg.to_dict(),
        eval_f_avg=f_avg(eval_pred, eval_gold),
        eval_accuracy=accuracy(eval_pred, eval_gold),
        per_class={cls.value: prf for cls, prf
                   in per_class_prf(eval_pred, eval_gold).items()},
        epochs_trained=len(model.history_),
        best_epoch=model.best_epoch_,
        seeds={"split": cfg.split_seed, "model": model_seed},
        versions={"stancelab": __version__},
    )

    if test is not None:
        test_docs = docs_of(test)
        test_inputs = build_inputs(test, test_docs)
        test_gold = [t.label for t in test]
        t80_pred = model.predict(test_inputs)
        result.test_f_avg_t80 = f_avg(t80_pred, test_gold)
        result.test_accuracy_t80 = accuracy(t80_pred, test_gold)
        if with_t100:
            all_inputs = build_inputs(corpus, docs_of(corpus))
            y_all = _labels_as_indices(corpus)
            full = FusedClassifier(fusion_cfg, head_configs)
            full.fit(all_inputs, y_all, epochs=model.best_epoch_ or len(model.history_))
            t100_pred = full.predict(test_inputs)
            result.test_f_avg_t100 = f_avg(t100_pred, test_gold)
            result.test_accuracy_t100 = accuracy(t100_pred, test_gold)

    result.timing_seconds = time.perf_counter() - t_start
    if out_dir is not None:
        result.save(out_dir)
    return result


# -- ablations ---------------------------------------------------------------

ABLATION_TOGGLES = ("graph", "sv", "freq")


def ablated_config(cfg: RunConfig, toggle: str) -> RunConfig:
    """The same configuration with one feature source switched off."""
    if toggle not in ABLATION_TOGGLES:
        raise ValueError(f"unknown toggle {toggle!r}; valid: {', '.join(ABLATION_TOGGLES)}")
    reduced = dataclasses.replace(cfg)
    if toggle == "graph":
        if cfg.graph == "none":
            raise ValueError("config has no graph block to ablate")
        reduced.graph = "none"
    elif toggle == "sv":
        if cfg.sv is None:
            raise ValueError("config has no SV block to ablate")
        reduced.sv = None
    else:
        if cfg.freq is None:
            raise ValueError("config has no frequency block to ablate")
        reduced.freq = None
    reduced.validate()
    return reduced


def ablate(cfg: RunConfig, toggle: str, corpus: Corpus, resources: Resources,
           out_dir: Optional[str | Path] = None) -> dict:
    """Run the config with and without one block; report the f-avg deltas."""
    full = run(cfg, corpus, resources, out_dir=out_dir)
    reduced = run(ablated_config(cfg, toggle), corpus, resources, out_dir=out_dir)
    deltas = {"eval_f_avg": full.eval_f_avg - reduced.eval_f_avg}
    for attr in ("test_f_avg_t80", "test_f_avg_t100"):
        a, b = getattr(full, attr), getattr(reduced, attr)
        if a is not None and b is not None:
            deltas[attr] = a - b
    return {"full": full, "ablated": reduced, "toggle": toggle, "deltas": deltas}


# -- reporting ---------------------------------------------------------------

def _sort_key(r: RunResult) -> float:
    for value in (r.test_f_avg_t100, r.test_f_avg_t80, r.eval_f_avg):
        if value is not None:
            return value
    return float("-inf")


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6f}"


def report(results: Sequence[RunResult], format: str = "markdown",
           baseline: float = BASELINES["task_b"]) -> str:
    """Render results sorted by test f-avg, baseline row appended.

    Columns: Eval f-avg, T%80, T%100, settings string.
    """
    if not results:
        raise ValueError("no results to report")
    if format not in ("markdown", "csv"):
        raise ValueError(f"unknown report format {format!r}")
    ordered = sorted(results, key=_sort_key, reverse=True)
    rows = [(_fmt(r.eval_f_avg), _fmt(r.test_f_avg_t80), _fmt(r.test_f_avg_t100),
             r.settings) for r in ordered]
    rows.append(("", _fmt(baseline), _fmt(baseline), "Baseline"))
    header = ("eval_f_avg", "test_f_avg_t80", "test_f_avg_t100", "settings")

    if format == "csv":
        import csv as _csv
        import io
        buf = io.StringIO()
        writer = _csv.writer(buf)
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()

    lines = ["| " + " | ".join(header) + " |",
             "| " + " | ".join("---" for _ in header) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"
