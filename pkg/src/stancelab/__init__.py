"""Multi-view stance detection experiment framework."""

__version__ = "0.1.0"

from .corpus import (Corpus, SplitSpec, StanceLabel, Tweet, load_corpus,
                     preprocess, stratified_split)
from .freqfeat import (FeatureBlock, FrequencyFeatures, PcaReducer,
                       TfidfFeatures, UnigramFeatures, CharGramFeatures,
                       StructuralFeatures, Vocabulary)
from .embedfeat import (EmbeddingTable, SequenceMatrix, SimilarityTable,
                        build_similarity_table, embed_sequence, load_embeddings,
                        save_embeddings, sv_sequence)
from .netgraph import (InteractionGraph, RelationRecord, build_graph,
                       community_detect, graph_stats)
from .gnnembed import (NodeEmbedding, SkipGram, WalkConfig, WalkCorpus,
                       generate_walks, struc2vec_walks, train_skipgram,
                       user_vector)
from .heads import HeadConfig, build_head
from .fusion import FusedClassifier, FusionConfig, OptimizerConfig, assemble
from .metrics import accuracy, f_avg, per_class_prf
from .experiment import (BASELINES, Resources, RunConfig, RunResult, ablate,
                         format_settings, parse_settings, report, run,
                         sample_config, sample_configs)
