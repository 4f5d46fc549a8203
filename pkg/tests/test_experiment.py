import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stancelab.corpus import StanceLabel
from stancelab.experiment import (BASELINES, DEFAULT_SPACE, EmbedBlockSpec,
                                  Resources, RunConfig, RunResult,
                                  ablated_config, format_settings,
                                  load_results, parse_settings, report,
                                  sample_config, sample_configs)
from stancelab.metrics import f_avg, per_class_prf

import oracles

A, F, N = StanceLabel.AGAINST, StanceLabel.FAVOR, StanceLabel.NONE

# The ten Task-B settings strings (row 6 corrected for the obviously missing
# closing parenthesis in the source table).
TABLE2_SETTINGS = [
    "Conv2D(FastText) + Conv2D(PCA(SVs)) + PCA(unigram + Tfidf_unigram + length) + DeepWalk",
    "Conv2D( FastText ) + Conv2D( PCA(SVs) ) + PCA(unigram + Tfidf_unigram + length)",
    "Conv2D(FastText)+ Conv2D(PCA(SVs)) + Conv2D(PCA(Tfidf_unigram + chargrams)) + DeepWalk",
    "Conv2D(FastText)+Conv2D(PCA(SVs))+PCA(Tfidf_unigram + chargrams)",
    "Conv2D(FastText) + Conv2D( PCA(SVs)) + PCA(unigram + length)+ DeepWalk",
    "Conv2D(FastText) + Conv2D(PCA(SVs)) + PCA(unigram + length)",
    "Conv2D(TWITA300) + Conv2D(PCA(SVs)) + PCA( length + network_quote_community + "
    "network_reply_community + network_retweet_community + network_friend_community + "
    "userinfobio + tweetinfocreateat) + DeepWalk",
    "Conv2D(TWITA300) + Conv2D(PCA(SVs)) + PCA( length + network_quote_community + "
    "network_reply_community + network_retweet_community + network_friend_community + "
    "userinfobio + tweetinfocreateat)",
    "AttLSTM(FastText) + AttLSTM(PCA(SVs)) + PCA(puntuactionmarks + length + "
    "network_quote_community + network_retweet_community + network_friend_community + "
    "userinfobio) + Node2Vec",
    "AttLSTM(FastText) + AttLSTM(PCA(SVs)) + PCA(puntuactionmarks + length + "
    "network_quote_community + network_retweet_community + network_friend_community + "
    "userinfobio)",
]


class TestMetrics:
    def test_perfect_predictions(self):
        gold = [A, F, N, A]
        assert f_avg(gold, gold) == 1.0

    def test_hand_computed_confusion(self):
        gold = [A, A, F, F, N, N]
        pred = [A, F, F, F, N, A]
        prf = per_class_prf(pred, gold)
        assert prf[A]["f1"] == pytest.approx(0.5)
        assert prf[F]["f1"] == pytest.approx(0.8)
        assert f_avg(pred, gold) == pytest.approx(0.65)

    def test_all_none_predictions_zero(self):
        gold = [A, F, N, A, F]
        pred = [N] * 5
        assert f_avg(pred, gold) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            f_avg([A], [A, F])

    @given(st.lists(st.sampled_from(["AGAINST", "FAVOR", "NONE"]), min_size=1,
                    max_size=40),
           st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_matches_confusion_matrix_oracle(self, gold, seed):
        rng = np.random.default_rng(seed)
        pred = [["AGAINST", "FAVOR", "NONE"][i]
                for i in rng.integers(0, 3, size=len(gold))]
        assert f_avg(pred, gold) == pytest.approx(
            oracles.favg_oracle(pred, gold), abs=1e-12)

    @given(st.lists(st.tuples(st.sampled_from(["AGAINST", "FAVOR", "NONE"]),
                              st.sampled_from(["AGAINST", "FAVOR", "NONE"])),
                    min_size=1, max_size=30),
           st.integers(0, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_permutation_invariance(self, pairs, seed):
        pred, gold = zip(*pairs)
        base = f_avg(list(pred), list(gold))
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(pairs))
        shuffled = f_avg([pred[i] for i in order], [gold[i] for i in order])
        assert shuffled == pytest.approx(base, abs=1e-12)

    def test_baseline_constants(self):
        assert BASELINES["task_a"] == 0.578
        assert BASELINES["task_b"] == 0.628


class TestSettingsGrammar:
    def test_table2_row1_structure(self):
        cfg = parse_settings(TABLE2_SETTINGS[0])
        assert cfg.embed == EmbedBlockSpec(source="fasttext_it", head="cnn2d_multi")
        assert cfg.sv is not None and cfg.sv.pca and cfg.sv.head == "cnn2d_multi"
        assert cfg.freq.features == ("unigram", "Tfidf_unigram", "length")
        assert cfg.freq.head is None
        assert cfg.graph == "deepwalk"

    def test_row3_head_over_reduced_frequency_vector(self):
        cfg = parse_settings(TABLE2_SETTINGS[2])
        assert cfg.freq.head == "cnn2d_multi"
        assert cfg.freq.features == ("Tfidf_unigram", "chargrams")

    def test_row9_attlstm_and_alias_spelling(self):
        cfg = parse_settings(TABLE2_SETTINGS[8])
        assert cfg.embed.head == "att_bilstm"
        assert "punctuationmarks" in cfg.freq.features
        assert cfg.graph == "node2vec"

    def test_graph_only_rejected_with_explanation(self):
        with pytest.raises(ValueError, match="no text-derived block"):
            parse_settings("DeepWalk")

    def test_unknown_head_lists_valid_names(self):
        with pytest.raises(ValueError, match="Conv2D"):
            parse_settings("Transformer(FastText)")

    def test_unknown_feature_lists_valid_names(self):
        with pytest.raises(ValueError, match="unigram"):
            parse_settings("PCA(lemmas)")

    @pytest.mark.parametrize("text", TABLE2_SETTINGS)
    def test_roundtrip_all_table2_rows(self, text):
        cfg = parse_settings(text)
        normalized = format_settings(cfg)
        # format is the identity on its own output
        assert format_settings(parse_settings(normalized)) == normalized
        # and parsing the normalized string reproduces the same config
        assert parse_settings(normalized) == cfg

    def test_duplicate_blocks_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            parse_settings("Conv2D(FastText) + Conv1D(TWITA300)")
        with pytest.raises(ValueError, match="duplicate graph"):
            parse_settings("Conv2D(FastText) + DeepWalk + Node2Vec")


class TestConfigDict:
    def test_roundtrip_via_dict(self):
        cfg = parse_settings(TABLE2_SETTINGS[0])
        cfg.split_seed = 5
        cfg.overrides = {"optimizer": {"max_epochs": 3}}
        back = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert back.settings == cfg.settings
        assert back.split_seed == 5
        assert back.overrides["optimizer"]["max_epochs"] == 3

    def test_settings_only_dict(self):
        back = RunConfig.from_dict({"settings": "Conv1D(BERT) + DeepWalk"})
        assert back.embed.source == "bert_multi"
        assert back.embed.head == "cnn1d"
        assert back.graph == "deepwalk"


class TestSampling:
    def test_singleton_space(self):
        space = {
            "embed_source": ["fasttext_it"], "embed_head": ["cnn1d"],
            "sv_active": [False], "sv_head": ["cnn1d"], "sv_pca_k": [100],
            "freq_subset": ["none"], "freq_pca_k": [100],
            "graph": ["none"], "preprocess": ["twita_clean"],
        }
        cfg = sample_config(space, seed=0)
        assert cfg.embed == EmbedBlockSpec(source="fasttext_it", head="cnn1d")
        assert cfg.sv is None and cfg.freq is None and cfg.graph == "none"

    def test_deterministic_under_seed(self):
        a = sample_config(DEFAULT_SPACE, seed=123)
        b = sample_config(DEFAULT_SPACE, seed=123)
        assert a == b

    def test_invalid_combos_redrawn(self):
        # embed off + sv off + freq off is invalid; sampler must still succeed
        space = dict(DEFAULT_SPACE)
        space["embed_head"] = ["none", "cnn1d"]
        space["sv_active"] = [False]
        space["freq_subset"] = ["none", ["unigram", "length"]]
        for seed in range(50):
            cfg = sample_config(space, seed=seed)
            assert cfg.embed is not None or cfg.freq is not None

    def test_exhausted_space_errors(self):
        space = dict(DEFAULT_SPACE)
        space["embed_head"] = ["none"]
        space["sv_active"] = [False]
        space["freq_subset"] = ["none"]
        with pytest.raises(ValueError, match="exhausted"):
            sample_config(space, seed=0)

    def test_axis_marginals_are_uniform(self):
        configs = sample_configs(DEFAULT_SPACE, n=1000, seed=7)
        clean = sum(1 for c in configs if c.preprocess_mode == "twita_clean")
        assert 450 <= clean <= 550


def make_result(settings, eval_f, t80, t100):
    return RunResult(settings=settings, config={}, eval_f_avg=eval_f,
                     eval_accuracy=eval_f, test_f_avg_t80=t80, test_f_avg_t100=t100)


class TestReport:
    def test_markdown_structure_and_baseline(self):
        results = [make_result("A + B", 0.5, 0.52, 0.61),
                   make_result("C", 0.7, 0.71, 0.72)]
        doc = report(results, format="markdown")
        lines = doc.strip().splitlines()
        assert lines[0].startswith("| eval_f_avg |")
        assert set(lines[1].replace("|", "").split()) == {"---"}
        assert len(lines) == 2 + 2 + 1  # header, separator, 2 rows, baseline
        assert lines[2].split("|")[4].strip() == "C"  # sorted by t100 desc
        assert "0.628000" in lines[-1] and "Baseline" in lines[-1]

    def test_csv_roundtrip_precision(self, tmp_path):
        import csv as csvmod

        results = [make_result("X", 0.123456789, 0.2, 0.3)]
        text = report(results, format="csv")
        rows = list(csvmod.reader(text.splitlines()))
        assert rows[0] == ["eval_f_avg", "test_f_avg_t80", "test_f_avg_t100",
                           "settings"]
        assert float(rows[1][0]) == pytest.approx(0.123457, abs=1e-9)

    def test_result_persistence_roundtrip(self, tmp_path):
        result = make_result("Conv1D(BERT)", 0.4, None, None)
        result.save(tmp_path)
        loaded = load_results(tmp_path)
        assert len(loaded) == 1
        assert loaded[0].settings == "Conv1D(BERT)"
        assert loaded[0].test_f_avg_t80 is None


class TestAblation:
    def test_ablated_config_toggles(self):
        cfg = parse_settings(TABLE2_SETTINGS[0])
        no_graph = ablated_config(cfg, "graph")
        assert no_graph.graph == "none" and no_graph.sv is not None
        no_sv = ablated_config(cfg, "sv")
        assert no_sv.sv is None and no_sv.graph == "deepwalk"
        no_freq = ablated_config(cfg, "freq")
        assert no_freq.freq is None

    def test_missing_block_rejected(self):
        cfg = parse_settings("Conv2D(FastText)")
        with pytest.raises(ValueError, match="no graph block"):
            ablated_config(cfg, "graph")


class TestResources:
    def test_missing_embedding_names_expected_file(self):
        res = Resources(embeddings={})
        with pytest.raises(FileNotFoundError, match="fasttext_it.txt"):
            res.embedding("fasttext_it")

    def test_missing_relations(self):
        res = Resources()
        with pytest.raises(FileNotFoundError, match="relations.csv"):
            res.relation_records()


class TestRunDeterminism:
    def test_identical_config_and_seeds_give_identical_metrics(self):
        from stancelab.experiment import run
        from stancelab.synth import (HomophilyParams, make_embedding_table,
                                     make_homophily_corpus)

        params = HomophilyParams(n_instances=90, n_test=20, n_users=20,
                                 tokens_per_tweet=6)
        corpus, test, records = make_homophily_corpus(seed=1, params=params)
        resources = Resources(embeddings={"synthetic": make_embedding_table(params)},
                              relations=records, test_corpus=test)
        cfg_dict = {
            "settings": "Conv2D(synthetic) + DeepWalk",
            "max_len": 8, "split_seed": 3,
            "overrides": {
                "optimizer": {"max_epochs": 3, "patience": 3},
                "fusion": {"hidden_units": 8},
                "head": {"filter_sizes_2d": [1, 2], "filters_per_head": 4},
                "walk": {"walks_per_node": 2, "walk_length": 6},
                "skipgram": {"dim": 8, "window": 2, "negatives": 2, "epochs": 1},
            },
        }
        first = run(RunConfig.from_dict(cfg_dict), corpus, resources)
        second = run(RunConfig.from_dict(cfg_dict), corpus, resources)
        assert first.eval_f_avg == second.eval_f_avg
        assert first.eval_accuracy == second.eval_accuracy
        assert first.test_f_avg_t80 == second.test_f_avg_t80
        assert first.test_f_avg_t100 == second.test_f_avg_t100
        assert first.per_class == second.per_class
