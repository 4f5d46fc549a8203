import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stancelab.corpus import Corpus, Tweet
from stancelab.freqfeat import (CharGramFeatures, FeatureBlock, FrequencyFeatures,
                                PcaReducer, StructuralFeatures, TfidfFeatures,
                                UnigramFeatures, load_block, save_block)

import oracles

token = st.sampled_from(list("abcdefg"))
doc = st.lists(token, max_size=8)
docs = st.lists(doc, min_size=1, max_size=20)


class TestUnigram:
    def test_direct_counting(self):
        feats = UnigramFeatures().fit([["a", "b", "a"], ["c"]])
        block = feats.transform([["a", "b", "a"]])
        assert feats.vocabulary_.terms == ("a", "b", "c")
        assert block.matrix.tolist() == [[2.0, 1.0, 0.0]]

    def test_empty_doc_and_oov_doc(self):
        feats = UnigramFeatures().fit([["a", "b"]])
        block = feats.transform([[], ["x", "y", "z"]])
        assert block.matrix.tolist() == [[0.0, 0.0], [0.0, 0.0]]

    @given(docs, docs)
    @settings(max_examples=50, deadline=None)
    def test_matches_oracle(self, train, test):
        feats = UnigramFeatures().fit(train)
        got = feats.transform(test).matrix
        want = oracles.unigram_oracle(test, feats.vocabulary_.terms)
        assert np.allclose(got, want, atol=0)


class TestTfidf:
    def test_hand_computed_example(self):
        feats = TfidfFeatures().fit([["a", "b", "a"], ["b", "c"]])
        block = feats.transform([["a", "b", "a"]])
        expected_a = 2 * (math.log(3 / 2) + 1)
        assert block.matrix[0, 0] == pytest.approx(expected_a, abs=1e-12)
        assert block.matrix[0, 0] == pytest.approx(2.811, abs=5e-4)
        assert block.matrix[0, 1] == pytest.approx(1.0, abs=1e-12)
        assert block.matrix[0, 2] == 0.0

    def test_term_in_every_doc_has_unit_weight(self):
        feats = TfidfFeatures().fit([["a", "x"], ["a", "y"], ["a"]])
        block = feats.transform([["a"]])
        col = feats.vocabulary_.index["a"]
        assert block.matrix[0, col] == pytest.approx(1.0, abs=1e-12)

    def test_unseen_term_contributes_nothing(self):
        feats = TfidfFeatures().fit([["a"], ["b"]])
        block = feats.transform([["zzz", "a"]])
        assert block.matrix[0].sum() == block.matrix[0, 0]

    def test_transform_does_not_mutate_fitted_state(self):
        feats = TfidfFeatures().fit([["a", "b"], ["b"]])
        idf_before = feats.idf_.copy()
        vocab_before = feats.vocabulary_.terms
        feats.transform([["c", "d", "a"]])
        assert np.array_equal(feats.idf_, idf_before)
        assert feats.vocabulary_.terms == vocab_before

    @given(docs, docs)
    @settings(max_examples=60, deadline=None)
    def test_matches_oracle_within_1e9(self, train, test):
        feats = TfidfFeatures().fit(train)
        got = feats.transform(test).matrix
        want = np.asarray(oracles.tfidf_oracle(train, test, feats.vocabulary_.terms))
        assert np.allclose(got, want, atol=1e-9)


class TestCharGrams:
    def test_enumeration(self):
        feats = CharGramFeatures((2, 2)).fit(["aba"])
        assert feats.grams_ == ("ab", "ba")
        assert feats.transform(["aba"]).matrix.tolist() == [[1.0, 1.0]]

    def test_string_shorter_than_lo(self):
        feats = CharGramFeatures((3, 4)).fit(["abcd"])
        assert feats.transform(["ab"]).matrix.tolist() == [[0.0] * len(feats.grams_)]

    def test_sliding_window_counts(self):
        feats = CharGramFeatures((2, 3)).fit(["aaa"])
        block = feats.transform(["aaa"])
        counts = dict(zip(feats.grams_, block.matrix[0]))
        assert counts == {"aa": 2.0, "aaa": 1.0}

    def test_invalid_range(self):
        with pytest.raises(ValueError, match="lo <= hi"):
            CharGramFeatures((3, 2)).fit(["abc"])

    @given(st.lists(st.text(alphabet="abc", max_size=6), min_size=1, max_size=8),
           st.lists(st.text(alphabet="abcd", max_size=6), min_size=1, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_matches_oracle(self, train, test):
        feats = CharGramFeatures((1, 3)).fit(train)
        got = feats.transform(test).matrix
        want = oracles.chargram_oracle(test, feats.grams_)
        assert np.allclose(got, want, atol=0)
        assert feats.grams_ == tuple(oracles.chargram_inventory(train, 1, 3))


class TestStructural:
    def test_reference_vector(self):
        tweet = Tweet(id="t", author_id="nobody", text="ciao !")
        communities = {"retweet": {"x": 0, "y": 1, "z": 2, "w": 3}}
        feats = StructuralFeatures(
            ["punctuationmarks", "hashtags", "length", "network_retweet_community"],
            communities=communities).fit(Corpus([tweet]))
        vec = feats.transform([tweet]).matrix[0]
        assert vec[:3].tolist() == [1.0, 0.0, 2.0]
        assert vec[3:7].tolist() == [0.0, 0.0, 0.0, 0.0]  # unknown author

    def test_community_one_hot(self):
        tweet = Tweet(id="t", author_id="me", text="x")
        communities = {"retweet": {"me": 2, "a": 0, "b": 1, "c": 3}}
        feats = StructuralFeatures(["network_retweet_community"],
                                   communities=communities).fit(Corpus([tweet]))
        assert feats.transform([tweet]).matrix[0].tolist() == [0.0, 0.0, 1.0, 0.0]

    def test_same_author_same_community_vector(self):
        t1 = Tweet(id="1", author_id="me", text="primo tweet !!")
        t2 = Tweet(id="2", author_id="me", text="secondo, molto diverso #x")
        communities = {"quote": {"me": 1, "a": 0}}
        feats = StructuralFeatures(["network_quote_community"],
                                   communities=communities).fit(Corpus([t1, t2]))
        m = feats.transform([t1, t2]).matrix
        assert m[0].tolist() == m[1].tolist()

    def test_bio_and_hour_slots(self):
        from datetime import datetime, timezone

        tweet = Tweet(id="t", author_id="u", text="x", bio="due parole",
                      created_at=datetime(2020, 1, 1, 17, tzinfo=timezone.utc))
        feats = StructuralFeatures(["userinfobio", "tweetinfocreateat"]).fit(
            Corpus([tweet]))
        vec = feats.transform([tweet]).matrix[0]
        assert vec[0] == 1.0 and vec[1] == 2.0
        hour = vec[2:]
        assert hour.sum() == 1.0 and hour[17] == 1.0


class TestPca:
    def test_line_explains_all_variance(self):
        rng = np.random.default_rng(0)
        t = rng.normal(size=40)
        X = np.stack([2 * t + 1, -3 * t + 4], axis=1)
        pca = PcaReducer(k=1).fit(X)
        assert pca.explained_variance_ratio_[0] == pytest.approx(1.0, abs=1e-12)

    def test_k_clamped_to_rank(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(60, 14))
        pca = PcaReducer(k=100).fit(X)
        assert pca.k_eff_ == 14
        assert pca.transform(X).matrix.shape == (60, 14)

    def test_full_rank_reconstruction(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(50, 20))
        pca = PcaReducer(k=20).fit(X)
        Z = pca.transform(X).matrix
        recon = Z @ pca.components_ + pca.mean_
        assert np.max(np.abs(recon - X)) <= 1e-8

    def test_mean_row_maps_to_zero(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(30, 6))
        pca = PcaReducer(k=4).fit(X)
        z = pca.transform_rows(X.mean(axis=0)[None, :])
        assert np.allclose(z, 0.0, atol=1e-12)

    def test_projection_matches_explicit_matmul(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(25, 8))
        pca = PcaReducer(k=5).fit(X)
        rows = rng.normal(size=(5, 8))
        got = pca.transform_rows(rows)
        want = (rows - pca.mean_) @ pca.components_.T
        assert np.allclose(got, want, atol=1e-12)

    def test_full_rank_preserves_pairwise_distances(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(20, 7))
        pca = PcaReducer(k=7).fit(X)
        Z = pca.transform(X).matrix
        for i in range(5):
            for j in range(5):
                dx = np.linalg.norm(X[i] - X[j])
                dz = np.linalg.norm(Z[i] - Z[j])
                assert dz == pytest.approx(dx, abs=1e-8)

    def test_orthonormal_components_and_ordered_variance(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(40, 10)) * np.linspace(3, 0.1, 10)
        pca = PcaReducer(k=10).fit(X)
        gram = pca.components_ @ pca.components_.T
        assert np.max(np.abs(gram - np.eye(pca.k_eff_))) <= 1e-6
        assert np.all(np.diff(pca.explained_variance_) <= 1e-12)

    def test_empty_block_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            PcaReducer(k=2).fit(np.zeros((0, 4)))

    def test_dimension_mismatch(self):
        pca = PcaReducer(k=2).fit(np.random.default_rng(0).normal(size=(10, 4)))
        with pytest.raises(ValueError, match="dimension mismatch"):
            pca.transform(np.zeros((3, 5)))


class TestBlocks:
    def test_nan_rejected(self):
        with pytest.raises(ValueError, match="NaN"):
            FeatureBlock("bad", np.array([[1.0, np.nan]]))

    def test_save_load_roundtrip(self, tmp_path):
        block = FeatureBlock("demo", np.arange(6, dtype=float).reshape(2, 3),
                             ordering=("x", "y", "z"))
        save_block(block, tmp_path / "demo")
        back = load_block(tmp_path / "demo")
        assert back.name == "demo"
        assert back.ordering == ("x", "y", "z")
        assert np.array_equal(back.matrix, block.matrix)


class TestFrequencyFamily:
    def test_combined_block_ordering(self, tiny_corpus):
        feats = FrequencyFeatures(["length", "unigram"]).fit(tiny_corpus)
        block = feats.transform(tiny_corpus)
        # canonical order puts unigram before structural features
        assert block.ordering[0].startswith("unigram:")
        assert block.ordering[-1] == "structural:length"
        assert block.matrix.shape[0] == len(tiny_corpus)

    def test_unknown_feature_rejected(self, tiny_corpus):
        with pytest.raises(ValueError, match="valid names"):
            FrequencyFeatures(["unigram", "bigram_of_doom"]).fit(tiny_corpus)
