import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stancelab.heads import (AttBiLstmHead, BiLstmHead, Cnn1dHead, Cnn2dMultiHead,
                             HeadConfig, build_head)

import oracles


def rand_sequence(rng, b, length, d, n_masked=0):
    rows = rng.normal(size=(b, length, d))
    mask = np.ones((b, length), dtype=bool)
    if n_masked:
        mask[:, length - n_masked :] = False
        rows[~mask] = 0.0
    return rows, mask


def head_param_gradcheck(head, rows, mask, tol=1e-4):
    """Analytic grads of a scalar projection of the head output vs central
    differences, over every parameter and the input rows."""
    rng = np.random.default_rng(99)
    r = rng.normal(size=head.output_dim(rows.shape[1]))

    def scalar():
        return float(head.forward(rows, mask) @ r if rows.ndim == 2
                     else head.forward(rows, mask)[0] @ r)

    out = head.forward(rows, mask)
    for p in head.params():
        p.zero_grad()
    drows = head.backward(r[None, :])
    params = head.params()
    analytic = [p.grad.copy() for p in params] + [drows.copy()]
    numeric = oracles.central_difference(scalar, [p.value for p in params] + [rows])
    err = oracles.max_relative_error(analytic, numeric)
    assert err <= tol, f"gradient mismatch: {err}"
    return out


class TestShapes:
    def test_cnn1d_default_contract(self):
        cfg = HeadConfig(kind="cnn1d")
        head = Cnn1dHead(8, cfg)
        assert head.output_dim(64) == 32 * 30

    def test_cnn1d_too_short_instructs_padding(self):
        head = Cnn1dHead(4, HeadConfig(kind="cnn1d"))
        with pytest.raises(ValueError, match="pad"):
            head.output_dim(5)

    def test_cnn2d_dims(self):
        assert Cnn2dMultiHead(8, HeadConfig()).output_dim(16) == 128
        assert Cnn2dMultiHead(8, HeadConfig(filter_sizes_2d=(1,))).output_dim(4) == 32

    def test_cnn2d_too_short(self):
        with pytest.raises(ValueError, match="filter size"):
            Cnn2dMultiHead(8, HeadConfig()).output_dim(4)

    def test_bilstm_dim_is_4x_units(self):
        assert BiLstmHead(5, HeadConfig(kind="bilstm")).output_dim(13) == 256

    def test_att_bilstm_dim(self):
        assert AttBiLstmHead(5, HeadConfig(kind="att_bilstm")).output_dim(9) == 256

    @given(st.integers(6, 40), st.integers(1, 12), st.integers(0, 3))
    @settings(max_examples=50, deadline=None)
    def test_contracts_hold_for_random_shapes(self, length, d, kind_idx):
        rng = np.random.default_rng(length * 13 + d)
        kind = ("cnn1d", "cnn2d_multi", "bilstm", "att_bilstm")[kind_idx]
        cfg = HeadConfig(kind=kind, filters_per_head=4, filters_1d=4,
                         lstm_units=3, lstm_units_2=5, seed=0)
        head = build_head(d, cfg)
        rows, mask = rand_sequence(rng, 2, length, d)
        out = head.forward(rows, mask)
        assert out.shape == (2, head.output_dim(length))
        assert np.all(np.isfinite(out))


class TestCnn1d:
    def test_zero_input_zero_output(self):
        head = Cnn1dHead(6, HeadConfig(kind="cnn1d", seed=1))
        rows = np.zeros((2, 12, 6))
        out = head.forward(rows, np.ones((2, 12), dtype=bool))
        assert np.all(out == 0.0)  # zero-init bias

    def test_gradients(self):
        rng = np.random.default_rng(0)
        head = Cnn1dHead(4, HeadConfig(kind="cnn1d", kernel_1d=3, pool_1d=2,
                                       filters_1d=5, seed=2))
        rows, mask = rand_sequence(rng, 1, 6, 4)
        head_param_gradcheck(head, rows, mask)


class TestCnn2d:
    def test_spike_pooled_value_matches_dot_product_oracle(self):
        d = 6
        cfg = HeadConfig(filter_sizes_2d=(5,), filters_per_head=8, seed=4)
        head = Cnn2dMultiHead(d, cfg)
        rng = np.random.default_rng(7)
        spike = rng.normal(size=(5, d))
        rows = np.zeros((1, 16, d))
        rows[0, 6:11] = spike
        mask = np.ones((1, 16), dtype=bool)
        out = head.forward(rows, mask)

        kernel = head.convs[0].K.value  # (5*d, filters)
        window = spike.reshape(-1)  # step-major layout
        expected = np.maximum(window @ kernel, 0.0)  # ReLU; other positions partial
        # the pooled value is >= the spike response and equals it when the
        # spike response is the max; verify per filter via direct enumeration
        conv = head.convs[0].forward(rows)
        manual = np.maximum(conv, 0.0).max(axis=1)[0]
        assert np.allclose(out[0], manual, atol=1e-12)
        assert np.allclose(conv[0, 6], window @ kernel, atol=1e-12)
        assert np.all(out[0] >= expected - 1e-12)

    def test_gradients(self):
        rng = np.random.default_rng(1)
        head = Cnn2dMultiHead(3, HeadConfig(filter_sizes_2d=(1, 2, 3),
                                            filters_per_head=4, seed=5))
        rows, mask = rand_sequence(rng, 1, 6, 3)
        head_param_gradcheck(head, rows, mask)


class TestBiLstm:
    def test_single_step_max_equals_mean(self):
        head = BiLstmHead(4, HeadConfig(kind="bilstm", lstm_units=3, seed=6))
        rng = np.random.default_rng(2)
        rows, mask = rand_sequence(rng, 2, 1, 4)
        out = head.forward(rows, mask)
        half = out.shape[1] // 2
        assert np.allclose(out[:, :half], out[:, half:], atol=1e-12)

    def test_padding_invariance(self):
        head = BiLstmHead(4, HeadConfig(kind="bilstm", lstm_units=3, seed=7))
        rng = np.random.default_rng(3)
        rows, mask = rand_sequence(rng, 2, 5, 4)
        base = head.forward(rows, mask)
        padded_rows = np.concatenate([rows, np.zeros((2, 3, 4))], axis=1)
        padded_mask = np.concatenate([mask, np.zeros((2, 3), dtype=bool)], axis=1)
        padded = head.forward(padded_rows, padded_mask)
        assert np.max(np.abs(base - padded)) <= 1e-6

    def test_fully_masked_rejected(self):
        head = BiLstmHead(4, HeadConfig(kind="bilstm", seed=0))
        with pytest.raises(ValueError, match="masked"):
            head.forward(np.zeros((1, 3, 4)), np.zeros((1, 3), dtype=bool))

    def test_gradients_with_padding(self):
        rng = np.random.default_rng(4)
        head = BiLstmHead(3, HeadConfig(kind="bilstm", lstm_units=2, seed=8))
        rows, mask = rand_sequence(rng, 1, 5, 3, n_masked=2)
        head_param_gradcheck(head, rows, mask)


class TestAttBiLstm:
    def test_attention_weights_sum_to_one(self):
        head = AttBiLstmHead(4, HeadConfig(kind="att_bilstm", lstm_units=3,
                                           lstm_units_2=4, seed=9))
        rng = np.random.default_rng(5)
        rows, mask = rand_sequence(rng, 3, 6, 4, n_masked=2)
        head.forward(rows, mask)
        sums = head.alphas_.sum(axis=1)
        assert np.allclose(sums, 1.0, atol=1e-6)
        assert np.all(head.alphas_[~mask] == 0.0)

    def test_single_step_alpha_is_one_and_output_is_state(self):
        head = AttBiLstmHead(4, HeadConfig(kind="att_bilstm", lstm_units=3,
                                           lstm_units_2=4, seed=10))
        rng = np.random.default_rng(6)
        rows, mask = rand_sequence(rng, 1, 1, 4)
        out = head.forward(rows, mask)
        assert np.allclose(head.alphas_, [[1.0]], atol=1e-12)
        h2 = head.bilstm2.forward(head.bilstm1.forward(rows, mask), mask)
        assert np.allclose(out, h2[:, 0, :], atol=1e-12)

    def test_identical_steps_share_attention(self):
        head = AttBiLstmHead(3, HeadConfig(kind="att_bilstm", lstm_units=2,
                                           lstm_units_2=3, seed=11))
        rng = np.random.default_rng(7)
        step = rng.normal(size=3)
        rows = np.tile(step, (1, 2, 1))
        mask = np.ones((1, 2), dtype=bool)
        head.forward(rows, mask)
        assert np.allclose(head.alphas_, [[0.5, 0.5]], atol=1e-6)

    def test_padding_invariance(self):
        head = AttBiLstmHead(3, HeadConfig(kind="att_bilstm", lstm_units=2,
                                           lstm_units_2=3, seed=12))
        rng = np.random.default_rng(8)
        rows, mask = rand_sequence(rng, 2, 4, 3)
        base = head.forward(rows, mask)
        padded = head.forward(
            np.concatenate([rows, np.zeros((2, 2, 3))], axis=1),
            np.concatenate([mask, np.zeros((2, 2), dtype=bool)], axis=1))
        assert np.max(np.abs(base - padded)) <= 1e-6

    def test_gradients(self):
        rng = np.random.default_rng(9)
        head = AttBiLstmHead(3, HeadConfig(kind="att_bilstm", lstm_units=2,
                                           lstm_units_2=2, seed=13))
        rows, mask = rand_sequence(rng, 1, 4, 3, n_masked=1)
        head_param_gradcheck(head, rows, mask)


class TestSeededInit:
    @pytest.mark.parametrize("kind", ["cnn1d", "cnn2d_multi", "bilstm", "att_bilstm"])
    def test_identical_seed_identical_parameters(self, kind):
        cfg = HeadConfig(kind=kind, seed=21)
        a = build_head(6, cfg)
        b = build_head(6, cfg)
        for pa, pb in zip(a.params(), b.params()):
            assert np.array_equal(pa.value, pb.value)
        c = build_head(6, HeadConfig(kind=kind, seed=22))
        assert any(not np.array_equal(pa.value, pc.value)
                   for pa, pc in zip(a.params(), c.params()))
