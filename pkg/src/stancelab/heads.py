"""Sequence-feature extractors: 1D-CNN, multi-head 2D-CNN, BiLSTM, attention BiLSTM.

Each head maps a batch of (L x d) token-vector sequences to fixed-size
vectors with an analytic backward pass, so heads train jointly with the
fusion classifier. Output dimensionality is a pure function of the config
and the input shape (see ``output_dim``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import nn

HEAD_KINDS = ("cnn1d", "cnn2d_multi", "bilstm", "att_bilstm")


@dataclass(frozen=True)
class HeadConfig:
    kind: str = "cnn2d_multi"
    filters_1d: int = 32
    kernel_1d: int = 5
    pool_1d: int = 2
    filter_sizes_2d: tuple[int, ...] = (1, 2, 3, 5)
    filters_per_head: int = 32
    lstm_units: int = 64
    lstm_units_2: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.kind not in HEAD_KINDS:
            raise ValueError(f"unknown head kind {self.kind!r}; valid: {', '.join(HEAD_KINDS)}")
        if self.kernel_1d < 1:
            raise ValueError("kernel_1d must be >= 1")
        if not self.filter_sizes_2d:
            raise ValueError("filter_sizes_2d must be non-empty")


class Cnn1dHead:
    """Valid convolution (width kernel_1d) -> max-pool (pool_1d) -> flatten."""

    def __init__(self, d_in: int, cfg: HeadConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        self.conv = nn.Conv1dValid(d_in, cfg.kernel_1d, cfg.filters_1d, rng)
        self.pool = nn.MaxPool1d(cfg.pool_1d)

    def output_dim(self, length: int) -> int:
        n_conv = length - self.cfg.kernel_1d + 1
        pooled = n_conv // self.cfg.pool_1d
        if pooled < 1:
            raise ValueError(
                f"sequence length {length} too short for kernel {self.cfg.kernel_1d} "
                f"and pool {self.cfg.pool_1d}; pad sequences to at least "
                f"{self.cfg.kernel_1d + self.cfg.pool_1d - 1} steps")
        return self.cfg.filters_1d * pooled

    def forward(self, rows: np.ndarray, mask: Optional[np.ndarray] = None,
                train: bool = False, rng=None) -> np.ndarray:
        b = rows.shape[0]
        self.output_dim(rows.shape[1])
        y = self.pool.forward(self.conv.forward(rows))
        self._pooled_shape = y.shape
        return y.reshape(b, -1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return self.conv.backward(self.pool.backward(dy.reshape(self._pooled_shape)))

    def params(self) -> list[nn.Param]:
        return self.conv.params()


class Cnn2dMultiHead:
    """Per filter size f: (f x d) valid convolution, ReLU, global max over
    positions; head outputs are concatenated (filters_per_head each)."""

    def __init__(self, d_in: int, cfg: HeadConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        self.convs = [nn.Conv1dValid(d_in, f, cfg.filters_per_head, rng, name=f"conv{f}")
                      for f in cfg.filter_sizes_2d]
        self.relus = [nn.ReLU() for _ in cfg.filter_sizes_2d]
        self.pools = [nn.GlobalMaxPool() for _ in cfg.filter_sizes_2d]

    def output_dim(self, length: int) -> int:
        if length < max(self.cfg.filter_sizes_2d):
            raise ValueError(f"sequence length {length} shorter than the largest "
                             f"filter size {max(self.cfg.filter_sizes_2d)}")
        return self.cfg.filters_per_head * len(self.cfg.filter_sizes_2d)

    def forward(self, rows: np.ndarray, mask: Optional[np.ndarray] = None,
                train: bool = False, rng=None) -> np.ndarray:
        self.output_dim(rows.shape[1])
        outs = []
        for conv, relu, pool in zip(self.convs, self.relus, self.pools):
            outs.append(pool.forward(relu.forward(conv.forward(rows))))
        return np.concatenate(outs, axis=1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        f = self.cfg.filters_per_head
        dx = None
        for i, (conv, relu, pool) in enumerate(zip(self.convs, self.relus, self.pools)):
            part = conv.backward(relu.backward(pool.backward(dy[:, i * f : (i + 1) * f])))
            dx = part if dx is None else dx + part
        return dx

    def params(self) -> list[nn.Param]:
        return [p for conv in self.convs for p in conv.params()]


class BiLstmHead:
    """BiLSTM over valid steps; concat of temporal max-pool and mean-pool."""

    def __init__(self, d_in: int, cfg: HeadConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        self.bilstm = nn.BiLSTM(d_in, cfg.lstm_units, rng)
        self.maxpool = nn.GlobalMaxPool()
        self.meanpool = nn.MaskedMeanPool()

    def output_dim(self, length: int) -> int:
        return 4 * self.cfg.lstm_units

    def forward(self, rows: np.ndarray, mask: Optional[np.ndarray] = None,
                train: bool = False, rng=None) -> np.ndarray:
        if mask is None:
            mask = np.ones(rows.shape[:2], dtype=bool)
        if np.any(mask.sum(axis=1) == 0):
            raise ValueError("fully masked input: BiLSTM head needs >= 1 valid step")
        h = self.bilstm.forward(rows, mask)
        return np.concatenate([self.maxpool.forward(h, mask),
                               self.meanpool.forward(h, mask)], axis=1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        u2 = 2 * self.cfg.lstm_units
        dh = self.maxpool.backward(dy[:, :u2]) + self.meanpool.backward(dy[:, u2:])
        return self.bilstm.backward(dh)

    def params(self) -> list[nn.Param]:
        return self.bilstm.params()


class AttBiLstmHead:
    """Stacked BiLSTMs (lstm_units then lstm_units_2) with additive attention."""

    def __init__(self, d_in: int, cfg: HeadConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        self.bilstm1 = nn.BiLSTM(d_in, cfg.lstm_units, rng, name="bilstm1")
        self.bilstm2 = nn.BiLSTM(2 * cfg.lstm_units, cfg.lstm_units_2, rng, name="bilstm2")
        self.attention = nn.AdditiveAttention(2 * cfg.lstm_units_2, rng)

    def output_dim(self, length: int) -> int:
        return 2 * self.cfg.lstm_units_2

    @property
    def alphas_(self) -> np.ndarray:
        """Attention weights from the last forward pass."""
        return self.attention.alphas_

    def forward(self, rows: np.ndarray, mask: Optional[np.ndarray] = None,
                train: bool = False, rng=None) -> np.ndarray:
        if mask is None:
            mask = np.ones(rows.shape[:2], dtype=bool)
        if np.any(mask.sum(axis=1) == 0):
            raise ValueError("fully masked input: attention BiLSTM needs >= 1 valid step")
        h1 = self.bilstm1.forward(rows, mask)
        h2 = self.bilstm2.forward(h1, mask)
        return self.attention.forward(h2, mask)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return self.bilstm1.backward(self.bilstm2.backward(self.attention.backward(dy)))

    def params(self) -> list[nn.Param]:
        return self.bilstm1.params() + self.bilstm2.params() + self.attention.params()


_HEAD_CLASSES = {
    "cnn1d": Cnn1dHead,
    "cnn2d_multi": Cnn2dMultiHead,
    "bilstm": BiLstmHead,
    "att_bilstm": AttBiLstmHead,
}


def build_head(d_in: int, cfg: HeadConfig):
    return _HEAD_CLASSES[cfg.kind](d_in, cfg)
