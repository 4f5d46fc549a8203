"""Minimal float64 neural layers with explicit forward/backward passes.

Everything is batch-first and deterministic: parameters are drawn from a
seeded generator at construction time and every stochastic operation
(dropout) consumes an explicitly passed generator. Backward passes
accumulate into ``Param.grad`` so a training step is
zero_grads -> forward -> backward -> optimizer.step().
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np


class Param:
    __slots__ = ("value", "grad", "name")

    def __init__(self, value: np.ndarray, name: str = ""):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.name = name

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


def normal_init(rng: np.random.Generator, shape, std: float = 0.05) -> np.ndarray:
    return rng.normal(0.0, std, size=shape)


def orthogonal_init(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Orthonormal-column matrix via QR of a Gaussian draw (requires rows >= cols)."""
    a = rng.normal(size=(rows, cols))
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Dense:
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator,
                 std: float = 0.05, zero_init: bool = False, name: str = "dense"):
        w = np.zeros((d_in, d_out)) if zero_init else normal_init(rng, (d_in, d_out), std)
        self.W = Param(w, f"{name}.W")
        self.b = Param(np.zeros(d_out), f"{name}.b")

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.W.value + self.b.value

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.W.grad += self._x.T @ dy
        self.b.grad += dy.sum(axis=0)
        return dy @ self.W.value.T

    def params(self) -> list[Param]:
        return [self.W, self.b]


class ReLU:
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * self._mask

    def params(self) -> list[Param]:
        return []


class Dropout:
    """Inverted dropout: scaling happens at train time, inference is identity."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x: np.ndarray, train: bool = False,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (rng.random(x.shape) < keep) / keep
        return x * self._mask

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy if self._mask is None else dy * self._mask

    def params(self) -> list[Param]:
        return []


class Conv1dValid:
    """Valid 1-D convolution over time with the feature axis as channels.

    Input (B, L, d) -> output (B, L - width + 1, filters). The kernel spans
    ``width`` consecutive steps across all d input dims, which also covers
    the (f x d) "2-D" text convolution case.
    """

    def __init__(self, d_in: int, width: int, filters: int,
                 rng: np.random.Generator, std: float = 0.05, name: str = "conv"):
        if width < 1:
            raise ValueError(f"kernel width must be >= 1, got {width}")
        self.d_in = d_in
        self.width = width
        self.filters = filters
        self.K = Param(normal_init(rng, (width * d_in, filters), std), f"{name}.K")
        self.b = Param(np.zeros(filters), f"{name}.b")

    def n_positions(self, length: int) -> int:
        return length - self.width + 1

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, length, d = x.shape
        n_pos = self.n_positions(length)
        if n_pos < 1:
            raise ValueError(f"sequence length {length} shorter than kernel width "
                             f"{self.width}")
        win = np.lib.stride_tricks.sliding_window_view(x, self.width, axis=1)
        # (B, n_pos, d, width) -> (B, n_pos, width*d) with step-major layout
        self._win = win.transpose(0, 1, 3, 2).reshape(b, n_pos, self.width * d)
        self._in_shape = x.shape
        return self._win @ self.K.value + self.b.value

    def backward(self, dy: np.ndarray) -> np.ndarray:
        b, n_pos, _ = dy.shape
        flat_win = self._win.reshape(-1, self.width * self.d_in)
        self.K.grad += flat_win.T @ dy.reshape(-1, self.filters)
        self.b.grad += dy.sum(axis=(0, 1))
        dx = np.zeros(self._in_shape)
        k3 = self.K.value.reshape(self.width, self.d_in, self.filters)
        for j in range(self.width):
            dx[:, j : j + n_pos, :] += dy @ k3[j].T
        return dx

    def params(self) -> list[Param]:
        return [self.K, self.b]


class MaxPool1d:
    """Non-overlapping temporal max pooling; trailing remainder is dropped."""

    def __init__(self, pool: int):
        if pool < 1:
            raise ValueError(f"pool size must be >= 1, got {pool}")
        self.pool = pool

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, length, f = x.shape
        n_out = length // self.pool
        if n_out < 1:
            raise ValueError(f"sequence length {length} shorter than pool size {self.pool}")
        trimmed = x[:, : n_out * self.pool].reshape(b, n_out, self.pool, f)
        self._argmax = trimmed.argmax(axis=2)
        self._in_shape = x.shape
        return np.take_along_axis(trimmed, self._argmax[:, :, None, :], axis=2)[:, :, 0, :]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        b, n_out, f = dy.shape
        dtrim = np.zeros((b, n_out, self.pool, f))
        np.put_along_axis(dtrim, self._argmax[:, :, None, :], dy[:, :, None, :], axis=2)
        dx = np.zeros(self._in_shape)
        dx[:, : n_out * self.pool] = dtrim.reshape(b, n_out * self.pool, f)
        return dx

    def params(self) -> list[Param]:
        return []


class GlobalMaxPool:
    """Max over the time axis, optionally restricted to masked-valid steps."""

    def forward(self, x: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
        if mask is not None:
            scored = np.where(mask[:, :, None], x, -np.inf)
        else:
            scored = x
        self._argmax = scored.argmax(axis=1)
        self._in_shape = x.shape
        return np.take_along_axis(x, self._argmax[:, None, :], axis=1)[:, 0, :]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dx = np.zeros(self._in_shape)
        np.put_along_axis(dx, self._argmax[:, None, :], dy[:, None, :], axis=1)
        return dx

    def params(self) -> list[Param]:
        return []


class MaskedMeanPool:
    """Mean over masked-valid steps only."""

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        self._mask = mask.astype(np.float64)
        self._counts = self._mask.sum(axis=1, keepdims=True)
        if np.any(self._counts == 0):
            raise ValueError("fully masked input: no valid steps to pool")
        return (x * self._mask[:, :, None]).sum(axis=1) / self._counts

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy[:, None, :] * self._mask[:, :, None] / self._counts[:, :, None]

    def params(self) -> list[Param]:
        return []


class LSTM:
    """Single-direction LSTM with mask-gated state carry.

    At masked (padding) steps both h and c carry through unchanged, so
    right-padded batches produce outputs independent of how much padding is
    appended. Input kernels are Normal(0, std); recurrent kernels are
    orthogonal per gate; the forget-gate bias starts at 1.
    """

    def __init__(self, d_in: int, units: int, rng: np.random.Generator,
                 std: float = 0.05, reverse: bool = False, name: str = "lstm"):
        self.d_in = d_in
        self.units = units
        self.reverse = reverse
        self.Wx = Param(normal_init(rng, (d_in, 4 * units), std), f"{name}.Wx")
        wh = np.concatenate([orthogonal_init(rng, units, units) for _ in range(4)], axis=1)
        self.Wh = Param(wh, f"{name}.Wh")
        b = np.zeros(4 * units)
        b[units : 2 * units] = 1.0  # forget gate
        self.b = Param(b, f"{name}.b")

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        b, length, _ = x.shape
        u = self.units
        h = np.zeros((b, u))
        c = np.zeros((b, u))
        order = range(length - 1, -1, -1) if self.reverse else range(length)
        self._cache = []
        out = np.zeros((b, length, u))
        for t in order:
            m = mask[:, t : t + 1].astype(np.float64)
            z = x[:, t] @ self.Wx.value + h @ self.Wh.value + self.b.value
            i = sigmoid(z[:, :u])
            f = sigmoid(z[:, u : 2 * u])
            g = np.tanh(z[:, 2 * u : 3 * u])
            o = sigmoid(z[:, 3 * u :])
            c_new = f * c + i * g
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            self._cache.append((t, x[:, t], h, c, i, f, g, o, c_new, tanh_c, m))
            c = m * c_new + (1.0 - m) * c
            h = m * h_new + (1.0 - m) * h
            out[:, t] = h
        self._in_shape = x.shape
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        u = self.units
        b = dout.shape[0]
        dx = np.zeros(self._in_shape)
        dh_next = np.zeros((b, u))
        dc_next = np.zeros((b, u))
        for (t, x_t, h_prev, c_prev, i, f, g, o, c_new, tanh_c, m) in reversed(self._cache):
            dh = dout[:, t] + dh_next
            dc = dc_next
            dh_new = dh * m
            dh_carry = dh * (1.0 - m)
            dc_new = dc * m
            dc_carry = dc * (1.0 - m)
            do = dh_new * tanh_c
            dc_new = dc_new + dh_new * o * (1.0 - tanh_c ** 2)
            di = dc_new * g
            df = dc_new * c_prev
            dg = dc_new * i
            dz = np.concatenate(
                [di * i * (1.0 - i), df * f * (1.0 - f),
                 dg * (1.0 - g ** 2), do * o * (1.0 - o)], axis=1)
            self.Wx.grad += x_t.T @ dz
            self.Wh.grad += h_prev.T @ dz
            self.b.grad += dz.sum(axis=0)
            dx[:, t] = dz @ self.Wx.value.T
            dh_next = dz @ self.Wh.value.T + dh_carry
            dc_next = dc_new * f + dc_carry
        return dx

    def params(self) -> list[Param]:
        return [self.Wx, self.Wh, self.b]


class BiLSTM:
    """Forward and backward LSTMs with per-step output concatenation."""

    def __init__(self, d_in: int, units: int, rng: np.random.Generator,
                 std: float = 0.05, name: str = "bilstm"):
        self.fwd = LSTM(d_in, units, rng, std=std, reverse=False, name=f"{name}.fwd")
        self.bwd = LSTM(d_in, units, rng, std=std, reverse=True, name=f"{name}.bwd")
        self.units = units

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        return np.concatenate([self.fwd.forward(x, mask), self.bwd.forward(x, mask)],
                              axis=2)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        u = self.units
        return self.fwd.backward(dy[:, :, :u]) + self.bwd.backward(dy[:, :, u:])

    def params(self) -> list[Param]:
        return self.fwd.params() + self.bwd.params()


class AdditiveAttention:
    """score_t = v . tanh(W h_t + b), masked softmax, weighted state sum."""

    def __init__(self, dim: int, rng: np.random.Generator, std: float = 0.05,
                 name: str = "att"):
        self.W = Param(normal_init(rng, (dim, dim), std), f"{name}.W")
        self.b = Param(np.zeros(dim), f"{name}.b")
        self.v = Param(normal_init(rng, (dim,), std), f"{name}.v")

    def forward(self, h: np.ndarray, mask: np.ndarray) -> np.ndarray:
        valid = mask.astype(np.float64)
        if np.any(valid.sum(axis=1) == 0):
            raise ValueError("fully masked input: attention has no steps to weight")
        u = np.tanh(h @ self.W.value + self.b.value)
        scores = u @ self.v.value
        scores = np.where(mask, scores, -np.inf)
        smax = scores.max(axis=1, keepdims=True)
        e = np.where(mask, np.exp(scores - smax), 0.0)
        alpha = e / e.sum(axis=1, keepdims=True)
        self._h, self._u, self._alpha = h, u, alpha
        self.alphas_ = alpha
        return np.einsum("bl,bld->bd", alpha, h)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        h, u, alpha = self._h, self._u, self._alpha
        dalpha = np.einsum("bd,bld->bl", dy, h)
        dh = alpha[:, :, None] * dy[:, None, :]
        ds = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
        self.v.grad += np.einsum("bl,bld->d", ds, u)
        du = ds[:, :, None] * self.v.value[None, None, :]
        dpre = du * (1.0 - u ** 2)
        self.W.grad += np.einsum("bld,ble->de", h, dpre)
        self.b.grad += dpre.sum(axis=(0, 1))
        dh += dpre @ self.W.value.T
        return dh

    def params(self) -> list[Param]:
        return [self.W, self.b, self.v]


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean NLL plus the gradient with respect to the logits."""
    b = probs.shape[0]
    eps = 1e-300
    loss = -np.log(probs[np.arange(b), y] + eps).mean()
    dlogits = probs.copy()
    dlogits[np.arange(b), y] -= 1.0
    return float(loss), dlogits / b


class Adam:
    """Adaptive moment estimation over a fixed parameter list."""

    def __init__(self, params: Sequence[Param], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]

    def zero_grads(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            m += (1.0 - self.beta1) * (p.grad - m)
            v += (1.0 - self.beta2) * (p.grad ** 2 - v)
            p.value -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)
