"""Late fusion of up to four feature blocks into a softmax stance classifier.

The classifier owns one neural head per active sequence block and trains the
heads jointly with its dense layers: dropout -> dense(ReLU) -> dropout ->
dense(3) -> softmax, categorical cross-entropy, adaptive moment estimation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import nn
from .corpus import CLASS_ORDER, StanceLabel
from .heads import HeadConfig, build_head
from .metrics import f_avg
from ._validation import check_fitted

# Canonical concatenation order; assembly always follows it regardless of
# the order blocks are handed in.
BLOCK_ORDER = ("embed_head", "sv_head", "freq_pca", "graph_user")
SEQUENCE_BLOCKS = ("embed_head", "sv_head", "freq_pca")


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5


@dataclass(frozen=True)
class FusionConfig:
    active_blocks: tuple[str, ...]
    dropout_rate: float = 0.2
    hidden_units: int = 128
    classes: int = 3
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0

    def __post_init__(self):
        if not self.active_blocks:
            raise ValueError("active_blocks must be non-empty")
        unknown = [b for b in self.active_blocks if b not in BLOCK_ORDER]
        if unknown:
            raise ValueError(f"unknown block(s) {unknown}; valid: {', '.join(BLOCK_ORDER)}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")


@dataclass(frozen=True)
class Prediction:
    probs: np.ndarray
    label: StanceLabel


def assemble(vectors: dict[str, np.ndarray]) -> np.ndarray:
    """Concatenate per-block vectors (or batches) in the canonical order."""
    unknown = [b for b in vectors if b not in BLOCK_ORDER]
    if unknown:
        raise ValueError(f"unknown block(s) {unknown}; valid: {', '.join(BLOCK_ORDER)}")
    parts = [np.asarray(vectors[b], dtype=np.float64)
             for b in BLOCK_ORDER if b in vectors]
    if not parts:
        raise ValueError("no blocks to assemble")
    return np.concatenate(parts, axis=-1)


def _slice_inputs(inputs: dict, idx: np.ndarray) -> dict:
    out = {}
    for name, value in inputs.items():
        if isinstance(value, tuple):
            rows, mask = value
            out[name] = (rows[idx], mask[idx])
        else:
            out[name] = value[idx]
    return out


def _n_instances(inputs: dict) -> int:
    for value in inputs.values():
        return (value[0] if isinstance(value, tuple) else value).shape[0]
    raise ValueError("no input blocks")


class FusedClassifier(BaseEstimator):
    """Three-class stance classifier over concatenated feature blocks.

    ``inputs`` dictionaries map active block names to either ``(rows, mask)``
    pairs of shape (N, L, d)/(N, L) for sequence blocks (a neural head is
    built for each) or plain (N, d) matrices for static vector blocks.
    """

    def __init__(self, config: FusionConfig,
                 head_configs: Optional[dict[str, HeadConfig]] = None):
        self.config = config
        self.head_configs = head_configs or {}

    # -- construction -------------------------------------------------------

    def _build(self, inputs: dict) -> None:
        cfg = self.config
        missing = [b for b in cfg.active_blocks if b not in inputs]
        if missing:
            raise ValueError(f"active block(s) missing from inputs: {missing}")
        self._input_shapes_ = {
            name: [1] + list((value[0] if isinstance(value, tuple)
                              else np.asarray(value)).shape[1:])
            for name, value in inputs.items()}
        rng = np.random.default_rng(cfg.seed)
        self.heads_ = {}
        total = 0
        self.block_dims_ = {}
        for name in cfg.active_blocks:
            value = inputs[name]
            if isinstance(value, tuple):
                head_cfg = self.head_configs.get(name)
                if head_cfg is None:
                    raise ValueError(f"sequence block {name!r} needs a HeadConfig")
                rows, _ = value
                head = build_head(rows.shape[2], head_cfg)
                self.heads_[name] = head
                dim = head.output_dim(rows.shape[1])
            else:
                dim = np.asarray(value).shape[1]
            self.block_dims_[name] = dim
            total += dim
        self.input_dim_ = total
        self.drop1_ = nn.Dropout(cfg.dropout_rate)
        self.hidden_ = nn.Dense(total, cfg.hidden_units, rng, name="hidden")
        self.relu_ = nn.ReLU()
        self.drop2_ = nn.Dropout(cfg.dropout_rate)
        # zero-init final layer: the untrained model predicts the uniform
        # distribution, so the initial loss is exactly ln(classes)
        self.out_ = nn.Dense(cfg.hidden_units, cfg.classes, rng, zero_init=True,
                             name="out")
        self._dropout_rng = np.random.default_rng((cfg.seed, 7))

    def params(self) -> list[nn.Param]:
        check_fitted(self, "hidden_")
        out = []
        for name in self.config.active_blocks:
            if name in self.heads_:
                out.extend(self.heads_[name].params())
        out.extend(self.hidden_.params())
        out.extend(self.out_.params())
        return out

    # -- forward / backward -------------------------------------------------

    def _forward(self, inputs: dict, train: bool = False) -> np.ndarray:
        vectors = {}
        for name in self.config.active_blocks:
            value = inputs[name]
            if name in self.heads_:
                rows, mask = value
                vectors[name] = self.heads_[name].forward(
                    np.asarray(rows, dtype=np.float64), np.asarray(mask, dtype=bool),
                    train=train)
            else:
                vectors[name] = np.asarray(value, dtype=np.float64)
        x = assemble(vectors)
        if x.shape[1] != self.input_dim_:
            raise ValueError(f"assembled dim {x.shape[1]} does not match the "
                             f"model's {self.input_dim_}")
        h = self.drop1_.forward(x, train=train, rng=self._dropout_rng)
        h = self.relu_.forward(self.hidden_.forward(h))
        h = self.drop2_.forward(h, train=train, rng=self._dropout_rng)
        return nn.softmax(self.out_.forward(h))

    def _backward(self, dlogits: np.ndarray) -> None:
        dh = self.out_.backward(dlogits)
        dh = self.drop2_.backward(dh)
        dh = self.relu_.backward(dh)
        dx = self.drop1_.backward(self.hidden_.backward(dh))
        offset = 0
        for name in [b for b in BLOCK_ORDER if b in self.config.active_blocks]:
            dim = self.block_dims_[name]
            if name in self.heads_:
                self.heads_[name].backward(dx[:, offset : offset + dim])
            offset += dim

    def loss_and_grads(self, inputs: dict, y: np.ndarray,
                       train: bool = False) -> tuple[float, list[nn.Param]]:
        """One forward/backward pass; gradients accumulate in the params."""
        probs = self._forward(inputs, train=train)
        loss, dlogits = nn.cross_entropy(probs, y)
        self._backward(dlogits)
        return loss, self.params()

    # -- estimator API ------------------------------------------------------

    @staticmethod
    def _as_class_indices(y: Sequence) -> np.ndarray:
        if isinstance(y, np.ndarray) and y.dtype.kind in "iu":
            return y.astype(np.int64)
        return np.array([lbl.index if isinstance(lbl, StanceLabel)
                         else StanceLabel(str(lbl).upper()).index for lbl in y],
                        dtype=np.int64)

    def fit(self, inputs: dict, y: Sequence,
            eval_inputs: Optional[dict] = None, eval_y: Optional[Sequence] = None,
            epochs: Optional[int] = None):
        """Mini-batch training with optional early stopping.

        With eval data, stops after ``patience`` epochs without improving the
        eval f-avg and restores the best parameters; ``best_epoch_`` records
        the budget for later full-data retraining. ``epochs`` overrides
        max_epochs and disables early stopping (the fixed-budget mode).
        """
        y = self._as_class_indices(y)
        n = _n_instances(inputs)
        if n == 0 or len(y) != n:
            raise ValueError(f"need non-empty training data with matching labels "
                             f"(got {n} instances, {len(y)} labels)")
        self._build(inputs)
        opt_cfg = self.config.optimizer
        optimizer = nn.Adam(self.params(), lr=opt_cfg.learning_rate)
        shuffle_rng = np.random.default_rng((self.config.seed, 11))
        max_epochs = epochs if epochs is not None else opt_cfg.max_epochs
        use_early_stop = epochs is None and eval_inputs is not None

        self.history_ = []
        best_favg = -1.0
        best_params: Optional[list[np.ndarray]] = None
        self.best_epoch_ = 0
        stale = 0
        for epoch in range(1, max_epochs + 1):
            order = shuffle_rng.permutation(n)
            total = 0.0
            batches = 0
            for lo in range(0, n, opt_cfg.batch_size):
                idx = order[lo : lo + opt_cfg.batch_size]
                optimizer.zero_grads()
                loss, _ = self.loss_and_grads(_slice_inputs(inputs, idx), y[idx],
                                              train=True)
                if not np.isfinite(loss):
                    raise RuntimeError(
                        f"non-finite loss at epoch {epoch}, batch {batches}: {loss}; "
                        f"lr={opt_cfg.learning_rate}, batch_size={opt_cfg.batch_size}")
                optimizer.step()
                total += loss
                batches += 1
            record = {"epoch": epoch, "train_loss": total / batches}
            if eval_inputs is not None and eval_y is not None:
                eval_pred = self.predict(eval_inputs)
                record["eval_f_avg"] = f_avg(eval_pred, list(eval_y))
                if record["eval_f_avg"] > best_favg:
                    best_favg = record["eval_f_avg"]
                    best_params = [p.value.copy() for p in self.params()]
                    self.best_epoch_ = epoch
                    stale = 0
                else:
                    stale += 1
            self.history_.append(record)
            if use_early_stop and stale >= opt_cfg.patience:
                break
        if use_early_stop and best_params is not None:
            for p, value in zip(self.params(), best_params):
                p.value = value
        if not use_early_stop:
            self.best_epoch_ = len(self.history_)
        return self

    def predict_proba(self, inputs: dict) -> np.ndarray:
        check_fitted(self, "hidden_")
        return self._forward(inputs, train=False)

    def predict(self, inputs: dict) -> list[StanceLabel]:
        probs = self.predict_proba(inputs)
        # np.argmax takes the first maximum, which is exactly the canonical
        # AGAINST < FAVOR < NONE tie-break
        return [CLASS_ORDER[i] for i in probs.argmax(axis=1)]

    def predict_one(self, inputs: dict) -> Prediction:
        probs = self.predict_proba(inputs)[0]
        return Prediction(probs=probs, label=CLASS_ORDER[int(probs.argmax())])

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Single-file checkpoint: config JSON plus parameter arrays."""
        check_fitted(self, "hidden_")
        config = {
            "active_blocks": list(self.config.active_blocks),
            "dropout_rate": self.config.dropout_rate,
            "hidden_units": self.config.hidden_units,
            "classes": self.config.classes,
            "optimizer": asdict(self.config.optimizer),
            "seed": self.config.seed,
            "head_configs": {k: asdict(v) for k, v in self.head_configs.items()},
            "block_dims": self.block_dims_,
            "input_shapes": self._input_shapes_,
        }
        arrays = {f"param_{i}": p.value for i, p in enumerate(self.params())}
        np.savez(Path(path), config_json=np.frombuffer(
            json.dumps(config).encode(), dtype=np.uint8), **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "FusedClassifier":
        with np.load(Path(path)) as data:
            config = json.loads(bytes(data["config_json"]).decode())
            values = [data[f"param_{i}"] for i in range(
                len([k for k in data.files if k.startswith("param_")]))]
        head_configs = {k: HeadConfig(**{**v, "filter_sizes_2d": tuple(v["filter_sizes_2d"])})
                        for k, v in config["head_configs"].items()}
        model = cls(FusionConfig(
            active_blocks=tuple(config["active_blocks"]),
            dropout_rate=config["dropout_rate"],
            hidden_units=config["hidden_units"],
            classes=config["classes"],
            optimizer=OptimizerConfig(**config["optimizer"]),
            seed=config["seed"]), head_configs)
        dummy = {}
        for name, shape in config["input_shapes"].items():
            if len(shape) == 3:
                dummy[name] = (np.zeros(shape), np.ones(shape[:2], dtype=bool))
            else:
                dummy[name] = np.zeros(shape)
        model._build(dummy)
        model._input_shapes_ = config["input_shapes"]
        for p, value in zip(model.params(), values):
            p.value = value
        return model


def write_predictions(path: str | Path, ids: Sequence[str], probs: np.ndarray) -> None:
    """Export predictions as CSV ``id,against_p,favor_p,none_p,label``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "against_p", "favor_p", "none_p", "label"])
        for tweet_id, row in zip(ids, probs):
            label = CLASS_ORDER[int(np.argmax(row))]
            writer.writerow([tweet_id, f"{row[0]:.6f}", f"{row[1]:.6f}",
                             f"{row[2]:.6f}", label.value])
