"""SpaceNet: per-feature token embedding, transformer encoder stack, MLP head."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .autograd import AdamState, Tensor, adam_step
from .errors import (
    DivergenceDetected,
    InvalidConfig,
    LayoutMismatch,
    NonFiniteActivation,
)


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 64
    n_heads: int = 2
    n_layers: int = 2
    mlp_hidden: int = 32
    dropout_p: float = 0.1
    n_classes: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise InvalidConfig("d_model must be divisible by n_heads")
        if not 0.0 <= self.dropout_p < 1.0:
            raise InvalidConfig("dropout_p must be in [0, 1)")

    @property
    def d_k(self) -> int:
        return self.d_model // self.n_heads


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-5
    batch_size: int = 64
    epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise InvalidConfig("batch_size and epochs must be >= 1")


@dataclass
class SpaceNetParams:
    """Named parameter tensors; m_columns fixes the token count."""

    m_columns: int
    tensors: dict[str, Tensor]

    def items(self):
        return self.tensors.items()

    def arrays(self) -> list[np.ndarray]:
        return [t.data for t in self.tensors.values()]

    def grads(self) -> list[np.ndarray]:
        return [
            t.grad if t.grad is not None else np.zeros_like(t.data)
            for t in self.tensors.values()
        ]

    def zero_grads(self):
        for t in self.tensors.values():
            t.zero_grad()


@dataclass
class TrainHistory:
    train_loss: list[float]
    val_loss: list[float] | None = None


def _uniform(rng, fan_in, shape):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_params(m_columns: int, config: ModelConfig) -> SpaceNetParams:
    """Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init; layer norms at identity."""
    rng = np.random.default_rng(config.seed)
    d = config.d_model
    tensors: dict[str, np.ndarray] = {}
    tensors["embed.w"] = _uniform(rng, 1, (m_columns, d))
    tensors["embed.b"] = _uniform(rng, 1, (m_columns, d))
    for i in range(config.n_layers):
        p = f"enc{i}."
        for name in ("wq", "wk", "wv", "wo"):
            tensors[p + name] = _uniform(rng, d, (d, d))
            tensors[p + name.replace("w", "b")] = np.zeros(d)
        tensors[p + "ln1.g"] = np.ones(d)
        tensors[p + "ln1.b"] = np.zeros(d)
        tensors[p + "ff.w1"] = _uniform(rng, d, (d, 4 * d))
        tensors[p + "ff.b1"] = np.zeros(4 * d)
        tensors[p + "ff.w2"] = _uniform(rng, 4 * d, (4 * d, d))
        tensors[p + "ff.b2"] = np.zeros(d)
        tensors[p + "ln2.g"] = np.ones(d)
        tensors[p + "ln2.b"] = np.zeros(d)
    tensors["head.w1"] = _uniform(rng, d, (d, config.mlp_hidden))
    tensors["head.b1"] = np.zeros(config.mlp_hidden)
    tensors["head.w2"] = _uniform(rng, config.mlp_hidden, (config.mlp_hidden, config.n_classes))
    tensors["head.b2"] = np.zeros(config.n_classes)
    return SpaceNetParams(m_columns, {k: Tensor(v, requires_grad=True) for k, v in tensors.items()})


def embed(row: np.ndarray, params: SpaceNetParams) -> np.ndarray:
    """One token per column: token_j = x_j * w_j + b_j."""
    row = np.asarray(row, dtype=float)
    if row.shape[-1] != params.m_columns:
        raise LayoutMismatch(f"expected {params.m_columns} columns, got {row.shape[-1]}")
    w = params.tensors["embed.w"].data
    b = params.tensors["embed.b"].data
    return row[..., None] * w + b


def attention(q: Tensor, k: Tensor, v: Tensor, d_k: int) -> Tensor:
    """softmax(QK^T / sqrt(d_k)) V over the last two axes."""
    scores = ag.scale(ag.matmul(q, ag.transpose(k)), 1.0 / math.sqrt(d_k))
    return ag.matmul(ag.softmax_rows(scores), v)


def _split_heads(t: Tensor, b: int, m: int, h: int, d_k: int) -> Tensor:
    return ag.transpose(ag.reshape(t, (b, m, h, d_k)), (0, 2, 1, 3))


def forward(
    batch: np.ndarray,
    params: SpaceNetParams,
    config: ModelConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Encoded rows (b, m) -> class logits (b, n_classes)."""
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    if not np.isfinite(batch).all():
        raise NonFiniteActivation("non-finite model input")
    b, m = batch.shape
    if m != params.m_columns:
        raise LayoutMismatch(f"expected {params.m_columns} columns, got {m}")
    P = params.tensors
    d, h, d_k = config.d_model, config.n_heads, config.d_k
    x_in = Tensor(batch.reshape(b, m, 1))
    tokens = ag.add(ag.mul(x_in, P["embed.w"]), P["embed.b"])  # (b, m, d)
    x = tokens
    for i in range(config.n_layers):
        p = f"enc{i}."
        q = _split_heads(ag.linear(x, P[p + "wq"], P[p + "bq"]), b, m, h, d_k)
        k = _split_heads(ag.linear(x, P[p + "wk"], P[p + "bk"]), b, m, h, d_k)
        v = _split_heads(ag.linear(x, P[p + "wv"], P[p + "bv"]), b, m, h, d_k)
        ctx = attention(q, k, v, d_k)  # (b, h, m, d_k)
        merged = ag.reshape(ag.transpose(ctx, (0, 2, 1, 3)), (b, m, d))
        attn_out = ag.linear(merged, P[p + "wo"], P[p + "bo"])
        x = ag.layer_norm(ag.add(x, attn_out), P[p + "ln1.g"], P[p + "ln1.b"])
        ff = ag.linear(ag.relu(ag.linear(x, P[p + "ff.w1"], P[p + "ff.b1"])), P[p + "ff.w2"], P[p + "ff.b2"])
        x = ag.layer_norm(ag.add(x, ff), P[p + "ln2.g"], P[p + "ln2.b"])
    pooled = ag.mean_over_axis(x, 1)  # (b, d)
    hidden = ag.relu(ag.linear(pooled, P["head.w1"], P["head.b1"]))
    hidden = ag.dropout(hidden, config.dropout_p, train, rng)
    logits = ag.linear(hidden, P["head.w2"], P["head.b2"])
    if not np.isfinite(logits.data).all():
        raise NonFiniteActivation("non-finite logits")
    return logits


def predict_proba(params: SpaceNetParams, config: ModelConfig, rows: np.ndarray) -> np.ndarray:
    logits = forward(rows, params, config, train=False).data
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def evaluate_loss(params: SpaceNetParams, config: ModelConfig, X, y) -> float:
    logits = forward(X, params, config, train=False)
    return float(ag.cross_entropy_logits(logits, y).data)


def train(
    train_X: np.ndarray,
    train_y: np.ndarray,
    model_config: ModelConfig,
    train_config: TrainConfig,
    val_X: np.ndarray | None = None,
    val_y: np.ndarray | None = None,
    params: SpaceNetParams | None = None,
) -> tuple[SpaceNetParams, TrainHistory]:
    """Seeded mini-batch Adam training with cross-entropy loss."""
    train_X = np.asarray(train_X, dtype=float)
    train_y = np.asarray(train_y, dtype=int)
    if params is None:
        params = init_params(train_X.shape[1], model_config)
    state = AdamState.init(params.arrays())
    rng = np.random.default_rng(train_config.seed)
    history = TrainHistory([], [] if val_X is not None else None)
    n = train_X.shape[0]
    step = 0
    for _epoch in range(train_config.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, train_config.batch_size):
            idx = order[start : start + train_config.batch_size]
            params.zero_grads()
            logits = forward(train_X[idx], params, model_config, train=True, rng=rng)
            loss = ag.cross_entropy_logits(logits, train_y[idx])
            if not np.isfinite(loss.data):
                raise DivergenceDetected("non-finite training loss")
            ag.backward(loss)
            step += 1
            adam_step(
                params.arrays(),
                params.grads(),
                state,
                step,
                lr=train_config.lr,
                weight_decay=train_config.weight_decay,
            )
            losses.append(float(loss.data))
        history.train_loss.append(float(np.mean(losses)))
        if val_X is not None:
            history.val_loss.append(evaluate_loss(params, model_config, val_X, val_y))
    return params, history


def save_checkpoint(path, params: SpaceNetParams, config: ModelConfig, column_names=None) -> None:
    """JSON checkpoint; float64 repr round-trips, so reloads are bit-exact."""
    payload = {
        "config": {
            "d_model": config.d_model,
            "n_heads": config.n_heads,
            "n_layers": config.n_layers,
            "mlp_hidden": config.mlp_hidden,
            "dropout_p": config.dropout_p,
            "n_classes": config.n_classes,
            "seed": config.seed,
        },
        "m_columns": params.m_columns,
        "column_names": list(column_names) if column_names is not None else None,
        "params": {k: t.data.tolist() for k, t in params.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_checkpoint(path) -> tuple[SpaceNetParams, ModelConfig, list[str] | None]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    config = ModelConfig(**payload["config"])
    tensors = {
        k: Tensor(np.array(v, dtype=np.float64), requires_grad=True)
        for k, v in payload["params"].items()
    }
    params = SpaceNetParams(payload["m_columns"], tensors)
    return params, config, payload.get("column_names")
