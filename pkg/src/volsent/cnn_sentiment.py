"""Convolutional headline classifier, logistic baseline, metrics and daily sentiment.

Architecture: frozen word embeddings -> valid 1-D convolution with ReLU ->
global max pooling over positions -> dense layer -> sigmoid. Trained with
binary cross-entropy by mini-batch gradient descent.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyCorpus, EmptyDay, EmptyEvalSet, ShapeMismatch, SingleClassCorpus
from .marketdata import SentimentSeries
from .serialize import arrays_from_text, arrays_to_text
from .textprep import PAD, EncodedDoc
from .word2vec import EmbeddingMatrix

__all__ = [
    "CnnConfig", "CnnWeights", "ClassifierMetrics", "LogisticModel", "SentimentSeries",
    "forward", "predict_proba", "train", "evaluate", "logistic_baseline", "daily_sentiment",
]


@dataclass(frozen=True)
class CnnConfig:
    filters: int = 128
    kernel_width: int = 3
    embed_dim: int = 100
    max_len: int = 16
    lr: float = 0.1
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.filters < 1 or self.kernel_width < 1:
            raise ValueError("filters and kernel_width must be >= 1")
        if self.kernel_width > self.max_len:
            raise ValueError("kernel_width cannot exceed max_len")
        if not self.lr > 0 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("invalid optimizer settings")


@dataclass
class CnnWeights:
    conv_kernels: np.ndarray   # (filters, kernel_width, embed_dim)
    conv_bias: np.ndarray      # (filters,)
    dense_w: np.ndarray        # (filters,)
    dense_b: float
    loss_history: list = field(default_factory=list, compare=False)

    @property
    def kernel_width(self) -> int:
        return self.conv_kernels.shape[1]

    def copy(self) -> "CnnWeights":
        return CnnWeights(self.conv_kernels.copy(), self.conv_bias.copy(), self.dense_w.copy(),
                          float(self.dense_b), list(self.loss_history))

    def to_text(self) -> str:
        return arrays_to_text({"conv_kernels": self.conv_kernels, "conv_bias": self.conv_bias,
                               "dense_w": self.dense_w, "dense_b": np.array(self.dense_b)})

    @classmethod
    def from_text(cls, text: str) -> "CnnWeights":
        a = arrays_from_text(text)
        return cls(a["conv_kernels"], a["conv_bias"], a["dense_w"], float(a["dense_b"]))


@dataclass(frozen=True)
class ClassifierMetrics:
    precision: float
    recall: float
    f_score: float

    @classmethod
    def from_precision_recall(cls, precision: float, recall: float) -> "ClassifierMetrics":
        denom = precision + recall
        return cls(precision, recall, 2 * precision * recall / denom if denom > 0 else 0.0)

    @classmethod
    def from_labels(cls, y_true, y_pred) -> "ClassifierMetrics":
        y_true = np.asarray(y_true).astype(bool)
        y_pred = np.asarray(y_pred).astype(bool)
        tp = int(np.sum(y_true & y_pred))
        fp = int(np.sum(~y_true & y_pred))
        fn = int(np.sum(y_true & ~y_pred))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        return cls.from_precision_recall(precision, recall)


def init_weights(cfg: CnnConfig, rng: np.random.Generator) -> CnnWeights:
    fan_in = cfg.kernel_width * cfg.embed_dim
    lim = np.sqrt(6.0 / (fan_in + cfg.filters))
    kernels = rng.uniform(-lim, lim, size=(cfg.filters, cfg.kernel_width, cfg.embed_dim))
    lim_d = np.sqrt(6.0 / (cfg.filters + 1))
    dense = rng.uniform(-lim_d, lim_d, size=cfg.filters)
    return CnnWeights(kernels, np.zeros(cfg.filters), dense, 0.0)


def _windows(x: np.ndarray, width: int) -> np.ndarray:
    """(B, L, D) -> (B, L - width + 1, width * D)."""
    b, length, d = x.shape
    if length < width:
        raise ShapeMismatch(f"sequence length {length} shorter than kernel width {width}")
    win = np.lib.stride_tricks.sliding_window_view(x, width, axis=1)  # (B, P, D, width)
    return np.ascontiguousarray(win.transpose(0, 1, 3, 2)).reshape(b, length - width + 1, width * d)


def _forward(w: CnnWeights, x: np.ndarray):
    if x.ndim != 3 or x.shape[2] != w.conv_kernels.shape[2]:
        raise ShapeMismatch(f"expected (batch, len, {w.conv_kernels.shape[2]}) input, got {x.shape}")
    win = _windows(x, w.kernel_width)
    kmat = w.conv_kernels.reshape(w.conv_kernels.shape[0], -1)
    z = win @ kmat.T + w.conv_bias                      # (B, P, F)
    act = np.maximum(z, 0.0)
    pos = np.argmax(act, axis=1)                        # (B, F)
    pooled = np.take_along_axis(act, pos[:, None, :], axis=1)[:, 0, :]
    logit = pooled @ w.dense_w + w.dense_b
    return logit, (win, z, pos, pooled)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def forward(w: CnnWeights, doc_embeddings) -> float:
    """Positive-class probability for one (max_len, embed_dim) document."""
    x = np.asarray(doc_embeddings, dtype=float)
    if x.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D document matrix, got shape {x.shape}")
    logit, _ = _forward(w, x[None])
    return float(_sigmoid(logit[0]))


def embed(docs, emb: EmbeddingMatrix) -> np.ndarray:
    ids = np.array([d.token_ids if isinstance(d, EncodedDoc) else d for d in docs], dtype=np.int64)
    return emb.input_vectors[ids]


def predict_proba(w: CnnWeights, docs, emb: EmbeddingMatrix, batch_size: int = 256) -> np.ndarray:
    out = []
    for s in range(0, len(docs), batch_size):
        logit, _ = _forward(w, embed(docs[s:s + batch_size], emb))
        out.append(_sigmoid(logit))
    return np.concatenate(out) if out else np.zeros(0)


def loss_and_grads(w: CnnWeights, x: np.ndarray, y: np.ndarray):
    """Mean binary cross-entropy over the batch and its gradients.

    Gradients are returned as a CnnWeights-shaped tuple
    ``(d_kernels, d_conv_bias, d_dense_w, d_dense_b)``.
    """
    logit, (win, z, pos, pooled) = _forward(w, x)
    b = x.shape[0]
    loss = float(np.mean(np.logaddexp(0.0, logit) - y * logit))
    dlogit = (_sigmoid(logit) - y) / b
    d_dense_w = pooled.T @ dlogit
    d_dense_b = float(dlogit.sum())
    d_pooled = dlogit[:, None] * w.dense_w[None, :]                  # (B, F)
    z_at = np.take_along_axis(z, pos[:, None, :], axis=1)[:, 0, :]
    dz = d_pooled * (z_at > 0)                                        # (B, F)
    # scatter the pooled gradient back to the argmax positions, then one matmul
    dz_full = np.zeros_like(z)
    np.put_along_axis(dz_full, pos[:, None, :], dz[:, None, :], axis=1)
    d_kmat = dz_full.reshape(-1, z.shape[2]).T @ win.reshape(-1, win.shape[2])
    return loss, (d_kmat.reshape(w.conv_kernels.shape), dz.sum(axis=0), d_dense_w, d_dense_b)


def _check_labeled(docs: Sequence[EncodedDoc]):
    if not docs:
        raise EmptyCorpus("no labeled documents")
    y = np.array([d.label for d in docs], dtype=float)
    if np.any(np.isnan(y)) or not set(np.unique(y)) <= {0.0, 1.0}:
        raise ValueError("every training document needs a 0/1 label")
    if len(np.unique(y)) < 2:
        raise SingleClassCorpus("training documents carry a single label")
    return y


def train(docs: Sequence[EncodedDoc], emb: EmbeddingMatrix, cfg: CnnConfig = CnnConfig()) -> CnnWeights:
    y = _check_labeled(docs)
    if emb.dim != cfg.embed_dim:
        raise ShapeMismatch(f"embedding dim {emb.dim} != configured {cfg.embed_dim}")
    rng = np.random.default_rng(cfg.seed)
    w = init_weights(cfg, rng)
    x_all = embed(docs, emb)
    n = len(docs)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            loss, (dk, dcb, ddw, ddb) = loss_and_grads(w, x_all[idx], y[idx])
            w.conv_kernels -= cfg.lr * dk
            w.conv_bias -= cfg.lr * dcb
            w.dense_w -= cfg.lr * ddw
            w.dense_b -= cfg.lr * ddb
            total += loss * idx.size
        w.loss_history.append(total / n)
    return w


def evaluate(w: CnnWeights, docs: Sequence[EncodedDoc], emb: EmbeddingMatrix,
             threshold: float = 0.5) -> ClassifierMetrics:
    if not docs:
        raise EmptyEvalSet("no documents to evaluate")
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    prob = predict_proba(w, docs, emb)
    return ClassifierMetrics.from_labels([d.label for d in docs], prob >= threshold)


@dataclass
class LogisticModel:
    """Logistic regression on mean-pooled (non-PAD) document embeddings."""

    w: np.ndarray
    b: float = 0.0

    def predict_proba(self, docs, emb: EmbeddingMatrix) -> np.ndarray:
        return _sigmoid(mean_pool(docs, emb) @ self.w + self.b)

    def evaluate(self, docs, emb: EmbeddingMatrix, threshold: float = 0.5) -> ClassifierMetrics:
        if not docs:
            raise EmptyEvalSet("no documents to evaluate")
        return ClassifierMetrics.from_labels([d.label for d in docs],
                                             self.predict_proba(docs, emb) >= threshold)


def mean_pool(docs, emb: EmbeddingMatrix) -> np.ndarray:
    ids = np.array([d.token_ids if isinstance(d, EncodedDoc) else d for d in docs], dtype=np.int64)
    mask = (ids != PAD).astype(float)
    summed = np.einsum("bl,bld->bd", mask, emb.input_vectors[ids])
    return summed / np.maximum(mask.sum(axis=1), 1.0)[:, None]


def logistic_loss_and_grad(model: LogisticModel, x: np.ndarray, y: np.ndarray):
    logit = x @ model.w + model.b
    loss = float(np.mean(np.logaddexp(0.0, logit) - y * logit))
    r = (_sigmoid(logit) - y) / len(y)
    return loss, x.T @ r, float(r.sum())


def logistic_baseline(docs: Sequence[EncodedDoc], emb: EmbeddingMatrix, lr: float = 1.0,
                      epochs: int = 200, seed: int = 0) -> LogisticModel:
    """Full-batch gradient descent from a small seeded random start."""
    y = _check_labeled(docs)
    rng = np.random.default_rng(seed)
    x = mean_pool(docs, emb)
    model = LogisticModel(rng.normal(0.0, 0.01, size=emb.dim), 0.0)
    for _ in range(epochs):
        _, gw, gb = logistic_loss_and_grad(model, x, y)
        model.w -= lr * gw
        model.b -= lr * gb
    return model


def daily_sentiment(w: CnnWeights, headlines_by_date: Mapping[dt.date, Sequence], emb: EmbeddingMatrix) -> SentimentSeries:
    """Mean headline probability per date."""
    dates = sorted(headlines_by_date)
    scores = []
    for d in dates:
        docs = headlines_by_date[d]
        if not docs:
            raise EmptyDay(d)
        scores.append(float(np.mean(predict_proba(w, list(docs), emb))))
    return SentimentSeries(dates, np.clip(scores, 0.0, 1.0))


def metrics_report(columns: Mapping[str, ClassifierMetrics]) -> str:
    """Three rows (precision, recall, F-score), one column per classifier."""
    names = list(columns)
    width = max(10, *(len(n) for n in names))
    lines = ["Metric".ljust(10) + "".join(n.rjust(width + 2) for n in names)]
    for label, attr in (("precision", "precision"), ("recall", "recall"), ("F-score", "f_score")):
        lines.append(label.ljust(10) + "".join(f"{getattr(columns[n], attr):.4f}".rjust(width + 2) for n in names))
    return "\n".join(lines) + "\n"
