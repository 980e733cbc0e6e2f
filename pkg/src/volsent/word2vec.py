"""Skip-gram word embeddings trained with negative sampling.

Each (center, context) pair contributes

    -log sigmoid(u_ctx . v_center) - sum_k log sigmoid(-u_neg_k . v_center)

where ``v`` rows come from ``input_vectors`` and ``u`` rows from
``output_vectors``. Negatives are drawn from the unigram distribution raised to
the 0.75 power. Updates are applied per mini-batch of pairs with the learning
rate decaying linearly to ``1e-4 * lr`` over all pairs of all epochs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyCorpus, InvalidId, ZeroVector
from .textprep import PAD


@dataclass(frozen=True)
class W2vConfig:
    dim: int = 100
    window: int = 4
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.window < 1 or self.negatives < 1 or self.dim < 1:
            raise ValueError("window, negatives and dim must be >= 1")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class EmbeddingMatrix:
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    loss_history: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __len__(self):
        return self.input_vectors.shape[0]


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sgns_loss_and_grads(v_center, u_context, u_negatives):
    """Loss and gradients for a batch of pairs.

    Shapes: ``v_center`` (B, D), ``u_context`` (B, D), ``u_negatives`` (B, K, D).
    Returns ``(loss per pair (B,), d_center, d_context, d_negatives)``.
    """
    pos = np.einsum("bd,bd->b", v_center, u_context)
    neg = np.einsum("bkd,bd->bk", u_negatives, v_center)
    loss = -_log_sigmoid(pos) - _log_sigmoid(-neg).sum(axis=1)
    g_pos = _sigmoid(pos) - 1.0
    g_neg = _sigmoid(neg)
    d_center = g_pos[:, None] * u_context + np.einsum("bk,bkd->bd", g_neg, u_negatives)
    d_context = g_pos[:, None] * v_center
    d_negatives = g_neg[:, :, None] * v_center[:, None, :]
    return loss, d_center, d_context, d_negatives


def skipgram_pairs(docs: Sequence[Sequence[int]], window: int):
    centers, contexts = [], []
    for doc in docs:
        ids = [t for t in doc if t != PAD]
        n = len(ids)
        for i, c in enumerate(ids):
            for j in range(max(0, i - window), min(n, i + window + 1)):
                if j != i:
                    centers.append(c)
                    contexts.append(ids[j])
    return np.array(centers, dtype=np.int64), np.array(contexts, dtype=np.int64)


def init_embeddings(vocab_size: int, dim: int, rng: np.random.Generator) -> EmbeddingMatrix:
    win = rng.uniform(-0.5 / dim, 0.5 / dim, size=(vocab_size, dim))
    win[PAD] = 0.0
    return EmbeddingMatrix(win, np.zeros((vocab_size, dim)))


def train_embeddings(docs, vocab_size: int, cfg: W2vConfig = W2vConfig()) -> EmbeddingMatrix:
    docs = [list(d) for d in docs]
    if not docs:
        raise EmptyCorpus("no documents")
    rng = np.random.default_rng(cfg.seed)
    emb = init_embeddings(vocab_size, cfg.dim, rng)
    flat = np.array([t for d in docs for t in d if t != PAD], dtype=np.int64)
    if flat.size == 0:
        raise EmptyCorpus("corpus has no tokens")
    if flat.max() >= vocab_size or flat.min() < 0:
        raise InvalidId("token id outside the vocabulary")
    if cfg.epochs == 0:
        return emb
    centers, contexts = skipgram_pairs(docs, cfg.window)
    if centers.size == 0:
        raise EmptyCorpus("no skip-gram pairs (all documents have a single token)")
    noise = np.bincount(flat, minlength=vocab_size).astype(float) ** 0.75
    noise /= noise.sum()
    noise_cdf = np.cumsum(noise)
    noise_cdf[-1] = 1.0

    win, wout = emb.input_vectors, emb.output_vectors
    n_pairs = centers.size
    total = n_pairs * cfg.epochs
    seen = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n_pairs)
        epoch_loss = 0.0
        for start in range(0, n_pairs, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            c, o = centers[idx], contexts[idx]
            negs = np.searchsorted(noise_cdf, rng.random((idx.size, cfg.negatives)), side="right")
            lr = cfg.lr * max(1e-4, 1.0 - seen / total)
            loss, dc, do, dn = sgns_loss_and_grads(win[c], wout[o], wout[negs])
            np.add.at(win, c, -lr * dc)
            np.add.at(wout, o, -lr * do)
            np.add.at(wout, negs.ravel(), -lr * dn.reshape(-1, cfg.dim))
            epoch_loss += float(loss.sum())
            seen += idx.size
        emb.loss_history.append(epoch_loss / n_pairs)
    win[PAD] = 0.0
    return emb


def _row(e: EmbeddingMatrix, a: int) -> np.ndarray:
    if not 0 <= a < len(e):
        raise InvalidId(f"token id {a} outside [0, {len(e)})")
    row = e.input_vectors[a]
    if not np.any(row):
        raise ZeroVector(f"token id {a} has an all-zero embedding")
    return row


def cosine_similarity(e: EmbeddingMatrix, a: int, b: int) -> float:
    va, vb = _row(e, a), _row(e, b)
    cos = float(va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb)))
    return min(1.0, max(-1.0, cos))


def nearest_neighbors(e: EmbeddingMatrix, a: int, k: int) -> list[tuple[int, float]]:
    """Top-``k`` rows by cosine to ``a``; zero rows and ``a`` itself are skipped."""
    va = _row(e, a)
    if k >= len(e):
        raise InvalidId(f"k={k} must be smaller than the vocabulary size {len(e)}")
    if k <= 0:
        return []
    norms = np.linalg.norm(e.input_vectors, axis=1)
    valid = norms > 0
    valid[a] = False
    ids = np.flatnonzero(valid)
    sims = e.input_vectors[ids] @ va / (norms[ids] * np.linalg.norm(va))
    order = np.lexsort((ids, -sims))[:k]
    return [(int(ids[i]), float(sims[i])) for i in order]


def to_text(e: EmbeddingMatrix, tokens: Sequence[str]) -> str:
    lines = [f"{len(e)} {e.dim}"]
    for tok, row in zip(tokens, e.input_vectors):
        lines.append(tok + " " + " ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> tuple[list[str], EmbeddingMatrix]:
    lines = text.splitlines()
    n, dim = (int(v) for v in lines[0].split())
    tokens, rows = [], []
    for line in lines[1:n + 1]:
        parts = line.split(" ")
        tokens.append(parts[0])
        rows.append([float(v) for v in parts[1:]])
    win = np.array(rows).reshape(n, dim)
    return tokens, EmbeddingMatrix(win, np.zeros_like(win))
