"""Single-layer LSTM volatility forecaster with a one-unit dense head.

Gate equations for input ``x`` and previous state ``(h, c)``::

    z = [x, h]
    i = sigmoid(W_i z + b_i)      input gate
    f = sigmoid(W_f z + b_f)      forget gate
    o = sigmoid(W_o z + b_o)      output gate
    g = tanh(W_g z + b_g)         candidate memory
    c' = f * c + i * g
    h' = o * tanh(c')

The prediction is ``dense_w . dropout(h_T) + dense_b`` with inverted dropout
during training only. Loss is the mean squared error; gradients come from
full backpropagation through time.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .errors import EmptyDataset, SeriesTooShort, ShapeMismatch, UnalignedCalendars
from .marketdata import SentimentSeries, VolatilitySeries
from .serialize import arrays_from_text, arrays_to_text

GATES = ("i", "f", "o", "g")


@dataclass(frozen=True)
class LstmConfig:
    hidden: int = 30
    input_dim: int = 1
    dropout: float = 0.2
    lookback: int = 5
    lr: float = 0.1
    epochs: int = 100
    batch_size: int = 32
    clip: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.input_dim not in (1, 2):
            raise ValueError("input_dim must be 1 or 2")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")
        if self.lookback < 1 or self.epochs < 0 or self.batch_size < 1 or not self.lr > 0:
            raise ValueError("invalid training settings")


@dataclass
class LstmWeights:
    w_i: np.ndarray
    w_f: np.ndarray
    w_o: np.ndarray
    w_g: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_g: np.ndarray
    dense_w: np.ndarray
    dense_b: float
    loss_history: list = field(default_factory=list, compare=False)

    @property
    def hidden(self) -> int:
        return self.w_i.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_i.shape[1] - self.hidden

    def params(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "loss_history"}

    def copy(self) -> "LstmWeights":
        p = {k: np.array(v, dtype=float) for k, v in self.params().items()}
        p["dense_b"] = float(p["dense_b"])
        return LstmWeights(**p, loss_history=list(self.loss_history))

    def to_text(self) -> str:
        return arrays_to_text(self.params())

    @classmethod
    def from_text(cls, text: str) -> "LstmWeights":
        a = arrays_from_text(text)
        a["dense_b"] = float(a["dense_b"])
        return cls(**a)

    @classmethod
    def zeros(cls, hidden: int, input_dim: int) -> "LstmWeights":
        m = lambda: np.zeros((hidden, input_dim + hidden))
        v = lambda: np.zeros(hidden)
        return cls(m(), m(), m(), m(), v(), v(), v(), v(), np.zeros(hidden), 0.0)


def init_weights(cfg: LstmConfig, rng: np.random.Generator) -> LstmWeights:
    lim = 1.0 / np.sqrt(cfg.hidden)
    shape = (cfg.hidden, cfg.input_dim + cfg.hidden)
    w = LstmWeights(*(rng.uniform(-lim, lim, size=shape) for _ in GATES),
                    np.zeros(cfg.hidden), np.ones(cfg.hidden), np.zeros(cfg.hidden), np.zeros(cfg.hidden),
                    rng.uniform(-lim, lim, size=cfg.hidden), 0.0)
    return w


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _gates(w: LstmWeights, z):
    i = _sigmoid(z @ w.w_i.T + w.b_i)
    f = _sigmoid(z @ w.w_f.T + w.b_f)
    o = _sigmoid(z @ w.w_o.T + w.b_o)
    g = np.tanh(z @ w.w_g.T + w.b_g)
    return i, f, o, g


def cell_step(w: LstmWeights, x, h_prev, c_prev):
    """One step for a single example; returns ``(h, c)``."""
    x = np.asarray(x, dtype=float).ravel()
    h_prev = np.asarray(h_prev, dtype=float).ravel()
    c_prev = np.asarray(c_prev, dtype=float).ravel()
    if x.size != w.input_dim or h_prev.size != w.hidden or c_prev.size != w.hidden:
        raise ShapeMismatch("input or state size does not match the weights")
    i, f, o, g = _gates(w, np.concatenate([x, h_prev]))
    c = f * c_prev + i * g
    return o * np.tanh(c), c


def _run(w: LstmWeights, x: np.ndarray, mask: np.ndarray | None = None):
    """Forward pass over (B, T, I); returns predictions and the cache for BPTT."""
    if x.ndim != 3 or x.shape[2] != w.input_dim:
        raise ShapeMismatch(f"expected (batch, steps, {w.input_dim}) inputs, got {x.shape}")
    b, steps, _ = x.shape
    h = np.zeros((b, w.hidden))
    c = np.zeros((b, w.hidden))
    cache = []
    for t in range(steps):
        z = np.concatenate([x[:, t, :], h], axis=1)
        i, f, o, g = _gates(w, z)
        c_prev = c
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        cache.append((z, i, f, o, g, c_prev, tc))
    h_out = h if mask is None else h * mask
    return h_out @ w.dense_w + w.dense_b, (cache, h_out)


def loss_and_grads(w: LstmWeights, x: np.ndarray, y: np.ndarray, mask: np.ndarray | None = None):
    """Mean squared error and its gradient (an LstmWeights-shaped dict)."""
    pred, (cache, h_out) = _run(w, x, mask)
    b = x.shape[0]
    err = pred - y
    loss = float(np.mean(err * err))
    dy = 2.0 * err / b
    grads = {k: np.zeros_like(v, dtype=float) for k, v in w.params().items() if k != "dense_b"}
    grads["dense_w"] = h_out.T @ dy
    grads["dense_b"] = float(dy.sum())
    dh = dy[:, None] * w.dense_w[None, :]
    if mask is not None:
        dh = dh * mask
    dc = np.zeros_like(dh)
    n_in = w.input_dim
    for z, i, f, o, g, c_prev, tc in reversed(cache):
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        da = {
            "i": dc * g * i * (1.0 - i),
            "f": dc * c_prev * f * (1.0 - f),
            "o": do * o * (1.0 - o),
            "g": dc * i * (1.0 - g * g),
        }
        dz = np.zeros_like(z)
        for k in GATES:
            grads[f"w_{k}"] += da[k].T @ z
            grads[f"b_{k}"] += da[k].sum(axis=0)
            dz += da[k] @ getattr(w, f"w_{k}")
        dh = dz[:, n_in:]
        dc = dc * f
    return loss, grads


@dataclass(frozen=True)
class FeatureSpec:
    use_sentiment: bool = False
    shift_sentiment: bool = False

    def __post_init__(self):
        if self.shift_sentiment and not self.use_sentiment:
            raise ValueError("shift_sentiment requires use_sentiment")

    @property
    def input_dim(self) -> int:
        return 2 if self.use_sentiment else 1


@dataclass(frozen=True)
class MinMaxScaler:
    lo: float
    hi: float

    @classmethod
    def fit(cls, values) -> "MinMaxScaler":
        values = np.asarray(values, dtype=float)
        return cls(float(values.min()), float(values.max()))

    @property
    def span(self) -> float:
        return self.hi - self.lo if self.hi > self.lo else 1.0

    def transform(self, values):
        return (np.asarray(values, dtype=float) - self.lo) / self.span

    def inverse(self, values):
        return np.asarray(values, dtype=float) * self.span + self.lo


IDENTITY = MinMaxScaler(0.0, 1.0)


@dataclass
class LstmDataset:
    inputs: np.ndarray       # (N, lookback, input_dim), scaled
    targets: np.ndarray      # (N,), scaled
    dates: tuple             # target dates
    scaler: MinMaxScaler = IDENTITY

    def __len__(self):
        return self.targets.size

    def subset(self, idx) -> "LstmDataset":
        idx = np.asarray(idx)
        return LstmDataset(self.inputs[idx], self.targets[idx],
                           tuple(self.dates[i] for i in idx), self.scaler)

    @property
    def raw_targets(self) -> np.ndarray:
        return self.scaler.inverse(self.targets)


def build_features(vol: VolatilitySeries, sent: SentimentSeries | None, spec: FeatureSpec,
                   lookback: int = 5, scaler: MinMaxScaler = IDENTITY) -> LstmDataset:
    """Windows of ``lookback`` steps ending the day before each target date.

    Step ``k`` of the window for target ``t`` holds ``vol[k]`` plus either
    ``sent[k]`` or, for the shifted variant, ``sent[k + 1]``; so the last row
    carries ``vol[t-1]`` with ``sent[t-1]`` (or ``sent[t]`` when shifted).
    """
    n = len(vol)
    if lookback < 1 or n - lookback < 1:
        raise SeriesTooShort(f"{n} observations cannot fill a lookback of {lookback}")
    v = scaler.transform(vol.values)
    cols = [v]
    if spec.use_sentiment:
        if sent is None:
            raise UnalignedCalendars("sentiment requested but not supplied")
        if tuple(sent.dates) != tuple(vol.dates):
            raise UnalignedCalendars("volatility and sentiment calendars differ; align them first")
        s = np.asarray(sent.scores, dtype=float)
        cols.append(np.append(s[1:], np.nan) if spec.shift_sentiment else s)
    steps = np.stack(cols, axis=1)                                     # (n, input_dim)
    starts = np.arange(n - lookback)
    inputs = steps[starts[:, None] + np.arange(lookback)[None, :]]     # (N, lookback, dim)
    targets = v[lookback:]
    return LstmDataset(inputs, targets, tuple(vol.dates[lookback:]), scaler)


def _clip(grads: dict, max_norm: float) -> None:
    norm = np.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values()))
    if max_norm and norm > max_norm:
        scale = max_norm / norm
        for k in grads:
            grads[k] = grads[k] * scale


def train(dataset: LstmDataset, cfg: LstmConfig = LstmConfig()) -> LstmWeights:
    if len(dataset) == 0:
        raise EmptyDataset("no training windows")
    if dataset.inputs.shape[2] != cfg.input_dim:
        raise ShapeMismatch(f"dataset has {dataset.inputs.shape[2]} features, config says {cfg.input_dim}")
    rng = np.random.default_rng(cfg.seed)
    w = init_weights(cfg, rng)
    x, y = dataset.inputs, dataset.targets
    n = len(dataset)
    keep = 1.0 - cfg.dropout
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            mask = None
            if cfg.dropout > 0:
                mask = (rng.random((idx.size, cfg.hidden)) < keep) / keep
            loss, grads = loss_and_grads(w, x[idx], y[idx], mask)
            _clip(grads, cfg.clip)
            for k, g in grads.items():
                if k == "dense_b":
                    w.dense_b -= cfg.lr * g
                else:
                    getattr(w, k)[...] -= cfg.lr * g
            total += loss * idx.size
        w.loss_history.append(total / n)
    return w


def forecast(w: LstmWeights, dataset: LstmDataset) -> np.ndarray:
    """Predictions in raw volatility units, clamped at zero."""
    if dataset.inputs.ndim != 3 or dataset.inputs.shape[2] != w.input_dim:
        raise ShapeMismatch("dataset features do not match the weights")
    if len(dataset) == 0:
        return np.zeros(0)
    pred, _ = _run(w, dataset.inputs)
    return np.maximum(dataset.scaler.inverse(pred), 0.0)
