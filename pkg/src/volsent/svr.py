"""Epsilon-insensitive support vector regression with an RBF kernel.

The dual is solved with an SMO scheme over the 2n multipliers
``(a, a*)`` using second-order working-set selection. The stored dual
coefficients are ``beta = a - a*``; predictions are
``sum_i beta_i * K(x_i, x) + bias``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, DimensionMismatch, NonFiniteTarget

_TAU = 1e-12


@dataclass(frozen=True)
class SvrHyperParams:
    c: float = 2.0
    epsilon: float = 0.001
    gamma: float = 0.001

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("C must be positive")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be nonnegative")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


@dataclass
class SvrModel:
    support_inputs: np.ndarray
    dual_coeffs: np.ndarray
    bias: float
    hyper: SvrHyperParams
    iterations: int = 0
    converged: bool = True

    @property
    def dim(self) -> int:
        return self.support_inputs.shape[1]


@dataclass(frozen=True)
class GridSpec:
    c_grid: tuple = (2.0,)
    gamma_grid: tuple = (0.001,)
    epsilon_grid: tuple = (0.001,)
    folds: int = 20

    def __post_init__(self):
        if not (self.c_grid and self.gamma_grid and self.epsilon_grid):
            raise ValueError("grids must be nonempty")
        if self.folds < 2:
            raise ValueError("need at least two folds")

    def points(self):
        for c in self.c_grid:
            for g in self.gamma_grid:
                for e in self.epsilon_grid:
                    yield SvrHyperParams(c=c, epsilon=e, gamma=g)


def rbf_kernel(a, b, gamma: float) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    d = a - b
    return math.exp(-gamma * float(d @ d))


def kernel_matrix(xa: np.ndarray, xb: np.ndarray, gamma: float) -> np.ndarray:
    sq = (np.sum(xa * xa, axis=1)[:, None] + np.sum(xb * xb, axis=1)[None, :]
          - 2.0 * xa @ xb.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def dual_objective(k: np.ndarray, ys, beta, epsilon: float) -> float:
    """``0.5 beta'K beta - y'beta + eps * |beta|_1`` (minimised by the solver)."""
    ys = np.asarray(ys, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return float(0.5 * beta @ k @ beta - ys @ beta + epsilon * np.abs(beta).sum())


def solve_dual(k: np.ndarray, ys, c: float, epsilon: float, tol: float = 1e-6,
               max_iter: int = 1_000_000):
    """Return ``(beta, bias, iterations, converged)`` for kernel matrix ``k``."""
    ys = np.asarray(ys, dtype=float)
    n = ys.size
    z = np.concatenate([np.ones(n), -np.ones(n)])
    a = np.zeros(2 * n)
    grad = np.concatenate([epsilon - ys, epsilon + ys])
    diag = np.diag(k)
    qd = np.concatenate([diag, diag])

    def q_col(i):
        return z * z[i] * np.tile(k[:, i % n], 2)

    it = 0
    converged = False
    while it < max_iter:
        up = np.where(z > 0, a < c, a > 0)      # may move up along z
        low = np.where(z > 0, a > 0, a < c)     # may move down along z
        neg_zg = -z * grad
        if not up.any() or not low.any():
            converged = True
            break
        cand = np.where(up, neg_zg, -np.inf)
        i = int(np.argmax(cand))
        g_max = cand[i]
        g_max2 = np.max(np.where(low, -neg_zg, -np.inf))
        if g_max + g_max2 < tol:
            converged = True
            break
        qi = q_col(i)
        # second-order choice of j among "low" candidates
        grad_diff = g_max + z * grad
        quad = qd[i] + qd - 2.0 * z[i] * z * qi
        quad = np.where(quad > 0, quad, _TAU)
        score = np.where(low & (grad_diff > 0), -(grad_diff ** 2) / quad, np.inf)
        j = int(np.argmin(score))
        if not np.isfinite(score[j]):
            converged = True
            break
        qj = q_col(j)
        old_ai, old_aj = a[i], a[j]
        if z[i] != z[j]:
            qc = qd[i] + qd[j] + 2.0 * qi[j]
            qc = qc if qc > 0 else _TAU
            delta = (-grad[i] - grad[j]) / qc
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j], a[i] = 0.0, diff
            elif a[i] < 0:
                a[i], a[j] = 0.0, -diff
            if diff > 0:
                if a[i] > c:
                    a[i], a[j] = c, c - diff
            elif a[j] > c:
                a[j], a[i] = c, c + diff
        else:
            qc = qd[i] + qd[j] - 2.0 * qi[j]
            qc = qc if qc > 0 else _TAU
            delta = (grad[i] - grad[j]) / qc
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > c:
                if a[i] > c:
                    a[i], a[j] = c, total - c
            elif a[j] < 0:
                a[j], a[i] = 0.0, total
            if total > c:
                if a[j] > c:
                    a[j], a[i] = c, total - c
            elif a[i] < 0:
                a[i], a[j] = 0.0, total
        grad += qi * (a[i] - old_ai) + qj * (a[j] - old_aj)
        it += 1

    # bias from free multipliers, or the midpoint of the feasible interval
    zg = z * grad
    at_up = a >= c
    at_low = a <= 0
    free = ~(at_up | at_low)
    if free.any():
        rho = float(zg[free].mean())
    else:
        ub_mask = (at_up & (z < 0)) | (at_low & (z > 0))
        lb_mask = (at_up & (z > 0)) | (at_low & (z < 0))
        ub = zg[ub_mask].min() if ub_mask.any() else np.inf
        lb = zg[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2)
    beta = a[:n] - a[n:]
    return beta, -rho, it, converged


def _as_inputs(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    return xs


def fit(xs, ys, hyper: SvrHyperParams = SvrHyperParams(), tol: float = 1e-6,
        max_iter: int = 1_000_000) -> SvrModel:
    xs = _as_inputs(xs)
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.shape[0] == 0:
        raise DegenerateInput("no training points")
    if xs.shape[0] != ys.size:
        raise DimensionMismatch(f"{xs.shape[0]} inputs but {ys.size} targets")
    if not np.all(np.isfinite(ys)):
        raise NonFiniteTarget("training targets must be finite")
    k = kernel_matrix(xs, xs, hyper.gamma)
    beta, bias, it, ok = solve_dual(k, ys, hyper.c, hyper.epsilon, tol=tol, max_iter=max_iter)
    sv = np.abs(beta) > 0
    return SvrModel(xs[sv].copy(), beta[sv].copy(), bias, hyper, it, ok)


def predict_many(model: SvrModel, xs) -> np.ndarray:
    xs = _as_inputs(xs)
    if model.support_inputs.size and xs.shape[1] != model.dim:
        raise DimensionMismatch(f"model expects dimension {model.dim}, got {xs.shape[1]}")
    if model.dual_coeffs.size == 0:
        return np.full(xs.shape[0], model.bias)
    return kernel_matrix(xs, model.support_inputs, model.hyper.gamma) @ model.dual_coeffs + model.bias


def predict(model: SvrModel, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    return float(predict_many(model, x[None, :])[0])


def kkt_violation(beta, fitted, ys, c: float, epsilon: float, atol: float = 1e-12) -> float:
    """Largest violation of the optimality conditions at the training points."""
    beta = np.asarray(beta, dtype=float)
    r = np.asarray(ys, dtype=float) - np.asarray(fitted, dtype=float)
    zero = np.abs(beta) <= atol
    upper = beta >= c - atol
    lower = beta <= -c + atol
    pos_free = (beta > atol) & ~upper
    neg_free = (beta < -atol) & ~lower
    v = np.zeros_like(r)
    v[zero] = np.maximum(0.0, np.abs(r[zero]) - epsilon)
    v[pos_free] = np.abs(r[pos_free] - epsilon)
    v[neg_free] = np.abs(r[neg_free] + epsilon)
    v[upper] = np.maximum(0.0, epsilon - r[upper])
    v[lower] = np.maximum(0.0, r[lower] + epsilon)
    return float(v.max()) if v.size else 0.0


def contiguous_folds(n: int, folds: int) -> list:
    """Index blocks in chronological order."""
    return np.array_split(np.arange(n), folds)


def grid_search_cv(xs, ys, grid: GridSpec, seed: int = 0, tol: float = 1e-6):
    """Pick the grid point with the lowest mean validation RMSE.

    Folds are contiguous blocks in time order, so ``seed`` does not change the
    result; it is accepted for interface symmetry with the other trainers.
    Ties resolve to the earliest grid point.
    """
    xs = _as_inputs(xs)
    ys = np.asarray(ys, dtype=float).ravel()
    n = ys.size
    if n == 0 or n < grid.folds:
        raise DegenerateInput(f"{n} observations cannot fill {grid.folds} folds")
    blocks = contiguous_folds(n, grid.folds)
    best, best_score = None, np.inf
    for hyper in grid.points():
        scores = []
        for block in blocks:
            mask = np.ones(n, dtype=bool)
            mask[block] = False
            model = fit(xs[mask], ys[mask], hyper, tol=tol)
            err = predict_many(model, xs[block]) - ys[block]
            scores.append(math.sqrt(float(np.mean(err * err))))
        score = float(np.mean(scores))
        if score < best_score:
            best, best_score = hyper, score
    return best, best_score


def lag_features(values, lags: int = 1):
    """Rows ``(v[t-lags], ..., v[t-1])`` with target ``v[t]`` for ``t >= lags``."""
    values = np.asarray(values, dtype=float)
    if values.size <= lags:
        raise DegenerateInput("series shorter than the lag window")
    xs = np.stack([values[i:values.size - lags + i] for i in range(lags)], axis=1)
    return xs, values[lags:]


def to_text(model: SvrModel) -> str:
    h = model.hyper
    lines = [f"c = {h.c!r}", f"epsilon = {h.epsilon!r}", f"gamma = {h.gamma!r}",
             f"bias = {model.bias!r}", f"dim = {model.support_inputs.shape[1] if model.support_inputs.ndim == 2 else 0}",
             f"n_support = {model.dual_coeffs.size}"]
    for x, b in zip(model.support_inputs, model.dual_coeffs):
        lines.append(" ".join(repr(float(v)) for v in x) + f" {float(b)!r}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> SvrModel:
    lines = text.splitlines()
    kv = {}
    for line in lines[:6]:
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()
    dim, ns = int(kv["dim"]), int(kv["n_support"])
    rows = np.array([[float(v) for v in line.split()] for line in lines[6:6 + ns]]).reshape(ns, dim + 1)
    hyper = SvrHyperParams(c=float(kv["c"]), epsilon=float(kv["epsilon"]), gamma=float(kv["gamma"]))
    return SvrModel(rows[:, :dim], rows[:, dim], float(kv["bias"]), hyper)
