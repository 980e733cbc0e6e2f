"""ARCH(q) / GARCH(p, q) with Gaussian innovations.

Conditional variance recursion::

    sigma2[t] = alpha0 + sum_i alphas[i] * eps[t-1-i]**2 + sum_j betas[j] * sigma2[t-1-j]

Pre-sample values of both ``eps**2`` and ``sigma2`` are set to the sample
variance of the input unless an explicit ``init`` is supplied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal, stats

from .errors import NonFiniteLikelihood, OptimizerDiverged, SeriesTooShort

STATIONARITY_MARGIN = 1e-6
LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class GarchOrder:
    p: int = 1
    q: int = 1

    def __post_init__(self):
        if self.q < 1 or self.p < 0:
            raise ValueError(f"invalid GARCH order (p={self.p}, q={self.q})")


@dataclass(frozen=True)
class GarchParams:
    alpha0: float
    alphas: tuple
    betas: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not self.alphas:
            raise ValueError("at least one ARCH coefficient is required")
        if any(a < 0 for a in self.alphas) or any(b < 0 for b in self.betas):
            raise ValueError("ARCH/GARCH coefficients must be nonnegative")
        if not self.persistence < 1:
            raise ValueError(f"non-stationary parameters (persistence {self.persistence})")

    @property
    def order(self) -> GarchOrder:
        return GarchOrder(p=len(self.betas), q=len(self.alphas))

    @property
    def persistence(self) -> float:
        return sum(self.alphas) + sum(self.betas)

    @property
    def unconditional_variance(self) -> float:
        return self.alpha0 / (1.0 - self.persistence)


@dataclass
class GarchFit:
    params: GarchParams
    log_likelihood: float
    converged: bool
    iterations: int
    initial_nll: float = field(default=math.nan, repr=False)


def _as_eps(eps) -> np.ndarray:
    eps = np.asarray(eps, dtype=float).ravel()
    if eps.size < 1:
        raise SeriesTooShort("empty innovation series")
    return eps


def conditional_variances(eps, params: GarchParams, init: float | None = None) -> np.ndarray:
    eps = _as_eps(eps)
    q, p = len(params.alphas), len(params.betas)
    s0 = float(np.var(eps)) if init is None else float(init)
    e2 = np.concatenate([np.full(q, s0), eps * eps])
    n = eps.size
    # ARCH part: alpha0 + sum_i alpha_i * eps2[t-i]
    x = np.full(n, params.alpha0)
    for i, a in enumerate(params.alphas, start=1):
        x += a * e2[q - i:q - i + n]
    if p == 0:
        return x
    a_coef = np.concatenate([[1.0], -np.asarray(params.betas)])
    zi = signal.lfiltic([1.0], a_coef, y=np.full(p, s0))
    out, _ = signal.lfilter([1.0], a_coef, x, zi=zi)
    return out


def negative_log_likelihood(eps, params: GarchParams, init: float | None = None) -> float:
    eps = _as_eps(eps)
    s2 = conditional_variances(eps, params, init)
    if not np.all(np.isfinite(s2)) or np.any(s2 <= 0):
        raise NonFiniteLikelihood("conditional variance is non-positive or non-finite")
    return 0.5 * float(np.sum(LOG_2PI + np.log(s2) + eps * eps / s2))


def forecast_one_step(eps, params: GarchParams, init: float | None = None) -> float:
    """Variance for the period after the last observation."""
    eps = _as_eps(eps)
    s0 = float(np.var(eps)) if init is None else float(init)
    # sigma2[T+1] does not depend on eps[T+1]; the appended zero is a placeholder
    return float(conditional_variances(np.append(eps, 0.0), params, init=s0)[-1])


def simulate(params: GarchParams, n: int, seed: int, burn: int = 500) -> np.ndarray:
    """Draw ``n`` innovations ``eps = sigma * z`` with ``z`` standard normal."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n + burn)
    q, p = len(params.alphas), len(params.betas)
    s_bar = params.unconditional_variance
    e2_hist = [s_bar] * q
    s2_hist = [s_bar] * p
    out = np.empty(n + burn)
    for t in range(n + burn):
        s2 = params.alpha0
        for i, a in enumerate(params.alphas):
            s2 += a * e2_hist[-1 - i]
        for j, b in enumerate(params.betas):
            s2 += b * s2_hist[-1 - j]
        e = math.sqrt(s2) * z[t]
        out[t] = e
        e2_hist.append(e * e)
        s2_hist.append(s2)
        if len(e2_hist) > q:
            e2_hist.pop(0)
        if p and len(s2_hist) > p:
            s2_hist.pop(0)
    return out[burn:]


# Unconstrained parameterization: theta[0] = log(alpha0); the remaining p+q
# entries are logits of a softmax whose extra slack component (logit 0) keeps
# the coefficient sum strictly below 1 - STATIONARITY_MARGIN.

def _unpack(theta: np.ndarray, order: GarchOrder) -> GarchParams:
    logits = np.append(theta[1:], 0.0)
    w = np.exp(logits - logits.max())
    w = w / w.sum() * (1.0 - STATIONARITY_MARGIN)
    return GarchParams(math.exp(theta[0]), w[:order.q], w[order.q:order.q + order.p])


def _pack(params: GarchParams) -> np.ndarray:
    w = np.array(params.alphas + params.betas) / (1.0 - STATIONARITY_MARGIN)
    slack = 1.0 - w.sum()
    return np.concatenate([[math.log(params.alpha0)], np.log(np.maximum(w, 1e-12) / slack)])


def initial_params(eps, order: GarchOrder) -> GarchParams:
    """Documented starting point of ``fit_mle``."""
    var = float(np.var(_as_eps(eps)))
    if order.p > 0:
        alphas, betas = [0.05 / order.q] * order.q, [0.90 / order.p] * order.p
    else:
        alphas, betas = [0.30 / order.q] * order.q, []
    alpha0 = max(var, 1e-300) * (1.0 - sum(alphas) - sum(betas))
    return GarchParams(alpha0, alphas, betas)


def min_length(order: GarchOrder) -> int:
    return 5 * (1 + order.p + order.q)


def fit_mle(eps, order: GarchOrder = GarchOrder(), maxiter: int = 500, tol: float = 1e-9,
            lr_level: float | None = 0.05) -> GarchFit:
    """Gaussian maximum-likelihood fit.

    The returned parameters are never worse (in NLL) than ``initial_params``.

    When ``alpha_1..q`` are near zero the GARCH coefficients are not identified
    and the likelihood is almost flat along ``alpha0 / (1 - beta) = const``.
    With ``lr_level`` set, the fit is compared against the constant-variance
    model by a likelihood-ratio test with ``p + q`` degrees of freedom, and the
    constant model is returned if the heteroskedastic fit is not significant
    at that level. ``lr_level=None`` gives the plain maximiser.
    """
    eps = _as_eps(eps)
    if eps.size < min_length(order):
        raise SeriesTooShort(f"need at least {min_length(order)} observations for order {order}")
    start = initial_params(eps, order)
    nll0 = negative_log_likelihood(eps, start)
    scale = nll0 if nll0 != 0 else 1.0

    def objective(theta):
        try:
            val = negative_log_likelihood(eps, _unpack(theta, order))
        except (NonFiniteLikelihood, ValueError, OverflowError):
            return 1e10
        return val / abs(scale)

    res = optimize.minimize(objective, _pack(start), method="L-BFGS-B",
                            options={"maxiter": maxiter, "ftol": tol, "gtol": 1e-8})
    iterations = int(res.nit)
    converged = bool(res.success)
    theta = res.x
    if not converged:
        nm = optimize.minimize(objective, theta, method="Nelder-Mead",
                               options={"maxiter": maxiter * 4, "xatol": 1e-8, "fatol": tol})
        iterations += int(nm.nit)
        if nm.fun <= res.fun:
            theta = nm.x
        converged = bool(nm.success)
    try:
        params = _unpack(theta, order)
        nll = negative_log_likelihood(eps, params)
    except (ValueError, OverflowError, NonFiniteLikelihood) as exc:
        raise OptimizerDiverged(str(exc)) from None
    if not math.isfinite(nll):
        raise OptimizerDiverged("optimizer ended at a non-finite likelihood")
    if nll > nll0:
        params, nll, converged = start, nll0, False
    if lr_level is not None:
        const = GarchParams(max(float(np.mean(eps * eps)), 1e-300), [0.0] * order.q, [0.0] * order.p)
        nll_const = negative_log_likelihood(eps, const)
        critical = stats.chi2.ppf(1.0 - lr_level, df=order.p + order.q)
        if 2.0 * (nll_const - nll) < critical and nll_const <= nll0:
            params, nll = const, nll_const
    return GarchFit(params, -nll, converged, iterations, initial_nll=nll0)


def to_text(fit: GarchFit) -> str:
    p = fit.params
    lines = [f"order.p = {len(p.betas)}", f"order.q = {len(p.alphas)}", f"alpha0 = {p.alpha0!r}"]
    lines += [f"alpha[{i}] = {a!r}" for i, a in enumerate(p.alphas, start=1)]
    lines += [f"beta[{j}] = {b!r}" for j, b in enumerate(p.betas, start=1)]
    lines += [f"loglik = {fit.log_likelihood!r}", f"converged = {str(fit.converged).lower()}",
              f"iterations = {fit.iterations}"]
    return "\n".join(lines) + "\n"


def from_text(text: str) -> GarchFit:
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()
    p, q = int(kv["order.p"]), int(kv["order.q"])
    params = GarchParams(float(kv["alpha0"]),
                         [float(kv[f"alpha[{i}]"]) for i in range(1, q + 1)],
                         [float(kv[f"beta[{j}]"]) for j in range(1, p + 1)])
    return GarchFit(params, float(kv["loglik"]), kv.get("converged", "true") == "true",
                    int(kv.get("iterations", 0)))
