"""Forecast scoring: RMSE and the regression F-test against a constant forecast."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptySequence, LengthMismatch, ZeroVariancePredictor

P_FLOOR = 1e-12
_CF_EPS = 1e-16
_CF_TINY = 1e-300


@dataclass(frozen=True)
class EvalReport:
    model_name: str
    rmse: float
    f_stat: float
    p_value: float
    n: int


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if a.size != p.size:
        raise LengthMismatch(f"{a.size} actual values vs {p.size} predictions")
    if a.size == 0:
        raise EmptySequence("nothing to score")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise ValueError("non-finite values in scored sequences")
    return a, p


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    d = a - p
    return math.sqrt(float(np.mean(d * d)))


def _beta_cf(a: float, b: float, x: float, max_iter: int = 10_000) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _CF_TINY else _CF_TINY)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _CF_TINY else _CF_TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _CF_TINY else _CF_TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _CF_TINY else _CF_TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _CF_TINY else _CF_TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def f_cdf_upper_tail(x: float, d1: int, d2: int) -> float:
    """``P(F > x)`` for ``F ~ F(d1, d2)``."""
    if d1 <= 0 or d2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    # upper tail = I_{d2/(d2 + d1 x)}(d2/2, d1/2), which avoids cancellation for large x
    return min(1.0, max(0.0, betainc_regularized(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x))))


@dataclass(frozen=True)
class FTestResult:
    f_stat: float
    p_value: float
    slope: float
    intercept: float


def regression_f_test(actual, predicted) -> FTestResult:
    """OLS of actual on predicted; overall F-test of the slope.

    p-values below 1e-12 are reported as 0.
    """
    a, p = _pair(actual, predicted)
    n = a.size
    if n < 3:
        raise EmptySequence("the F-test needs at least three observations")
    pc = p - p.mean()
    sxx = float(pc @ pc)
    if sxx <= 0 or sxx <= 1e-28 * max(1.0, float(p @ p)):
        raise ZeroVariancePredictor("predictions are constant")
    ac = a - a.mean()
    slope = float(pc @ ac) / sxx
    intercept = float(a.mean() - slope * p.mean())
    ess = slope * slope * sxx
    rss = float(np.sum((ac - slope * pc) ** 2))
    tss = float(ac @ ac)
    if rss <= 1e-15 * max(tss, _CF_TINY):
        return FTestResult(math.inf, 0.0, slope, intercept)
    f_stat = ess / (rss / (n - 2))
    pv = f_cdf_upper_tail(f_stat, 1, n - 2)
    return FTestResult(f_stat, 0.0 if pv < P_FLOOR else pv, slope, intercept)


def evaluate_forecast(model_name: str, actual, predicted) -> EvalReport:
    ft = regression_f_test(actual, predicted)
    return EvalReport(model_name, rmse(actual, predicted), ft.f_stat, ft.p_value, len(actual))


def _fmt_sci(x: float) -> str:
    return f"{x:.2e}"


def format_table(reports: Sequence, title: str | None = None) -> str:
    """Aligned ``Predictive model | RMSE | p-value`` table.

    Entries that are strings instead of EvalReport render as skipped rows.
    """
    rows = [("Predictive model", "RMSE", "p-value")]
    for r in reports:
        if isinstance(r, EvalReport):
            rows.append((r.model_name, _fmt_sci(r.rmse), "0" if r.p_value == 0 else f"{r.p_value:.3g}"))
        else:
            rows.append((str(r), "SKIPPED", "SKIPPED"))
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    w2 = max(len(r[2]) for r in rows)
    lines = [] if title is None else [title]
    for k, (a, b, c) in enumerate(rows):
        lines.append(f"{a.ljust(w0)} | {b.rjust(w1)} | {c.rjust(w2)}")
        if k == 0:
            lines.append("-" * w0 + "-+-" + "-" * w1 + "-+-" + "-" * w2)
    return "\n".join(lines) + "\n"


def write_report_csv(path, reports: Sequence) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "rmse", "f_stat", "p_value", "n"])
        for r in reports:
            if isinstance(r, EvalReport):
                w.writerow([r.model_name, repr(r.rmse), repr(r.f_stat), repr(r.p_value), r.n])
            else:
                w.writerow([str(r), "SKIPPED", "", "", ""])
