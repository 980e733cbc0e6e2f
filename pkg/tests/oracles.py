"""Independent reference computations used by several test modules."""
import cvxpy as cp
import numpy as np


def svr_dual_qp(k, y, c, eps):
    """Solve the SVR dual with a general-purpose interior-point QP solver.

    Returns ``(beta, objective, bias)``; the bias is averaged over free
    multipliers, falling back to the midpoint of the feasible interval.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    beta = cp.Variable(n)
    obj = 0.5 * cp.quad_form(beta, cp.psd_wrap(k)) - y @ beta + eps * cp.norm1(beta)
    prob = cp.Problem(cp.Minimize(obj), [cp.sum(beta) == 0, beta <= c, beta >= -c])
    prob.solve(solver="CLARABEL", tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    b = np.asarray(beta.value)
    kb = k @ b
    tol = 1e-6 * c
    pos = (b > tol) & (b < c - tol)
    neg = (b < -tol) & (b > -c + tol)
    cands = np.concatenate([(y - eps - kb)[pos], (y + eps - kb)[neg]])
    if cands.size:
        bias = float(cands.mean())
    else:
        r = y - kb
        lo = np.max(np.concatenate([[-np.inf], (r - eps)[b >= -tol]]))
        hi = np.min(np.concatenate([[np.inf], (r + eps)[b <= tol]]))
        bias = float((lo + hi) / 2)
    return b, float(prob.value), bias


def rel_err(analytic, numeric) -> float:
    """Norm-wise relative difference between two gradient tensors."""
    a = np.ravel(analytic)
    n = np.ravel(numeric)
    denom = np.linalg.norm(a) + np.linalg.norm(n)
    return 0.0 if denom == 0 else float(np.linalg.norm(a - n) / denom)


def central_diff(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of scalar ``f`` w.r.t. every entry of ``x`` (modified in place, restored)."""
    g = np.zeros_like(x, dtype=float)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        fp = f()
        x[idx] = old - h
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def mp_f_upper_tail(x, d1, d2, dps: int = 40) -> float:
    """F(d1, d2) upper tail from mpmath's regularized incomplete beta."""
    import mpmath

    with mpmath.workdps(dps):
        z = mpmath.mpf(d1) * x / (mpmath.mpf(d1) * x + d2)
        return float(1 - mpmath.betainc(mpmath.mpf(d1) / 2, mpmath.mpf(d2) / 2, 0, z, regularized=True))
