"""Damped Gauss-Newton (Levenberg-Marquardt) for small residual systems.

The residual callback is batched: ``fun(xs)`` takes an ``(m, n)`` array of
parameter vectors and returns the ``(m, k)`` residuals, so that the central
difference Jacobian costs a single call.  Non-finite residuals mark points
outside the admissible domain and are treated as infinitely bad.
"""
from dataclasses import dataclass

import numpy as np

FD_STEP = 1e-6
MAX_ITER = 200


@dataclass
class LMResult:
    x: np.ndarray
    residual: np.ndarray
    max_abs: float
    iterations: int


def _cost(r):
    if not np.all(np.isfinite(r)):
        return np.inf
    return float(r @ r)


def damped_gauss_newton(fun, x0, target: float = 0.0, max_iter: int = MAX_ITER,
                        fd_step: float = FD_STEP, stall_iter: int = 6) -> LMResult:
    """Minimise ``|fun(x)|^2`` from ``x0``.

    Stops when ``max|r| <= target``, when the step falls below ``1e-14``
    (relative), after ``max_iter`` iterations, or when the cost has not
    dropped by 0.1 % over ``stall_iter`` consecutive iterations.
    """
    x = np.array(x0, dtype=float)
    n = x.size
    r = fun(x[None])[0]
    cost = _cost(r)
    lam = 1e-3
    stall = 0
    it = 0
    eye = np.eye(n)
    for it in range(1, max_iter + 1):
        if np.isfinite(cost) and np.max(np.abs(r)) <= target:
            break
        if not np.isfinite(cost):
            break
        xs = np.concatenate([x + fd_step * eye, x - fd_step * eye])
        rs = fun(xs)
        fwd, bwd = rs[:n], rs[n:]
        jac = (fwd - bwd) / (2.0 * fd_step)
        bad_f = ~np.all(np.isfinite(fwd), axis=1)
        bad_b = ~np.all(np.isfinite(bwd), axis=1)
        if bad_f.any() or bad_b.any():
            one_b = (r[None] - bwd) / fd_step
            one_f = (fwd - r[None]) / fd_step
            jac = np.where(bad_f[:, None], one_b, jac)
            jac = np.where(bad_b[:, None], one_f, jac)
            if np.any(bad_f & bad_b):
                break
        jac = jac.T  # (k, n)
        a = jac.T @ jac
        g = jac.T @ r
        d = np.maximum(np.diag(a), 1e-12)
        accepted = False
        for _ in range(12):
            try:
                delta = np.linalg.solve(a + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            xn = x + delta
            rn = fun(xn[None])[0]
            cn = _cost(rn)
            if cn < cost:
                accepted = True
                lam = max(lam / 3.0, 1e-12)
                break
            lam *= 4.0
        if not accepted:
            break
        stall = stall + 1 if cn > 0.999 * cost else 0
        x, r, cost = xn, rn, cn
        if np.max(np.abs(delta)) < 1e-14 * (1.0 + np.max(np.abs(x))) or stall >= stall_iter:
            break
    max_abs = float(np.max(np.abs(r))) if np.isfinite(cost) else np.inf
    return LMResult(x, r, max_abs, it)
