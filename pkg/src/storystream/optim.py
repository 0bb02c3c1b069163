"""Numerical optimizers: L-BFGS with backtracking line search and an
SMO-style dual solver for the linear soft-margin SVM."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DegenerateData, LineSearchFailure

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


def _two_loop(grad: np.ndarray, s_hist: list, y_hist: list, rho_hist: list) -> np.ndarray:
    """Two-loop recursion: approximate H^{-1} grad from curvature history."""
    q = grad.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * float(np.dot(s, q))
        q -= a * y
        alphas.append(a)
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= float(np.dot(s, y)) / float(np.dot(y, y))
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * float(np.dot(y, q))
        q += (a - b) * s
    return q


def _armijo(
    objective: Objective,
    x: np.ndarray,
    f: float,
    g: np.ndarray,
    d: np.ndarray,
    max_halvings: int = 40,
    c1: float = 1e-4,
) -> tuple[np.ndarray, float, np.ndarray]:
    slope = float(np.dot(g, d))
    t = 1.0
    for _ in range(max_halvings):
        x_new = x + t * d
        f_new, g_new = objective(x_new)
        if np.isfinite(f_new) and f_new <= f + c1 * t * slope:
            return x_new, f_new, np.asarray(g_new, dtype=np.float64)
        t *= 0.5
    raise LineSearchFailure("backtracking line search exhausted its step budget")


def lbfgs_minimize(
    objective: Objective,
    x0,
    memory: int = 10,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> np.ndarray:
    """Minimize a smooth function given (value, gradient) evaluations.

    Stops when the max-norm of the gradient drops to ``tol`` or after
    ``max_iter`` iterations.  On a failed line search the curvature history
    is discarded and a steepest-descent step is retried once before
    LineSearchFailure propagates.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = objective(x)
    g = np.asarray(g, dtype=np.float64)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise ValueError("objective must be finite at the starting point")
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []
    for _ in range(max_iter):
        if float(np.max(np.abs(g))) <= tol:
            break
        d = -_two_loop(g, s_hist, y_hist, rho_hist)
        if float(np.dot(g, d)) >= 0.0:  # history gave a non-descent direction
            s_hist.clear(), y_hist.clear(), rho_hist.clear()
            d = -g
        try:
            x_new, f_new, g_new = _armijo(objective, x, f, g, d)
        except LineSearchFailure:
            if not s_hist:
                raise
            s_hist.clear(), y_hist.clear(), rho_hist.clear()
            x_new, f_new, g_new = _armijo(objective, x, f, g, -g)
        s = x_new - x
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0), y_hist.pop(0), rho_hist.pop(0)
        x, f, g = x_new, f_new, g_new
    return x


def svm_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, C: float) -> float:
    """Primal objective: 0.5 ||w||^2 + C * sum hinge(1 - y (Xw + b))."""
    margins = X @ w + b
    hinge = np.maximum(0.0, 1.0 - y * margins)
    return 0.5 * float(np.dot(w, w)) + C * float(hinge.sum())


def _best_bias(margins: np.ndarray, y: np.ndarray) -> float:
    """Exact minimizer over b of sum_i hinge(1 - y_i (m_i + b)).

    The hinge sum is convex piecewise-linear in b with kinks at y_i - m_i;
    its slope increases by one at every kink, starting at -(#positives), so
    the minimum sits at the (#positives)-th smallest kink.
    """
    kinks = np.sort(y - margins)
    n_pos = int(np.sum(y > 0))
    if n_pos == 0:
        return float(kinks[0]) - 1.0  # all-negative data: push margins negative
    return float(kinks[n_pos - 1])


def svm_fit(
    X,
    y,
    C: float,
    tol: float = 1e-6,
    max_iter: int = 200_000,
) -> tuple[np.ndarray, float]:
    """Train a linear soft-margin SVM by SMO-style dual coordinate descent.

    Works on the dual of 0.5 ||w||^2 + C sum hinge with an unregularized
    bias (equality constraint sum alpha_i y_i = 0).  Pairs are selected by
    the maximal-violating-pair rule with a second-order candidate pick;
    iteration stops when the KKT violation falls below ``tol``.  Returns
    (w, b) with b re-optimized exactly for the returned w.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) with one label per row")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DegenerateData("both classes are required to fit an SVM")
    if not C > 0:
        raise ValueError("C must be positive")
    n, d = X.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    k_diag = np.einsum("ij,ij->i", X, X)
    bound_eps = 1e-12
    for _ in range(max_iter):
        margins = X @ w
        score = y - margins  # equals -y * dual gradient
        up = ((y > 0) & (alpha < C - bound_eps)) | ((y < 0) & (alpha > bound_eps))
        low = ((y > 0) & (alpha > bound_eps)) | ((y < 0) & (alpha < C - bound_eps))
        if not up.any() or not low.any():
            break
        up_idx = np.flatnonzero(up)
        i = int(up_idx[np.argmax(score[up_idx])])
        m_val = score[i]
        low_idx = np.flatnonzero(low)
        gaps = m_val - score[low_idx]
        if float(gaps.max()) <= tol:
            break
        # second-order pick: maximize gap^2 / curvature among violating pairs
        viol = gaps > bound_eps
        cand = low_idx[viol]
        eta = np.maximum(k_diag[i] + k_diag[cand] - 2.0 * (X[cand] @ X[i]), 1e-12)
        j = int(cand[np.argmax((gaps[viol] ** 2) / eta)])

        e_i = margins[i] - y[i]
        e_j = margins[j] - y[j]
        eta_ij = max(k_diag[i] + k_diag[j] - 2.0 * float(np.dot(X[i], X[j])), 1e-12)
        a_j_new = alpha[j] + y[j] * (e_i - e_j) / eta_ij
        if y[i] != y[j]:
            lo, hi = max(0.0, alpha[j] - alpha[i]), min(C, C + alpha[j] - alpha[i])
        else:
            lo, hi = max(0.0, alpha[i] + alpha[j] - C), min(C, alpha[i] + alpha[j])
        a_j_new = min(max(a_j_new, lo), hi)
        d_j = a_j_new - alpha[j]
        d_i = -y[i] * y[j] * d_j
        alpha[i] += d_i
        alpha[j] = a_j_new
        w += d_i * y[i] * X[i] + d_j * y[j] * X[j]
    b = _best_bias(X @ w, y)
    return w, b
