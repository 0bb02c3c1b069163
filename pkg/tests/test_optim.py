"""Optimizers: L-BFGS convergence, exact bias, SMO vs convex-programming oracle."""

import numpy as np
import pytest

from storystream.errors import DegenerateData, LineSearchFailure
from storystream.optim import _best_bias, lbfgs_minimize, svm_fit, svm_objective

from oracles import central_diff_grad, grid_svm_min, hinge_objective, qp_svm


def quadratic(x):
    return float(np.dot(x, x)), 2.0 * x


def rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100.0 * (b - a * a) ** 2
    g = np.array([
        -2.0 * (1 - a) - 400.0 * a * (b - a * a),
        200.0 * (b - a * a),
    ])
    return f, g


def test_lbfgs_quadratic():
    x = lbfgs_minimize(quadratic, [3.0, -4.0])
    assert np.max(np.abs(x)) < 1e-5


def test_lbfgs_rosenbrock():
    x = lbfgs_minimize(rosenbrock, [-1.2, 1.0], max_iter=2000)
    assert np.max(np.abs(x - 1.0)) < 1e-4


def test_lbfgs_general_quadratic():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(4, 4))
    a = m @ m.T + 4.0 * np.eye(4)
    b = rng.normal(size=4)
    x_star = np.linalg.solve(a, b)

    def f(x):
        return 0.5 * float(x @ a @ x) - float(b @ x), a @ x - b

    x = lbfgs_minimize(f, np.zeros(4), tol=1e-10)
    assert np.max(np.abs(x - x_star)) < 1e-6


def test_lbfgs_rejects_nonfinite_start():
    def f(x):
        return float("nan"), np.zeros_like(x)
    with pytest.raises(ValueError):
        lbfgs_minimize(f, [1.0])


def test_lbfgs_line_search_failure_propagates():
    def cliff(x):
        if np.allclose(x, 0.0):
            return 0.0, np.ones_like(x)
        return float("inf"), np.ones_like(x)
    with pytest.raises(LineSearchFailure):
        lbfgs_minimize(cliff, np.zeros(2))


def test_rosenbrock_gradient_is_right():
    # guard against a broken test fixture: check analytic vs numeric gradient
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = rng.uniform(-2, 2, size=2)
        _, g = rosenbrock(x)
        num = central_diff_grad(lambda z: rosenbrock(z)[0], x)
        assert np.max(np.abs(g - num)) < 1e-4


def _hinge_sum(b, margins, y):
    return float(np.maximum(0.0, 1.0 - y * (margins + b)).sum())


def test_best_bias_is_exact():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n = int(rng.integers(2, 12))
        margins = rng.normal(size=n) * 3.0
        y = rng.choice([-1.0, 1.0], size=n)
        if not np.any(y > 0):
            y[0] = 1.0
        b = _best_bias(margins, y)
        got = _hinge_sum(b, margins, y)
        # convex piecewise-linear in b: a kink attains the minimum
        kinks = y - margins
        best_at_kinks = min(_hinge_sum(k, margins, y) for k in kinks)
        assert got <= best_at_kinks + 1e-12
        # and nothing nearby does better
        for eps in (-1e-3, 1e-3):
            assert got <= _hinge_sum(b + eps, margins, y) + 1e-12


def _random_problem(rng, n, d):
    X = rng.normal(size=(n, d))
    y = rng.choice([-1.0, 1.0], size=n)
    y[0], y[1] = 1.0, -1.0  # both classes guaranteed
    return X, y


def test_svm_matches_qp_oracle():
    rng = np.random.default_rng(3)
    for trial in range(8):
        n = int(rng.integers(6, 20))
        d = int(rng.integers(1, 4))
        X, y = _random_problem(rng, n, d)
        C = float(rng.choice([0.1, 1.0, 10.0]))
        w, b = svm_fit(X, y, C, tol=1e-8)
        got = svm_objective(w, b, X, y, C)
        _, _, opt = qp_svm(X, y, C)
        assert got == pytest.approx(opt, rel=1e-4, abs=1e-6), (trial, got, opt)


def test_svm_beats_grid_oracle():
    rng = np.random.default_rng(4)
    X, y = _random_problem(rng, 10, 2)
    w, b = svm_fit(X, y, 1.0, tol=1e-8)
    got = svm_objective(w, b, X, y, 1.0)
    grid = grid_svm_min(X, y, 1.0, steps=31, b_values=np.linspace(-2, 2, 21))
    assert got <= grid * (1 + 1e-4) + 1e-8


def test_svm_objective_agrees_with_oracle_formula():
    rng = np.random.default_rng(5)
    X, y = _random_problem(rng, 8, 3)
    w = rng.normal(size=3)
    assert svm_objective(w, 0.3, X, y, 2.0) == pytest.approx(
        hinge_objective(w, 0.3, X, y, 2.0), abs=1e-12)


def test_svm_separable_hard_case():
    # tightest separator of (-1, +1) on a line has w = 1, b = 0
    X = np.array([[-1.0], [1.0]])
    y = np.array([-1.0, 1.0])
    w, b = svm_fit(X, y, C=100.0, tol=1e-10)
    assert w[0] == pytest.approx(1.0, abs=1e-6)
    assert abs(b) < 1e-6
    assert y[0] * (X[0, 0] * w[0] + b) >= 1.0 - 1e-6


def test_svm_determinism():
    rng = np.random.default_rng(6)
    X, y = _random_problem(rng, 12, 3)
    w1, b1 = svm_fit(X, y, 1.0)
    w2, b2 = svm_fit(X, y, 1.0)
    assert np.array_equal(w1, w2) and b1 == b2


def test_svm_input_validation():
    X = np.ones((3, 2))
    with pytest.raises(DegenerateData):
        svm_fit(X, np.ones(3), 1.0)
    with pytest.raises(ValueError):
        svm_fit(X, np.array([1.0, -1.0, 1.0]), 0.0)
    with pytest.raises(ValueError):
        svm_fit(np.ones(3), np.array([1.0, -1.0, 1.0]), 1.0)
