"""Dual solver against the projected-gradient oracle."""

from __future__ import annotations

import numpy as np

from saferegions import Hyperparameters, KernelSpec
from saferegions.classifiers import box_bounds
from saferegions.kernels import gram
from saferegions.solvers import (
    ascent_gradient,
    ascent_objective,
    pairwise_ascent,
    solve_box_qp,
)

from .oracles import qp_oracle


def _random_problem(rng, svdd: bool):
    n = int(rng.integers(4, 13))
    x = rng.normal(size=(n, 2))
    y = np.where(rng.random(n) < 0.5, 1, -1)
    y[0], y[1] = 1, -1   # both classes present
    hp = Hyperparameters(eta=float(rng.uniform(0.2, 2.0)),
                         tau=float(rng.uniform(0.1, 0.9)),
                         kernel=KernelSpec(kind="gaussian", gamma=0.7))
    K = gram(hp.kernel, x)
    C = box_bounds(hp, y)
    yf = y.astype(float)
    if svdd:
        s, q, scale = yf, yf * np.diagonal(K), 4.0
        alpha0 = np.zeros(n)
        remaining = 0.5
        for i in np.flatnonzero(y > 0):
            take = min(C[i], remaining)
            alpha0[i] = take
            remaining -= take
        if remaining > 1e-12:
            return None
    else:
        s, q, scale = -yf, np.ones(n), 1.0
        alpha0 = np.zeros(n)
    return K, s, C, alpha0, q, scale


def _kkt_gap(K, s, C, alpha, q, scale):
    g = ascent_gradient(K, s, alpha, q, scale)
    sg = s * g
    pos = s > 0
    up = np.where(pos, alpha < C - 1e-12, alpha > 1e-12)
    down = np.where(pos, alpha > 1e-12, alpha < C - 1e-12)
    m = float(np.where(up, sg, -np.inf).max())
    M = float(np.where(down, sg, np.inf).min())
    return m - M


def test_pairwise_ascent_matches_oracle():
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 12:
        problem = _random_problem(rng, svdd=bool(checked % 2))
        if problem is None:
            continue
        K, s, C, alpha0, q, scale = problem
        alpha, g, iters, residual, converged, gap = pairwise_ascent(
            K, s, C, alpha0, q, scale, 1e-9, 200_000)
        assert converged
        mass = float(s @ alpha0)
        oracle_alpha, oracle_obj = qp_oracle(K, s, C, q, scale, mass)
        assert abs(ascent_objective(K, s, alpha, q, scale) - oracle_obj) <= 1e-6
        assert abs(float(s @ alpha) - mass) <= 1e-9
        assert (alpha >= -1e-12).all() and (alpha <= C + 1e-12).all()
        checked += 1


def test_solve_box_qp_matches_pairwise_and_oracle():
    rng = np.random.default_rng(23)
    checked = 0
    while checked < 8:
        problem = _random_problem(rng, svdd=bool(checked % 2))
        if problem is None:
            continue
        K, s, C, alpha0, q, scale = problem
        alpha, g, iters, residual, converged, gap = solve_box_qp(
            K, s, C, alpha0, q, scale, 1e-8, 100_000)
        assert converged
        assert residual <= 1e-8
        mass = float(s @ alpha0)
        _, oracle_obj = qp_oracle(K, s, C, q, scale, mass)
        assert abs(ascent_objective(K, s, alpha, q, scale) - oracle_obj) <= 1e-6
        assert _kkt_gap(K, s, C, alpha, q, scale) <= 1e-6
        checked += 1


def test_solver_handles_duplicate_points():
    # A singular Gram matrix must not break the factorization path.
    x = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0], [2.0, 0.0]])
    y = np.array([1, 1, -1, -1, 1])
    K = gram(KernelSpec(kind="linear"), x)
    C = np.full(5, 0.7)
    s = -y.astype(float)
    alpha, g, iters, residual, converged, gap = solve_box_qp(
        K, s, C, np.zeros(5), np.ones(5), 1.0, 1e-8, 50_000)
    assert converged
    _, oracle_obj = qp_oracle(K, s, C, np.ones(5), 1.0, 0.0)
    assert abs(ascent_objective(K, s, alpha, np.ones(5), 1.0) - oracle_obj) <= 1e-6


def test_equality_mass_preserved_exactly():
    rng = np.random.default_rng(31)
    problem = None
    while problem is None:
        problem = _random_problem(rng, svdd=True)
    K, s, C, alpha0, q, scale = problem
    alpha, *_ = solve_box_qp(K, s, C, alpha0, q, scale, 1e-8, 50_000)
    assert abs(float(s @ alpha) - 0.5) <= 1e-9
