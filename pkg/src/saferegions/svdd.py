"""Enclosing-ball classifier with an additive scaling level.

Training solves the weighted ball problem

    min  (1/(2*eta)) R^2  +  (1/2) sum_i ((1-2*tau)*y_i + 1) xi_i
    s.t. y_i (|phi(x_i) - w|^2 - R^2) <= xi_i,   xi_i >= 0.

The decision core is s(x) = |phi(x) - w|^2 - R^2; f(x, rho) = s(x) + rho and
points with f < 0 are predicted safe, so the region at rho = 0 is the ball
itself.  In the rescaled dual the center is w = 2 * sum_i alpha_i y_i phi(x_i)
with box 0 <= alpha_i <= C_i (same per-class weights as the margin variant)
and weighted mass sum_i y_i alpha_i = 1/2:

    maximize  sum_i alpha_i y_i K_ii - 2 sum_ij alpha_i alpha_j y_i y_j K_ij.

Feasibility requires the safe-class capacity sum_{y_i=+1} C_i to reach 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .classifiers import (
    Hyperparameters,
    ScalableModel,
    TrainSettings,
    TrainingDiagnostics,
    _as_points,
    _chunked_kernel_apply,
    box_bounds,
)
from .errors import TrainingError
from .kernels import KernelSpec, gram, kernel_diag
from .solvers import DEFAULT_MAX_UPDATES, ascent_objective, solve_box_qp
from .validation import training_arrays

__all__ = ["ScSvddModel", "train_sc_svdd"]

_BOUND_REL = 1e-8
_MASS = 0.5   # required weighted mass sum_i y_i alpha_i


@dataclass
class ScSvddModel(ScalableModel):
    """Trained ball model; immutable by convention."""

    variant = "svdd"

    support_x: np.ndarray
    support_alpha: np.ndarray
    support_y: np.ndarray
    r_squared: float
    center_sq_norm: float
    hyperparameters: Hyperparameters
    kernel: KernelSpec
    diagnostics: TrainingDiagnostics

    def margin(self, x):
        pts, single = _as_points(x, self.support_x.shape[1])
        coef = 2.0 * self.support_alpha * self.support_y
        cross = _chunked_kernel_apply(self.kernel, pts, self.support_x, coef)
        dist_sq = kernel_diag(self.kernel, pts) - 2.0 * cross + self.center_sq_norm
        s = dist_sq - self.r_squared
        return float(s[0]) if single else s

    def _payload(self) -> dict:
        return {
            "support_x": self.support_x.tolist(),
            "support_alpha": self.support_alpha.tolist(),
            "support_y": self.support_y.tolist(),
            "r_squared": self.r_squared,
            "center_sq_norm": self.center_sq_norm,
        }

    @classmethod
    def _from_payload(cls, record, hp, kernel, diagnostics):
        return cls(
            support_x=np.asarray(record["support_x"], dtype=float),
            support_alpha=np.asarray(record["support_alpha"], dtype=float),
            support_y=np.asarray(record["support_y"], dtype=int),
            r_squared=float(record["r_squared"]),
            center_sq_norm=float(record["center_sq_norm"]),
            hyperparameters=hp, kernel=kernel, diagnostics=diagnostics)


def train_sc_svdd(train, hp: Hyperparameters, settings: TrainSettings | None = None,
                  gram_matrix: np.ndarray | None = None) -> ScSvddModel:
    """Fit the ball variant on a labelled dataset.

    All-safe data is legitimate (a one-class ball); raises ``TrainingError``
    when the safe-class capacity cannot carry the required weighted mass, and
    on solver non-convergence.
    """
    settings = settings or TrainSettings()
    x, y = training_arrays(train, require_both_classes=False)
    kernel = hp.kernel.resolved(x)
    K = gram(kernel, x) if gram_matrix is None else gram_matrix
    C = box_bounds(hp, y)
    safe = y > 0
    capacity = float(C[safe].sum())
    if capacity < _MASS:
        raise TrainingError(
            f"safe-class capacity {capacity:.6g} cannot reach the required mass {_MASS}; "
            f"increase eta or decrease tau")
    max_iter = settings.max_iter if settings.max_iter is not None else DEFAULT_MAX_UPDATES

    # deterministic feasible start: fill safe coordinates to their bound in
    # index order until the mass constraint is met
    alpha0 = np.zeros(y.size)
    remaining = _MASS
    for idx in np.flatnonzero(safe):
        take = min(C[idx], remaining)
        alpha0[idx] = take
        remaining -= take
        if remaining <= 0.0:
            break

    yf = y.astype(float)
    q = yf * np.diagonal(K)
    alpha, g, iters, residual, converged, gap = solve_box_qp(
        K, yf, C, alpha0, q, 4.0, settings.tol, max_iter)
    if not converged:
        raise TrainingError(
            f"dual solver stopped at residual {residual:.3e} > tol={settings.tol} "
            f"after {iters} updates")

    # y_i*g_i = K_ii - 4(Ku)_i = |phi_i - w|^2 - |w|^2, so squared distances
    # of training points to the center come straight from the gradient
    u = alpha * yf
    center_sq_norm = float(4.0 * (u @ (K @ u)))
    dist_sq = yf * g + center_sq_norm

    flags: dict = {}
    inside = (alpha > _BOUND_REL * C) & (alpha < C * (1.0 - _BOUND_REL))
    if inside.any():
        r_squared = float(np.mean(dist_sq[inside]))
    else:
        at_cap = safe & (alpha >= C * (1.0 - _BOUND_REL))
        if not at_cap.any():
            raise TrainingError("no support points available to recover the ball radius")
        r_squared = float(dist_sq[at_cap].max())
        flags["radius_from_bound"] = True
    if r_squared < 0.0:
        flags["radius_clipped"] = True
        r_squared = 0.0

    objective = ascent_objective(K, yf, alpha, q, 4.0)
    diagnostics = TrainingDiagnostics(iterations=iters, residual=residual,
                                      converged=True, objective=objective, flags=flags)
    support = alpha > 0.0
    return ScSvddModel(
        support_x=x[support].copy(),
        support_alpha=alpha[support].copy(),
        support_y=y[support].copy(),
        r_squared=r_squared,
        center_sq_norm=center_sq_norm,
        hyperparameters=replace(hp, kernel=kernel),
        kernel=kernel,
        diagnostics=diagnostics)
