"""Shared dual solver for the kernel trainers.

Both margin trainers maximize a concave box-constrained quadratic with a
single linear equality.  In the variables ``u = alpha * s`` the problem is

    maximize  (q * s)^T u - (scale / 2) u^T K u
    subject to  sum(u) = mass,  alpha in [0, C] coordinatewise,

where ``s`` is the per-coordinate sign carrying the equality constraint.
``solve_box_qp`` drives a primal-dual interior-point method to the
neighbourhood of the optimum, then certifies the first-order conditions
with two-coordinate ascent passes; the pairwise stage alone is a complete
(if slower) solver and is what the oracle tests exercise directly.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

REFRESH_EVERY = 5000
CURV_FLOOR = 1e-12
DEFAULT_MAX_UPDATES = 100_000

_IP_MAX_ITERS = 100
_IP_BOUNDARY = 0.995


def ascent_gradient(K, s, alpha, q, scale):
    """Gradient of the dual objective with respect to alpha."""
    u = alpha * s
    return q - scale * s * (K @ u)


def ascent_objective(K, s, alpha, q, scale):
    """Value of the dual objective at alpha."""
    u = alpha * s
    return float(q @ alpha - 0.5 * scale * (u @ (K @ u)))


def pairwise_ascent(K, s, C, alpha0, q, scale, tol, max_iter):
    """Maximize the dual by repeated two-coordinate updates.

    Returns (alpha, gradient, iterations, residual, converged, (m, M)).
    The residual is the violation gap m - M; convergence means the gap is
    within tol under a freshly recomputed gradient.  The gradient is
    maintained incrementally and refreshed periodically to bound float
    drift.
    """
    alpha = alpha0.astype(float).copy()
    g = ascent_gradient(K, s, alpha, q, scale)
    diag = np.diagonal(K)
    pos = s > 0
    stall = 0
    it = 0
    while it < max_iter:
        if it and it % REFRESH_EVERY == 0:
            g = ascent_gradient(K, s, alpha, q, scale)
        sg = s * g
        can_up = np.where(pos, alpha < C, alpha > 0.0)
        can_down = np.where(pos, alpha > 0.0, alpha < C)
        up_vals = np.where(can_up, sg, -np.inf)
        i = int(np.argmax(up_vals))
        m = float(up_vals[i])
        down_vals = np.where(can_down, sg, np.inf)
        M = float(down_vals.min())
        if m - M <= tol:
            # Confirm against a fresh gradient before declaring victory.
            g = ascent_gradient(K, s, alpha, q, scale)
            sg = s * g
            up_vals = np.where(can_up, sg, -np.inf)
            i = int(np.argmax(up_vals))
            m = float(up_vals[i])
            down_vals = np.where(can_down, sg, np.inf)
            M = float(down_vals.min())
            if m - M <= tol:
                return alpha, g, it, max(m - M, 0.0), True, (m, M)
            stall += 1
            if stall > 3:
                return alpha, g, it, m - M, False, (m, M)
            continue
        # Second-order pair choice: fix i, pick j with the best gain.
        Ki = K[i]
        curv = diag[i] + diag - 2.0 * s[i] * s * Ki
        curv = np.maximum(curv, CURV_FLOOR)
        diff = m - sg
        cand = can_down & (sg < m)
        cand[i] = False
        gains = np.where(cand, diff * diff / curv, -np.inf)
        j = int(np.argmax(gains))
        if not np.isfinite(gains[j]):
            g = ascent_gradient(K, s, alpha, q, scale)
            stall += 1
            if stall > 3:
                return alpha, g, it, m - M, False, (m, M)
            it += 1
            continue
        # Unconstrained step along (+1 on i, -1 on j) in u-space, clipped
        # to the box slack of both coordinates.
        t = (sg[i] - sg[j]) / (scale * curv[j])
        room_i = (C[i] - alpha[i]) if pos[i] else alpha[i]
        room_j = alpha[j] if pos[j] else (C[j] - alpha[j])
        t = min(t, room_i, room_j)
        if t <= 0.0:
            g = ascent_gradient(K, s, alpha, q, scale)
            stall += 1
            if stall > 3:
                return alpha, g, it, m - M, False, (m, M)
            it += 1
            continue
        alpha[i] += t if pos[i] else -t
        alpha[j] -= t if pos[j] else -t
        alpha[i] = min(max(alpha[i], 0.0), C[i])
        alpha[j] = min(max(alpha[j], 0.0), C[j])
        g -= scale * t * s * (Ki - K[j])
        stall = 0
        it += 1
    g = ascent_gradient(K, s, alpha, q, scale)
    sg = s * g
    can_up = np.where(pos, alpha < C, alpha > 0.0)
    can_down = np.where(pos, alpha > 0.0, alpha < C)
    m = float(np.where(can_up, sg, -np.inf).max())
    M = float(np.where(can_down, sg, np.inf).min())
    return alpha, g, it, m - M, m - M <= tol, (m, M)


def _step_fraction(current, delta):
    """Largest multiple of delta keeping current strictly positive."""
    shrink = delta < 0.0
    if not shrink.any():
        return 1.0
    return min(1.0, _IP_BOUNDARY * float((-current[shrink] / delta[shrink]).min()))


def _interior_point(K, s, C, q, scale, mass):
    """Primal-dual path following for the dual quadratic.

    Minimizes (scale/2) a^T Q a - q^T a over the box with s^T a = mass,
    Q = (s s^T) * K, using a predictor-corrector scheme.  Returns the
    primal iterate when the barrier parameter and KKT residuals are driven
    to near float precision, or the best iterate at the iteration cap; the
    caller certifies optimality separately.
    """
    n = C.size
    Q = scale * (K * np.outer(s, s))
    alpha = 0.5 * C
    z_scale = max(1.0, float(np.abs(q).max()))
    z_lo = np.full(n, z_scale)
    z_hi = np.full(n, z_scale)
    nu = 0.0
    dyn = 1.0 + float(np.abs(q).max())
    ridge_base = 1e-13 * (1.0 + float(np.trace(Q)) / n)
    for _ in range(_IP_MAX_ITERS):
        slack_hi = C - alpha
        grad = Q @ alpha - q
        r_d = grad + nu * s - z_lo + z_hi
        r_p = float(s @ alpha - mass)
        comp_lo = alpha * z_lo
        comp_hi = slack_hi * z_hi
        mu = (comp_lo.sum() + comp_hi.sum()) / (2 * n)
        if (mu <= 1e-13 * dyn and np.abs(r_d).max() <= 1e-8 * dyn
                and abs(r_p) <= 1e-10 * (1.0 + abs(mass))):
            break

        D = z_lo / alpha + z_hi / slack_hi
        factor = None
        ridge = ridge_base
        for _try in range(6):
            M = Q + np.diag(D + ridge)
            try:
                factor = cho_factor(M, lower=True, check_finite=False)
                break
            except np.linalg.LinAlgError:
                ridge *= 100.0
        if factor is None:
            break
        h_a = cho_solve(factor, s, check_finite=False)
        denom = float(s @ h_a)
        if not np.isfinite(denom) or abs(denom) < 1e-300:
            break

        # Affine predictor (sigma = 0).
        rhs_aff = -r_d - z_lo + z_hi
        h1 = cho_solve(factor, rhs_aff, check_finite=False)
        dnu_aff = (float(s @ h1) + r_p) / denom
        da_aff = h1 - dnu_aff * h_a
        dz_lo_aff = -z_lo * (1.0 + da_aff / alpha)
        dz_hi_aff = z_hi * (da_aff / slack_hi - 1.0)
        step_p = min(_step_fraction(alpha, da_aff), _step_fraction(slack_hi, -da_aff))
        step_d = min(_step_fraction(z_lo, dz_lo_aff), _step_fraction(z_hi, dz_hi_aff))
        mu_aff = (((alpha + step_p * da_aff) @ (z_lo + step_d * dz_lo_aff))
                  + ((slack_hi - step_p * da_aff) @ (z_hi + step_d * dz_hi_aff))) / (2 * n)
        sigma = min(1.0, max(0.0, (mu_aff / mu)) ** 3) if mu > 0.0 else 0.0

        # Corrector with the same factorization.
        r_c_lo = sigma * mu - comp_lo - da_aff * dz_lo_aff
        r_c_hi = sigma * mu - comp_hi + da_aff * dz_hi_aff
        rhs = -r_d + r_c_lo / alpha - r_c_hi / slack_hi
        h1 = cho_solve(factor, rhs, check_finite=False)
        dnu = (float(s @ h1) + r_p) / denom
        da = h1 - dnu * h_a
        dz_lo = (r_c_lo - z_lo * da) / alpha
        dz_hi = (r_c_hi + z_hi * da) / slack_hi
        step_p = min(_step_fraction(alpha, da), _step_fraction(slack_hi, -da))
        step_d = min(_step_fraction(z_lo, dz_lo), _step_fraction(z_hi, dz_hi))
        alpha = alpha + step_p * da
        nu += step_d * dnu
        z_lo = z_lo + step_d * dz_lo
        z_hi = z_hi + step_d * dz_hi
        if not np.isfinite(alpha).all():
            return 0.5 * C
    return np.clip(alpha, 0.0, C)


def solve_box_qp(K, s, C, alpha0, q, scale, tol, max_iter):
    """Solve the dual to tolerance: interior point plus pairwise finishing.

    Same return contract as ``pairwise_ascent``; the reported iteration
    count is the number of finishing pair updates.  ``alpha0`` fixes the
    equality mass ``s @ alpha0`` the solution must carry.
    """
    mass = float(s @ alpha0)
    warm = _interior_point(K, s, C, q, scale, mass)
    # The interior iterate satisfies the equality only to solver precision;
    # pairwise updates preserve mass exactly, so restore it first through
    # the single largest-slack coordinate.
    drift = mass - float(s @ warm)
    if drift != 0.0:
        room = np.where(s * drift > 0.0, C - warm, warm)
        j = int(np.argmax(room))
        need = abs(drift)
        if room[j] >= need:
            warm[j] += np.sign(s[j] * drift) * need
        else:
            warm = alpha0.astype(float).copy()
    return pairwise_ascent(K, s, C, warm, q, scale, tol, max_iter)
