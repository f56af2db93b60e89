"""Scalar/vector proximal and projection primitives.

The per-agent update of the distributed iteration minimizes

    (1/2) ||theta - psi||^2 + t ||theta||_1   subject to   ||theta||_1 <= R,

whose exact solution is the l1 prox (soft-thresholding by t) when that lands
inside the ball, and otherwise the Euclidean projection of psi onto the ball
(the prox term is constant on the active constraint surface, so it drops).

The projection threshold tau is solved in closed form from sorted prefix
sums rather than by iterative bisection, for determinism.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Componentwise sign(v) * max(|v| - t, 0)."""
    if t < 0:
        raise ConfigError("threshold must be >= 0")
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {x : ||x||_1 <= radius}.

    Returns v unchanged when it is already inside the ball (this makes the
    projection exactly idempotent).
    """
    if radius <= 0:
        raise ConfigError("radius must be > 0")
    v = np.asarray(v, dtype=float)
    if np.abs(v).sum() <= radius:
        return v
    u = np.sort(np.abs(v))[::-1]
    cssv = np.cumsum(u) - radius
    ranks = np.arange(1, len(u) + 1)
    k = np.nonzero(u * ranks > cssv)[0][-1]
    tau = cssv[k] / (k + 1.0)
    x = soft_threshold(v, tau)
    # nudge tau up by the float rounding deficit (at least one ulp) so the
    # output's computed l1 norm never exceeds the radius; this makes
    # re-projection a no-op
    for _ in range(50):
        excess = np.abs(x).sum() - radius
        if excess <= 0.0:
            break
        tau = max(tau + excess / np.count_nonzero(x), np.nextafter(tau, np.inf))
        x = soft_threshold(v, tau)
    return x


def constrained_prox(psi: np.ndarray, shrink: float, radius: float) -> np.ndarray:
    """Exact minimizer of (1/2)||x - psi||^2 + shrink*||x||_1 on the l1 ball."""
    u = soft_threshold(psi, shrink)
    if np.abs(u).sum() <= radius:
        return u
    return project_l1_ball(psi, radius)


def kkt_residual_l1ball(v: np.ndarray, x: np.ndarray, radius: float) -> float:
    """Maximum violation of the projection optimality conditions.

    x is optimal iff v - x = tau * g with tau >= 0, g a subgradient of
    ||.||_1 at x, and tau * (||x||_1 - radius) = 0.  Returns 0 (up to
    float noise) for a correct projection; strictly positive otherwise.
    Test oracle: not used by the solver path.
    """
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    l1 = np.abs(x).sum()
    if l1 > radius + 1e-9:
        raise ConfigError("x violates the ball constraint")
    r = v - x
    active = x != 0.0
    if not np.any(active):
        if np.abs(v).sum() <= radius:
            return float(np.abs(r).max(initial=0.0))  # x must equal v
        return float(radius)  # constraint must be active, but ||x||_1 = 0
    taus = r[active] * np.sign(x[active])
    tau = float(np.max(taus))
    violations = [
        float(np.max(taus) - np.min(taus)),  # multiplier equal on active set
        -float(np.min(taus)),                # dual feasibility tau >= 0
    ]
    if np.any(~active):                      # |v_j| <= tau where x_j = 0
        violations.append(float(np.max(np.abs(r[~active])) - max(tau, 0.0)))
    if tau > 1e-12:                          # complementary slackness
        violations.append(abs(l1 - radius))
    return max(0.0, *violations)
