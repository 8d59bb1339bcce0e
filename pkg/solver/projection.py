"""Euclidean projections onto the power feasible sets"""
import math

import numpy as np
from scipy import optimize, special

BRACKET_STEPS = 64


def project_box(x: np.ndarray, lower, upper) -> np.ndarray:
    """Clip into [lower, upper] componentwise"""
    return np.clip(x, lower, upper)


def project_capped_simplex(v: np.ndarray, lower: np.ndarray, total: float) -> np.ndarray:
    """
    Projection of v onto {P : P >= lower, sum(P) <= total}.

    After shifting by the lower bounds this is the projection onto
    {u >= 0, sum(u) <= budget}; when the positive part of v already fits
    the budget it is the answer, otherwise the sorted-threshold rule on the
    scaled simplex sum(u) = budget applies.
    """
    v = np.asarray(v, dtype=float)
    lower = np.asarray(lower, dtype=float)
    budget = total - lower.sum()
    if budget <= 0:
        return lower.copy()
    u = v - lower
    positive = np.maximum(u, 0.0)
    if positive.sum() <= budget:
        return lower + positive

    s = np.sort(u)[::-1]
    css = np.cumsum(s) - budget
    k = np.arange(1, s.size + 1)
    rho = np.flatnonzero(s - css / k > 0)[-1]
    tau = css[rho] / (rho + 1.0)
    return lower + np.maximum(u - tau, 0.0)


def _shrink(z: np.ndarray, log_lower: np.ndarray, t: float) -> np.ndarray:
    # argmin_y (y - z)^2 / 2 + lambda e^y with lambda = e^t, floored at the lower bound;
    # W(lambda e^z) is the Wright omega of t + z, which never overflows
    return np.maximum(log_lower, z - special.wrightomega(t + z).real)


def project_log_budget(z: np.ndarray, log_lower: np.ndarray, total: float) -> np.ndarray:
    """
    Projection of log powers z onto {y : y >= log_lower, sum(exp(y)) <= total}.

    Each coordinate of the projection is max(l, z - W(lambda e^z)) for the
    budget multiplier lambda, found by a scalar root in log(lambda).
    """
    z = np.asarray(z, dtype=float)
    log_lower = np.asarray(log_lower, dtype=float)
    log_total = math.log(total)

    floor = np.maximum(z, log_lower)
    if special.logsumexp(floor) <= log_total:
        return floor
    if z.size == 1:
        return np.maximum(log_lower, np.minimum(z, log_total))
    if special.logsumexp(log_lower) >= log_total:
        return log_lower.copy()

    def excess(t: float) -> float:
        y = _shrink(z, log_lower, t)
        return float(special.logsumexp(y) - log_total)

    # excess falls from logsumexp(floor) - log T as t -> -inf to logsumexp(log_lower) - log T
    t_lo, t_hi = -1.0, 1.0
    for _ in range(BRACKET_STEPS):
        if excess(t_lo) > 0:
            break
        t_lo = 2.0 * t_lo - 1.0
    else:
        return floor
    for _ in range(BRACKET_STEPS):
        if excess(t_hi) < 0:
            break
        t_hi = 2.0 * t_hi + 1.0
    else:
        return log_lower.copy()
    t_star = optimize.brentq(excess, t_lo, t_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _shrink(z, log_lower, t_star)
