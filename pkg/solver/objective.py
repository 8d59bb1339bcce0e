"""High-SINR objective in log-power variables and its gradients"""
import logging
from typing import Callable, Tuple

import numpy as np

from models.scenario import Scenario
from models.utility import UtilitySet

logger = logging.getLogger(__name__)


def high_sinr_rates(s: Scenario, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(r_ul, r_dl, IN) for log powers x (uplink) and y (downlink); batch axis allowed"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    in_j = s.N0 + np.exp(x) @ s.interference
    r_ul = np.log(s.M * s.g_ul / s.N0) + x
    r_dl = np.log(s.M * s.g_dl) + y - np.log(in_j)
    return r_ul, r_dl, in_j


def objective(s: Scenario, utils: UtilitySet, x: np.ndarray, y: np.ndarray):
    """Sum utility with high-SINR rates; float for one point, array for a batch"""
    r_ul, r_dl, _ = high_sinr_rates(s, x, y)
    total = utils.value_ul(r_ul).sum(axis=-1) + utils.value_dl(r_dl).sum(axis=-1)
    return float(total) if np.ndim(total) == 0 else total


def gradient_log(s: Scenario, utils: UtilitySet, x: np.ndarray,
                 y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradient with respect to (log uplink power, log downlink power).

    dF/dx_i = q_i - e^{x_i} sum_{j in N_i} q_j g_ij / IN_j
    dF/dy_j = q_j
    with q = U'(r) at the current rates.
    """
    r_ul, r_dl, in_j = high_sinr_rates(s, x, y)
    q_ul = utils.derivative_ul(r_ul)
    q_dl = utils.derivative_dl(r_dl)
    gx = q_ul - np.exp(x) * (s.interference @ (q_dl / in_j))
    return gx, q_dl


def objective_mixed(s: Scenario, utils: UtilitySet, x: np.ndarray, p_dl: np.ndarray) -> float:
    """Objective with linear downlink power, the oracle's coordinates"""
    return objective(s, utils, x, np.log(p_dl))


def gradient_mixed(s: Scenario, utils: UtilitySet, x: np.ndarray,
                   p_dl: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Gradient with respect to (log uplink power, linear downlink power)"""
    gx, q_dl = gradient_log(s, utils, x, np.log(p_dl))
    return gx, q_dl / p_dl


def finite_difference(func: Callable[[np.ndarray], float], z0: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Centered finite-difference gradient of func at z0"""
    z0 = np.asarray(z0, dtype=float)
    grad = np.zeros(z0.size)
    for k in range(z0.size):
        z = z0.copy()
        z[k] = z0[k] + eps
        f_plus = func(z)
        z[k] = z0[k] - eps
        f_minus = func(z)
        grad[k] = (f_plus - f_minus) / (2 * eps)
    return grad


def gradient_check(s: Scenario, utils: UtilitySet, x: np.ndarray, y: np.ndarray,
                   eps: float = 1e-6, floor: float = 1e-4) -> float:
    """Largest componentwise relative error of gradient_log against finite differences"""
    K_ul = s.K_ul

    def f(z):
        return objective(s, utils, z[:K_ul], z[K_ul:])

    z0 = np.concatenate([x, y])
    fd = finite_difference(f, z0, eps)
    an = np.concatenate(gradient_log(s, utils, x, y))
    denom = np.maximum(np.maximum(np.abs(an), np.abs(fd)), floor)
    err = float(np.max(np.abs(an - fd) / denom))
    logger.debug("gradient check: max relative error %.3e over %d coordinates", err, z0.size)
    return err


def midpoint_concavity_gap(s: Scenario, utils: UtilitySet, a: Tuple[np.ndarray, np.ndarray],
                           b: Tuple[np.ndarray, np.ndarray]) -> float:
    """F(mid) - (F(a) + F(b)) / 2, nonnegative for a concave objective"""
    mid_x = 0.5 * (a[0] + b[0])
    mid_y = 0.5 * (a[1] + b[1])
    return objective(s, utils, mid_x, mid_y) - 0.5 * (objective(s, utils, *a) + objective(s, utils, *b))
