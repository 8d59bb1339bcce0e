"""Exhaustive grid oracle for tiny scenarios"""
import logging
from dataclasses import dataclass

import numpy as np

from models.errors import OracleError
from models.scenario import PowerAllocation, Scenario
from models.utility import UtilitySet

from .objective import gradient_mixed, objective

logger = logging.getLogger(__name__)

MAX_USERS = 4
CHUNK_POINTS = 200_000


@dataclass
class GridResult:
    """Grid argmax and a first-order bound on what the grid can miss"""
    p_best: PowerAllocation
    utility: float
    points: int
    resolution_bound: float


def downlink_lattice(s: Scenario, n: int) -> np.ndarray:
    """Downlink powers P0 + (P_tot - sum P0) k / (n - 1) with sum k <= n - 1"""
    counts = np.stack(np.meshgrid(*[np.arange(n)] * s.K_dl, indexing="ij"), axis=-1).reshape(-1, s.K_dl)
    counts = counts[counts.sum(axis=1) <= n - 1]
    spare = s.P_dl_tot - s.P0_dl.sum()
    return s.P0_dl + spare * counts / (n - 1)


def uplink_grid(s: Scenario, n: int) -> np.ndarray:
    """Log-spaced uplink powers per user, all combinations, as log powers"""
    axes = [np.linspace(np.log(p0), np.log(s.P_ul_max), n) for p0 in s.P0_ul]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, s.K_ul)


def brute_force_grid(s: Scenario, utils: UtilitySet, grid_points_per_dim: int) -> GridResult:
    """Best grid point of the high-SINR sum utility"""
    if s.K_ul + s.K_dl > MAX_USERS:
        raise OracleError(f"brute force limited to {MAX_USERS} users, got {s.K_ul}+{s.K_dl}")
    n = int(grid_points_per_dim)
    if n < 2:
        raise OracleError("need at least 2 grid points per dimension")
    s.validate()

    X = uplink_grid(s, n)
    Y = np.log(downlink_lattice(s, n))
    rows_per_chunk = max(1, CHUNK_POINTS // len(Y))

    best_value = -np.inf
    best_x = best_y = None
    for start in range(0, len(X), rows_per_chunk):
        xs = X[start:start + rows_per_chunk]
        xx = np.repeat(xs, len(Y), axis=0)
        yy = np.tile(Y, (len(xs), 1))
        values = objective(s, utils, xx, yy)
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value = float(values[k])
            best_x, best_y = xx[k], yy[k]

    p_dl = np.exp(best_y)
    gx, gp = gradient_mixed(s, utils, best_x, p_dl)
    h_ul = (np.log(s.P_ul_max) - np.log(s.P0_ul)) / (n - 1)
    h_dl = (s.P_dl_tot - s.P0_dl.sum()) / (n - 1)
    bound = float(np.abs(gx) @ h_ul + np.abs(gp).sum() * h_dl)
    total = len(X) * len(Y)
    logger.debug("grid search over %d points: best %.10g (resolution bound %.3e)", total, best_value, bound)
    return GridResult(PowerAllocation(np.exp(best_x), p_dl), best_value, total, bound)
