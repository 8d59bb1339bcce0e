"""Interference sweep on a single uplink/downlink pair: optimal vs naive uplink power"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from models.errors import ExperimentError, PowerControlError
from models.scenario import Scenario
from models.units import db_to_linear
from models.utility import UtilitySet
from solver.oracle import solve_centralized, solve_downlink

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_DB = (-80.0, -40.0, 30)
NAIVE_RTOL = 1e-9


def sweep_points(low_db: float = DEFAULT_SWEEP_DB[0], high_db: float = DEFAULT_SWEEP_DB[1],
                 count: int = DEFAULT_SWEEP_DB[2]) -> np.ndarray:
    """Evenly spaced interference gains in dB, weakest first"""
    return np.linspace(low_db, high_db, int(count))


@dataclass
class SweepPoint:
    """Oracle and naive outcome at one interference gain"""
    g_i_db: float
    p_ul_star: float
    p_dl_star: float
    utility_optimal: float
    utility_naive: float
    status: str

    @property
    def gap(self) -> float:
        return self.utility_optimal - self.utility_naive

    def to_row(self) -> dict:
        """Flat CSV row"""
        return {
            "g_i_db": self.g_i_db,
            "p_ul_star": self.p_ul_star,
            "p_dl_star": self.p_dl_star,
            "utility_optimal": self.utility_optimal,
            "utility_naive": self.utility_naive,
            "gap": self.gap,
            "status": self.status,
        }


def sweep_interference(base: Scenario, utils: UtilitySet,
                       g_i_db: Optional[Sequence[float]] = None) -> List[SweepPoint]:
    """
    Re-solve a 1x1 cell for each interference gain.

    The naive scheme keeps the uplink at P_max and re-optimizes the downlink;
    with one downlink user that means the whole budget.
    """
    if base.K_ul != 1 or base.K_dl != 1:
        raise ExperimentError(f"interference sweep needs a 1x1 scenario, got {base.K_ul}x{base.K_dl}")
    values = sweep_points() if g_i_db is None else np.asarray(g_i_db, dtype=float)
    points = []
    for idx, db in enumerate(values):
        s = base.with_interference(np.array([[db_to_linear(db)]]))
        try:
            opt = solve_centralized(s, utils)
            naive = solve_downlink(s, utils, np.array([s.P_ul_max]))
        except PowerControlError as exc:
            raise ExperimentError(f"g_I = {db:g} dB: {exc}", level=idx) from exc
        # the naive point is feasible for the joint program, so the oracle should never trail it
        if opt.utility_star < naive.utility_star - NAIVE_RTOL * abs(naive.utility_star):
            logger.warning("g_I=%.2f dB: oracle utility %.12g below the full-power baseline %.12g",
                           db, opt.utility_star, naive.utility_star)
        points.append(SweepPoint(
            g_i_db=float(db),
            p_ul_star=float(opt.p_star.p_ul[0]),
            p_dl_star=float(opt.p_star.p_dl[0]),
            utility_optimal=opt.utility_star,
            utility_naive=naive.utility_star,
            status=opt.status.value,
        ))
        logger.debug("g_I=%.2f dB: p_ul*=%.6g W, gap=%.3e", db, points[-1].p_ul_star, points[-1].gap)
    logger.info("interference sweep: %d points, max gap %.4g", len(points), max(p.gap for p in points))
    return points
