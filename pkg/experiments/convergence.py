"""Convergence study of the distributed algorithm: error traces and geometric-rate fits"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from engine.distributed import run
from models.errors import ExperimentError
from models.scenario import Scenario
from models.state import AlgoParams, AlgoState, RunStatus
from models.utility import UtilitySet
from solver.oracle import OracleResult, solve_centralized

logger = logging.getLogger(__name__)

FIT_WINDOW = (20, 200)
SETTLE_RTOL = 1e-2


@dataclass
class GeometricFit:
    """Least-squares line through log eps[k]; slope is log of the contraction factor"""
    slope: float
    intercept: float
    r_squared: float
    k_start: int
    k_end: int
    points: int

    @property
    def rate(self) -> float:
        """Per-round contraction factor exp(slope)"""
        return float(np.exp(self.slope))

    def to_dict(self) -> dict:
        """Serialize to dictionary"""
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "rate": self.rate,
            "k_start": self.k_start,
            "k_end": self.k_end,
            "points": self.points,
        }


def fit_geometric(eps: np.ndarray, k_start: int = FIT_WINDOW[0], k_end: int = FIT_WINDOW[1]) -> GeometricFit:
    """Fit log eps[k] = a + b k over k_start <= k <= k_end, skipping zero or missing errors"""
    eps = np.asarray(eps, dtype=float)
    k = np.arange(eps.size)
    window = (k >= k_start) & (k <= k_end) & np.isfinite(eps) & (eps > 0)
    if np.count_nonzero(window) < 3:
        raise ExperimentError(f"need at least 3 positive errors in rounds {k_start}..{k_end} to fit a rate")
    fit = stats.linregress(k[window], np.log(eps[window]))
    return GeometricFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue ** 2),
        k_start=k_start,
        k_end=k_end,
        points=int(np.count_nonzero(window)),
    )


def iterations_to_settle(utility: np.ndarray, rtol: float = SETTLE_RTOL) -> int:
    """First round after which the utility stays within rtol of its final value"""
    utility = np.asarray(utility, dtype=float)
    final = utility[-1]
    outside = np.flatnonzero(np.abs(utility - final) > rtol * abs(final))
    return 0 if outside.size == 0 else int(outside[-1] + 1)


@dataclass
class ConvergenceRun:
    """One distributed run measured against the oracle"""
    gamma: float
    state: AlgoState
    utility_star: float
    fit: Optional[GeometricFit]
    settle_round: int

    @property
    def status(self) -> RunStatus:
        return self.state.status

    @property
    def final_gap(self) -> float:
        """|U_final - U*| / |U*|"""
        return abs(self.state.final_utility - self.utility_star) / abs(self.utility_star)

    def summary(self) -> dict:
        """Flat summary row"""
        row = {
            "gamma": self.gamma,
            "status": self.status.value,
            "rounds": self.state.t,
            "final_utility": self.state.final_utility,
            "utility_star": self.utility_star,
            "relative_gap": self.final_gap,
            "settle_round": self.settle_round,
        }
        fit = self.fit.to_dict() if self.fit else {}
        row.update({f"fit_{key}": fit.get(key, "") for key in ("slope", "r_squared", "rate")})
        return row


@dataclass
class ConvergenceStudy:
    """Runs for several step sizes on one scenario"""
    oracle: OracleResult
    runs: Dict[float, ConvergenceRun] = field(default_factory=dict)

    def summaries(self) -> List[dict]:
        return [self.runs[g].summary() for g in sorted(self.runs)]


def convergence_study(s: Scenario, utils: UtilitySet, gammas: Sequence[float],
                      params: Optional[AlgoParams] = None,
                      oracle: Optional[OracleResult] = None) -> ConvergenceStudy:
    """Run the distributed algorithm once per step size and fit its error decay"""
    base = params or AlgoParams()
    oracle = oracle or solve_centralized(s, utils)
    if not oracle.converged:
        raise ExperimentError(f"oracle did not converge ({oracle.status.value})")
    study = ConvergenceStudy(oracle=oracle)
    for gamma in gammas:
        run_params = AlgoParams.from_dict({**base.to_dict(), "gamma": gamma}).validate()
        state = run(s, utils, run_params, utility_star=oracle.utility_star)
        try:
            fit = fit_geometric(state.eps_series())
        except ExperimentError as exc:
            logger.info("gamma %.4g: no rate fit (%s)", gamma, exc)
            fit = None
        study.runs[float(gamma)] = ConvergenceRun(
            gamma=float(gamma),
            state=state,
            utility_star=oracle.utility_star,
            fit=fit,
            settle_round=iterations_to_settle(state.utility_series()),
        )
        logger.info("gamma %.4g: %s after %d rounds", gamma, state.status.value, state.t)
    return study


def gamma_ladder(start: float = 0.4, floor: float = 1e-4) -> List[float]:
    """Descending step sizes start, start/2, ... down to floor"""
    out = []
    gamma = start
    while gamma >= floor:
        out.append(gamma)
        gamma /= 2.0
    return out


def halving_safety(s: Scenario, utils: UtilitySet, params: Optional[AlgoParams] = None,
                   start: float = 0.4, rtol: float = SETTLE_RTOL) -> List[dict]:
    """
    Walk down the step-size ladder until a run converges near the oracle.

    Each row records whether that step size was reported honestly: either a
    non-converged status, or a final utility within rtol of U*.
    """
    base = params or AlgoParams()
    oracle = solve_centralized(s, utils)
    rows = []
    for gamma in gamma_ladder(start):
        state = run(s, utils, AlgoParams.from_dict({**base.to_dict(), "gamma": gamma}),
                    utility_star=oracle.utility_star)
        gap = abs(state.final_utility - oracle.utility_star) / abs(oracle.utility_star)
        converged = state.status == RunStatus.CONVERGED
        rows.append({
            "gamma": gamma,
            "status": state.status.value,
            "relative_gap": gap,
            "honest": (not converged) or gap <= rtol,
        })
        if converged and gap <= rtol:
            break
    return rows
