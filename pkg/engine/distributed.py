"""Distributed price/power iteration: downlink step, uplink step, price step per round"""
import logging
from typing import Optional

import numpy as np

from models.channel import RateMode, interference_plus_noise_all, sum_utility
from models.errors import MissingMetricError
from models.scenario import Scenario
from models.state import AlgoParams, AlgoState, RunStatus, TraceRecord
from models.utility import UtilitySet
from solver.projection import project_log_budget

from .stability import StabilityMonitor

logger = logging.getLogger(__name__)


def init(s: Scenario, params: Optional[AlgoParams] = None) -> AlgoState:
    """Round-0 state: floored prices, full uplink power, even downlink split, IN = N0"""
    params = params or AlgoParams()
    p_dl = np.full(s.K_dl, s.P_dl_tot / s.K_dl)
    p_hat_dl = np.log(p_dl)
    if np.any(p_dl < s.P0_dl):
        p_hat_dl = project_log_budget(p_hat_dl, np.log(s.P0_dl), s.P_dl_tot)
    q_ul = np.full(s.K_ul, params.q_min)
    q_dl = np.full(s.K_dl, params.q_min)
    return AlgoState(
        t=0,
        q_ul=q_ul,
        q_dl=q_dl,
        p_hat_ul=np.full(s.K_ul, np.log(s.P_ul_max)),
        p_hat_dl=p_hat_dl,
        in_j=np.full(s.K_dl, s.N0),
        r_ul=np.full(s.K_ul, params.r_max),
        r_dl=np.full(s.K_dl, params.r_max),
        gamma=params.gamma,
    )


def target_rates(utils: UtilitySet, q_ul: np.ndarray, q_dl: np.ndarray, params: AlgoParams):
    """r = min(r_max, (U')^-1(q))"""
    r_ul = np.minimum(params.r_max, utils.inv_derivative_ul(q_ul))
    r_dl = np.minimum(params.r_max, utils.inv_derivative_dl(q_dl))
    return r_ul, r_dl


def compute_metrics(s: Scenario, q_dl: np.ndarray, in_j: np.ndarray) -> np.ndarray:
    """IN metrics m_ij = (q_j / IN_j) g_ij on neighbor pairs, NaN elsewhere"""
    m = (q_dl / in_j)[None, :] * s.G_I
    return np.where(s.neighbor_mask, m, np.nan)


def dl_power_step(state: AlgoState, s: Scenario, params: AlgoParams) -> np.ndarray:
    """Log-power ascent along q_dl, projected back onto the downlink budget set"""
    z = state.p_hat_dl + params.gamma * state.q_dl
    return project_log_budget(z, np.log(s.P0_dl), s.P_dl_tot)


def ul_power_step(state: AlgoState, s: Scenario, params: AlgoParams, metrics: np.ndarray) -> np.ndarray:
    """Log-power step q_i - sum_j m_ij P_i over the neighbors, clipped to the uplink box"""
    p_ul = np.exp(state.p_hat_ul)
    new = np.empty(s.K_ul)
    for i in range(s.K_ul):
        penalty = 0.0
        for j in s.nbr_of_ul[i]:
            m_ij = metrics[i, j]
            if not np.isfinite(m_ij):
                raise MissingMetricError(i, j)
            penalty += m_ij * p_ul[i]
        new[i] = state.p_hat_ul[i] + params.gamma * (state.q_ul[i] - penalty)
    return np.clip(new, np.log(s.P0_ul), np.log(s.P_ul_max))


def perturb_log_sinr(log_sinr: np.ndarray, params: AlgoParams, rng: Optional[np.random.Generator]) -> np.ndarray:
    """Measurement-noise hook; identity unless measurement_noise is set"""
    if not params.measurement_noise or rng is None:
        return log_sinr
    return log_sinr + rng.normal(0.0, params.measurement_noise, size=log_sinr.shape)


def price_step(state: AlgoState, s: Scenario, utils: UtilitySet, params: AlgoParams,
               rng: Optional[np.random.Generator] = None):
    """q <- max(q_min, q + gamma (r - log SINR)) with SINR of the round's starting powers"""
    r_ul, r_dl = target_rates(utils, state.q_ul, state.q_dl, params)
    log_sinr_ul = np.log(s.M * s.g_ul / s.N0) + state.p_hat_ul
    log_sinr_dl = np.log(s.M * s.g_dl / state.in_j) + state.p_hat_dl
    log_sinr_ul = perturb_log_sinr(log_sinr_ul, params, rng)
    log_sinr_dl = perturb_log_sinr(log_sinr_dl, params, rng)
    q_ul = np.maximum(params.q_min, state.q_ul + params.gamma * (r_ul - log_sinr_ul))
    q_dl = np.maximum(params.q_min, state.q_dl + params.gamma * (r_dl - log_sinr_dl))
    return q_ul, q_dl, r_ul, r_dl


def record(state: AlgoState, s: Scenario, utils: UtilitySet, utility_star: Optional[float]) -> TraceRecord:
    """Trace row for the state's powers and prices"""
    utility = sum_utility(s, utils, state.allocation(), RateMode.HIGH_SNR)
    eps = None if utility_star is None else abs(utility - utility_star)
    rec = TraceRecord(
        t=state.t,
        sum_utility=utility,
        eps=eps,
        p_ul=state.p_ul,
        p_dl=state.p_dl,
        q_ul=state.q_ul.copy(),
        q_dl=state.q_dl.copy(),
    )
    state.trace.append(rec)
    return rec


class DistributedEngine:
    """Runs synchronous rounds; every round reads the previous round's buffers only"""

    def __init__(self, s: Scenario, utils: UtilitySet, params: Optional[AlgoParams] = None,
                 utility_star: Optional[float] = None):
        self.scenario = s.validate()
        self.utils = utils
        self.params = (params or AlgoParams()).validate()
        self.utility_star = utility_star
        self.rng = np.random.default_rng(self.params.noise_seed) if self.params.measurement_noise else None
        self.state = init(s, self.params)

    def step(self) -> AlgoState:
        """One round; returns the new state"""
        s, params, prev = self.scenario, self.params, self.state
        metrics = compute_metrics(s, prev.q_dl, prev.in_j)
        p_hat_dl = dl_power_step(prev, s, params)
        p_hat_ul = ul_power_step(prev, s, params, metrics)
        q_ul, q_dl, r_ul, r_dl = price_step(prev, s, self.utils, params, self.rng)
        self.state = AlgoState(
            t=prev.t + 1,
            q_ul=q_ul,
            q_dl=q_dl,
            p_hat_ul=p_hat_ul,
            p_hat_dl=p_hat_dl,
            in_j=interference_plus_noise_all(s, np.exp(p_hat_ul)),
            r_ul=r_ul,
            r_dl=r_dl,
            trace=prev.trace,
            gamma=params.gamma,
        )
        return self.state

    def run(self) -> AlgoState:
        """Iterate until converged, unstable or out of iterations"""
        return drive(self, self.scenario, self.utils, self.params, self.utility_star)


def drive(engine, s: Scenario, utils: UtilitySet, params: AlgoParams,
          utility_star: Optional[float]) -> AlgoState:
    """Shared round loop for direct and guarded engines"""
    monitor = StabilityMonitor(params, utility_star)
    record(engine.state, s, utils, utility_star)
    status, reason = None, ""
    while engine.state.t < params.max_iters:
        state = engine.step()
        ok, why = state.allocation().check_feasible(s)
        if not ok:
            status, reason = RunStatus.UNSTABLE, f"round {state.t} left the feasible set: {why}"
            break
        rec = record(state, s, utils, utility_star)
        powers = np.concatenate([state.p_hat_ul, state.p_hat_dl])
        prices = np.concatenate([state.q_ul, state.q_dl])
        status, reason = monitor.observe(rec.sum_utility, prices, powers)
        if status is not None:
            break
        if state.t % 500 == 0:
            logger.debug("round %d: utility %.10g", state.t, rec.sum_utility)

    state = engine.state
    state.status = status or RunStatus.MAX_ITERS
    state.message = reason or f"stopped after {params.max_iters} rounds"
    if state.status == RunStatus.UNSTABLE:
        logger.warning("distributed run unstable: %s", state.message)
    else:
        logger.info("distributed run %s at round %d, utility %.10g",
                    state.status.value, state.t, state.final_utility)
    return state


def run(s: Scenario, utils: UtilitySet, params: Optional[AlgoParams] = None,
        utility_star: Optional[float] = None) -> AlgoState:
    """Run the distributed algorithm; utility_star enables the error trace and the oracle check"""
    return DistributedEngine(s, utils, params, utility_star).run()
