"""Centralized oracle: spectral projected gradient on the high-SINR program, with a dual certificate"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize

from models.errors import OracleError
from models.scenario import PowerAllocation, Scenario
from models.utility import UtilitySet

from .objective import gradient_mixed, high_sinr_rates, objective_mixed
from .projection import project_box, project_capped_simplex

logger = logging.getLogger(__name__)

GRAD_TOL = 1e-8
STALL_TOL = 1e-6
MAX_ITERS = 20000
ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
MAX_BACKTRACKS = 60
STEP_MIN, STEP_MAX = 1e-10, 1e10
BUDGET_RTOL = 1e-9


class OracleStatus(Enum):
    """How the oracle stopped"""
    CONVERGED = "converged"    # projected-gradient norm below GRAD_TOL
    STALLED = "stalled"        # line search exhausted with norm below STALL_TOL
    MAX_ITERS = "max_iters"

    @property
    def ok(self) -> bool:
        return self != OracleStatus.MAX_ITERS


@dataclass
class KKTReport:
    """Stationarity residuals of a candidate allocation"""
    ul_residual: float
    dl_residual: float
    q_ul: np.ndarray
    q_dl: np.ndarray
    budget_multiplier: float       # mean of q_j / P_j over downlink users above their bound
    ul_upper_multipliers: np.ndarray  # positive gradient mass held by the P_max caps

    @property
    def max_residual(self) -> float:
        return max(self.ul_residual, self.dl_residual)

    def to_dict(self) -> dict:
        """Serialize to dictionary"""
        return {
            "ul_residual": self.ul_residual,
            "dl_residual": self.dl_residual,
            "max_residual": self.max_residual,
            "budget_multiplier": self.budget_multiplier,
            "ul_upper_multipliers": [float(v) for v in self.ul_upper_multipliers],
            "q_ul": [float(v) for v in self.q_ul],
            "q_dl": [float(v) for v in self.q_dl],
        }


@dataclass
class OracleResult:
    """Certified optimum of the high-SINR program"""
    p_star: PowerAllocation
    utility_star: float
    grad_norm: float
    duality_gap: float
    iterations: int
    status: OracleStatus = OracleStatus.CONVERGED
    budget_binding: bool = True
    kkt: Optional[KKTReport] = None
    objective_trace: List[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status.ok

    def to_row(self) -> dict:
        """Flat CSV row"""
        row = {
            "utility_star": self.utility_star,
            "grad_norm": self.grad_norm,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "status": self.status.value,
        }
        row.update({f"p_ul_{i + 1}": float(p) for i, p in enumerate(self.p_star.p_ul)})
        row.update({f"p_dl_{j + 1}": float(p) for j, p in enumerate(self.p_star.p_dl)})
        return row

    def to_certificate(self) -> dict:
        """JSON certificate: utility, gap, residuals and the allocation"""
        return {
            "utility_star": self.utility_star,
            "duality_gap": self.duality_gap,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "status": self.status.value,
            "budget_binding": self.budget_binding,
            "kkt": self.kkt.to_dict() if self.kkt else None,
            "allocation": self.p_star.to_dict(),
        }


def _project(x: np.ndarray, p: np.ndarray, x_lo: np.ndarray, x_hi: np.ndarray,
             s: Scenario) -> Tuple[np.ndarray, np.ndarray]:
    return project_box(x, x_lo, x_hi), project_capped_simplex(p, s.P0_dl, s.P_dl_tot)


def _spg(s: Scenario, utils: UtilitySet, x_lo: np.ndarray, x_hi: np.ndarray,
         x0: np.ndarray, p0: np.ndarray, tol: float, max_iters: int):
    """Spectral projected gradient ascent over box(x) x capped-simplex(P)"""
    x, p = _project(x0, p0, x_lo, x_hi, s)
    f = objective_mixed(s, utils, x, p)
    gx, gp = gradient_mixed(s, utils, x, p)
    trace = [f]
    step = 1.0
    status = OracleStatus.MAX_ITERS
    pg_norm = np.inf

    k = 0
    for k in range(max_iters):
        px, pp = _project(x + gx, p + gp, x_lo, x_hi, s)
        pg_norm = float(np.sqrt(np.sum((px - x) ** 2) + np.sum((pp - p) ** 2)))
        if pg_norm <= tol:
            status = OracleStatus.CONVERGED
            break

        tx, tp = _project(x + step * gx, p + step * gp, x_lo, x_hi, s)
        dx, dp = tx - x, tp - p
        slope = float(gx @ dx + gp @ dp)

        lam = 1.0
        for _ in range(MAX_BACKTRACKS):
            f_new = objective_mixed(s, utils, x + lam * dx, p + lam * dp)
            if f_new >= f + ARMIJO_C * lam * slope:
                break
            lam *= ARMIJO_SHRINK
        else:
            if pg_norm <= STALL_TOL:
                status = OracleStatus.STALLED
            logger.debug("line search stalled at iteration %d, pg=%.3e", k, pg_norm)
            break

        sx, sp = lam * dx, lam * dp
        x, p = x + sx, p + sp
        gx_new, gp_new = gradient_mixed(s, utils, x, p)
        curvature = -float(sx @ (gx_new - gx) + sp @ (gp_new - gp))
        if curvature > 0:
            step = float(np.clip((sx @ sx + sp @ sp) / curvature, STEP_MIN, STEP_MAX))
        else:
            step = STEP_MAX
        gx, gp, f = gx_new, gp_new, f_new
        trace.append(f)

    iterations = max_iters if status == OracleStatus.MAX_ITERS else k
    return x, p, f, pg_norm, iterations, status, trace


def recover_prices(s: Scenario, utils: UtilitySet, p: PowerAllocation) -> Tuple[np.ndarray, np.ndarray]:
    """q = U'(r) at the high-SINR rates of an allocation"""
    r_ul, r_dl, _ = high_sinr_rates(s, np.log(p.p_ul), np.log(p.p_dl))
    return utils.derivative_ul(r_ul), utils.derivative_dl(r_dl)


def _uplink_block(s: Scenario, q_ul: np.ndarray, q_dl: np.ndarray, x_hint: Optional[np.ndarray]) -> float:
    """max over the uplink box of sum q_i x_i - sum q_j log IN_j(x)"""
    G = s.interference

    def neg_value(x):
        in_j = s.N0 + np.exp(x) @ G
        value = q_ul @ x - q_dl @ np.log(in_j)
        grad = q_ul - np.exp(x) * (G @ (q_dl / in_j))
        return -value, -grad

    lo, hi = np.log(s.P0_ul), np.full(s.K_ul, np.log(s.P_ul_max))
    start = hi.copy() if x_hint is None else np.clip(x_hint, lo, hi)
    res = optimize.minimize(neg_value, start, jac=True, method="L-BFGS-B",
                            bounds=list(zip(lo, hi)), options={"ftol": 1e-15, "gtol": 1e-12})
    best = -float(res.fun)
    if x_hint is not None:
        best = max(best, -neg_value(np.clip(x_hint, lo, hi))[0])
    return best


def _downlink_block(s: Scenario, q_dl: np.ndarray, y_hint: Optional[np.ndarray]) -> float:
    """max of sum q_j log P_j over the downlink budget set, P_j = max(P0_j, q_j / mu)"""
    P0 = s.P0_dl
    if P0.sum() >= s.P_dl_tot:
        p = P0.copy()
    else:
        def excess(mu):
            return float(np.maximum(P0, q_dl / mu).sum() - s.P_dl_tot)

        # excess is nonincreasing in mu and zero at mu_lo up to rounding when no floor binds
        mu_lo = q_dl.sum() / s.P_dl_tot
        mu_hi = float(np.max(q_dl / P0))
        if excess(mu_lo) <= 0:
            mu = mu_lo
        elif excess(mu_hi) >= 0:
            mu = mu_hi
        else:
            mu = optimize.brentq(excess, mu_lo, mu_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
        p = np.maximum(P0, q_dl / mu)
    best = float(q_dl @ np.log(p))
    if y_hint is not None:
        best = max(best, float(q_dl @ y_hint))
    return best


def dual_value(s: Scenario, utils: UtilitySet, q_ul: np.ndarray, q_dl: np.ndarray,
               x_hint: Optional[np.ndarray] = None, y_hint: Optional[np.ndarray] = None) -> float:
    """
    Dual function of the high-SINR program at prices (q_ul, q_dl).

    Splits into the rate block sup_r U(r) - q r = U(r*) - q r* with
    r* = (U')^-1(q), the constant channel terms, an uplink block over the
    power box and a closed-form downlink block over the budget set. Hints
    are feasible primal points whose block values bound the maxima from below.
    """
    r_ul = utils.inv_derivative_ul(q_ul)
    r_dl = utils.inv_derivative_dl(q_dl)
    rate_block = float((utils.value_ul(r_ul) - q_ul * r_ul).sum() + (utils.value_dl(r_dl) - q_dl * r_dl).sum())
    channel = float(q_ul @ np.log(s.M * s.g_ul / s.N0) + q_dl @ np.log(s.M * s.g_dl))
    return rate_block + channel + _uplink_block(s, q_ul, q_dl, x_hint) + _downlink_block(s, q_dl, y_hint)


def kkt_residual(s: Scenario, utils: UtilitySet, p: PowerAllocation) -> KKTReport:
    """Projected-gradient residuals of an allocation, with recovered multipliers"""
    x = np.log(p.p_ul)
    gx, gp = gradient_mixed(s, utils, x, p.p_dl)
    x_lo, x_hi = np.log(s.P0_ul), np.full(s.K_ul, np.log(s.P_ul_max))
    px, pp = _project(x + gx, p.p_dl + gp, x_lo, x_hi, s)
    q_ul, q_dl = recover_prices(s, utils, p)

    interior = p.p_dl > s.P0_dl * (1 + BUDGET_RTOL)
    budget_multiplier = float(np.mean(gp[interior])) if np.any(interior) else 0.0
    at_cap = x >= x_hi - 1e-12
    return KKTReport(
        ul_residual=float(np.linalg.norm(px - x)),
        dl_residual=float(np.linalg.norm(pp - p.p_dl)),
        q_ul=q_ul,
        q_dl=q_dl,
        budget_multiplier=budget_multiplier,
        ul_upper_multipliers=np.where(at_cap, np.maximum(gx, 0.0), 0.0),
    )


def _certify(s: Scenario, utils: UtilitySet, x: np.ndarray, p_dl: np.ndarray, f: float,
             pg_norm: float, iterations: int, status: OracleStatus, trace: List[float]) -> OracleResult:
    p_ul = np.clip(np.exp(x), s.P0_ul, s.P_ul_max)
    p_star = PowerAllocation(p_ul, p_dl)
    q_ul, q_dl = recover_prices(s, utils, p_star)
    dual = dual_value(s, utils, q_ul, q_dl, x_hint=np.log(p_ul), y_hint=np.log(p_dl))
    gap = dual - f

    binding = abs(p_dl.sum() - s.P_dl_tot) <= BUDGET_RTOL * s.P_dl_tot
    if not binding:
        logger.warning("downlink budget not binding at the optimum: %.6g of %.6g W", p_dl.sum(), s.P_dl_tot)
    if not status.ok:
        logger.warning("oracle hit %d iterations with projected-gradient norm %.3e", iterations, pg_norm)
    else:
        logger.debug("oracle %s after %d iterations, U*=%.10g gap=%.3e", status.value, iterations, f, gap)

    return OracleResult(
        p_star=p_star,
        utility_star=f,
        grad_norm=pg_norm,
        duality_gap=gap,
        iterations=iterations,
        status=status,
        budget_binding=binding,
        kkt=kkt_residual(s, utils, p_star),
        objective_trace=trace,
    )


def solve_centralized(s: Scenario, utils: UtilitySet, tol: float = GRAD_TOL,
                      max_iters: int = MAX_ITERS,
                      start: Optional[PowerAllocation] = None) -> OracleResult:
    """Maximize the high-SINR sum utility over both uplink and downlink powers"""
    s.validate()
    if utils.K_ul != s.K_ul or utils.K_dl != s.K_dl:
        raise OracleError(f"utility set is {utils.K_ul}x{utils.K_dl}, scenario is {s.K_ul}x{s.K_dl}")
    start = start or PowerAllocation.full_power(s)
    x_lo, x_hi = np.log(s.P0_ul), np.full(s.K_ul, np.log(s.P_ul_max))
    x, p, f, pg, k, status, trace = _spg(s, utils, x_lo, x_hi, np.log(start.p_ul), start.p_dl, tol, max_iters)
    return _certify(s, utils, x, p, f, pg, k, status, trace)


def solve_downlink(s: Scenario, utils: UtilitySet, p_ul: np.ndarray, tol: float = GRAD_TOL,
                   max_iters: int = MAX_ITERS) -> OracleResult:
    """Re-optimize downlink powers with the uplink powers held fixed"""
    s.validate()
    x_fixed = np.log(np.asarray(p_ul, dtype=float))
    start = PowerAllocation.full_power(s)
    x, p, f, pg, k, status, trace = _spg(s, utils, x_fixed, x_fixed, x_fixed, start.p_dl, tol, max_iters)
    p_star = PowerAllocation(np.exp(x_fixed), p)
    if not status.ok:
        logger.warning("downlink re-optimization hit %d iterations, pg=%.3e", k, pg)
    q_ul, q_dl = recover_prices(s, utils, p_star)
    return OracleResult(
        p_star=p_star,
        utility_star=f,
        grad_norm=pg,
        duality_gap=_downlink_block(s, q_dl, np.log(p)) - float(q_dl @ np.log(p)),
        iterations=k,
        status=status,
        budget_binding=abs(p.sum() - s.P_dl_tot) <= BUDGET_RTOL * s.P_dl_tot,
        objective_trace=trace,
    )
