"""Asymptotic power-scaling experiment over nested scenario sequences"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.errors import ConfigError, ExperimentError, PowerControlError
from models.scenario import GainTables, LossModel, Scenario, draw_gain_tables, scenario_from_tables
from models.utility import UtilitySet
from solver.oracle import solve_centralized, solve_downlink

logger = logging.getLogger(__name__)

DEFAULT_LEVELS: Tuple[Tuple[int, int], ...] = ((2, 4), (4, 8), (8, 16), (16, 32), (32, 64))
DEFAULT_RHOS = (0.25, 0.5, 0.75)
DEFAULT_OMEGA = 0.5


def theta_fraction(p_ul_star: np.ndarray, rho: float, P_max: float) -> float:
    """Share of uplink users whose power is at most rho * P_max"""
    if not 0 < rho < 1:
        raise ConfigError(f"rho must lie in (0, 1), got {rho}")
    p = np.asarray(p_ul_star, dtype=float)
    return float(np.count_nonzero(p <= rho * P_max)) / p.size


def psi_fraction(p_dl_star: np.ndarray, omega: float, P_tot: float) -> float:
    """Share of downlink users below omega times the even split of the budget"""
    if not omega > 0:
        raise ConfigError(f"omega must be positive, got {omega}")
    p = np.asarray(p_dl_star, dtype=float)
    return float(np.count_nonzero(p < omega * P_tot / p.size)) / p.size


@dataclass
class ScenarioSequence:
    """Nested scenarios: level l keeps every user of level l-1, with M_l = C K_ul K_dl"""
    C: float = 16.0
    levels: Tuple[Tuple[int, int], ...] = DEFAULT_LEVELS
    seed: int = 0
    loss: LossModel = field(default_factory=LossModel)
    zero_interference: bool = False

    def __post_init__(self):
        self.levels = tuple((int(a), int(b)) for a, b in self.levels)
        if not self.C > 0:
            raise ConfigError(f"C must be positive, got {self.C}")
        if not self.levels:
            raise ConfigError("need at least one level")
        for (a0, b0), (a1, b1) in zip(self.levels, self.levels[1:]):
            if not (a1 >= a0 and b1 >= b0 and (a1, b1) != (a0, b0)):
                raise ConfigError(f"levels must strictly expand, got {(a0, b0)} then {(a1, b1)}")
        ms = self.antenna_counts()
        if any(m1 <= m0 for m0, m1 in zip(ms, ms[1:])):
            raise ConfigError("antenna counts must strictly increase")

    @classmethod
    def first(cls, count: int, **kwargs) -> "ScenarioSequence":
        """Leading `count` default levels"""
        return cls(levels=DEFAULT_LEVELS[:count], **kwargs)

    @property
    def ratio(self) -> float:
        """Largest K_ul / K_dl across levels"""
        return max(a / b for a, b in self.levels)

    def antenna_counts(self) -> List[int]:
        return [max(1, int(round(self.C * a * b))) for a, b in self.levels]

    def tables(self) -> GainTables:
        """Gains of the top level; lower levels are prefixes"""
        K_ul, K_dl = self.levels[-1]
        tables = draw_gain_tables(self.seed, K_ul, K_dl, self.loss)
        if self.zero_interference:
            tables.G_I = np.zeros_like(tables.G_I)
        return tables

    def scenarios(self) -> List[Scenario]:
        top = self.tables()
        return [
            scenario_from_tables(top.prefix(a, b), m, self.loss)
            for (a, b), m in zip(self.levels, self.antenna_counts())
        ]


@dataclass
class ScalingLevel:
    """Oracle statistics of one level"""
    level: int
    seed: int
    K_ul: int
    K_dl: int
    M: int
    theta: Dict[float, float]
    psi: float
    mean_p_ul: float
    median_p_ul: float
    utility_optimal: float
    utility_naive: float
    oracle_status: str
    naive_status: str

    def to_row(self) -> dict:
        """Flat CSV row"""
        row = {
            "level": self.level,
            "seed": self.seed,
            "K_ul": self.K_ul,
            "K_dl": self.K_dl,
            "M": self.M,
        }
        row.update({f"theta_{rho:g}": v for rho, v in sorted(self.theta.items())})
        row.update({
            "psi": self.psi,
            "mean_p_ul": self.mean_p_ul,
            "median_p_ul": self.median_p_ul,
            "utility_optimal": self.utility_optimal,
            "utility_naive": self.utility_naive,
            "oracle_status": self.oracle_status,
            "naive_status": self.naive_status,
        })
        return row


@dataclass
class ScalingReport:
    """Per-level, per-seed statistics"""
    rows: List[ScalingLevel] = field(default_factory=list)

    def extend(self, other: "ScalingReport"):
        self.rows.extend(other.rows)

    def level_indices(self) -> List[int]:
        return sorted({r.level for r in self.rows})

    def theta_by_level(self, rho: float) -> List[List[float]]:
        return [[r.theta[rho] for r in self.rows if r.level == lvl] for lvl in self.level_indices()]

    def median_theta(self, rho: float) -> List[float]:
        """Median over seeds of theta_fraction(rho), one value per level"""
        return [float(np.median(v)) for v in self.theta_by_level(rho)]

    def to_rows(self) -> List[dict]:
        return [r.to_row() for r in self.rows]


def run_scaling(seq: ScenarioSequence, utils: UtilitySet, rho: float = 0.5,
                rhos: Sequence[float] = DEFAULT_RHOS, omega: float = DEFAULT_OMEGA) -> ScalingReport:
    """
    Solve every level with the oracle and record theta/psi statistics.

    utils covers the top level; each level uses its prefix. The naive
    baseline keeps every uplink user at P_max and re-optimizes the downlink.
    """
    all_rhos = sorted(set(rhos) | {rho})
    report = ScalingReport()
    for level, s in enumerate(seq.scenarios(), start=1):
        level_utils = utils.prefix(s.K_ul, s.K_dl)
        try:
            opt = solve_centralized(s, level_utils)
            naive = solve_downlink(s, level_utils, np.full(s.K_ul, s.P_ul_max))
        except PowerControlError as exc:
            raise ExperimentError(str(exc), level=level) from exc
        if not opt.converged:
            logger.warning("level %d seed %d: oracle did not converge (pg=%.3e)", level, seq.seed, opt.grad_norm)
        p_ul = opt.p_star.p_ul
        report.rows.append(ScalingLevel(
            level=level,
            seed=seq.seed,
            K_ul=s.K_ul,
            K_dl=s.K_dl,
            M=s.M,
            theta={r: theta_fraction(p_ul, r, s.P_ul_max) for r in all_rhos},
            psi=psi_fraction(opt.p_star.p_dl, omega, s.P_dl_tot),
            mean_p_ul=float(np.mean(p_ul)),
            median_p_ul=float(np.median(p_ul)),
            utility_optimal=opt.utility_star,
            utility_naive=naive.utility_star,
            oracle_status=opt.status.value,
            naive_status=naive.status.value,
        ))
        logger.info("level %d (K=%dx%d, M=%d) seed %d: theta(%.2f)=%.3f",
                    level, s.K_ul, s.K_dl, s.M, seq.seed, rho, report.rows[-1].theta[rho])
    return report


def run_scaling_seeds(utils: UtilitySet, seeds: Sequence[int], C: float = 16.0,
                      levels: Tuple[Tuple[int, int], ...] = DEFAULT_LEVELS,
                      loss: Optional[LossModel] = None, zero_interference: bool = False,
                      rho: float = 0.5, rhos: Sequence[float] = DEFAULT_RHOS) -> ScalingReport:
    """run_scaling over several independently drawn sequences"""
    report = ScalingReport()
    for seed in seeds:
        seq = ScenarioSequence(C=C, levels=levels, seed=seed, loss=loss or LossModel(),
                               zero_interference=zero_interference)
        report.extend(run_scaling(seq, utils, rho, rhos))
    return report
