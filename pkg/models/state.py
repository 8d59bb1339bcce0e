"""Distributed-algorithm parameters, state and trace records"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from .errors import ConfigError
from .scenario import PowerAllocation


class RunStatus(Enum):
    """Outcome of a distributed run"""
    RUNNING = "running"
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    UNSTABLE = "unstable"


@dataclass
class AlgoParams:
    """Step size and stopping rules of the distributed algorithm"""
    gamma: float = 0.05
    max_iters: int = 5000
    stop_tol: float = 1e-9          # relative peak-to-peak utility over the window
    stop_window: int = 50
    q_min: float = 1e-8             # price floor, stands in for q = 0
    r_max: float = 50.0             # rate cap (nats)
    measurement_noise: Optional[float] = None  # std of log-SINR noise seen by price updates
    noise_seed: int = 0

    def validate(self) -> "AlgoParams":
        """Raise ConfigError on an unusable parameter set"""
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.stop_tol > 0:
            raise ConfigError(f"stop_tol must be positive, got {self.stop_tol}")
        if self.stop_window < 2:
            raise ConfigError(f"stop_window must be >= 2, got {self.stop_window}")
        if not self.q_min > 0:
            raise ConfigError(f"q_min must be positive, got {self.q_min}")
        if not self.r_max > 0:
            raise ConfigError(f"r_max must be positive, got {self.r_max}")
        if self.measurement_noise is not None and self.measurement_noise < 0:
            raise ConfigError("measurement_noise must be nonnegative")
        return self

    def to_dict(self) -> dict:
        """Serialize to dictionary"""
        return {
            "gamma": self.gamma,
            "max_iters": self.max_iters,
            "stop_tol": self.stop_tol,
            "stop_window": self.stop_window,
            "q_min": self.q_min,
            "r_max": self.r_max,
            "measurement_noise": self.measurement_noise,
            "noise_seed": self.noise_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AlgoParams":
        """Deserialize from dictionary"""
        defaults = cls()
        return cls(
            gamma=float(data.get("gamma", defaults.gamma)),
            max_iters=int(data.get("max_iters", defaults.max_iters)),
            stop_tol=float(data.get("stop_tol", defaults.stop_tol)),
            stop_window=int(data.get("stop_window", defaults.stop_window)),
            q_min=float(data.get("q_min", defaults.q_min)),
            r_max=float(data.get("r_max", defaults.r_max)),
            measurement_noise=data.get("measurement_noise"),
            noise_seed=int(data.get("noise_seed", defaults.noise_seed)),
        )


@dataclass
class TraceRecord:
    """One row of the iteration trace"""
    t: int
    sum_utility: float
    eps: Optional[float]  # |U(t) - U*| when an oracle value is known
    p_ul: np.ndarray
    p_dl: np.ndarray
    q_ul: np.ndarray
    q_dl: np.ndarray

    def to_row(self) -> list:
        """Flat CSV row: iter, sum_utility, eps, powers, prices"""
        eps = "" if self.eps is None else self.eps
        return [self.t, self.sum_utility, eps, *self.p_ul, *self.p_dl, *self.q_ul, *self.q_dl]

    @staticmethod
    def header(K_ul: int, K_dl: int) -> List[str]:
        """CSV header matching to_row"""
        return (
            ["iter", "sum_utility", "eps"]
            + [f"p_ul_{i + 1}" for i in range(K_ul)]
            + [f"p_dl_{j + 1}" for j in range(K_dl)]
            + [f"q_ul_{i + 1}" for i in range(K_ul)]
            + [f"q_dl_{j + 1}" for j in range(K_dl)]
        )


@dataclass
class AlgoState:
    """Prices, log powers and IN values of one round"""
    t: int
    q_ul: np.ndarray
    q_dl: np.ndarray
    p_hat_ul: np.ndarray
    p_hat_dl: np.ndarray
    in_j: np.ndarray
    r_ul: np.ndarray
    r_dl: np.ndarray
    trace: List[TraceRecord] = field(default_factory=list)
    status: RunStatus = RunStatus.RUNNING
    message: str = ""
    gamma: Optional[float] = None
    messages_per_round: List[int] = field(default_factory=list)  # filled by guarded runs

    @property
    def p_ul(self) -> np.ndarray:
        return np.exp(self.p_hat_ul)

    @property
    def p_dl(self) -> np.ndarray:
        return np.exp(self.p_hat_dl)

    def allocation(self) -> PowerAllocation:
        """Current powers in watts"""
        return PowerAllocation(self.p_ul, self.p_dl)

    @property
    def final_utility(self) -> Optional[float]:
        return self.trace[-1].sum_utility if self.trace else None

    def eps_series(self) -> np.ndarray:
        """Error trace; NaN where no oracle value was given"""
        return np.array([np.nan if rec.eps is None else rec.eps for rec in self.trace])

    def utility_series(self) -> np.ndarray:
        return np.array([rec.sum_utility for rec in self.trace])
