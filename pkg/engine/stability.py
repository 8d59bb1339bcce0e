"""Convergence and instability detection for distributed runs"""
import logging
from collections import deque
from typing import Optional, Tuple

import numpy as np

from models.state import AlgoParams, RunStatus

logger = logging.getLogger(__name__)

OSCILLATION_ROUNDS = 100
ORACLE_SLACK = 1e-6


def period_two_oscillation(history: np.ndarray, rounds: int = OSCILLATION_ROUNDS) -> Optional[int]:
    """
    Coordinate whose successive changes alternated in sign for `rounds` rounds
    without decaying below half their initial size, or None.

    history holds one power vector per row, oldest first, at least rounds + 1 rows.
    """
    if len(history) < rounds + 1:
        return None
    diffs = np.diff(history[-(rounds + 1):], axis=0)
    alternating = np.all(diffs[1:] * diffs[:-1] < 0, axis=0)
    first, last = np.abs(diffs[0]), np.abs(diffs[-1])
    sustained = last >= 0.5 * first
    visible = last > 1e-12 * (1.0 + np.abs(history[-1]))
    hits = np.flatnonzero(alternating & sustained & visible)
    return int(hits[0]) if hits.size else None


class StabilityMonitor:
    """Watches a run's utility, prices and powers round by round"""

    def __init__(self, params: AlgoParams, utility_star: Optional[float] = None):
        self.params = params
        self.utility_star = utility_star
        self._utilities = deque(maxlen=params.stop_window)
        self._powers = deque(maxlen=OSCILLATION_ROUNDS + 1)

    def observe(self, utility: float, prices: np.ndarray, powers: np.ndarray) -> Tuple[Optional[RunStatus], str]:
        """Returns a terminal status and reason, or (None, '') to keep iterating"""
        gamma = self.params.gamma
        if not (np.isfinite(utility) and np.all(np.isfinite(prices)) and np.all(np.isfinite(powers))):
            return RunStatus.UNSTABLE, f"non-finite state at gamma={gamma:g}"

        if self.utility_star is not None:
            if utility > self.utility_star + ORACLE_SLACK * abs(self.utility_star):
                return RunStatus.UNSTABLE, (
                    f"utility {utility:.10g} exceeds the optimum {self.utility_star:.10g} at gamma={gamma:g}"
                )

        self._powers.append(np.array(powers, dtype=float))
        coord = period_two_oscillation(np.array(self._powers))
        if coord is not None:
            return RunStatus.UNSTABLE, (
                f"power coordinate {coord} oscillates with period 2 for {OSCILLATION_ROUNDS} rounds "
                f"at gamma={gamma:g}"
            )

        self._utilities.append(utility)
        if len(self._utilities) == self._utilities.maxlen:
            spread = max(self._utilities) - min(self._utilities)
            if spread <= self.params.stop_tol * abs(utility):
                return RunStatus.CONVERGED, f"utility settled within {spread:.3e}"
        return None, ""
