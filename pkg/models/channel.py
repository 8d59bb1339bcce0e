"""Asymptotic SINR, rate and utility formulas of the massive-MIMO full-duplex cell"""
from enum import Enum
from typing import Tuple, Union

import numpy as np

from .errors import UtilityDomainError
from .scenario import PowerAllocation, Scenario
from .utility import UtilitySet


class RateMode(Enum):
    """How a rate is computed from a SINR"""
    EXACT = "exact"        # log(1 + SINR)
    HIGH_SNR = "high_snr"  # log(SINR)


def _check_index(idx: int, size: int, what: str):
    if not 0 <= idx < size:
        raise IndexError(f"{what} index {idx} out of range [0, {size})")


def uplink_sinr(s: Scenario, p_ul_i: float, i: int) -> float:
    """M p g / N0 for uplink user i"""
    _check_index(i, s.K_ul, "uplink")
    return s.M * p_ul_i * s.g_ul[i] / s.N0


def interference_plus_noise(s: Scenario, p_ul: np.ndarray, j: int) -> float:
    """IN_j: noise plus interference from the uplink neighbors of downlink j"""
    _check_index(j, s.K_dl, "downlink")
    p_ul = np.asarray(p_ul, dtype=float)
    total = s.N0
    for i in s.nbr_of_dl[j]:
        total += s.G_I[i, j] * p_ul[i]
    return float(total)


def downlink_sinr_from_in(s: Scenario, p_dl_j: float, in_j: float, j: int) -> float:
    """Downlink SINR given a known IN value"""
    _check_index(j, s.K_dl, "downlink")
    return s.M * p_dl_j * s.g_dl[j] / in_j


def downlink_sinr(s: Scenario, p_dl_j: float, p_ul: np.ndarray, j: int) -> float:
    """M p g / IN_j for downlink user j"""
    return downlink_sinr_from_in(s, p_dl_j, interference_plus_noise(s, p_ul, j), j)


# Vectorised forms; a leading batch axis on the powers is allowed

def uplink_sinrs(s: Scenario, p_ul: np.ndarray) -> np.ndarray:
    return s.M * np.asarray(p_ul, dtype=float) * s.g_ul / s.N0


def interference_plus_noise_all(s: Scenario, p_ul: np.ndarray) -> np.ndarray:
    return s.N0 + np.asarray(p_ul, dtype=float) @ s.interference


def downlink_sinrs(s: Scenario, p_dl: np.ndarray, p_ul: np.ndarray) -> np.ndarray:
    return s.M * np.asarray(p_dl, dtype=float) * s.g_dl / interference_plus_noise_all(s, p_ul)


def rate_exact(sinr):
    """log(1 + SINR) in nats"""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise UtilityDomainError("SINR must be nonnegative")
    out = np.log1p(sinr)
    return out if out.ndim else float(out)


def rate_hs(sinr):
    """High-SINR rate log(SINR) in nats"""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(~(sinr > 0)):
        raise UtilityDomainError("high-SINR rate needs SINR > 0")
    out = np.log(sinr)
    return out if out.ndim else float(out)


def rate(sinr, mode: RateMode):
    """Rate under the chosen mode"""
    return rate_exact(sinr) if mode == RateMode.EXACT else rate_hs(sinr)


def link_rates(s: Scenario, p: PowerAllocation,
               mode: RateMode = RateMode.HIGH_SNR) -> Tuple[np.ndarray, np.ndarray]:
    """(uplink rates, downlink rates)"""
    return (
        np.atleast_1d(rate(uplink_sinrs(s, p.p_ul), mode)),
        np.atleast_1d(rate(downlink_sinrs(s, p.p_dl, p.p_ul), mode)),
    )


def sum_utility(s: Scenario, utils: UtilitySet, p: PowerAllocation,
                mode: Union[RateMode, str] = RateMode.HIGH_SNR) -> float:
    """Sum of per-user utilities of the achieved rates"""
    mode = RateMode(mode)
    r_ul, r_dl = link_rates(s, p, mode)
    return float(utils.value_ul(r_ul).sum() + utils.value_dl(r_dl).sum())
