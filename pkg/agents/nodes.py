"""Base station, uplink and downlink agents; every access goes through a knowledge table"""
import math
from typing import Dict, Sequence

import numpy as np

from models.errors import MissingMetricError
from models.feedback import FeedbackMsg
from models.scenario import Scenario
from models.state import AlgoParams
from models.utility import UtilityFn
from solver.projection import project_log_budget

from .knowledge import Fact, bs_table, downlink_table, uplink_table
from .protocol import bs_recover_sinr, make_feedback, ul_overhear_metric


def _price_update(q: float, sinr: float, utility: UtilityFn, params: AlgoParams, noise: float) -> float:
    r = min(params.r_max, utility.inv_derivative(q))
    return max(params.q_min, q + params.gamma * (r - (math.log(sinr) + noise)))


class BaseStationAgent:
    """Runs the downlink power step and keeps its own copy of the downlink prices"""

    def __init__(self, s: Scenario, p_hat_dl: np.ndarray, q_dl: np.ndarray):
        self.table = bs_table(s)
        self.K_dl = s.K_dl
        self.M = s.M
        self.log_P0 = np.log(s.P0_dl)
        self.P_tot = s.P_dl_tot
        for j in range(s.K_dl):
            self.table.learn(Fact.G_DL, j, float(s.g_dl[j]))
            self.table.learn(Fact.P_DL, j, float(p_hat_dl[j]))  # log watts
            self.table.learn(Fact.Q_DL, j, float(q_dl[j]))

    def receive(self, msg: FeedbackMsg):
        """Decode a feedback message into the downlink SINR"""
        j = msg.sender
        self.table.learn(Fact.FEEDBACK, j, msg)
        p = math.exp(self.table.read(Fact.P_DL, j))
        q = self.table.read(Fact.Q_DL, j)
        self.table.learn(Fact.SINR_DL, j, bs_recover_sinr(msg, p, q, self.M))

    def power_step(self, params: AlgoParams) -> np.ndarray:
        y = np.array([self.table.read(Fact.P_DL, j) for j in range(self.K_dl)])
        q = np.array([self.table.read(Fact.Q_DL, j) for j in range(self.K_dl)])
        return project_log_budget(y + params.gamma * q, self.log_P0, self.P_tot)

    def price_step(self, utilities: Sequence[UtilityFn], params: AlgoParams, noise: np.ndarray) -> np.ndarray:
        return np.array([
            _price_update(self.table.read(Fact.Q_DL, j), self.table.read(Fact.SINR_DL, j),
                          utilities[j], params, float(noise[j]))
            for j in range(self.K_dl)
        ])

    def commit(self, p_hat_dl: np.ndarray, q_dl: np.ndarray):
        for j in range(self.K_dl):
            self.table.learn(Fact.P_DL, j, float(p_hat_dl[j]))
            self.table.learn(Fact.Q_DL, j, float(q_dl[j]))


class UplinkAgent:
    """Uplink user i: overhears its neighbors' feedback and steps its own power and price"""

    def __init__(self, s: Scenario, i: int, p_hat: float, q: float):
        self.i = i
        self.table = uplink_table(s, i)
        self.neighbors = s.nbr_of_ul[i]
        self.log_P0 = math.log(s.P0_ul[i])
        self.log_P_max = math.log(s.P_ul_max)
        self.table.learn(Fact.G_UL, i, float(s.g_ul[i]))
        self.table.learn(Fact.P_UL, i, float(p_hat))  # log watts
        self.table.learn(Fact.Q_UL, i, float(q))

    def begin_round(self):
        """Metrics are per round; last round's are forgotten"""
        for j in self.neighbors:
            self.table.values.pop((Fact.M_IJ, (self.i, j)), None)

    def overhear(self, msg: FeedbackMsg):
        j = msg.sender
        self.table.learn(Fact.FEEDBACK, j, msg)
        self.table.learn(Fact.G_I, (self.i, j), msg.pilot_gain_to_ul.get(self.i, 0.0))
        p = math.exp(self.table.read(Fact.P_UL, self.i))
        self.table.learn(Fact.M_IJ, (self.i, j), ul_overhear_metric(msg, self.i, p))

    def power_step(self, params: AlgoParams) -> float:
        x = self.table.read(Fact.P_UL, self.i)
        penalty = 0.0
        for j in self.neighbors:
            metric = self.table.read(Fact.M_IJ, (self.i, j), None)
            if metric is None:
                raise MissingMetricError(self.i, j)
            penalty += metric[1]
        step = x + params.gamma * (self.table.read(Fact.Q_UL, self.i) - penalty)
        return min(max(step, self.log_P0), self.log_P_max)

    def price_step(self, utility: UtilityFn, params: AlgoParams, noise: float) -> float:
        return _price_update(self.table.read(Fact.Q_UL, self.i), self.table.read(Fact.SINR_UL, self.i),
                             utility, params, noise)

    def observe(self, sinr: float):
        """SINR reported back by the BS receiver"""
        self.table.learn(Fact.SINR_UL, self.i, sinr)

    def commit(self, p_hat: float, q: float):
        self.table.learn(Fact.P_UL, self.i, float(p_hat))
        self.table.learn(Fact.Q_UL, self.i, float(q))


class DownlinkAgent:
    """Downlink user j: measures IN and SINR, keeps its price, broadcasts feedback"""

    def __init__(self, s: Scenario, j: int, q: float):
        self.j = j
        self.table = downlink_table(s, j)
        self.table.learn(Fact.Q_DL, j, float(q))

    def observe(self, in_j: float, sinr: float):
        self.table.learn(Fact.IN, self.j, in_j)
        self.table.learn(Fact.SINR_DL, self.j, sinr)

    def feedback(self, s: Scenario) -> FeedbackMsg:
        """The round's broadcast; the scenario supplies only the pilot channel"""
        return make_feedback(self.j, self.table.read(Fact.Q_DL, self.j), self.table.read(Fact.IN, self.j), s)

    def price_step(self, utility: UtilityFn, params: AlgoParams, noise: float) -> float:
        return _price_update(self.table.read(Fact.Q_DL, self.j), self.table.read(Fact.SINR_DL, self.j),
                             utility, params, noise)

    def commit(self, q: float):
        self.table.learn(Fact.Q_DL, self.j, float(q))


def read_sets(agents: Dict[str, object]) -> Dict[str, set]:
    """Facts each agent actually read, keyed by agent name"""
    return {name: set(agent.table.reads) for name, agent in agents.items()}
