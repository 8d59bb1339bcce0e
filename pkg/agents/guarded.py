"""Distributed algorithm executed by one-hop agents exchanging feedback messages"""
import logging
from typing import Dict, Optional

import numpy as np

from engine.distributed import drive, init, target_rates
from models.channel import interference_plus_noise_all
from models.feedback import decode_feedback, encode_feedback
from models.scenario import Scenario
from models.state import AlgoParams, AlgoState
from models.utility import UtilitySet

from .nodes import BaseStationAgent, DownlinkAgent, UplinkAgent

logger = logging.getLogger(__name__)


class GuardedEngine:
    """
    Same rounds as DistributedEngine, but each node only touches its own
    knowledge table. The engine itself plays the physical layer: it carries
    encoded feedback to the BS and the overhearing uplink users, and measures
    IN and SINR after the new powers are applied.
    """

    def __init__(self, s: Scenario, utils: UtilitySet, params: Optional[AlgoParams] = None,
                 utility_star: Optional[float] = None):
        self.scenario = s.validate()
        self.utils = utils
        self.params = (params or AlgoParams()).validate()
        self.utility_star = utility_star
        self.rng = np.random.default_rng(self.params.noise_seed) if self.params.measurement_noise else None
        self.state = init(s, self.params)
        self.bytes_sent = 0

        st = self.state
        self.bs = BaseStationAgent(s, st.p_hat_dl, st.q_dl)
        self.uplinks = [self.make_uplink_agent(i) for i in range(s.K_ul)]
        self.downlinks = [DownlinkAgent(s, j, st.q_dl[j]) for j in range(s.K_dl)]
        self._measure(st.p_hat_ul, st.p_hat_dl, st.in_j)

    def make_uplink_agent(self, i: int) -> UplinkAgent:
        st = self.state
        return UplinkAgent(self.scenario, i, st.p_hat_ul[i], st.q_ul[i])

    @property
    def agents(self) -> Dict[str, object]:
        named = {"bs": self.bs}
        named.update({agent.table.agent: agent for agent in self.uplinks})
        named.update({agent.table.agent: agent for agent in self.downlinks})
        return named

    def _measure(self, p_hat_ul: np.ndarray, p_hat_dl: np.ndarray, in_j: np.ndarray):
        s = self.scenario
        sinr_ul = s.M * np.exp(p_hat_ul) * s.g_ul / s.N0
        sinr_dl = s.M * np.exp(p_hat_dl) * s.g_dl / in_j
        for i, agent in enumerate(self.uplinks):
            agent.observe(float(sinr_ul[i]))
        for j, agent in enumerate(self.downlinks):
            agent.observe(float(in_j[j]), float(sinr_dl[j]))

    def _noise(self, size: int) -> np.ndarray:
        if self.rng is None:
            return np.zeros(size)
        return self.rng.normal(0.0, self.params.measurement_noise, size=size)

    def exchange_feedback(self) -> int:
        """One broadcast per downlink user, decoded by the BS and the overhearing uplinks"""
        s = self.scenario
        for agent in self.uplinks:
            agent.begin_round()
        sent = 0
        for agent in self.downlinks:
            payload = encode_feedback(agent.feedback(s))
            self.bytes_sent += len(payload)
            sent += 1
            msg = decode_feedback(payload, pilot_gain_to_bs=float(s.g_dl[agent.j]))
            self.bs.receive(msg)
            for i in s.nbr_of_dl[agent.j]:
                self.uplinks[i].overhear(msg)
        return sent

    def step(self) -> AlgoState:
        s, params, prev = self.scenario, self.params, self.state
        sent = self.exchange_feedback()

        p_hat_dl = self.bs.power_step(params)
        p_hat_ul = np.array([agent.power_step(params) for agent in self.uplinks])

        noise_ul = self._noise(s.K_ul)
        noise_dl = self._noise(s.K_dl)
        q_ul = np.array([agent.price_step(self.utils.ul[agent.i], params, float(noise_ul[agent.i]))
                         for agent in self.uplinks])
        q_bs = self.bs.price_step(self.utils.dl, params, noise_dl)
        q_dl = np.array([agent.price_step(self.utils.dl[agent.j], params, float(noise_dl[agent.j]))
                         for agent in self.downlinks])

        for i, agent in enumerate(self.uplinks):
            agent.commit(p_hat_ul[i], q_ul[i])
        self.bs.commit(p_hat_dl, q_bs)
        for j, agent in enumerate(self.downlinks):
            agent.commit(q_dl[j])

        in_j = interference_plus_noise_all(s, np.exp(p_hat_ul))
        self._measure(p_hat_ul, p_hat_dl, in_j)

        r_ul, r_dl = target_rates(self.utils, prev.q_ul, prev.q_dl, params)
        prev.messages_per_round.append(sent)
        self.state = AlgoState(
            t=prev.t + 1,
            q_ul=q_ul,
            q_dl=q_bs,
            p_hat_ul=p_hat_ul,
            p_hat_dl=p_hat_dl,
            in_j=in_j,
            r_ul=r_ul,
            r_dl=r_dl,
            trace=prev.trace,
            gamma=params.gamma,
            messages_per_round=prev.messages_per_round,
        )
        return self.state

    def run(self) -> AlgoState:
        return drive(self, self.scenario, self.utils, self.params, self.utility_star)


def run_guarded(s: Scenario, utils: UtilitySet, params: Optional[AlgoParams] = None,
                utility_star: Optional[float] = None) -> AlgoState:
    """Distributed run in which every cross-node quantity travels as a feedback message"""
    engine = GuardedEngine(s, utils, params, utility_star)
    state = engine.run()
    logger.info("guarded run: %d rounds, %d feedback bytes", state.t, engine.bytes_sent)
    return state
