"""Overhearing feedback protocol: message construction, SINR recovery, IN metrics, overhead"""
from dataclasses import dataclass, field
from typing import List, Tuple

from models.errors import CodecError, KnowledgeViolation
from models.feedback import FeedbackMsg, wire_size
from models.scenario import Scenario


def make_feedback(j: int, q_dl_j: float, in_j: float, s: Scenario) -> FeedbackMsg:
    """Downlink j broadcasts fb = q_j / IN_j; pilots carry g_dl[j] and g_ij to its neighbors"""
    if not (q_dl_j > 0 and in_j > 0):
        raise CodecError(f"feedback needs positive price and IN, got q={q_dl_j}, IN={in_j}")
    return FeedbackMsg(
        sender=j,
        fb=q_dl_j / in_j,
        pilot_gain_to_bs=float(s.g_dl[j]),
        pilot_gain_to_ul={i: float(s.G_I[i, j]) for i in s.nbr_of_dl[j]},
    )


def bs_recover_sinr(msg: FeedbackMsg, p_dl_j: float, q_dl_j: float, M: int) -> float:
    """SINR_j = fb M P_j g_j / q_j with the BS's own copy of q_j"""
    return msg.fb * M * p_dl_j * msg.pilot_gain_to_bs / q_dl_j


def ul_overhear_metric(msg: FeedbackMsg, i: int, p_ul_i: float) -> Tuple[float, float]:
    """(m_ij, m_ij P_i) for uplink i overhearing downlink j's feedback"""
    if i not in msg.pilot_gain_to_ul:
        raise KnowledgeViolation(f"uplink[{i}]", f"feedback[{msg.sender}]")
    m_ij = msg.fb * msg.pilot_gain_to_ul[i]
    return m_ij, m_ij * p_ul_i


@dataclass
class OverheadReport:
    """Information a centralized BS must gather versus what one-hop nodes hold"""
    centralized_uplink_items: int
    centralized_downlink_items: int
    centralized_interference_items: int
    onehop_bs_items_per_round: int
    onehop_ul_items: List[int] = field(default_factory=list)
    onehop_dl_items: List[int] = field(default_factory=list)
    wire_bytes_per_round: int = 0
    scalars_per_round: int = 0

    @property
    def centralized_items(self) -> int:
        return self.centralized_uplink_items + self.centralized_downlink_items + self.centralized_interference_items

    def to_dict(self) -> dict:
        """Serialize to dictionary"""
        return {
            "centralized_items": self.centralized_items,
            "centralized_uplink_items": self.centralized_uplink_items,
            "centralized_downlink_items": self.centralized_downlink_items,
            "centralized_interference_items": self.centralized_interference_items,
            "onehop_bs_items_per_round": self.onehop_bs_items_per_round,
            "onehop_ul_items": self.onehop_ul_items,
            "onehop_dl_items": self.onehop_dl_items,
            "wire_bytes_per_round": self.wire_bytes_per_round,
            "scalars_per_round": self.scalars_per_round,
        }


def overhead_accounting(s: Scenario) -> OverheadReport:
    """Channel items a centralized BS needs versus per-node one-hop items"""
    return OverheadReport(
        centralized_uplink_items=s.K_ul,
        centralized_downlink_items=s.K_dl,
        centralized_interference_items=s.neighborhoods.pair_count(),
        onehop_bs_items_per_round=s.K_dl,
        onehop_ul_items=[len(n) for n in s.nbr_of_ul],
        onehop_dl_items=[1] * s.K_dl,
        wire_bytes_per_round=sum(wire_size(len(n)) for n in s.nbr_of_dl),
        scalars_per_round=s.K_dl,
    )
