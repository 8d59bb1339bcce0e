"""One-hop knowledge tables: what each node may know, checked on every access"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Hashable, Set, Tuple

from models.errors import KnowledgeViolation
from models.scenario import Scenario

logger = logging.getLogger(__name__)


class Role(Enum):
    """Node roles in the cell"""
    BS = "bs"
    UPLINK = "uplink"
    DOWNLINK = "downlink"


class Fact(Enum):
    """Kinds of facts a node can hold; each is keyed by a user index or an (i, j) pair"""
    G_UL = "g_ul"            # uplink path loss, key i
    G_DL = "g_dl"            # downlink path loss, key j
    G_I = "g_i"              # interference gain, key (i, j)
    P_UL = "p_ul"            # key i
    P_DL = "p_dl"            # key j
    Q_UL = "q_ul"            # key i
    Q_DL = "q_dl"            # key j
    SINR_UL = "sinr_ul"      # key i
    SINR_DL = "sinr_dl"      # key j
    IN = "in"                # interference plus noise, key j
    M_IJ = "m_ij"            # IN metric, key (i, j)
    FEEDBACK = "feedback"    # decoded feedback message, key j


FactKey = Tuple[Fact, Hashable]

_MISSING = object()


@dataclass
class KnowledgeTable:
    """Permitted facts of one node plus the values it has learned"""
    agent: str
    role: Role
    permitted: Set[FactKey]
    values: Dict[FactKey, Any] = field(default_factory=dict)
    reads: Set[FactKey] = field(default_factory=set)

    def permits(self, fact: Fact, key: Hashable) -> bool:
        return (fact, key) in self.permitted

    def _check(self, fact: Fact, key: Hashable):
        if not self.permits(fact, key):
            label = f"{fact.value}[{key}]"
            logger.warning("knowledge violation: %s touched %s", self.agent, label)
            raise KnowledgeViolation(self.agent, label)

    def learn(self, fact: Fact, key: Hashable, value: Any):
        """Store a fact the node observed or received"""
        self._check(fact, key)
        self.values[(fact, key)] = value

    def read(self, fact: Fact, key: Hashable, default: Any = _MISSING) -> Any:
        """Fetch a fact; KeyError if permitted but not yet learned and no default"""
        self._check(fact, key)
        self.reads.add((fact, key))
        value = self.values.get((fact, key), default)
        if value is _MISSING:
            raise KeyError(f"{self.agent} has not learned {fact.value}[{key}]")
        return value

    def knows(self, fact: Fact, key: Hashable) -> bool:
        return (fact, key) in self.values

    def grant(self, fact: Fact, key: Hashable):
        """Widen the table"""
        self.permitted.add((fact, key))


def bs_table(s: Scenario) -> KnowledgeTable:
    """BS: downlink gains, powers, prices, recovered SINRs and the feedback it decodes"""
    permitted = set()
    for j in range(s.K_dl):
        permitted |= {(Fact.G_DL, j), (Fact.P_DL, j), (Fact.Q_DL, j), (Fact.SINR_DL, j), (Fact.FEEDBACK, j)}
    return KnowledgeTable("bs", Role.BS, permitted)


def uplink_table(s: Scenario, i: int) -> KnowledgeTable:
    """Uplink i: its own link, plus gains, metrics and feedback of its neighbors"""
    permitted = {(Fact.SINR_UL, i), (Fact.Q_UL, i), (Fact.P_UL, i), (Fact.G_UL, i)}
    for j in s.nbr_of_ul[i]:
        permitted |= {(Fact.G_I, (i, j)), (Fact.M_IJ, (i, j)), (Fact.FEEDBACK, j)}
    return KnowledgeTable(f"uplink[{i}]", Role.UPLINK, permitted)


def downlink_table(s: Scenario, j: int) -> KnowledgeTable:
    """Downlink j: its own IN, price and SINR"""
    permitted = {(Fact.IN, j), (Fact.Q_DL, j), (Fact.SINR_DL, j)}
    return KnowledgeTable(f"downlink[{j}]", Role.DOWNLINK, permitted)
