"""Exception hierarchy for the power-control simulator"""
from typing import Optional


class PowerControlError(Exception):
    """Base class for every error raised by this package"""


class ScenarioError(PowerControlError, ValueError):
    """Scenario is malformed or infeasible"""


class UtilityDomainError(PowerControlError, ValueError):
    """Utility evaluated outside its domain (e.g. log of a nonpositive rate)"""


class OracleError(PowerControlError):
    """Centralized solver could not produce a usable point"""


class MissingMetricError(PowerControlError):
    """Uplink update attempted without the IN metric of a neighbor"""

    def __init__(self, uplink: int, downlink: int):
        super().__init__(f"uplink {uplink} has no IN metric for neighbor downlink {downlink}")
        self.uplink = uplink
        self.downlink = downlink


class KnowledgeViolation(PowerControlError):
    """An agent touched a fact outside its one-hop knowledge table"""

    def __init__(self, agent: str, fact: str):
        super().__init__(f"{agent} may not access {fact}")
        self.agent = agent
        self.fact = fact


class ConfigError(PowerControlError, ValueError):
    """Run configuration failed validation"""


class ExperimentError(PowerControlError):
    """Experiment point failed; carries the level it failed at"""

    def __init__(self, message: str, level: Optional[int] = None):
        prefix = f"level {level}: " if level is not None else ""
        super().__init__(prefix + message)
        self.level = level


class CodecError(PowerControlError, ValueError):
    """Feedback wire payload could not be decoded"""
