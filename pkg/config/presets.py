"""Parameter sets of the published numerical scenarios, in their stated units"""
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from models.errors import ConfigError
from models.scenario import Scenario, scenario_from_dict
from models.state import AlgoParams
from models.utility import UtilitySet

# Noise is read as -30 dBm; at -30 dBW every P0 would exceed P_max
_FIG2_CELL = {
    "M": 128,
    "g_ul_db": [-60.0],
    "g_dl_db": [-70.0],
    "g_i_db": [[-60.0]],
    "n0_dbm": -30.0,
    "p_ul_max_dbm": 23.0,
    "p_dl_tot_dbm": 45.0,
}

_FIG3_CELL = {
    "M": 128,
    "g_ul_db": [-50.0, -45.0],
    "g_dl_db": [-56.0, -61.0, -65.0, -58.0],
    "g_i_db": [
        [-59.0, -60.0, None, None],
        [-62.0, -55.0, None, None],
    ],
    "n0_dbm": -30.0,
    "p_ul_max_dbm": 23.0,
    "p_dl_tot_dbm": 45.0,
}


@dataclass(frozen=True)
class Preset:
    """A named scenario with its utilities and step-size calibration"""
    name: str
    description: str
    scenario: Dict
    ul_utility: str
    dl_utility: str
    algo: Dict = field(default_factory=dict)
    sweep_db: Tuple[float, float, int] = (-80.0, -40.0, 30)

    def build_scenario(self) -> Scenario:
        return scenario_from_dict(self.scenario)

    def build_utilities(self, s: Scenario) -> UtilitySet:
        return UtilitySet.uniform(self.ul_utility, self.dl_utility, s.K_ul, s.K_dl)

    def build_params(self, **overrides) -> AlgoParams:
        data = dict(self.algo)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return AlgoParams.from_dict(data).validate()

    def to_dict(self) -> dict:
        """Serialize to dictionary"""
        return {
            "name": self.name,
            "description": self.description,
            "scenario": self.scenario,
            "ul_utility": self.ul_utility,
            "dl_utility": self.dl_utility,
            "algo": self.algo,
            "sweep_db": list(self.sweep_db),
        }


PRESETS: Dict[str, Preset] = {
    "fig2-pf": Preset(
        name="fig2-pf",
        description="1x1 interference sweep, proportional fairness (downlink weight 2)",
        scenario=_FIG2_CELL,
        ul_utility="log:w=1",
        dl_utility="log:w=2",
    ),
    "fig2-mpd": Preset(
        name="fig2-mpd",
        description="1x1 interference sweep, minimum potential delay (downlink weight 2)",
        scenario=_FIG2_CELL,
        ul_utility="afair:alpha=2,w=1",
        dl_utility="afair:alpha=2,w=2",
    ),
    "fig3-pf": Preset(
        name="fig3-pf",
        description="2 uplink x 4 downlink convergence, proportional fairness",
        scenario=_FIG3_CELL,
        ul_utility="log:w=1",
        dl_utility="log:w=1",
        algo={"gamma": 0.02, "stop_tol": 1e-6, "max_iters": 1500},
    ),
    "fig3-mpd": Preset(
        name="fig3-mpd",
        description="2 uplink x 4 downlink convergence, minimum potential delay",
        scenario=_FIG3_CELL,
        ul_utility="afair:alpha=2,w=1",
        dl_utility="afair:alpha=2,w=1",
        algo={"gamma": 0.005, "stop_tol": 1e-4, "max_iters": 1500},
    ),
}

ALIASES: Dict[str, List[str]] = {
    "fig2": ["fig2-pf", "fig2-mpd"],
    "fig3": ["fig3-pf", "fig3-mpd"],
}


def get_preset(name: str) -> Preset:
    """Look up one preset by exact name"""
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS) + sorted(ALIASES))
        raise ConfigError(f"unknown preset '{name}' (known: {known})")


def resolve_presets(name: str) -> List[Preset]:
    """A preset name or a family alias such as 'fig2'"""
    if name in ALIASES:
        return [PRESETS[n] for n in ALIASES[name]]
    return [get_preset(name)]
