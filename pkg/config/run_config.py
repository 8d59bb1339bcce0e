"""Run configuration: parsing, validation and resolution into scenario, utilities and parameters"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

from models.errors import ConfigError, ScenarioError
from models.scenario import LossModel, Scenario, load_scenario, random_scenario, scenario_from_dict
from models.state import AlgoParams
from models.utility import UtilitySet

from .presets import PRESETS, resolve_presets
from .settings import DEFAULT_OUTPUT_DIR, DEFAULT_SEED, VERSION

COMMANDS = ("converge", "sweep", "scale", "oracle", "validate")
FORMATS = ("csv", "json")
MAX_LEVELS = 5

DEFAULT_PRESET = {
    "converge": "fig3-pf",
    "sweep": "fig2",
    "oracle": "fig3-pf",
}


@dataclass
class RunConfig:
    """Everything a command needs, validated before any computation"""
    command: str
    preset: Optional[str] = None
    scenario_path: Optional[str] = None
    scenario: Optional[dict] = None        # inline dB-suffixed scenario
    generator: Optional[dict] = None       # {"seed", "K_ul", "K_dl", "M", "loss": {...}}
    ul_utility: Optional[str] = None
    dl_utility: Optional[str] = None
    algo: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    output_dir: str = DEFAULT_OUTPUT_DIR
    C: float = 16.0
    levels: int = MAX_LEVELS
    rho: float = 0.5
    seeds: int = 10
    output_format: str = "csv"
    sweep_db: Optional[Tuple[float, float, int]] = None
    loss: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        """Raise ConfigError on the first invalid field"""
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command '{self.command}'")
        sources = [x is not None for x in (self.scenario_path, self.scenario, self.generator)]
        if sum(sources) > 1:
            raise ConfigError("give at most one of a scenario file, an inline scenario or a generator")
        if self.preset is not None:
            resolve_presets(self.preset)
        self.params().validate()
        if not 0 < self.rho < 1:
            raise ConfigError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.C > 0:
            raise ConfigError(f"C must be positive, got {self.C}")
        if not 1 <= self.levels <= MAX_LEVELS:
            raise ConfigError(f"levels must be between 1 and {MAX_LEVELS}, got {self.levels}")
        if self.seeds < 1:
            raise ConfigError(f"seeds must be >= 1, got {self.seeds}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got '{self.output_format}'")
        if self.sweep_db is not None:
            lo, hi, n = self.sweep_db
            if not (lo < hi and int(n) >= 2):
                raise ConfigError(f"sweep range must be (low, high, points>=2), got {self.sweep_db}")
        try:
            LossModel.from_dict(self.loss).validate()
        except ScenarioError as exc:
            raise ConfigError(f"loss model: {exc}") from exc
        return self

    def preset_name(self) -> Optional[str]:
        """Explicit preset, or the command's default when no scenario source is given"""
        if self.preset is not None:
            return self.preset
        if self.scenario_path or self.scenario or self.generator:
            return None
        return DEFAULT_PRESET.get(self.command)

    def params(self) -> AlgoParams:
        """Preset calibration overlaid with explicit algorithm settings"""
        name = self.preset_name()
        base = dict(PRESETS[name].algo) if name in PRESETS else {}
        base.update(self.algo)
        return AlgoParams.from_dict(base)

    def loss_model(self) -> LossModel:
        return LossModel.from_dict(self.loss)

    def resolve_cases(self) -> List[Tuple[str, Scenario, UtilitySet, AlgoParams]]:
        """(label, scenario, utilities, params) for each case the command covers"""
        name = self.preset_name()
        if name is not None:
            cases = []
            for preset in resolve_presets(name):
                s = preset.build_scenario()
                utils = UtilitySet.uniform(self.ul_utility or preset.ul_utility,
                                           self.dl_utility or preset.dl_utility, s.K_ul, s.K_dl)
                params = dict(preset.algo)
                params.update(self.algo)
                cases.append((preset.name, s, utils, AlgoParams.from_dict(params).validate()))
            return cases
        s = self.resolve_scenario()
        utils = UtilitySet.uniform(self.ul_utility or "log:w=1", self.dl_utility or "log:w=1", s.K_ul, s.K_dl)
        return [("custom", s, utils, self.params().validate())]

    def resolve_scenario(self) -> Scenario:
        if self.scenario_path:
            return load_scenario(self.scenario_path)
        if self.scenario:
            return scenario_from_dict(self.scenario)
        if self.generator:
            g = self.generator
            return random_scenario(int(g.get("seed", self.seed)), int(g["K_ul"]), int(g["K_dl"]),
                                   int(g["M"]), LossModel.from_dict(g.get("loss", self.loss)))
        raise ConfigError("no scenario source given")

    def to_dict(self) -> dict:
        """Fully resolved form written next to the outputs"""
        name = self.preset_name()
        return {
            "version": VERSION,
            "command": self.command,
            "preset": name,
            "scenario_path": self.scenario_path,
            "scenario": self.scenario,
            "generator": self.generator,
            "ul_utility": self.ul_utility,
            "dl_utility": self.dl_utility,
            "algo": self.params().to_dict(),
            "seed": self.seed,
            "output_dir": self.output_dir,
            "C": self.C,
            "levels": self.levels,
            "rho": self.rho,
            "seeds": self.seeds,
            "format": self.output_format,
            "sweep_db": list(self.sweep_db) if self.sweep_db else None,
            "loss": self.loss_model().to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Deserialize from dictionary (the config-file form)"""
        known = {
            "command", "preset", "scenario_path", "scenario", "generator", "ul_utility", "dl_utility",
            "algo", "seed", "output_dir", "C", "levels", "rho", "seeds", "format", "sweep_db", "loss",
            "version",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        sweep = data.get("sweep_db")
        return cls(
            command=data.get("command", "converge"),
            preset=data.get("preset"),
            scenario_path=data.get("scenario_path"),
            scenario=data.get("scenario"),
            generator=data.get("generator"),
            ul_utility=data.get("ul_utility"),
            dl_utility=data.get("dl_utility"),
            algo=dict(data.get("algo") or {}),
            seed=int(data.get("seed", DEFAULT_SEED)),
            output_dir=data.get("output_dir", DEFAULT_OUTPUT_DIR),
            C=float(data.get("C", 16.0)),
            levels=int(data.get("levels", MAX_LEVELS)),
            rho=float(data.get("rho", 0.5)),
            seeds=int(data.get("seeds", 10)),
            output_format=data.get("format", "csv"),
            sweep_db=tuple(sweep) if sweep else None,
            loss=dict(data.get("loss") or {}),
        )


def load_run_config(path: str, command: str) -> RunConfig:
    """Read a JSON config file; the command on the CLI wins"""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data["command"] = command
    return RunConfig.from_dict(data)
