"""Scenario model - the physical description of one full-duplex cell"""
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ScenarioError
from .units import db_to_linear, dbm_to_watts, dbw_to_watts, linear_to_db, watts_to_dbm

logger = logging.getLogger(__name__)

DEFAULT_SIGMA_MIN = 10.0
DEFAULT_NEIGHBOR_THRESHOLD_DB = -100.0
FEASIBILITY_RTOL = 1e-9


@dataclass(frozen=True)
class Neighborhoods:
    """Bipartite interference neighborhoods between uplink and downlink users"""
    of_ul: Tuple[Tuple[int, ...], ...]  # N_i: downlink users hit by uplink i
    of_dl: Tuple[Tuple[int, ...], ...]  # N_j: uplink users heard by downlink j

    def mask(self) -> np.ndarray:
        """Boolean K_ul x K_dl neighbor matrix"""
        out = np.zeros((len(self.of_ul), len(self.of_dl)), dtype=bool)
        for i, nbrs in enumerate(self.of_ul):
            out[i, list(nbrs)] = True
        return out

    def pair_count(self) -> int:
        """Number of (uplink, downlink) neighbor pairs"""
        return sum(len(n) for n in self.of_ul)


def build_neighborhoods(G_I: np.ndarray, threshold: float) -> Neighborhoods:
    """Neighbors are the pairs whose interference gain reaches the threshold"""
    if threshold < 0:
        raise ScenarioError("neighbor threshold must be nonnegative")
    G_I = np.atleast_2d(np.asarray(G_I, dtype=float))
    mask = G_I >= threshold
    of_ul = tuple(tuple(int(j) for j in np.flatnonzero(row)) for row in mask)
    of_dl = tuple(tuple(int(i) for i in np.flatnonzero(col)) for col in mask.T)
    return Neighborhoods(of_ul=of_ul, of_dl=of_dl)


def _frozen(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """Single-cell massive-MIMO full-duplex scenario, all quantities linear"""
    M: int
    g_ul: np.ndarray            # uplink path-loss gains
    g_dl: np.ndarray            # downlink path-loss gains
    G_I: np.ndarray             # K_ul x K_dl inter-node interference gains
    N0: float                   # noise power (W)
    P_ul_max: float             # per-uplink-user cap (W)
    P_dl_tot: float             # downlink budget (W)
    P0_ul: np.ndarray           # high-SINR lower bounds (W)
    P0_dl: np.ndarray
    neighborhoods: Neighborhoods
    neighbor_threshold: float = db_to_linear(DEFAULT_NEIGHBOR_THRESHOLD_DB)
    sigma_min: float = DEFAULT_SIGMA_MIN
    custom_bounds: bool = False  # P0 supplied explicitly rather than derived

    def __post_init__(self):
        object.__setattr__(self, "g_ul", _frozen(self.g_ul, 1))
        object.__setattr__(self, "g_dl", _frozen(self.g_dl, 1))
        G = np.array(self.G_I, dtype=float).reshape(len(self.g_ul), len(self.g_dl))
        G.setflags(write=False)
        object.__setattr__(self, "G_I", G)
        object.__setattr__(self, "P0_ul", _frozen(self.P0_ul, 1))
        object.__setattr__(self, "P0_dl", _frozen(self.P0_dl, 1))
        mask = self.neighborhoods.mask()
        mask.setflags(write=False)
        object.__setattr__(self, "_mask", mask)
        effective = np.where(mask, G, 0.0)
        effective.setflags(write=False)
        object.__setattr__(self, "_effective", effective)

    @property
    def K_ul(self) -> int:
        return len(self.g_ul)

    @property
    def K_dl(self) -> int:
        return len(self.g_dl)

    @property
    def nbr_of_ul(self) -> Tuple[Tuple[int, ...], ...]:
        return self.neighborhoods.of_ul

    @property
    def nbr_of_dl(self) -> Tuple[Tuple[int, ...], ...]:
        return self.neighborhoods.of_dl

    @property
    def neighbor_mask(self) -> np.ndarray:
        """Boolean K_ul x K_dl neighbor matrix"""
        return self._mask

    @property
    def interference(self) -> np.ndarray:
        """G_I restricted to neighbor pairs (sub-threshold links dropped)"""
        return self._effective

    def check_feasible(self) -> Tuple[bool, str]:
        """Check the scenario invariants, returns (ok, reason)"""
        if self.K_ul < 1 or self.K_dl < 1:
            return False, "need at least one uplink and one downlink user"
        if self.M < 1:
            return False, f"antenna count must be >= 1, got {self.M}"
        for name, arr in (("g_ul", self.g_ul), ("g_dl", self.g_dl)):
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                return False, f"{name} gains must be finite and strictly positive"
        if not np.all(np.isfinite(self.G_I)) or np.any(self.G_I < 0):
            return False, "interference gains must be finite and nonnegative"
        for name, value in (("N0", self.N0), ("P_ul_max", self.P_ul_max), ("P_dl_tot", self.P_dl_tot)):
            if not (math.isfinite(value) and value > 0):
                return False, f"{name} must be finite and strictly positive"
        if np.any(self.P0_ul <= 0) or np.any(self.P0_dl <= 0):
            return False, "high-SINR lower bounds must be strictly positive"
        if np.any(self.P0_ul >= self.P_ul_max):
            worst = int(np.argmax(self.P0_ul))
            return False, (
                f"uplink {worst} needs P0={self.P0_ul[worst]:.4g} W >= P_ul_max={self.P_ul_max:.4g} W "
                "for the high-SINR model; noise too strong for this geometry"
            )
        if self.P0_dl.sum() > self.P_dl_tot * (1.0 + FEASIBILITY_RTOL):
            return False, (
                f"downlink lower bounds sum to {self.P0_dl.sum():.4g} W > budget {self.P_dl_tot:.4g} W"
            )
        if not np.array_equal(self.neighbor_mask, self.G_I >= self.neighbor_threshold):
            return False, "neighborhoods disagree with the interference threshold"
        return True, "ok"

    def validate(self) -> "Scenario":
        """Raise ScenarioError unless feasible; returns self for chaining"""
        ok, reason = self.check_feasible()
        if not ok:
            raise ScenarioError(reason)
        return self

    def max_interference_plus_noise(self) -> np.ndarray:
        """IN_j with every uplink user at P_ul_max"""
        return self.N0 + self.P_ul_max * self.interference.sum(axis=0)

    def with_interference(self, G_I: np.ndarray) -> "Scenario":
        """Same cell with new interference gains (neighborhoods and P0 rebuilt)"""
        return make_scenario(
            M=self.M, g_ul=self.g_ul, g_dl=self.g_dl, G_I=G_I, N0=self.N0,
            P_ul_max=self.P_ul_max, P_dl_tot=self.P_dl_tot,
            sigma_min=self.sigma_min, neighbor_threshold=self.neighbor_threshold,
        )

    def permuted(self, ul_order: Sequence[int], dl_order: Sequence[int]) -> "Scenario":
        """Relabel users; new user k is old user order[k]"""
        ul_order = np.asarray(ul_order, dtype=int)
        dl_order = np.asarray(dl_order, dtype=int)
        G = self.G_I[np.ix_(ul_order, dl_order)]
        return Scenario(
            M=self.M, g_ul=self.g_ul[ul_order], g_dl=self.g_dl[dl_order], G_I=G, N0=self.N0,
            P_ul_max=self.P_ul_max, P_dl_tot=self.P_dl_tot,
            P0_ul=self.P0_ul[ul_order], P0_dl=self.P0_dl[dl_order],
            neighborhoods=build_neighborhoods(G, self.neighbor_threshold),
            neighbor_threshold=self.neighbor_threshold, sigma_min=self.sigma_min,
            custom_bounds=self.custom_bounds,
        )

    def to_dict(self) -> dict:
        """Serialize with explicit unit suffixes (dB / dBm)"""
        data = {
            "M": int(self.M),
            "g_ul_db": [linear_to_db(g) for g in self.g_ul],
            "g_dl_db": [linear_to_db(g) for g in self.g_dl],
            "g_i_db": [[linear_to_db(g) if g > 0 else None for g in row] for row in self.G_I],
            "n0_dbm": watts_to_dbm(self.N0),
            "p_ul_max_dbm": watts_to_dbm(self.P_ul_max),
            "p_dl_tot_dbm": watts_to_dbm(self.P_dl_tot),
            "sigma_min": self.sigma_min,
            "neighbor_threshold_db": (
                linear_to_db(self.neighbor_threshold) if self.neighbor_threshold > 0 else None
            ),
        }
        if self.custom_bounds:
            data["p0_ul_w"] = [float(p) for p in self.P0_ul]
            data["p0_dl_w"] = [float(p) for p in self.P0_dl]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        """Deserialize; converts every dB/dBm/dBW field to linear"""
        return scenario_from_dict(data)


def high_sinr_bounds(M: int, g_ul: np.ndarray, g_dl: np.ndarray, N0: float,
                     P_ul_max: float, interference: np.ndarray,
                     sigma_min: float = DEFAULT_SIGMA_MIN) -> Tuple[np.ndarray, np.ndarray]:
    """P0 bounds where each SINR reaches sigma_min (downlink at worst-case IN)"""
    P0_ul = sigma_min * N0 / (M * np.asarray(g_ul, dtype=float))
    in_max = N0 + P_ul_max * np.asarray(interference, dtype=float).sum(axis=0)
    P0_dl = sigma_min * in_max / (M * np.asarray(g_dl, dtype=float))
    return P0_ul, P0_dl


def make_scenario(M: int, g_ul, g_dl, G_I, N0: float, P_ul_max: float, P_dl_tot: float,
                  sigma_min: float = DEFAULT_SIGMA_MIN,
                  neighbor_threshold: Optional[float] = None,
                  P0_ul=None, P0_dl=None, validate: bool = True) -> Scenario:
    """Build a Scenario from linear quantities, deriving neighborhoods and P0"""
    if neighbor_threshold is None:
        neighbor_threshold = db_to_linear(DEFAULT_NEIGHBOR_THRESHOLD_DB)
    g_ul = np.atleast_1d(np.asarray(g_ul, dtype=float))
    g_dl = np.atleast_1d(np.asarray(g_dl, dtype=float))
    if len(g_ul) < 1 or len(g_dl) < 1:
        raise ScenarioError("need at least one uplink and one downlink user")
    G_I = np.asarray(G_I, dtype=float).reshape(len(g_ul), len(g_dl))
    nbrs = build_neighborhoods(G_I, neighbor_threshold)
    custom = P0_ul is not None or P0_dl is not None
    derived_ul, derived_dl = high_sinr_bounds(
        M, g_ul, g_dl, N0, P_ul_max, np.where(nbrs.mask(), G_I, 0.0), sigma_min
    )
    scenario = Scenario(
        M=int(M), g_ul=g_ul, g_dl=g_dl, G_I=G_I, N0=float(N0),
        P_ul_max=float(P_ul_max), P_dl_tot=float(P_dl_tot),
        P0_ul=derived_ul if P0_ul is None else P0_ul,
        P0_dl=derived_dl if P0_dl is None else P0_dl,
        neighborhoods=nbrs, neighbor_threshold=float(neighbor_threshold),
        sigma_min=float(sigma_min), custom_bounds=custom,
    )
    if validate:
        scenario.validate()
    return scenario


def _power_field(data: dict, stem: str) -> float:
    """Read a power given as <stem>_dbm, <stem>_dbw or <stem>_w"""
    if f"{stem}_dbm" in data:
        return dbm_to_watts(data[f"{stem}_dbm"])
    if f"{stem}_dbw" in data:
        return dbw_to_watts(data[f"{stem}_dbw"])
    if f"{stem}_w" in data:
        return float(data[f"{stem}_w"])
    raise ScenarioError(f"missing field {stem}_dbm (or {stem}_dbw / {stem}_w)")


def scenario_from_dict(data: dict) -> Scenario:
    """Ingest the dB-suffixed JSON form"""
    try:
        g_ul = db_to_linear(np.asarray(data["g_ul_db"], dtype=float))
        g_dl = db_to_linear(np.asarray(data["g_dl_db"], dtype=float))
        M = int(data["M"])
    except KeyError as exc:
        raise ScenarioError(f"missing field {exc.args[0]}") from exc
    rows = data.get("g_i_db")
    G_I = np.zeros((len(np.atleast_1d(g_ul)), len(np.atleast_1d(g_dl))))
    if rows is not None:
        if len(rows) != G_I.shape[0] or any(len(r) != G_I.shape[1] for r in rows):
            raise ScenarioError(f"g_i_db must be {G_I.shape[0]}x{G_I.shape[1]}")
        for i, row in enumerate(rows):
            for j, value in enumerate(row):
                G_I[i, j] = 0.0 if value is None else db_to_linear(value)
    threshold_db = data.get("neighbor_threshold_db", DEFAULT_NEIGHBOR_THRESHOLD_DB)
    threshold = 0.0 if threshold_db is None else db_to_linear(threshold_db)
    return make_scenario(
        M=M, g_ul=g_ul, g_dl=g_dl, G_I=G_I,
        N0=_power_field(data, "n0"),
        P_ul_max=_power_field(data, "p_ul_max"),
        P_dl_tot=_power_field(data, "p_dl_tot"),
        sigma_min=float(data.get("sigma_min", DEFAULT_SIGMA_MIN)),
        neighbor_threshold=threshold,
        P0_ul=data.get("p0_ul_w"),
        P0_dl=data.get("p0_dl_w"),
    )


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Load a scenario JSON document"""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path: Union[str, Path]):
    """Write a scenario JSON document"""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class PowerAllocation:
    """Uplink and downlink transmit powers in watts"""
    p_ul: np.ndarray
    p_dl: np.ndarray

    def __post_init__(self):
        self.p_ul = np.atleast_1d(np.asarray(self.p_ul, dtype=float))
        self.p_dl = np.atleast_1d(np.asarray(self.p_dl, dtype=float))

    @property
    def p_hat_ul(self) -> np.ndarray:
        """Log-domain uplink powers"""
        return np.log(self.p_ul)

    @property
    def p_hat_dl(self) -> np.ndarray:
        """Log-domain downlink powers"""
        return np.log(self.p_dl)

    @classmethod
    def from_log(cls, p_hat_ul: np.ndarray, p_hat_dl: np.ndarray) -> "PowerAllocation":
        """Build from log-domain powers"""
        return cls(p_ul=np.exp(p_hat_ul), p_dl=np.exp(p_hat_dl))

    @classmethod
    def full_power(cls, scenario: Scenario) -> "PowerAllocation":
        """Uplink at the cap, downlink budget split evenly"""
        return cls(
            p_ul=np.full(scenario.K_ul, scenario.P_ul_max),
            p_dl=np.full(scenario.K_dl, scenario.P_dl_tot / scenario.K_dl),
        )

    def check_feasible(self, scenario: Scenario, rtol: float = FEASIBILITY_RTOL) -> Tuple[bool, str]:
        """Check bounds and budget, returns (ok, reason)"""
        if self.p_ul.shape != (scenario.K_ul,) or self.p_dl.shape != (scenario.K_dl,):
            return False, "allocation shape does not match scenario"
        if not (np.all(np.isfinite(self.p_ul)) and np.all(np.isfinite(self.p_dl))):
            return False, "non-finite power"
        if np.any(self.p_ul < scenario.P0_ul * (1 - rtol)):
            return False, "uplink power below high-SINR bound"
        if np.any(self.p_ul > scenario.P_ul_max * (1 + rtol)):
            return False, "uplink power above cap"
        if np.any(self.p_dl < scenario.P0_dl * (1 - rtol)):
            return False, "downlink power below high-SINR bound"
        if self.p_dl.sum() > scenario.P_dl_tot * (1 + rtol):
            return False, "downlink budget exceeded"
        return True, "ok"

    def to_dict(self) -> dict:
        """Serialize to dictionary"""
        return {"p_ul_w": [float(p) for p in self.p_ul], "p_dl_w": [float(p) for p in self.p_dl]}

    @classmethod
    def from_dict(cls, data: dict) -> "PowerAllocation":
        """Deserialize from dictionary"""
        return cls(p_ul=np.asarray(data["p_ul_w"]), p_dl=np.asarray(data["p_dl_w"]))


@dataclass(frozen=True)
class LossModel:
    """Parameters of the random scenario generator (dB at the boundary)"""
    g_ul_db_range: Tuple[float, float] = (-65.0, -55.0)
    g_dl_db_range: Tuple[float, float] = (-65.0, -55.0)
    interference_mean_db: float = -85.0   # linear mean of g_I is 10^(this/10)
    interference_spread_db: float = 10.0  # width of the log-uniform dB window
    n0_dbm: float = -60.0
    p_ul_max_dbm: float = 23.0
    p_dl_tot_dbm: float = 45.0
    sigma_min: float = DEFAULT_SIGMA_MIN
    neighbor_threshold_db: float = DEFAULT_NEIGHBOR_THRESHOLD_DB

    def validate(self):
        """Raise ScenarioError on an unusable parameter set"""
        for name in ("g_ul_db_range", "g_dl_db_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ScenarioError(f"{name} must be an increasing finite pair, got {(lo, hi)}")
        if not self.interference_spread_db >= 0:
            raise ScenarioError("interference spread must be nonnegative")

    @property
    def interference_mean(self) -> float:
        """Linear mean interference gain (the constant E of the asymptotic analysis)"""
        return db_to_linear(self.interference_mean_db)

    def to_dict(self) -> dict:
        """Serialize to dictionary"""
        return {
            "g_ul_db_range": list(self.g_ul_db_range),
            "g_dl_db_range": list(self.g_dl_db_range),
            "interference_mean_db": self.interference_mean_db,
            "interference_spread_db": self.interference_spread_db,
            "n0_dbm": self.n0_dbm,
            "p_ul_max_dbm": self.p_ul_max_dbm,
            "p_dl_tot_dbm": self.p_dl_tot_dbm,
            "sigma_min": self.sigma_min,
            "neighbor_threshold_db": self.neighbor_threshold_db,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LossModel":
        """Deserialize from dictionary"""
        defaults = cls()
        return cls(
            g_ul_db_range=tuple(data.get("g_ul_db_range", defaults.g_ul_db_range)),
            g_dl_db_range=tuple(data.get("g_dl_db_range", defaults.g_dl_db_range)),
            interference_mean_db=data.get("interference_mean_db", defaults.interference_mean_db),
            interference_spread_db=data.get("interference_spread_db", defaults.interference_spread_db),
            n0_dbm=data.get("n0_dbm", defaults.n0_dbm),
            p_ul_max_dbm=data.get("p_ul_max_dbm", defaults.p_ul_max_dbm),
            p_dl_tot_dbm=data.get("p_dl_tot_dbm", defaults.p_dl_tot_dbm),
            sigma_min=data.get("sigma_min", defaults.sigma_min),
            neighbor_threshold_db=data.get("neighbor_threshold_db", defaults.neighbor_threshold_db),
        )


def sample_interference_gains(rng: np.random.Generator, shape, mean: float,
                              spread_db: float) -> np.ndarray:
    """Log-uniform gains over a dB window, scaled so the linear mean is exactly `mean`"""
    if spread_db == 0:
        return np.full(shape, mean)
    u_db = rng.uniform(-spread_db / 2.0, spread_db / 2.0, size=shape)
    # E[10^(u/10)] for u ~ U[-w/2, w/2]
    c = math.log(10.0) / 10.0
    window_mean = (math.exp(c * spread_db / 2.0) - math.exp(-c * spread_db / 2.0)) / (c * spread_db)
    return mean * np.power(10.0, u_db / 10.0) / window_mean


@dataclass
class GainTables:
    """Raw random draws shared by nested scenarios"""
    g_ul: np.ndarray
    g_dl: np.ndarray
    G_I: np.ndarray

    def prefix(self, K_ul: int, K_dl: int) -> "GainTables":
        """Leading users only"""
        return GainTables(self.g_ul[:K_ul].copy(), self.g_dl[:K_dl].copy(), self.G_I[:K_ul, :K_dl].copy())


def draw_gain_tables(seed: int, K_ul: int, K_dl: int, loss: LossModel) -> GainTables:
    """Deterministic draw of path-loss and interference gains"""
    if K_ul < 1 or K_dl < 1:
        raise ScenarioError(f"user counts must be positive, got K_ul={K_ul}, K_dl={K_dl}")
    loss.validate()
    rng = np.random.default_rng(seed)
    g_ul = db_to_linear(rng.uniform(*loss.g_ul_db_range, size=K_ul))
    g_dl = db_to_linear(rng.uniform(*loss.g_dl_db_range, size=K_dl))
    G_I = sample_interference_gains(rng, (K_ul, K_dl), loss.interference_mean, loss.interference_spread_db)
    return GainTables(np.atleast_1d(g_ul), np.atleast_1d(g_dl), G_I)


def scenario_from_tables(tables: GainTables, M: int, loss: LossModel) -> Scenario:
    """Assemble a scenario from drawn gains and the loss model's powers"""
    return make_scenario(
        M=M, g_ul=tables.g_ul, g_dl=tables.g_dl, G_I=tables.G_I,
        N0=dbm_to_watts(loss.n0_dbm),
        P_ul_max=dbm_to_watts(loss.p_ul_max_dbm),
        P_dl_tot=dbm_to_watts(loss.p_dl_tot_dbm),
        sigma_min=loss.sigma_min,
        neighbor_threshold=db_to_linear(loss.neighbor_threshold_db),
    )


def random_scenario(seed: int, K_ul: int, K_dl: int, M: int,
                    loss: Optional[LossModel] = None) -> Scenario:
    """Random cell with i.i.d. interference gains of mean E"""
    loss = loss or LossModel()
    if M < 1:
        raise ScenarioError(f"antenna count must be positive, got {M}")
    return scenario_from_tables(draw_gain_tables(seed, K_ul, K_dl, loss), M, loss)
