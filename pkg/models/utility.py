"""Alpha-fair utility family with exact derivative and inverse derivative"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, UtilityDomainError

logger = logging.getLogger(__name__)


class UtilityKind(Enum):
    """Utility families"""
    LOG = "log"              # proportional fairness
    ALPHA_FAIR = "afair"     # alpha != 1 (alpha=2 is min potential delay)
    CUSTOM = "custom"        # registered through register_utility


@dataclass(frozen=True)
class _Base:
    """Unweighted value / derivative / inverse-derivative triple"""
    value: Callable
    derivative: Callable
    inv_derivative: Callable


_REGISTRY: Dict[str, _Base] = {}


def _positive(x, what: str):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise UtilityDomainError(f"{what} must be strictly positive, got {x}")
    return arr if arr.ndim else float(arr)


@dataclass(frozen=True)
class UtilityFn:
    """Weighted utility U(r) of a rate in nats"""
    kind: UtilityKind
    weight: float = 1.0
    alpha: float = 1.0
    name: Optional[str] = None  # registry key for CUSTOM

    def __post_init__(self):
        if not (self.weight > 0 and math.isfinite(self.weight)):
            raise ConfigError(f"utility weight must be positive, got {self.weight}")
        if self.kind == UtilityKind.ALPHA_FAIR and (self.alpha <= 0 or self.alpha == 1):
            raise ConfigError(f"alpha-fair utility needs alpha > 0, alpha != 1, got {self.alpha}")
        if self.kind == UtilityKind.CUSTOM and self.name not in _REGISTRY:
            raise ConfigError(f"unknown utility '{self.name}'")

    def value(self, r):
        """U(r); r must be positive"""
        r = _positive(r, "rate")
        if self.kind == UtilityKind.LOG:
            return self.weight * np.log(r)
        if self.kind == UtilityKind.ALPHA_FAIR:
            return self.weight * np.power(r, 1.0 - self.alpha) / (1.0 - self.alpha)
        return self.weight * _REGISTRY[self.name].value(r)

    def derivative(self, r):
        """U'(r), the price of one nat"""
        r = _positive(r, "rate")
        if self.kind == UtilityKind.LOG:
            return self.weight / r
        if self.kind == UtilityKind.ALPHA_FAIR:
            return self.weight * np.power(r, -self.alpha)
        return self.weight * _REGISTRY[self.name].derivative(r)

    def inv_derivative(self, q):
        """(U')^-1(q), the rate a user asks for at price q"""
        q = _positive(q, "price")
        if self.kind == UtilityKind.LOG:
            return self.weight / q
        if self.kind == UtilityKind.ALPHA_FAIR:
            return np.power(self.weight / q, 1.0 / self.alpha)
        return _REGISTRY[self.name].inv_derivative(q / self.weight)

    def scaled(self, factor: float) -> "UtilityFn":
        """Same utility multiplied by a positive constant"""
        return UtilityFn(self.kind, self.weight * factor, self.alpha, self.name)

    def to_spec(self) -> str:
        """Config string form"""
        if self.kind == UtilityKind.LOG:
            return f"log:w={self.weight:g}"
        if self.kind == UtilityKind.ALPHA_FAIR:
            return f"afair:alpha={self.alpha:g},w={self.weight:g}"
        return f"{self.name}:w={self.weight:g}"


def parse_utility(text: str) -> UtilityFn:
    """Parse 'log:w=2', 'afair:alpha=2,w=2' or '<registered>:w=1'"""
    head, _, tail = text.strip().partition(":")
    params: Dict[str, float] = {}
    for part in filter(None, (p.strip() for p in tail.split(","))):
        key, sep, val = part.partition("=")
        if not sep:
            raise ConfigError(f"malformed utility parameter '{part}' in '{text}'")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"non-numeric utility parameter '{part}' in '{text}'")
    unknown = set(params) - {"w", "alpha"}
    if unknown:
        raise ConfigError(f"unknown utility parameters {sorted(unknown)} in '{text}'")
    weight = params.get("w", 1.0)
    if head == "log":
        return UtilityFn(UtilityKind.LOG, weight=weight)
    if head == "afair":
        if "alpha" not in params:
            raise ConfigError(f"afair utility needs alpha: '{text}'")
        if params["alpha"] == 1.0:
            return UtilityFn(UtilityKind.LOG, weight=weight)
        return UtilityFn(UtilityKind.ALPHA_FAIR, weight=weight, alpha=params["alpha"])
    if head in _REGISTRY:
        return UtilityFn(UtilityKind.CUSTOM, weight=weight, name=head)
    raise ConfigError(f"unknown utility kind '{head}'")


def register_utility(name: str, value: Callable, derivative: Callable, inv_derivative: Callable,
                     check_rates: Sequence[float] = (0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0)):
    """Add a utility after checking it is concave and its three functions agree"""
    if name in ("log", "afair"):
        raise ConfigError(f"'{name}' is a built-in utility")
    rates = np.asarray(check_rates, dtype=float)
    d = np.asarray([derivative(r) for r in rates])
    if np.any(d <= 0):
        raise ConfigError(f"utility '{name}' must be increasing")
    if np.any(np.diff(d) >= 0):
        raise ConfigError(f"utility '{name}' must be strictly concave")
    back = np.asarray([inv_derivative(q) for q in d])
    if not np.allclose(back, rates, rtol=1e-9, atol=0.0):
        raise ConfigError(f"utility '{name}' inverse derivative does not invert its derivative")
    h = 1e-5 * rates
    fd = np.asarray([(value(r + e) - value(r - e)) / (2 * e) for r, e in zip(rates, h)])
    if not np.allclose(fd, d, rtol=1e-5, atol=0.0):
        raise ConfigError(f"utility '{name}' derivative disagrees with its value")
    _REGISTRY[name] = _Base(value, derivative, inv_derivative)
    logger.info("registered utility %s", name)


def unregister_utility(name: str):
    """Remove a registered utility"""
    _REGISTRY.pop(name, None)


@dataclass(frozen=True)
class UtilitySet:
    """Per-user utilities of a scenario, uplink then downlink"""
    ul: Tuple[UtilityFn, ...]
    dl: Tuple[UtilityFn, ...]

    @classmethod
    def uniform(cls, ul_spec: str, dl_spec: str, K_ul: int, K_dl: int) -> "UtilitySet":
        """Same utility for every user of a direction"""
        return cls(tuple([parse_utility(ul_spec)] * K_ul), tuple([parse_utility(dl_spec)] * K_dl))

    @classmethod
    def from_specs(cls, ul_specs, dl_specs, K_ul: int, K_dl: int) -> "UtilitySet":
        """Accepts one spec string per direction or one per user"""
        def expand(specs, K, label):
            if isinstance(specs, str):
                specs = [specs] * K
            specs = list(specs)
            if len(specs) == 1:
                specs = specs * K
            if len(specs) != K:
                raise ConfigError(f"{label} utilities: expected {K} entries, got {len(specs)}")
            return tuple(parse_utility(s) for s in specs)
        return cls(expand(ul_specs, K_ul, "uplink"), expand(dl_specs, K_dl, "downlink"))

    @property
    def K_ul(self) -> int:
        return len(self.ul)

    @property
    def K_dl(self) -> int:
        return len(self.dl)

    def distinct_count(self) -> int:
        """Number of distinct utility functions (finite by construction)"""
        return len(set(self.ul) | set(self.dl))

    def prefix(self, K_ul: int, K_dl: int) -> "UtilitySet":
        """Utilities of the leading users"""
        return UtilitySet(self.ul[:K_ul], self.dl[:K_dl])

    def scaled(self, factor: float) -> "UtilitySet":
        """Every utility multiplied by the same constant"""
        return UtilitySet(tuple(u.scaled(factor) for u in self.ul), tuple(u.scaled(factor) for u in self.dl))

    def permuted(self, ul_order: Sequence[int], dl_order: Sequence[int]) -> "UtilitySet":
        """Relabel users consistently with Scenario.permuted"""
        return UtilitySet(tuple(self.ul[k] for k in ul_order), tuple(self.dl[k] for k in dl_order))

    # Columnwise helpers; last axis indexes users
    def _apply(self, fns: Tuple[UtilityFn, ...], method: str, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != len(fns):
            raise ValueError(f"expected {len(fns)} users on the last axis, got {x.shape[-1]}")
        groups: Dict[UtilityFn, list] = {}
        for k, fn in enumerate(fns):
            groups.setdefault(fn, []).append(k)
        out = np.empty_like(x)
        for fn, cols in groups.items():
            out[..., cols] = getattr(fn, method)(x[..., cols])
        return out

    def value_ul(self, r) -> np.ndarray:
        return self._apply(self.ul, "value", r)

    def value_dl(self, r) -> np.ndarray:
        return self._apply(self.dl, "value", r)

    def derivative_ul(self, r) -> np.ndarray:
        return self._apply(self.ul, "derivative", r)

    def derivative_dl(self, r) -> np.ndarray:
        return self._apply(self.dl, "derivative", r)

    def inv_derivative_ul(self, q) -> np.ndarray:
        return self._apply(self.ul, "inv_derivative", q)

    def inv_derivative_dl(self, q) -> np.ndarray:
        return self._apply(self.dl, "inv_derivative", q)

    def to_dict(self) -> dict:
        """Serialize to dictionary"""
        return {"ul": [u.to_spec() for u in self.ul], "dl": [u.to_spec() for u in self.dl]}

    @classmethod
    def from_dict(cls, data: dict) -> "UtilitySet":
        """Deserialize from dictionary"""
        return cls(tuple(parse_utility(s) for s in data["ul"]), tuple(parse_utility(s) for s in data["dl"]))
