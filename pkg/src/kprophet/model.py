"""Value distributions and market instances.

Every distribution family is continuous, so two independent draws tie with
probability zero; the allocation logic in :mod:`kprophet.market` relies on
that. Each family knows its CDF and quantile function, and sampling is
always inverse-CDF applied to a uniform draw from a caller-owned stream,
which keeps the simulation engine reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Uniform:
    """Uniform distribution on [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigurationError("uniform bounds must be finite")
        if not self.lo < self.hi:
            raise ConfigurationError(f"uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    def cdf(self, x: float) -> float:
        if x <= self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        return (x - self.lo) / (self.hi - self.lo)

    def quantile(self, q: float) -> float:
        _check_q(q)
        return self.lo + q * (self.hi - self.lo)

    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def quantile_array(self, u: np.ndarray) -> np.ndarray:
        return self.lo + u * (self.hi - self.lo)

    def to_dict(self) -> dict:
        return {"family": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Exponential:
    """Exponential distribution with the given rate (mean 1/rate)."""

    rate: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ConfigurationError(f"exponential rate must be positive, got {self.rate}")

    def cdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        return -math.expm1(-self.rate * x)

    def quantile(self, q: float) -> float:
        _check_q(q)
        return -math.log1p(-q) / self.rate

    def support(self) -> tuple[float, float]:
        return (0.0, math.inf)

    def quantile_array(self, u: np.ndarray) -> np.ndarray:
        return -np.log1p(-u) / self.rate

    def to_dict(self) -> dict:
        return {"family": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Pareto:
    """Pareto distribution: Pr(X > x) = (scale/x)^shape for x >= scale."""

    scale: float
    shape: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ConfigurationError(f"pareto scale must be positive, got {self.scale}")
        if not (math.isfinite(self.shape) and self.shape > 0):
            raise ConfigurationError(f"pareto shape must be positive, got {self.shape}")

    def cdf(self, x: float) -> float:
        if x <= self.scale:
            return 0.0
        return 1.0 - (self.scale / x) ** self.shape

    def quantile(self, q: float) -> float:
        _check_q(q)
        return self.scale * (1.0 - q) ** (-1.0 / self.shape)

    def support(self) -> tuple[float, float]:
        return (self.scale, math.inf)

    def quantile_array(self, u: np.ndarray) -> np.ndarray:
        return self.scale * (1.0 - u) ** (-1.0 / self.shape)

    def to_dict(self) -> dict:
        return {"family": "pareto", "scale": self.scale, "shape": self.shape}


@dataclass(frozen=True)
class SpikeMixture:
    """Mixture of a base uniform interval and a strictly higher uniform sliver.

    With probability ``1 - spike_prob`` the value is Uniform(base_lo, base_hi);
    with probability ``spike_prob`` it is Uniform(spike_lo, spike_hi). The
    spike support must sit at or above the base support, so exactly
    ``spike_prob`` of the mass lies above ``base_hi``. A point-mass spike is
    modelled as a narrow sliver to keep the distribution continuous.
    """

    base_lo: float
    base_hi: float
    spike_lo: float
    spike_hi: float
    spike_prob: float

    def __post_init__(self) -> None:
        if not self.base_lo < self.base_hi:
            raise ConfigurationError("spike mixture needs base_lo < base_hi")
        if not self.spike_lo < self.spike_hi:
            raise ConfigurationError("spike mixture needs spike_lo < spike_hi")
        if not self.base_hi <= self.spike_lo:
            raise ConfigurationError("spike support must not overlap base support")
        if not 0.0 < self.spike_prob < 1.0:
            raise ConfigurationError(f"spike_prob must be in (0, 1), got {self.spike_prob}")

    def cdf(self, x: float) -> float:
        base_mass = 1.0 - self.spike_prob
        if x <= self.base_lo:
            return 0.0
        if x < self.base_hi:
            return base_mass * (x - self.base_lo) / (self.base_hi - self.base_lo)
        if x <= self.spike_lo:
            return base_mass
        if x >= self.spike_hi:
            return 1.0
        return base_mass + self.spike_prob * (x - self.spike_lo) / (self.spike_hi - self.spike_lo)

    def quantile(self, q: float) -> float:
        _check_q(q)
        base_mass = 1.0 - self.spike_prob
        if q <= base_mass:
            return self.base_lo + (q / base_mass) * (self.base_hi - self.base_lo)
        return self.spike_lo + ((q - base_mass) / self.spike_prob) * (self.spike_hi - self.spike_lo)

    def support(self) -> tuple[float, float]:
        return (self.base_lo, self.spike_hi)

    def quantile_array(self, u: np.ndarray) -> np.ndarray:
        base_mass = 1.0 - self.spike_prob
        base = self.base_lo + (u / base_mass) * (self.base_hi - self.base_lo)
        spike = self.spike_lo + ((u - base_mass) / self.spike_prob) * (self.spike_hi - self.spike_lo)
        return np.where(u <= base_mass, base, spike)

    def to_dict(self) -> dict:
        return {
            "family": "spike_mixture",
            "base_lo": self.base_lo,
            "base_hi": self.base_hi,
            "spike_lo": self.spike_lo,
            "spike_hi": self.spike_hi,
            "spike_prob": self.spike_prob,
        }


DistributionSpec = Union[Uniform, Exponential, Pareto, SpikeMixture]

_FAMILIES = {
    "uniform": Uniform,
    "exponential": Exponential,
    "pareto": Pareto,
    "spike_mixture": SpikeMixture,
}


def sample(spec: DistributionSpec, rng: np.random.Generator) -> float:
    """One draw from ``spec`` using the caller-owned random stream."""
    return spec.quantile(float(rng.random()))


def cdf(spec: DistributionSpec, x: float) -> float:
    return spec.cdf(x)


def quantile(spec: DistributionSpec, q: float) -> float:
    return spec.quantile(q)


def _check_q(q: float) -> None:
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile level must lie strictly in (0, 1), got {q}")


def dist_from_dict(data: dict) -> DistributionSpec:
    try:
        family = data["family"]
    except (TypeError, KeyError):
        raise ConfigurationError(f"distribution document needs a 'family' field: {data!r}")
    try:
        cls = _FAMILIES[family]
    except KeyError:
        raise ConfigurationError(f"unknown distribution family {family!r}")
    params = {key: value for key, value in data.items() if key != "family"}
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for family {family!r}: {exc}")


@dataclass(frozen=True)
class Instance:
    """An ordered market of ``n`` buyers with ``k`` identical units for sale.

    ``dists[i]`` is the value distribution of the buyer arriving in position
    ``i``. Instances are immutable and safe to share across workers.
    """

    dists: tuple[DistributionSpec, ...]
    k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "dists", tuple(self.dists))
        if len(self.dists) < 1:
            raise ConfigurationError("instance needs at least one buyer")
        if not 1 <= self.k <= len(self.dists):
            raise ConfigurationError(
                f"capacity k={self.k} must satisfy 1 <= k <= n={len(self.dists)}"
            )

    @property
    def n(self) -> int:
        return len(self.dists)

    def to_dict(self) -> dict:
        return {"k": self.k, "dists": [d.to_dict() for d in self.dists]}

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        if not isinstance(data, dict) or "k" not in data or "dists" not in data:
            raise ConfigurationError("instance document needs 'k' and 'dists' fields")
        return cls(dists=tuple(dist_from_dict(d) for d in data["dists"]), k=int(data["k"]))


def instance_to_json(instance: Instance) -> str:
    return json.dumps(instance.to_dict())


def instance_from_json(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"instance JSON does not parse: {exc}")
    return Instance.from_dict(data)


def quantile_matrix(dists: tuple[DistributionSpec, ...], u: np.ndarray) -> np.ndarray:
    """Map a (trials, n) matrix of uniforms through the per-buyer quantiles.

    Columns are grouped by family so heterogeneous instances still transform
    in a handful of vectorised operations.
    """
    if u.ndim != 2 or u.shape[1] != len(dists):
        raise ValueError(f"uniform matrix shape {u.shape} does not match {len(dists)} buyers")
    out = np.empty_like(u)
    groups: dict[DistributionSpec, list[int]] = {}
    for col, spec in enumerate(dists):
        groups.setdefault(spec, []).append(col)
    for spec, cols in groups.items():
        if len(cols) == len(dists):
            out[:] = spec.quantile_array(u)
        else:
            idx = np.asarray(cols)
            out[:, idx] = spec.quantile_array(u[:, idx])
    return out


def iid_uniform(n: int, k: int) -> Instance:
    """n i.i.d. Uniform(0, 1) buyers with capacity k."""
    return Instance(dists=(Uniform(0.0, 1.0),) * n, k=k)


def exponential_ladder(n: int, k: int) -> Instance:
    """Heterogeneous exponential market: buyer i has rate i/n (means n/i)."""
    return Instance(dists=tuple(Exponential(rate=i / n) for i in range(1, n + 1)), k=k)
