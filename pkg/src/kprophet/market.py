"""Price policies and the sequential k-unit allocation process.

The selling rule is deliberately simple: one static price is fixed from the
observed samples before any buyer arrives, then buyers are served in arrival
order while units remain, each buyer accepted exactly when their value is
strictly above the price. Ties at the price are rejections; with continuous
value distributions they occur with probability zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import ConfigurationError
from .model import DistributionSpec, Instance


@dataclass(frozen=True)
class SampleOrderStatistic:
    """Price equals the r-th largest observed sample."""

    r: int

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ConfigurationError(f"order-statistic index must be >= 1, got {self.r}")

    def to_dict(self) -> dict:
        return {"rule": "sample_order_statistic", "r": self.r}

    def label(self) -> str:
        return f"r={self.r}"


@dataclass(frozen=True)
class FixedPrice:
    """Price is a constant, ignoring the samples."""

    p: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.p) and self.p >= 0):
            raise ConfigurationError(f"fixed price must be finite and >= 0, got {self.p}")

    def to_dict(self) -> dict:
        return {"rule": "fixed_price", "p": self.p}

    def label(self) -> str:
        return f"fixed={self.p!r}"


@dataclass(frozen=True)
class ExpectedDemandPrice:
    """Price T solving sum_i Pr(X_i >= T) = q, i.e. expected demand q at T."""

    q: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.q) and self.q > 0):
            raise ConfigurationError(f"demand target must be positive, got {self.q}")

    def to_dict(self) -> dict:
        return {"rule": "expected_demand_price", "q": self.q}

    def label(self) -> str:
        return f"demand={self.q!r}"


PricePolicy = Union[SampleOrderStatistic, FixedPrice, ExpectedDemandPrice]

_RULES = {
    "sample_order_statistic": SampleOrderStatistic,
    "fixed_price": FixedPrice,
    "expected_demand_price": ExpectedDemandPrice,
}


def policy_from_dict(data: dict) -> PricePolicy:
    try:
        rule = data["rule"]
    except (TypeError, KeyError):
        raise ConfigurationError(f"policy document needs a 'rule' field: {data!r}")
    try:
        cls = _RULES[rule]
    except KeyError:
        raise ConfigurationError(f"unknown policy rule {rule!r}")
    params = {key: value for key, value in data.items() if key != "rule"}
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for rule {rule!r}: {exc}")


@dataclass(frozen=True)
class MarketOutcome:
    """Result of one market run: what the algorithm got versus the best k values."""

    alg_value: float
    picks: int
    accepted_indices: tuple[int, ...]
    prophet_value: float


def validate_policy(policy: PricePolicy, instance: Instance) -> None:
    """Raise ConfigurationError when the policy cannot apply to the instance."""
    if isinstance(policy, SampleOrderStatistic) and policy.r > instance.n:
        raise ConfigurationError(
            f"order-statistic index r={policy.r} exceeds market size n={instance.n}"
        )
    if isinstance(policy, ExpectedDemandPrice) and policy.q >= instance.n:
        raise ConfigurationError(
            f"demand target q={policy.q} is unreachable with n={instance.n} buyers"
        )


def resolve_price(policy: PricePolicy, samples: Sequence[float], instance: Instance) -> float:
    """Turn the observed sample vector into the single static price."""
    if len(samples) != instance.n:
        raise ConfigurationError(
            f"sample vector length {len(samples)} does not match n={instance.n}"
        )
    validate_policy(policy, instance)
    if isinstance(policy, FixedPrice):
        return policy.p
    if isinstance(policy, SampleOrderStatistic):
        return sorted(samples, reverse=True)[policy.r - 1]
    return expected_demand_threshold(instance.dists, policy.q)


def expected_demand_threshold(dists: Sequence[DistributionSpec], q: float) -> float:
    """The unique T with sum_i (1 - cdf_i(T)) = q, found by bisection.

    The left side falls monotonically from n to 0 as T sweeps the combined
    support, so a sign-change bracket always exists for 0 < q < n.
    """
    n = len(dists)
    if not 0 < q < n:
        raise ConfigurationError(f"demand target q={q} must lie strictly in (0, n={n})")

    def demand(t: float) -> float:
        return sum(1.0 - d.cdf(t) for d in dists)

    lo = min(d.support()[0] for d in dists)
    hi = max(d.support()[1] for d in dists)
    if not math.isfinite(hi):
        # Unbounded support: expand geometrically until demand drops below q.
        hi = max(max(d.quantile(1.0 - 1e-9) for d in dists), lo + 1.0)
        while demand(hi) > q:
            hi = lo + 2.0 * (hi - lo)
    for _ in range(200):
        if hi - lo <= 1e-12:
            break
        mid = 0.5 * (lo + hi)
        if demand(mid) > q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_market(instance: Instance, price: float, x_values: Sequence[float]) -> MarketOutcome:
    """Serve buyers in arrival order at the given static price.

    Buyer i is accepted exactly when ``x_values[i] > price`` and fewer than k
    units have been sold so far.
    """
    if len(x_values) != instance.n:
        raise ConfigurationError(
            f"value vector length {len(x_values)} does not match n={instance.n}"
        )
    accepted: list[int] = []
    total = 0.0
    for i, x in enumerate(x_values):
        if x > price and len(accepted) < instance.k:
            accepted.append(i)
            total += x
    return MarketOutcome(
        alg_value=total,
        picks=len(accepted),
        accepted_indices=tuple(accepted),
        prophet_value=prophet_value(x_values, instance.k),
    )


def prophet_value(x_values: Sequence[float], k: int) -> float:
    """Sum of the k largest realized values (the offline benchmark)."""
    if k > len(x_values):
        raise ConfigurationError(f"k={k} exceeds the number of values {len(x_values)}")
    return sum(sorted(x_values, reverse=True)[:k])


def surrogate_picks_above(
    x_values: Sequence[float],
    samples: Sequence[float],
    r: int,
    k: int,
    threshold: float,
) -> int:
    """Count surrogate picks with value >= threshold.

    The surrogate selection keeps the lowest min(t, k) values among the t
    values strictly above the r-th largest sample. Its value total is a
    lower bound on the arrival-order algorithm's, and for any threshold its
    count of picks at or above the threshold never exceeds the algorithm's.
    """
    if not 1 <= r <= len(samples):
        raise ConfigurationError(f"order-statistic index r={r} needs 1 <= r <= {len(samples)}")
    price = sorted(samples, reverse=True)[r - 1]
    above = sorted(x for x in x_values if x > price)
    take = min(len(above), k)
    return sum(1 for x in above[:take] if x >= threshold)
