"""Seeded, reproducible Monte Carlo estimation of competitive ratios.

Each trial draws a fresh sample vector and value vector, prices the market
from the samples, runs the allocation, and records the algorithm's welfare
next to the prophet's. The reported ratio is the ratio of sample means
(matching the competitive-ratio definition, which is a ratio of
expectations), with a first-order delta-method standard error.

Reproducibility contract: every per-trial quantity is a pure function of
``(instance, policy, config)`` via the counter-based streams in
:mod:`kprophet.streams`, chunks write to disjoint slots, and the final
aggregation runs over trials in ascending index with exact compensated
summation (``math.fsum``). Worker count therefore cannot change a report.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import ConfigurationError, NumericError
from .market import (
    FixedPrice,
    PricePolicy,
    SampleOrderStatistic,
    expected_demand_threshold,
    validate_policy,
)
from .model import Instance, quantile_matrix
from .streams import trial_uniforms

_CHUNK = 8192


@dataclass(frozen=True)
class SimConfig:
    """How many trials to run, which stream family to use, and the CI level."""

    trials: int
    seed: int
    ci_level: float = 0.99

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if not 0.0 < self.ci_level < 1.0:
            raise ConfigurationError(f"ci_level must be in (0, 1), got {self.ci_level}")


@dataclass(frozen=True)
class SimReport:
    """Monte Carlo estimates for one (instance, policy) pair."""

    n: int
    k: int
    policy_label: str
    trials: int
    seed: int
    mean_alg: float
    mean_prophet: float
    ratio: float
    stderr_ratio: float
    ci_lo: float
    ci_hi: float
    pick_histogram: tuple[int, ...]


@dataclass(frozen=True)
class TrialData:
    """Raw per-trial outcomes, index-aligned with the trial counter."""

    alg: np.ndarray
    prophet: np.ndarray
    picks: np.ndarray
    picks_before_last: np.ndarray


def simulate_trials(
    instance: Instance,
    policy: PricePolicy,
    config: SimConfig,
    threads: int = 1,
) -> TrialData:
    """Run all trials and return the per-trial outcome arrays."""
    validate_policy(policy, instance)
    n, k = instance.n, instance.k
    trials = config.trials
    alg = np.empty(trials)
    prophet = np.empty(trials)
    picks = np.empty(trials, dtype=np.int64)
    before_last = np.empty(trials, dtype=np.int64)

    if isinstance(policy, SampleOrderStatistic):
        price_rank = policy.r
        const_price = None
    else:
        price_rank = None
        const_price = policy.p if isinstance(policy, FixedPrice) else expected_demand_threshold(
            instance.dists, policy.q
        )

    def run_chunk(start: int) -> None:
        stop = min(start + _CHUNK, trials)
        u = trial_uniforms(config.seed, start, stop - start, 2 * n)
        y = quantile_matrix(instance.dists, u[:, :n])
        x = quantile_matrix(instance.dists, u[:, n:])
        if price_rank is not None:
            price = np.partition(y, n - price_rank, axis=1)[:, n - price_rank]
            above = x > price[:, None]
        else:
            above = x > const_price
        cum = np.cumsum(above, axis=1)
        accepted = above & (cum <= k)
        alg[start:stop] = (x * accepted).sum(axis=1)
        prophet[start:stop] = np.partition(x, n - k, axis=1)[:, n - k :].sum(axis=1)
        picks[start:stop] = accepted.sum(axis=1)
        before_last[start:stop] = accepted[:, : n - 1].sum(axis=1)

    starts = range(0, trials, _CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_chunk, starts))
    else:
        for start in starts:
            run_chunk(start)

    if not (np.isfinite(alg).all() and np.isfinite(prophet).all()):
        raise NumericError("non-finite trial value encountered")
    return TrialData(alg=alg, prophet=prophet, picks=picks, picks_before_last=before_last)


def _fsum(values: np.ndarray) -> float:
    return math.fsum(values.tolist())


def summarize(
    data: TrialData,
    instance: Instance,
    policy: PricePolicy,
    config: SimConfig,
) -> SimReport:
    """Aggregate per-trial outcomes into a report (exact summation order)."""
    trials = config.trials
    mean_alg = _fsum(data.alg) / trials
    mean_prophet = _fsum(data.prophet) / trials
    if mean_prophet == 0.0:
        raise NumericError("prophet mean is zero; ratio undefined")
    ratio = mean_alg / mean_prophet

    dev_alg = data.alg - mean_alg
    dev_pro = data.prophet - mean_prophet
    denom = max(trials - 1, 1)
    var_alg = _fsum(dev_alg * dev_alg) / denom
    var_pro = _fsum(dev_pro * dev_pro) / denom
    cov = _fsum(dev_alg * dev_pro) / denom
    # Delta method for a ratio of means, written to stay finite at mean_alg=0.
    var_ratio = max(var_alg - 2.0 * ratio * cov + ratio * ratio * var_pro, 0.0)
    stderr = math.sqrt(var_ratio / trials) / mean_prophet

    z = NormalDist().inv_cdf(0.5 + config.ci_level / 2.0)
    hist = np.bincount(data.picks, minlength=instance.k + 1)
    return SimReport(
        n=instance.n,
        k=instance.k,
        policy_label=policy.label(),
        trials=trials,
        seed=config.seed,
        mean_alg=mean_alg,
        mean_prophet=mean_prophet,
        ratio=ratio,
        stderr_ratio=stderr,
        ci_lo=ratio - z * stderr,
        ci_hi=ratio + z * stderr,
        pick_histogram=tuple(int(c) for c in hist),
    )


def estimate_ratio(
    instance: Instance,
    policy: PricePolicy,
    config: SimConfig,
    threads: int = 1,
) -> SimReport:
    """Monte Carlo estimate of E[ALG] / E[top-k sum] under the given policy."""
    data = simulate_trials(instance, policy, config, threads=threads)
    return summarize(data, instance, policy, config)


def sweep_r(
    instance: Instance,
    config: SimConfig,
    r_max: int | None = None,
    threads: int = 1,
) -> list[tuple[int, SimReport]]:
    """One estimate per order-statistic index r = 1..r_max (default r_max = k).

    Each row runs with seed ``config.seed XOR r`` so rows are independent but
    individually reproducible.
    """
    top = instance.k if r_max is None else r_max
    if not 1 <= top <= instance.n:
        raise ConfigurationError(f"r_max={top} must satisfy 1 <= r_max <= n={instance.n}")
    rows = []
    for r in range(1, top + 1):
        row_config = SimConfig(trials=config.trials, seed=config.seed ^ r, ci_level=config.ci_level)
        rows.append((r, estimate_ratio(instance, SampleOrderStatistic(r), row_config, threads)))
    return rows


def report_csv_header(k: int) -> str:
    picks = ",".join(f"picks_{i}" for i in range(k + 1))
    return (
        "k,r_or_rule,n,trials,seed,mean_alg,mean_prophet,ratio,stderr,ci_lo,ci_hi," + picks
    )


def report_csv_row(report: SimReport) -> str:
    fields = [
        str(report.k),
        report.policy_label,
        str(report.n),
        str(report.trials),
        str(report.seed),
        repr(report.mean_alg),
        repr(report.mean_prophet),
        repr(report.ratio),
        repr(report.stderr_ratio),
        repr(report.ci_lo),
        repr(report.ci_hi),
    ]
    fields.extend(str(c) for c in report.pick_histogram)
    return ",".join(fields)
