"""Confidence intervals and independence tests driven by the two-phase
bootstrap."""

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from .errors import InvalidArgument, NumericWarning
from .estimate import gamma_functional, gamma_g, quantile_functional, spearman_functional
from .resample import ResamplingDistribution, SeedLike, bootstrap
from .sample import Sample


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    point: float

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class TestResult:
    statistic: float
    critical_value: float
    reject: bool
    alpha: float
    p_value: Optional[float] = None
    interval: Optional[ConfidenceInterval] = None

    __test__ = False  # keep pytest from collecting this class


def _check_alpha(alpha):
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    if np.any((a <= 0) | (a >= 1)):
        raise InvalidArgument("alpha must lie strictly between 0 and 1")


def normal_interval(point: float, s_star: float, n: int, alpha: float) -> ConfidenceInterval:
    """[point + z_{a/2} S*/sqrt(n), point + z_{1-a/2} S*/sqrt(n)]."""
    half = s_star / np.sqrt(n)
    return ConfidenceInterval(
        lower=float(point + norm.ppf(alpha / 2.0) * half),
        upper=float(point + norm.ppf(1.0 - alpha / 2.0) * half),
        level=1.0 - alpha,
        point=float(point),
    )


def intervals_from(dist: ResamplingDistribution, alpha) -> list:
    """One interval per component of ``dist`` at level 1 - alpha."""
    point = np.atleast_1d(dist.theta_hat)
    s = np.atleast_1d(dist.s_star)
    return [normal_interval(p, si, dist.n, alpha) for p, si in zip(point, s)]


def quantile_ci(
    sample: Sample,
    p: Union[float, Sequence[float]],
    alpha: float = 0.05,
    M: int = 1000,
    N: Optional[int] = None,
    design="pareto",
    rng: SeedLike = None,
):
    """Bootstrap-normal interval for the superpopulation p-quantile.

    A sequence of p shares one bootstrap run and returns a list.
    """
    _check_alpha(alpha)
    dist = bootstrap(quantile_functional(p), sample, N, M, design, rng)
    cis = intervals_from(dist, alpha)
    values = np.unique(sample["y"])
    if len(values) > 1 and any(ci.length == 0 for ci in cis):
        warnings.warn("bootstrap variance is zero for non-degenerate data", NumericWarning)
    return cis[0] if np.ndim(p) == 0 else cis


def cond_independence_test(
    sample: Sample,
    alpha: Union[float, Sequence[float]] = 0.05,
    M: int = 1000,
    N: Optional[int] = None,
    design="pareto",
    rng: SeedLike = None,
    a: str = "y",
    b: str = "z",
    strata: str = "t",
    ties: str = "ordinal",
):
    """Test conditional independence of ``a`` and ``b`` given ``strata``.

    Statistic: 3 * gamma (g = s^2) with within-stratum Hajek marginals.
    Its null distribution comes from bootstrapping the conditional
    independence pseudo-population; the critical value is the (1 - alpha/2)
    quantile of that distribution and the p-value is the share of null
    replicates with |rho*| >= |rho|.
    """
    _check_alpha(alpha)
    rho = 3.0 * gamma_g(sample[a], sample[b], sample.weights, strata=sample[strata], ties=ties)
    theta = spearman_functional(a, b, strata, ties)
    dist = bootstrap(theta, sample, N, M, design, rng, null={"a": a, "b": b, "strata": strata})
    null_rho = dist.theta_star[dist.ok]
    p_value = float(np.mean(np.abs(null_rho) >= abs(rho)))
    results = []
    for al in np.atleast_1d(alpha):
        c = float(np.quantile(null_rho, 1.0 - al / 2.0))
        results.append(TestResult(rho, c, bool(abs(rho) > c), float(al), p_value))
    return results[0] if np.ndim(alpha) == 0 else results


def marg_independence_test(
    sample: Sample,
    alpha: Union[float, Sequence[float]] = 0.05,
    M: int = 1000,
    N: Optional[int] = None,
    design="pareto",
    rng: SeedLike = None,
    a: str = "y",
    b: str = "z",
):
    """Test marginal independence by inverting a bootstrap interval for
    gamma (g = s^2): reject when 0 lies outside it. No p-value."""
    _check_alpha(alpha)
    dist = bootstrap(gamma_functional(a, b), sample, N, M, design, rng)
    results = []
    for al in np.atleast_1d(alpha):
        ci = normal_interval(float(dist.theta_hat), float(dist.s_star), dist.n, float(al))
        half = ci.upper - ci.point
        results.append(
            TestResult(float(dist.theta_hat), half, bool(0.0 not in ci), float(al), None, ci)
        )
    return results[0] if np.ndim(alpha) == 0 else results
