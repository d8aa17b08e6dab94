"""Sampling designs with inclusion probabilities proportional to size.

Single draws return boolean indicator vectors of length N. The ``*_batch``
helpers draw many samples at once from a matrix of inclusion
probabilities and return the selected column indices; the bootstrap uses
them to run all replicates of a block in one shot.
"""

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numba
import numpy as np
from scipy import integrate, optimize

from .errors import InvalidArgument, NumericFailure, SizeLimitError

SRS = "srs"
POISSON = "poisson"
CONDITIONAL_POISSON = "conditional-poisson"
PARETO = "pareto"
DESIGN_KINDS = (SRS, POISSON, CONDITIONAL_POISSON, PARETO)
# short labels used by the simulation scenarios (CP-PA, PA-PA)
DESIGN_ALIASES = {"cp": CONDITIONAL_POISSON, "pa": PARETO, "po": POISSON, "srs": SRS}

CALIBRATION_TOL = 1e-6
CALIBRATION_MAXITER = 200
MAX_REJECTIONS = 10**6
ENUMERATION_LIMIT = 12


@dataclass(frozen=True)
class DesignSpec:
    kind: str

    def __post_init__(self):
        kind = DESIGN_ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in DESIGN_KINDS:
            raise InvalidArgument(f"unknown design {self.kind!r}; expected one of {DESIGN_KINDS}")
        object.__setattr__(self, "kind", kind)

    @property
    def fixed_size(self) -> bool:
        return self.kind != POISSON


@dataclass(frozen=True)
class InclusionProbs:
    """First-order inclusion probabilities with target sample size ``n``."""

    pi: np.ndarray
    n: int

    def __post_init__(self):
        pi = np.array(self.pi, dtype=float)
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        if np.any(~np.isfinite(pi)) or np.any(pi <= 0) or np.any(pi > 1):
            raise InvalidArgument("inclusion probabilities must lie in (0, 1]")
        if not math.isclose(pi.sum(), self.n, rel_tol=1e-9):
            raise InvalidArgument(f"inclusion probabilities sum to {pi.sum()}, expected {self.n}")

    @property
    def N(self) -> int:
        return len(self.pi)


def pps_probabilities(x, n):
    """pi = n x / sum(x) row-wise, iteratively capping at 1 and rescaling the
    uncapped units so that every row still sums to n."""
    x = np.asarray(x, dtype=float)
    pi = n * x / x.sum(axis=-1, keepdims=True)
    capped = pi >= 1.0
    while True:
        rest = np.where(capped, 0.0, x)
        free = n - capped.sum(axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):  # rows with every unit capped
            pi = np.where(capped, 1.0, free * rest / rest.sum(axis=-1, keepdims=True))
        newly = (pi >= 1.0) & ~capped
        if not newly.any():
            return pi
        capped |= newly


def inclusion_probs(x, n: int) -> InclusionProbs:
    """pi_i = n x_i / sum_j x_j, with iterative clamping at 1."""
    x = np.asarray(x, dtype=float)
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    n = int(n)
    if n > len(x):
        raise InvalidArgument(f"sample size n={n} exceeds population size N={len(x)}")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise InvalidArgument("size variable must be finite and strictly positive")
    return InclusionProbs(pps_probabilities(x, n), n)


def _as_probs(pi):
    if isinstance(pi, InclusionProbs):
        return pi
    pi = np.asarray(pi, dtype=float)
    return InclusionProbs(pi, int(round(pi.sum())))


def draw_srs(N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if n > N:
        raise InvalidArgument(f"sample size n={n} exceeds population size N={N}")
    d = np.zeros(N, dtype=bool)
    d[rng.permutation(N)[:n]] = True
    return d


def draw_poisson(pi, rng: np.random.Generator) -> np.ndarray:
    pi = _as_probs(pi).pi
    return rng.random(len(pi)) < pi


def draw_pareto(pi, rng: np.random.Generator) -> np.ndarray:
    """Rosen's Pareto order sampling: keep the n smallest ranking variables
    Q = U (1 - pi) / ((1 - U) pi); units with pi = 1 are always kept."""
    probs = _as_probs(pi)
    p = probs.pi
    u = rng.random(len(p))
    with np.errstate(divide="ignore"):
        q = np.where(p >= 1.0, -1.0, u * (1.0 - p) / ((1.0 - u) * p))
    d = np.zeros(len(p), dtype=bool)
    d[np.argsort(q, kind="stable")[: probs.n]] = True
    return d


def pareto_batch(pi, n: int, rng: np.random.Generator) -> np.ndarray:
    """Pareto samples for every row of ``pi`` (shape (M, N)); returns the
    (M, n) selected column indices."""
    pi = np.asarray(pi, dtype=float)
    u = rng.random(pi.shape)
    with np.errstate(divide="ignore"):
        q = np.where(pi >= 1.0, -1.0, u * (1.0 - pi) / ((1.0 - u) * pi))
    if n == pi.shape[-1]:
        return np.broadcast_to(np.arange(n), pi.shape).copy()
    return np.argpartition(q, n - 1, axis=-1)[..., :n]


def srs_batch(M: int, N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    keys = rng.random((M, N))
    if n == N:
        return np.broadcast_to(np.arange(N), (M, N)).copy()
    return np.argpartition(keys, n - 1, axis=-1)[:, :n]


# ---------------------------------------------------------------------------
# conditional Poisson (rejective) sampling


@numba.njit(cache=True)
def _esp_table(w, n):
    # row k holds e_0..e_n of w[:k], each row rescaled to max 1; logs in ls
    N = w.shape[0]
    F = np.zeros((N + 1, n + 1))
    ls = np.zeros(N + 1)
    F[0, 0] = 1.0
    for k in range(N):
        wk = w[k]
        s = F[k, 0]
        F[k + 1, 0] = F[k, 0]
        for j in range(1, n + 1):
            v = F[k, j] + wk * F[k, j - 1]
            F[k + 1, j] = v
            if v > s:
                s = v
        for j in range(n + 1):
            F[k + 1, j] /= s
        ls[k + 1] = ls[k] + np.log(s)
    return F, ls


def conditional_poisson_inclusion(odds, n: int) -> np.ndarray:
    """Exact first-order inclusion probabilities of the rejective design whose
    sample-set probabilities are proportional to the product of ``odds``.

    Uses prefix and suffix elementary symmetric polynomials, so every
    term is positive and the computation is stable for any odds.
    """
    w = np.asarray(odds, dtype=float)
    N = len(w)
    if n == 0:
        return np.zeros(N)
    if n == N:
        return np.ones(N)
    F, lf = _esp_table(w, n)
    B, lb = _esp_table(w[::-1].copy(), n)
    i = np.arange(N)
    # e_{n-1}(w without unit i) = sum_j e_j(w[:i]) e_{n-1-j}(w[i+1:])
    s = np.einsum("ij,ij->i", F[:N, :n], B[N - 1 - i, n - 1 :: -1])
    with np.errstate(divide="ignore"):
        log_loo = np.log(s) + lf[:N] + lb[N - 1 - i]
    log_en = np.log(F[N, n]) + lf[N]
    return np.exp(np.log(w) + log_loo - log_en)


@dataclass(frozen=True)
class ConditionalPoisson:
    """A calibrated rejective design.

    ``p`` are the working Poisson probabilities (for units with target
    pi < 1; certain units are listed in ``certain``), scaled so that their
    sum equals the number of non-certain draws.
    """

    target: InclusionProbs
    p: np.ndarray
    certain: np.ndarray
    iterations: int
    max_error: float

    @cached_property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.certain)

    @property
    def n_free(self) -> int:
        return self.target.n - int(self.certain.sum())

    def inclusion(self) -> np.ndarray:
        """Exact inclusion probabilities implied by the working parameters."""
        out = np.ones(self.target.N)
        odds = self.p / (1.0 - self.p)
        out[self.free] = conditional_poisson_inclusion(odds, self.n_free)
        return out

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        d = self.certain.copy()
        m = self.n_free
        if m == 0:
            return d
        if m == len(self.free):
            d[self.free] = True
            return d
        p = self.p
        var = float(np.sum(p * (1.0 - p)))
        chunk = int(min(4096, max(4, math.ceil(2.0 * math.sqrt(2.0 * math.pi * max(var, 1.0))))))
        tried = 0
        while tried < MAX_REJECTIONS:
            k = min(chunk, MAX_REJECTIONS - tried)
            trial = rng.random((k, len(p))) < p
            hits = np.flatnonzero(trial.sum(axis=1) == m)
            if hits.size:
                d[self.free] = trial[hits[0]]
                return d
            tried += k
        raise NumericFailure(
            "conditional Poisson draw exceeded the rejection limit",
            {"rejections": tried, "n": m, "sum_p": float(p.sum())},
        )


def _logit(p):
    return np.log(p) - np.log1p(-p)


def calibrate_conditional_poisson(
    pi, tol: float = CALIBRATION_TOL, maxiter: int = CALIBRATION_MAXITER, damping: float = 1.0
) -> ConditionalPoisson:
    """Find working Poisson parameters whose rejective design reproduces the
    target inclusion probabilities.

    Fixed-point iteration on log-odds: lambda += damping * (logit pi -
    logit pi(lambda)), i.e. a Newton step under the high-entropy diagonal
    approximation of the Jacobian. The step is halved whenever the error
    grows.
    """
    target = _as_probs(pi)
    certain = target.pi >= 1.0
    free_pi = target.pi[~certain]
    m = target.n - int(certain.sum())
    if m == 0 or m == len(free_pi):
        p = np.full(len(free_pi), 0.5)
        return ConditionalPoisson(target, p, certain, 0, 0.0)
    lam = np.log(free_pi / (1.0 - free_pi))
    step = damping
    cur = conditional_poisson_inclusion(np.exp(lam), m)
    err = float(np.max(np.abs(cur - free_pi)))
    it = 0
    while err > tol and it < maxiter:
        it += 1
        trial = lam + step * (_logit(free_pi) - _logit(cur))
        trial -= trial.mean()
        new = conditional_poisson_inclusion(np.exp(trial), m)
        new_err = float(np.max(np.abs(new - free_pi)))
        if new_err > err and step > 1e-3:
            step /= 2.0
            continue
        lam, cur, err = trial, new, new_err
    if err > tol:
        raise NumericFailure(
            "conditional Poisson calibration did not converge",
            {"iterations": it, "max_error": err, "tol": tol},
        )
    # common odds scaling leaves the design unchanged; pick sum(p) = m
    w = np.exp(lam)

    def excess(log_c):
        c = np.exp(log_c)
        return float(np.sum(c * w / (1.0 + c * w)) - m)

    log_c = optimize.brentq(excess, -50.0 - lam.max(), 50.0 - lam.min(), xtol=1e-12)
    p = np.exp(log_c) * w / (1.0 + np.exp(log_c) * w)
    return ConditionalPoisson(target, p, certain, it, err)


def draw_conditional_poisson(pi, rng: np.random.Generator, calibrated=None) -> np.ndarray:
    """One rejective-sampling draw. Pass ``calibrated`` to reuse a calibration
    across many draws with the same target."""
    cp = calibrated if calibrated is not None else calibrate_conditional_poisson(pi)
    return cp.draw(rng)


class Sampler:
    """Repeated draws from one design with fixed inclusion probabilities.
    Calibrates the rejective design once."""

    def __init__(self, design: DesignSpec, pi):
        self.design = design
        self.probs = _as_probs(pi)
        self._cp = None
        if design.kind == CONDITIONAL_POISSON:
            self._cp = calibrate_conditional_poisson(self.probs)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        kind = self.design.kind
        if kind == SRS:
            return draw_srs(self.probs.N, self.probs.n, rng)
        if kind == POISSON:
            return draw_poisson(self.probs, rng)
        if kind == PARETO:
            return draw_pareto(self.probs, rng)
        return self._cp.draw(rng)


def draw(design: DesignSpec, pi, rng: np.random.Generator) -> np.ndarray:
    return Sampler(design, pi).draw(rng)


# ---------------------------------------------------------------------------
# exact enumeration for tiny populations


@dataclass(frozen=True)
class DesignEnumeration:
    """Exact mass function of a design: ``subsets`` is a boolean (K, N) array
    and ``prob`` the matching probabilities."""

    subsets: np.ndarray
    prob: np.ndarray

    def entropy(self) -> float:
        p = self.prob[self.prob > 0]
        return float(-np.sum(p * np.log(p)))

    def inclusion(self) -> np.ndarray:
        return self.prob @ self.subsets

    def _mass_map(self):
        return {row.tobytes(): p for row, p in zip(self.subsets, self.prob)}

    def hellinger(self, other: "DesignEnumeration") -> float:
        """sum over samples of (sqrt P - sqrt R)^2."""
        a, b = self._mass_map(), other._mass_map()
        keys = set(a) | set(b)
        return float(sum((math.sqrt(a.get(k, 0.0)) - math.sqrt(b.get(k, 0.0))) ** 2 for k in keys))


def _all_subsets(N, n=None):
    if n is None:
        rows = list(itertools.product((False, True), repeat=N))
        return np.array(rows, dtype=bool)
    rows = []
    for comb in itertools.combinations(range(N), n):
        r = np.zeros(N, dtype=bool)
        r[list(comb)] = True
        rows.append(r)
    return np.array(rows)


def _pareto_set_prob(pi, S):
    # P(max_{k in S} Q_k < min_{j not in S} Q_j); Q_i has d.f. q pi/(1 - pi + q pi)
    lam = pi / (1.0 - pi)
    inS = np.flatnonzero(S)
    out = np.flatnonzero(~S)

    def integrand(v):
        # substitute q = v / (1 - v) to map (0, inf) onto (0, 1)
        q = v / (1.0 - v)
        G = q * lam / (1.0 + q * lam)
        g = lam / (1.0 + q * lam) ** 2
        total = 0.0
        for k in inS:
            others = inS[inS != k]
            total += g[k] * np.prod(G[others]) * np.prod(1.0 - G[out])
        return total / (1.0 - v) ** 2

    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11, limit=200)
    return val


def enumerate_design(spec: DesignSpec, pi) -> DesignEnumeration:
    """Exact mass function of ``spec`` with target inclusion probabilities
    ``pi`` (N at most 12). The rejective design is calibrated first."""
    probs = _as_probs(pi)
    N, n = probs.N, probs.n
    if N > ENUMERATION_LIMIT:
        raise SizeLimitError(f"exact enumeration supports N <= {ENUMERATION_LIMIT}, got N={N}")
    p = probs.pi
    if spec.kind == POISSON:
        subsets = _all_subsets(N)
        mass = np.prod(np.where(subsets, p, 1.0 - p), axis=1)
        return DesignEnumeration(subsets, mass)
    subsets = _all_subsets(N, n)
    if spec.kind == SRS:
        mass = np.full(len(subsets), 1.0 / len(subsets))
    elif spec.kind == CONDITIONAL_POISSON:
        cp = calibrate_conditional_poisson(probs, tol=1e-12)
        full_odds = np.ones(N)
        full_odds[cp.free] = cp.p / (1.0 - cp.p)
        ok = np.all(subsets[:, cp.certain], axis=1)
        mass = np.where(ok, np.prod(np.where(subsets, full_odds, 1.0), axis=1), 0.0)
        mass = mass / mass.sum()
    else:
        if np.any(p >= 1.0):
            raise InvalidArgument("exact Pareto enumeration requires all pi < 1")
        mass = np.array([_pareto_set_prob(p, S) for S in subsets])
    return DesignEnumeration(subsets, mass)
