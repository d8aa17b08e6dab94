"""Monte Carlo studies: interval coverage for quantiles and size / power
of the two independence tests.

Replicate ``rep`` of cell ``cell`` (a point of the dependence grid) draws
from SeedSequence(seed, spawn_key=(cell, rep)), split into population,
sample and bootstrap streams. Results are collected in replicate order,
so a report depends only on (config, seed) and not on the worker count.
"""

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from ..errors import ConfigError, DegenerateCellError, NumericWarning
from ..infer import cond_independence_test, marg_independence_test, quantile_ci
from ..popgen import true_quantile_oracle
from ..sample import draw_sample
from .config import ScenarioConfig
from .report import IndicatorReport

THREADS_ENV = "FPRESAMPLE_THREADS"
ORACLE_KEY = 2**32 - 1
CONDITIONAL = "conditional"
MARGINAL = "marginal"


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env is None:
            return 1
        try:
            threads = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if threads < 1:
        raise ConfigError("thread count must be at least 1")
    return threads


def parallel_map(fn, tasks, threads: Optional[int] = None) -> list:
    """``[fn(*t) for t in tasks]`` over a bounded process pool, in task order."""
    tasks = list(tasks)
    k = min(resolve_threads(threads), len(tasks)) if tasks else 1
    if k <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=k) as pool:
        chunk = max(1, len(tasks) // (8 * k))
        return list(pool.map(fn, *zip(*tasks), chunksize=chunk))


def replicate_streams(seed: int, cell: int, rep: int):
    """(population rng, sample rng, bootstrap seed) for one replicate."""
    pop_ss, sample_ss, boot_ss = np.random.SeedSequence(seed, spawn_key=(cell, rep)).spawn(3)
    return np.random.default_rng(pop_ss), np.random.default_rng(sample_ss), boot_ss


def oracle_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ORACLE_KEY,)))


def _rate_rows(name, hits, reps):
    hits = np.asarray(hits, dtype=np.int64)
    r = hits / reps
    return {name: tuple(r), f"SE({name})": tuple(np.sqrt(r * (1.0 - r) / reps))}


# ---------------------------------------------------------------------------
# quantile intervals


def _quantile_rep(cfg: ScenarioConfig, rep: int, model=None):
    pop_rng, sample_rng, boot = replicate_streams(cfg.seed, 0, rep)
    model = cfg.model_spec() if model is None else model
    pop = model.generate(cfg.N, pop_rng)
    s = draw_sample(pop, cfg.n, cfg.sampling, sample_rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NumericWarning)
        cis = quantile_ci(s, list(cfg.p), cfg.alpha[0], cfg.M, cfg.N, cfg.resampling, boot)
    return np.array([[ci.lower, ci.upper] for ci in cis])


def quantile_indicators(lower, upper, truth, reps: int):
    """CP/LE/RE tallies and AL for intervals of shape (reps, P)."""
    lower, upper = np.asarray(lower), np.asarray(upper)
    cover = (lower <= truth) & (truth <= upper)
    left = lower > truth
    right = upper < truth
    counts = {k: tuple(int(c) for c in v.sum(axis=0)) for k, v in
              (("CP", cover), ("LE", left), ("RE", right))}
    length = upper - lower
    rows = {}
    for k in ("CP", "LE", "RE"):
        rows.update(_rate_rows(k, counts[k], reps))
    rows["AL"] = tuple(length.mean(axis=0))
    rows["SE(AL)"] = tuple(length.std(axis=0, ddof=1) / np.sqrt(reps)) if reps > 1 else (0.0,) * lower.shape[1]
    return rows, counts


def run_quantile_study(cfg: ScenarioConfig, threads: Optional[int] = None, model=None) -> IndicatorReport:
    """Coverage (CP), left/right errors (LE, RE) and average length (AL) of
    the bootstrap intervals for each p, against the model's true quantiles.

    ``model`` replaces the configured superpopulation with any object that
    has ``generate(N, rng)`` and ``draw_y(size, rng)``.
    """
    if len(cfg.alpha) != 1:
        raise ConfigError(f"[{cfg.name}] the quantile study takes a single alpha")
    spec = cfg.model_spec() if model is None else model
    truth = np.atleast_1d(true_quantile_oracle(spec, list(cfg.p), cfg.oracle_sims, oracle_rng(cfg.seed)))
    out = parallel_map(_quantile_rep, [(cfg, r, model) for r in range(cfg.reps)], threads)
    ci = np.stack(out)
    rows, counts = quantile_indicators(ci[:, :, 0], ci[:, :, 1], truth, cfg.reps)
    return IndicatorReport(
        scenario=cfg.name,
        study="quantile",
        column_label="p",
        columns=tuple(cfg.p),
        rows=rows,
        reps=cfg.reps,
        counts=counts,
        meta={"true_quantiles": truth.tolist(), "alpha": cfg.alpha[0], "M": cfg.M, "N": cfg.N, "n": cfg.n},
    )


# ---------------------------------------------------------------------------
# independence tests


def _test_rep(cfg: ScenarioConfig, test: str, cell: int, rep: int):
    """Reject flags (one per alpha) and p-value (NaN for the marginal test);
    ``None`` when the sample leaves a stratum without enough units."""
    pop_rng, sample_rng, boot = replicate_streams(cfg.seed, cell, rep)
    pop = cfg.model_spec(cfg.rho_grid[cell]).generate(cfg.N, pop_rng)
    s = draw_sample(pop, cfg.n, cfg.sampling, sample_rng)
    alphas = list(cfg.alpha)
    try:
        if test == CONDITIONAL:
            res = cond_independence_test(s, alphas, cfg.M, cfg.N, cfg.resampling, boot)
        else:
            res = marg_independence_test(s, alphas, cfg.M, cfg.N, cfg.resampling, boot)
    except DegenerateCellError:
        return None
    p = res[0].p_value
    return np.array([r.reject for r in res], dtype=bool), np.nan if p is None else p


def run_test_study(cfg: ScenarioConfig, test: str = CONDITIONAL, threads: Optional[int] = None) -> IndicatorReport:
    """Rejection rates over the dependence grid (the rate at rho = 0 is the
    estimated size) and, for the conditional test, median p-values."""
    if test not in (CONDITIONAL, MARGINAL):
        raise ConfigError(f"unknown test {test!r}")
    if test == CONDITIONAL and cfg.model != "stratified-gaussian":
        raise ConfigError(f"[{cfg.name}] the conditional test needs the stratified model")
    tasks = [(cfg, test, c, r) for c in range(len(cfg.rho_grid)) for r in range(cfg.reps)]
    out = parallel_map(_test_rep, tasks, threads)
    G, A = len(cfg.rho_grid), len(cfg.alpha)
    hits = np.zeros((A, G), dtype=np.int64)
    used = np.zeros(G, dtype=np.int64)
    pvals = [[] for _ in range(G)]
    for (_, _, c, _), res in zip(tasks, out):
        if res is None:
            continue
        rej, p = res
        used[c] += 1
        hits[:, c] += rej
        pvals[c].append(p)
    if np.any(used == 0):
        raise ConfigError(f"[{cfg.name}] every replicate hit a degenerate stratum")
    rows, counts = {}, {}
    for i, a in enumerate(cfg.alpha):
        name = f"reject(alpha={a!r})"
        r = hits[i] / used
        rows[name] = tuple(r)
        rows[f"SE({name})"] = tuple(np.sqrt(r * (1.0 - r) / used))
        counts[name] = tuple(int(h) for h in hits[i])
    if test == CONDITIONAL:
        rows["median_p"] = tuple(float(np.median(p)) for p in pvals)
    counts["reps_used"] = tuple(int(u) for u in used)
    return IndicatorReport(
        scenario=cfg.name,
        study=f"{test}-test",
        column_label="rho",
        columns=tuple(cfg.rho_grid),
        rows=rows,
        reps=cfg.reps,
        counts=counts,
        meta={
            "sampling": cfg.sampling,
            "resampling": cfg.resampling,
            "M": cfg.M,
            "N": cfg.N,
            "n": cfg.n,
            "degenerate_reps": int(cfg.reps * G - used.sum()),
        },
    )
