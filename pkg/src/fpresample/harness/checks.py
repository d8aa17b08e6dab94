"""Diagnostics outside the coverage/size studies: exact design
enumeration, Monte Carlo check of the covariance kernel, resampling
negative controls, and intervals for a single data file."""

from pathlib import Path
from typing import Optional

import numpy as np

from .. import designs
from ..errors import ConfigError
from ..estimate import df_functional, kernel_C2, kernel_matrix, moment_set
from ..infer import quantile_ci
from ..resample import bootstrap, efron_resample, holmberg_resample, phase1_resample
from ..sample import Sample, draw_sample
from .config import ScenarioConfig
from .report import IndicatorReport
from .studies import oracle_rng, parallel_map, replicate_streams


def design_check(cfg: ScenarioConfig) -> IndicatorReport:
    """Target vs exact inclusion probabilities of the rejective and Pareto
    designs, plus Monte Carlo Pareto inclusion frequencies."""
    x = np.asarray(cfg.x, dtype=float)
    probs = designs.inclusion_probs(x, cfg.n)
    target = probs.pi
    cp = designs.enumerate_design(designs.DesignSpec(designs.CONDITIONAL_POISSON), probs)
    rows = {"target": target, "cp_exact": cp.inclusion()}
    meta = {"entropy_cp": cp.entropy()}
    srs = designs.enumerate_design(designs.DesignSpec(designs.SRS), designs.InclusionProbs(np.full(len(x), cfg.n / len(x)), cfg.n))
    meta["entropy_srs"] = srs.entropy()
    if np.all(target < 1.0):
        pa = designs.enumerate_design(designs.DesignSpec(designs.PARETO), probs)
        rows["pareto_exact"] = pa.inclusion()
        meta["entropy_pareto"] = pa.entropy()
        meta["hellinger_pareto_cp"] = pa.hellinger(cp)
    rng = oracle_rng(cfg.seed)
    sel = designs.pareto_batch(np.broadcast_to(target, (cfg.draws, len(x))), cfg.n, rng)
    mc = np.bincount(sel.ravel(), minlength=len(x)) / cfg.draws
    rows["pareto_mc"] = mc
    rows["SE(pareto_mc)"] = np.sqrt(mc * (1.0 - mc) / cfg.draws)
    out = {}
    for name, vals in rows.items():
        out[name] = (*vals, None)
        if name in ("cp_exact", "pareto_exact", "pareto_mc"):
            err = np.abs(vals - target)
            out[f"err({name})"] = (*err, float(err.max()))
    return IndicatorReport(
        scenario=cfg.name,
        study="design",
        column_label="unit",
        columns=(*range(1, len(x) + 1), "max"),
        rows=out,
        reps=cfg.draws,
        meta={**meta, "n": cfg.n, "N": len(x)},
    )


def superpopulation_reference(cfg: ScenarioConfig):
    """Superpopulation d.f., p-quantile grid and plug-in kernel moments,
    all from one population of ``moment_N`` units drawn with the oracle
    stream. Under srs the size variable is constant."""
    rng = oracle_rng(cfg.seed)
    big = cfg.model_spec().generate(cfg.moment_N, rng)
    ys = np.sort(big.y)
    size = len(ys)

    def F(v):
        return np.searchsorted(ys, v, side="right") / size

    ps = np.asarray(cfg.p)
    grid = ys[np.ceil(ps * size).astype(int) - 1]
    n_big = round(cfg.fraction * size)
    if cfg.sampling == designs.SRS:
        x = np.ones(size)
        pi = np.full(size, n_big / size)
    else:
        x = big.x
        pi = designs.inclusion_probs(x, n_big).pi
    return F, grid, moment_set(big.y, x, pi)


def _kernel_rep(cfg: ScenarioConfig, rep: int, grid, Fgrid):
    pop_rng, sample_rng, _ = replicate_streams(cfg.seed, 0, rep)
    pop = cfg.model_spec().generate(cfg.N, pop_rng)
    s = draw_sample(pop, cfg.n, cfg.sampling, sample_rng)
    w = s.weights
    Fh = (w * (s["y"][None, :] <= grid[:, None])).sum(axis=1) / w.sum()
    return np.sqrt(cfg.n) * (Fh - Fgrid)


def kernel_check(cfg: ScenarioConfig, threads: Optional[int] = None) -> IndicatorReport:
    """Monte Carlo covariance of sqrt(n)(F_H - F) on the p-quantile grid
    against the analytic kernel.

    Deviation of entry (i, j) is |MC - C| / sqrt(C_ii C_jj); the ``max``
    row reports the largest over the grid.
    """
    F, grid, m = superpopulation_reference(cfg)
    Fgrid = F(grid)
    Z = np.stack(parallel_map(_kernel_rep, [(cfg, r, grid, Fgrid) for r in range(cfg.reps)], threads))
    mc = np.cov(Z, rowvar=False)
    C = kernel_matrix(m, F, grid)
    bb = kernel_C2(F, grid[:, None], grid[None, :])
    scale = np.sqrt(np.outer(np.diag(C), np.diag(C)))
    dev = np.abs(mc - C) / scale
    ps = cfg.p
    rows = {}
    for i in range(len(grid)):
        for j in range(i, len(grid)):
            rows[f"C({ps[i]!r},{ps[j]!r})"] = (grid[i], grid[j], mc[i, j], C[i, j], bb[i, j], dev[i, j])
    rows["max"] = (None, None, None, None, None, float(dev.max()))
    return IndicatorReport(
        scenario=cfg.name,
        study="kernel",
        column_label="entry",
        columns=("y_i", "y_j", "monte_carlo", "kernel", "brownian_bridge", "rel_dev"),
        rows=rows,
        reps=cfg.reps,
        meta={"max_rel_dev": float(dev.max()), "f": m.f, "d": m.d, "design": cfg.sampling},
    )


def _controls_rep(cfg: ScenarioConfig, rep: int, grid):
    pop_rng, sample_rng, boot = replicate_streams(cfg.seed, 0, rep)
    pop = cfg.model_spec().generate(cfg.N, pop_rng)
    s = draw_sample(pop, cfg.n, cfg.sampling, sample_rng)
    theta = df_functional(grid)
    seeds = boot.spawn(4)
    return np.stack([
        bootstrap(theta, s, cfg.N, cfg.M, cfg.resampling, seeds[0]).s2_star,
        efron_resample(theta, s, cfg.M, seeds[1]).s2_star,
        phase1_resample(theta, s, cfg.N, cfg.M, seeds[2]).s2_star * (cfg.N / cfg.n),
        holmberg_resample(theta, s, cfg.M, seeds[3]).s2_star,
    ])


CONTROL_ROWS = (
    ("two-phase", "C(y,y)"),
    ("efron", "C(y,y)"),
    ("phase1", "F(1-F)"),
    ("holmberg", "F(1-F)"),
)


def negative_controls(cfg: ScenarioConfig, threads: Optional[int] = None) -> IndicatorReport:
    """Resampled variances of the d.f. on the p-quantile grid, averaged
    over ``reps`` samples, against their targets.

    The two-phase bootstrap and Efron's bootstrap estimate the variance of
    sqrt(n)(F_H - F), whose target is the kernel diagonal C(y,y). The
    Phase-1 pseudo-population d.f. is put on the sqrt(N) scale and the
    Holmberg one on the sqrt(n) scale; both are compared with F(1-F).
    """
    F, grid, m = superpopulation_reference(cfg)
    out = np.stack(parallel_map(_controls_rep, [(cfg, r, grid) for r in range(cfg.reps)], threads))
    var = out.mean(axis=0)
    Fg = F(grid)
    targets = {"C(y,y)": np.diag(kernel_matrix(m, F, grid)), "F(1-F)": Fg * (1.0 - Fg)}
    rows = {f"target {k}": (*v, None) for k, v in targets.items()}
    meta = {}
    for (name, target), v in zip(CONTROL_ROWS, var):
        dev = v / targets[target] - 1.0
        worst = float(np.max(np.abs(dev)))
        rows[name] = (*v, None)
        rows[f"dev({name})"] = (*dev, worst)
        meta[f"max_dev_{name}"] = worst
    return IndicatorReport(
        scenario=cfg.name,
        study="controls",
        column_label="p",
        columns=(*cfg.p, "max"),
        rows=rows,
        reps=cfg.reps,
        meta={**meta, "M": cfg.M, "N": cfg.N, "n": cfg.n},
    )


def load_sample(path, N: int) -> Sample:
    """Sample from a CSV file with a header row. Needs columns ``y`` and
    ``pi``; ``x`` defaults to ``pi`` (pi is proportional to x)."""
    path = Path(path)
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=float, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read data file {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"malformed data file {path}: {exc}") from None
    names = data.dtype.names or ()
    if "y" not in names or "pi" not in names:
        raise ConfigError(f"data file {path} needs columns 'y' and 'pi'")
    data = np.atleast_1d(data)
    cols = {k: np.ascontiguousarray(data[k]) for k in names}
    bad = [k for k, v in cols.items() if np.isnan(v).any()]
    if bad:
        raise ConfigError(f"data file {path}: non-numeric or empty values in column(s) {bad}")
    pi = cols.pop("pi")
    cols.setdefault("x", pi)
    return Sample(cols, pi, N)


def quantile_ci_report(cfg: ScenarioConfig) -> IndicatorReport:
    path = Path(cfg.data)
    if not path.is_absolute() and cfg.base_dir:
        path = Path(cfg.base_dir) / path
    s = load_sample(path, cfg.N)
    boot = np.random.SeedSequence(cfg.seed)
    cis = quantile_ci(s, list(cfg.p), cfg.alpha[0], cfg.M, cfg.N, cfg.resampling, boot)
    return IndicatorReport(
        scenario=cfg.name,
        study="quantile-ci",
        column_label="p",
        columns=tuple(cfg.p),
        rows={
            "lower": tuple(ci.lower for ci in cis),
            "point": tuple(ci.point for ci in cis),
            "upper": tuple(ci.upper for ci in cis),
            "length": tuple(ci.length for ci in cis),
        },
        reps=1,
        meta={"alpha": cfg.alpha[0], "M": cfg.M, "N": cfg.N, "n": s.n},
    )
