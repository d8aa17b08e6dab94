"""Two-phase pseudo-population bootstrap.

Phase 1 draws N units i.i.d. from the Hajek d.f. of the sample (each
sampled unit with probability proportional to 1/pi_i, carrying all of its
columns). Phase 2 draws a fixed-size pips sample from that
pseudo-population with pi*_k proportional to x*_k.

Every replicate m owns a random stream derived from (root seed, m). Blocks
of replicates are then processed as (B, N) arrays, so results do not
depend on the block size or on how replicates are scheduled.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import designs
from .errors import DegenerateCellError, InvalidArgument, NumericFailure
from .estimate import Functional, WeightedEDF, hajek_df
from .sample import Sample

log = logging.getLogger(__name__)

MAX_FAILED_FRACTION = 0.01
BLOCK = 128

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def root_seed(rng: SeedLike) -> np.random.SeedSequence:
    """Turn any seed-like input into a SeedSequence; a Generator contributes
    one 63-bit draw."""
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(0, 2**63)))
    return np.random.SeedSequence(rng)


def replicate_rng(root: np.random.SeedSequence, index: int) -> np.random.Generator:
    """Stream for replicate ``index``; independent of every other index."""
    child = np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key + (index,))
    return np.random.default_rng(child)


def _design(design) -> designs.DesignSpec:
    spec = design if isinstance(design, designs.DesignSpec) else designs.DesignSpec(design)
    if not spec.fixed_size:
        raise InvalidArgument("the resampling design must have a fixed sample size")
    return spec


def _cdf(w):
    c = np.cumsum(w, dtype=float)
    return c / c[-1]


def _draw_units(cdf, size, gen):
    return np.searchsorted(cdf, gen.random(size), side="right")


@dataclass(frozen=True)
class PseudoPopulation:
    """N pseudo-units. ``columns`` hold their values; ``counts`` (when the
    units were copied whole from the sample) gives N*_i per sampled unit."""

    columns: dict
    counts: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return len(next(iter(self.columns.values())))

    def __getitem__(self, name):
        return self.columns[name]


def _uniforms(gens, N, k):
    """k uniform vectors of length N per replicate, one call per stream."""
    return np.stack([g.random(k * N) for g in gens]).reshape(len(gens), k, N)


def phase1_pseudo_population(sample: Sample, N: Optional[int], rng) -> PseudoPopulation:
    """N independent categorical draws over the sampled units with
    probabilities 1/pi_i / sum_j 1/pi_j; each draw copies (y, x, ...)."""
    N = sample.N if N is None else N
    if N < sample.n:
        raise InvalidArgument("pseudo-population size must be at least n")
    idx = np.sort(_draw_units(_cdf(sample.weights), N, rng))
    counts = np.bincount(idx, minlength=sample.n)
    return PseudoPopulation({k: v[idx] for k, v in sample.columns.items()}, counts)


def _h0_columns(sample: Sample, u, a, b, strata):
    """Conditional-independence pseudo-populations from uniforms u of shape
    (B, 3, N): labels from u[:, 0], then a and b from u[:, 1] and u[:, 2]."""
    t = np.asarray(sample[strata])
    w = sample.weights
    lab = np.searchsorted(_cdf(w), u[:, 0], side="right")
    t_star = t[lab]
    out = {strata: t_star, "x": sample["x"][lab]}
    va = np.empty(t_star.shape)
    vb = np.empty(t_star.shape)
    for label in np.unique(t):
        members = np.flatnonzero(t == label)
        slots = t_star == label
        cdf = _cdf(w[members])
        va[slots] = sample[a][members[np.searchsorted(cdf, u[:, 1][slots], side="right")]]
        vb[slots] = sample[b][members[np.searchsorted(cdf, u[:, 2][slots], side="right")]]
    out[a], out[b] = va, vb
    return out


def h0_pseudo_population(
    sample: Sample, N: Optional[int], rng, a: str = "y", b: str = "z", strata: str = "t"
) -> PseudoPopulation:
    """Pseudo-population under conditional independence of ``a`` and ``b``
    given ``strata``.

    Labels are drawn first (1/pi weights over the whole sample; the label's
    source unit also supplies x*). Then ``a`` and ``b`` are drawn
    separately, each from the sampled units of that stratum with 1/pi
    weights.
    """
    N = sample.N if N is None else N
    if strata not in sample.columns:
        raise InvalidArgument(f"sample has no stratum column {strata!r}")
    cols = _h0_columns(sample, rng.random((1, 3, N)), a, b, strata)
    return PseudoPopulation({k: v[0] for k, v in cols.items()})


def holmberg_pseudo_population(sample: Sample, rng) -> PseudoPopulation:
    """Negative control: N*_i = floor(1/pi_i) + Bernoulli(1/pi_i - floor(1/pi_i)).
    The total size is random."""
    counts = _holmberg_counts(sample.pi, rng)
    idx = np.repeat(np.arange(sample.n), counts)
    return PseudoPopulation({k: v[idx] for k, v in sample.columns.items()}, counts)


def _holmberg_counts(pi, gen):
    inv = 1.0 / np.asarray(pi, dtype=float)
    base = np.floor(inv)
    return (base + (gen.random(len(inv)) < inv - base)).astype(np.int64)


def _phase2_select(x_star, n, spec, gens, u):
    """Selected pseudo-unit indices (B, n) and their pi* for each row; ``u``
    supplies the ranking uniforms for Pareto and srs."""
    B, N = x_star.shape
    if spec.kind == designs.SRS:
        pis = np.full((B, N), n / N)
    else:
        pis = designs.pps_probabilities(x_star, n)
    if spec.kind == designs.PARETO:
        with np.errstate(divide="ignore"):
            q = np.where(pis >= 1.0, -1.0, u * (1.0 - pis) / ((1.0 - u) * pis))
        sel = np.argpartition(q, n - 1, axis=-1)[:, :n] if n < N else np.tile(np.arange(N), (B, 1))
    elif spec.kind == designs.SRS:
        sel = np.argpartition(u, n - 1, axis=-1)[:, :n] if n < N else np.tile(np.arange(N), (B, 1))
    else:
        sel = np.stack(
            [
                np.flatnonzero(designs.draw_conditional_poisson(designs.InclusionProbs(p, n), g))
                for p, g in zip(pis, gens)
            ]
        )
    return sel, np.take_along_axis(pis, sel, -1)


def phase2_redraw(pp: PseudoPopulation, n: int, design, rng):
    """Fixed-size pips redraw from a pseudo-population.

    Returns the indicator over pseudo-units and pi*_k = n x*_k / sum x*
    (clamped at 1); n/N for every pseudo-unit under srs.
    """
    spec = _design(design)
    if spec.kind == designs.SRS:
        probs = designs.InclusionProbs(np.full(pp.N, n / pp.N), n)
    else:
        probs = designs.inclusion_probs(pp["x"], n)
    d = designs.draw(spec, probs, rng)
    return d, probs.pi


def resampled_hajek(pp: PseudoPopulation, d, pi_star, column: str = "y") -> WeightedEDF:
    return hajek_df(pp[column], pi_star, d)


@dataclass(frozen=True)
class ResamplingDistribution:
    """Replicate statistics of a bootstrap run.

    ``theta_star`` has one row per replicate (NaN rows mark failures);
    z-values are sqrt(n) (theta*_m - theta_hat).
    """

    theta_hat: np.ndarray
    theta_star: np.ndarray
    n: int
    label: str = ""

    @property
    def ok(self) -> np.ndarray:
        ts = self.theta_star.reshape(len(self.theta_star), -1)
        return np.all(np.isfinite(ts), axis=1)

    @property
    def failed(self) -> int:
        return int((~self.ok).sum())

    @property
    def M(self) -> int:
        return len(self.theta_star)

    @property
    def z_values(self) -> np.ndarray:
        return np.sqrt(self.n) * (self.theta_star[self.ok] - self.theta_hat)

    @property
    def s2_star(self):
        s2 = np.var(self.z_values, axis=0, ddof=1)
        return float(s2) if np.ndim(s2) == 0 else s2

    @property
    def s_star(self):
        return np.sqrt(self.s2_star)

    def edf(self, component: Optional[int] = None) -> WeightedEDF:
        """Empirical d.f. of the z-values (mass 1/M per successful replicate)."""
        z = self.z_values
        if z.ndim > 1:
            if component is None:
                raise InvalidArgument("pick a component of a vector-valued statistic")
            z = z[:, component]
        return WeightedEDF.from_weights(z, np.full(len(z), 1.0 / len(z)))


def _evaluate(theta: Functional, data, w):
    try:
        with np.errstate(all="ignore"):
            out = np.asarray(theta(data, w), dtype=float)
        return out
    except Exception:  # fall back to one replicate at a time to isolate failures
        rows = []
        for i in range(w.shape[0]):
            try:
                rows.append(np.asarray(theta({k: v[i] for k, v in data.items()}, w[i]), dtype=float))
            except Exception as exc:
                log.debug("replicate failed: %s", exc)
                rows.append(None)
        shape = next((r.shape for r in rows if r is not None), ())
        return np.stack([np.full(shape, np.nan) if r is None else r for r in rows])


def _finish(theta, sample, stats, theta_hat, label):
    dist = ResamplingDistribution(theta_hat, stats, sample.n, label or theta.label)
    frac = dist.failed / dist.M
    if frac > MAX_FAILED_FRACTION:
        raise NumericFailure(
            f"{dist.failed} of {dist.M} replicates failed",
            {"failed": dist.failed, "M": dist.M, "fraction": frac},
        )
    if dist.failed:
        log.warning("%d of %d bootstrap replicates failed and were dropped", dist.failed, dist.M)
    return dist


def _run(theta, sample, M, rng, block_fn, label="", theta_hat=None):
    if M < 2:
        raise InvalidArgument("need at least 2 bootstrap replicates")
    root = root_seed(rng)
    if theta_hat is None:
        theta_hat = np.asarray(theta(sample.columns, sample.weights), dtype=float)
    parts = []
    for start in range(0, M, BLOCK):
        gens = [replicate_rng(root, m) for m in range(start, min(M, start + BLOCK))]
        data, w = block_fn(gens)
        parts.append(_evaluate(theta, data, w))
    return _finish(theta, sample, np.concatenate(parts), theta_hat, label)


def bootstrap(
    theta: Functional,
    sample: Sample,
    N: Optional[int] = None,
    M: int = 1000,
    design="pareto",
    rng: SeedLike = None,
    null: Optional[dict] = None,
) -> ResamplingDistribution:
    """Monte Carlo two-phase bootstrap of ``theta``.

    For each replicate: fresh Phase-1 pseudo-population, Phase-2 redraw
    with ``design``, theta of the resampled Hajek d.f. ``null`` switches
    Phase 1 to the conditional-independence pseudo-population; pass a dict
    with keys ``a``, ``b``, ``strata``.
    """
    spec = _design(design)
    N = sample.N if N is None else N
    n = sample.n
    cols = sample.columns
    cdf = _cdf(sample.weights)
    if null is not None:
        cells = [c for c in np.unique(sample[null.get("strata", "t")])]
        if not cells:
            raise DegenerateCellError("no populated strata", cells)

    def block_fn(gens):
        if null is None:
            u = _uniforms(gens, N, 2)
            idx = np.searchsorted(cdf, u[:, 0], side="right")
            pseudo = {k: v[idx] for k, v in cols.items()}
        else:
            u = _uniforms(gens, N, 4)
            pseudo = _h0_columns(
                sample, u, null.get("a", "y"), null.get("b", "z"), null.get("strata", "t")
            )
        sel, pi_sel = _phase2_select(pseudo["x"], n, spec, gens, u[:, -1])
        data = {k: np.take_along_axis(v, sel, -1) for k, v in pseudo.items() if k in theta.columns}
        return data, 1.0 / pi_sel

    return _run(theta, sample, M, rng, block_fn)


def efron_resample(theta: Functional, sample: Sample, M: int = 1000, rng: SeedLike = None, n=None):
    """Negative control: n i.i.d. draws from the Hajek d.f., equally weighted."""
    n = sample.n if n is None else n
    cdf = _cdf(sample.weights)

    def block_fn(gens):
        idx = np.searchsorted(cdf, _uniforms(gens, n, 1)[:, 0], side="right")
        data = {k: v[idx] for k, v in sample.columns.items() if k in theta.columns}
        return data, np.ones(idx.shape)

    return _run(theta, sample, M, rng, block_fn, label=f"efron:{theta.label}")


def holmberg_resample(theta: Functional, sample: Sample, M: int = 1000, rng: SeedLike = None):
    """Negative control: theta of the Holmberg pseudo-population d.f.
    (sampled units weighted by their random counts N*_i)."""

    def block_fn(gens):
        counts = np.stack([_holmberg_counts(sample.pi, g) for g in gens]).astype(float)
        data = {k: np.broadcast_to(v, counts.shape) for k, v in sample.columns.items() if k in theta.columns}
        return data, counts

    return _run(theta, sample, M, rng, block_fn, label=f"holmberg:{theta.label}")


def phase1_resample(theta: Functional, sample: Sample, N: Optional[int] = None, M: int = 1000, rng: SeedLike = None):
    """theta of the Phase-1 pseudo-population d.f. alone (sampled units
    weighted by their multinomial counts N*_i). Companion of
    :func:`holmberg_resample` for comparing pseudo-population variability."""
    N = sample.N if N is None else N
    p = sample.weights / sample.weights.sum()

    def block_fn(gens):
        counts = np.stack([g.multinomial(N, p) for g in gens]).astype(float)
        data = {k: np.broadcast_to(v, counts.shape) for k, v in sample.columns.items() if k in theta.columns}
        return data, counts

    return _run(theta, sample, M, rng, block_fn, label=f"phase1:{theta.label}")
