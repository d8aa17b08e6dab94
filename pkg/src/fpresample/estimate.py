"""Weighted distribution-function estimators, statistical functionals,
plug-in moments and the asymptotic covariance kernel of the Hajek
empirical process."""

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import DegenerateCellError, InvalidArgument, SingularKernelError

# relative slack when comparing cumulative weights with p; guards against
# cumsum rounding moving a jump by one ulp
_P_SLACK = 1e-12


@dataclass(frozen=True)
class WeightedEDF:
    """Right-continuous step function with point masses.

    ``values`` are strictly increasing and ``masses`` strictly positive.
    The function is normalised when ``total_mass`` is 1.
    """

    values: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        m = np.array(self.masses, dtype=float)
        if v.shape != m.shape or v.ndim != 1:
            raise InvalidArgument("values and masses must be 1-d arrays of equal length")
        if v.size and (np.any(np.diff(v) <= 0) or np.any(m <= 0)):
            raise InvalidArgument("values must be strictly increasing and masses positive")
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "masses", m)
        cum = np.cumsum(m)
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def from_weights(cls, values, weights) -> "WeightedEDF":
        """Build from unsorted values; coincident values merge their mass and
        zero weights are dropped."""
        values = np.asarray(values, dtype=float)
        weights = np.asarray(weights, dtype=float)
        keep = weights > 0
        uniq, inv = np.unique(values[keep], return_inverse=True)
        mass = np.bincount(inv, weights=weights[keep], minlength=len(uniq))
        return cls(uniq, mass)

    @property
    def total_mass(self) -> float:
        return float(self._cum[-1]) if self._cum.size else 0.0

    def __call__(self, y):
        idx = np.searchsorted(self.values, y, side="right")
        cum = np.concatenate(([0.0], self._cum))
        out = cum[idx]
        return float(out) if np.ndim(out) == 0 else out

    def normalized(self) -> "WeightedEDF":
        return WeightedEDF(self.values, self.masses / self.total_mass)

    def quantile(self, p):
        return quantile(self, p)

    def sup_distance(self, F: Callable) -> float:
        """sup_y |self(y) - F(y)|, checked at both sides of every jump."""
        lo = np.concatenate(([0.0], self._cum[:-1]))
        Fv = np.asarray(F(self.values), dtype=float)
        Fl = np.asarray(F(np.nextafter(self.values, -np.inf)), dtype=float)
        return float(max(np.max(np.abs(self._cum - Fv)), np.max(np.abs(lo - Fl))))


def _sampled(y_values, pi, d):
    y = np.asarray(y_values, dtype=float)
    pi = np.asarray(getattr(pi, "pi", pi), dtype=float)
    if d is None:
        return y, pi
    d = np.asarray(d, dtype=bool)
    return y[d], pi[d]


def hajek_df(y_values, pi, d=None) -> WeightedEDF:
    """Hajek ratio estimator: mass proportional to D_i / pi_i, normalised.

    ``d`` is the sample indicator over the population; omit it when
    ``y_values`` and ``pi`` already hold only the sampled units.
    """
    y, p = _sampled(y_values, pi, d)
    if y.size == 0:
        raise InvalidArgument("the Hajek estimator needs at least one sampled unit")
    w = 1.0 / p
    return WeightedEDF.from_weights(y, w / w.sum())


def ht_df(y_values, pi, d, N: int) -> WeightedEDF:
    """Horvitz-Thompson estimator: mass D_i / (N pi_i); not normalised."""
    y, p = _sampled(y_values, pi, d)
    return WeightedEDF.from_weights(y, 1.0 / (N * p))


def naive_edf(y_values, d, n: Optional[int] = None) -> WeightedEDF:
    """Unweighted sample e.d.f. (mass 1/n). Inconsistent under a pips design
    whenever y and the size variable are dependent."""
    y = np.asarray(y_values, dtype=float)
    if d is not None:
        y = y[np.asarray(d, dtype=bool)]
    n = len(y) if n is None else n
    return WeightedEDF.from_weights(y, np.full(len(y), 1.0 / n))


def quantile(df: WeightedEDF, p):
    """Left-continuous inverse inf{y : F(y) >= p} of a normalised d.f."""
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0) | (p_arr >= 1)):
        raise InvalidArgument("p must lie strictly between 0 and 1")
    cum = df._cum / df.total_mass
    idx = np.searchsorted(cum, p_arr * (1.0 - _P_SLACK), side="left")
    out = df.values[np.minimum(idx, len(cum) - 1)]
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# batch kernels operating along the last axis


TIES = ("right", "mid", "ordinal")


def cum_weight_at_points(v, w, ties="right"):
    """Weighted d.f. of ``v`` evaluated at each own point, along the last axis.

    ``right``: sum_j w_j 1(v_j <= v_i); tied points share the weight of the
    whole tie group. ``mid``: half the tie group's weight is taken off (the
    weighted midrank). ``ordinal``: ties are broken by position and half the
    point's own weight is taken off. The three agree up to the half-weight
    shift when there are no ties.
    """
    if ties not in TIES:
        raise InvalidArgument(f"ties must be one of {TIES}")
    v = np.asarray(v)
    w = np.asarray(w, dtype=float)
    order = np.argsort(v, axis=-1, kind="stable")
    ws = np.take_along_axis(w, order, -1)
    c = np.cumsum(ws, axis=-1)
    if ties == "ordinal":
        res = c - 0.5 * ws
    else:
        vs = np.take_along_axis(v, order, -1)
        n = v.shape[-1]
        pos = np.arange(n)
        is_end = np.ones(vs.shape, dtype=bool)
        is_end[..., :-1] = vs[..., 1:] != vs[..., :-1]
        end = np.flip(np.minimum.accumulate(np.flip(np.where(is_end, pos, n), -1), axis=-1), -1)
        res = np.take_along_axis(c, end, -1)
        if ties == "mid":
            is_start = np.ones(vs.shape, dtype=bool)
            is_start[..., 1:] = is_end[..., :-1]
            start = np.maximum.accumulate(np.where(is_start, pos, 0), axis=-1)
            res = 0.5 * (res + np.take_along_axis(c - ws, start, -1))
    out = np.empty_like(c)
    np.put_along_axis(out, order, res, -1)
    return out


def weighted_quantiles(y, w, ps):
    """Left-continuous weighted quantiles along the last axis.

    Returns shape ``y.shape[:-1] + (len(ps),)``.
    """
    ps = np.atleast_1d(np.asarray(ps, dtype=float))
    order = np.argsort(y, axis=-1)
    ys = np.take_along_axis(y, order, -1)
    c = np.cumsum(np.take_along_axis(np.asarray(w, dtype=float), order, -1), axis=-1)
    targets = c[..., -1:] * ps * (1.0 - _P_SLACK)
    idx = np.empty(y.shape[:-1] + ps.shape, dtype=np.intp)
    for k in range(len(ps)):
        idx[..., k] = np.argmax(c >= targets[..., k : k + 1], axis=-1)
    return np.take_along_axis(ys, idx, -1)


def square(s):
    return s * s


def _marginal_dfs(a, b, w, strata, ties):
    """Hajek marginal d.f.s of a and b at the sampled points, within strata
    when given."""
    if strata is None:
        tot = w.sum(axis=-1, keepdims=True)
        return cum_weight_at_points(a, w, ties) / tot, cum_weight_at_points(b, w, ties) / tot
    Fa = np.zeros(np.shape(a))
    Fb = np.zeros(np.shape(b))
    for label in np.unique(strata):
        cell = strata == label
        wk = np.where(cell, w, 0.0)
        tot = wk.sum(axis=-1, keepdims=True)
        tot = np.where(tot > 0, tot, 1.0)
        Fa = np.where(cell, cum_weight_at_points(a, wk, ties) / tot, Fa)
        Fb = np.where(cell, cum_weight_at_points(b, wk, ties) / tot, Fb)
    return Fa, Fb


def gamma_batch(a, b, w, g: Callable = square, strata=None, ties="mid"):
    """Plug-in monotone-dependence measure along the last axis (no checks)."""
    w = np.asarray(w, dtype=float)
    Fa, Fb = _marginal_dfs(np.asarray(a), np.asarray(b), w, strata, ties)
    terms = g(np.abs(Fa + Fb - 1.0)) - g(np.abs(Fa - Fb))
    return np.sum(w * terms, axis=-1) / w.sum(axis=-1)


def gamma_g(x, y, weights, g: Callable = square, strata=None, ties="mid") -> float:
    """Weighted plug-in estimate of E[g(|F+G-1|) - g(|F-G|)].

    ``weights`` are the Hajek weights 1/pi_i of the sampled pairs. With
    ``strata`` the marginal d.f.s are computed inside each cell, and the
    weighted average runs over all sampled pairs.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (x.shape == y.shape == w.shape) or x.ndim != 1:
        raise InvalidArgument("x, y and weights must be 1-d arrays of equal length")
    cells = {None: np.ones(len(x), dtype=bool)}
    if strata is not None:
        strata = np.asarray(strata)
        cells = {label: strata == label for label in np.unique(strata)}
    bad = [
        label
        for label, m in cells.items()
        if len(np.unique(x[m])) < 2 or len(np.unique(y[m])) < 2
    ]
    if bad:
        raise DegenerateCellError(
            f"conditioning cells {bad} have fewer than 2 distinct sampled points", bad
        )
    return float(gamma_batch(x, y, w, g, strata, ties))


def spearman_rho(x, y, weights=None, strata=None, ties="mid") -> float:
    """3 * gamma with g(s) = s^2: the weighted (conditional) Spearman rho."""
    w = np.ones(len(x)) if weights is None else weights
    return 3.0 * gamma_g(x, y, w, square, strata, ties)


# ---------------------------------------------------------------------------
# functionals


@dataclass(frozen=True)
class Functional:
    """A statistic of a weighted sample.

    ``fn(data, w)`` receives a mapping of column arrays and Hajek weights,
    all sharing the same shape ``(..., n)``, and reduces the last axis.
    It may return an extra trailing axis for vector-valued functionals.
    """

    label: str
    fn: Callable[[Mapping[str, np.ndarray], np.ndarray], np.ndarray]
    columns: Sequence[str] = ("y",)

    def __call__(self, data: Mapping[str, np.ndarray], w) -> np.ndarray:
        return self.fn(data, np.asarray(w, dtype=float))

    @classmethod
    def on_edf(cls, label: str, func: Callable[[WeightedEDF], float], column: str = "y"):
        """Wrap an arbitrary function of a normalised WeightedEDF."""

        def fn(data, w):
            v = np.asarray(data[column], dtype=float)
            lead = v.shape[:-1]
            out = np.empty(lead)
            for idx in np.ndindex(*lead):
                ww = w[idx]
                out[idx] = func(WeightedEDF.from_weights(v[idx], ww / ww.sum()))
            return out

        return cls(label, fn, (column,))


def quantile_functional(p, column: str = "y") -> Functional:
    """theta_p(F) = F^{-1}(p); vector-valued when ``p`` is a sequence."""
    ps = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((ps <= 0) | (ps >= 1)):
        raise InvalidArgument("p must lie strictly between 0 and 1")
    scalar = np.ndim(p) == 0

    def fn(data, w):
        q = weighted_quantiles(np.asarray(data[column], dtype=float), w, ps)
        return q[..., 0] if scalar else q

    return Functional(f"quantile({p})", fn, (column,))


def gamma_functional(
    a: str = "y",
    b: str = "z",
    g: Callable = square,
    strata: Optional[str] = None,
    scale: float = 1.0,
    ties: str = "mid",
) -> Functional:
    """scale * gamma_g of columns ``a`` and ``b``, conditional on ``strata``.
    ``ties`` is passed to :func:`cum_weight_at_points`."""
    if ties not in TIES:
        raise InvalidArgument(f"ties must be one of {TIES}")
    cols = (a, b) + ((strata,) if strata else ())

    def fn(data, w):
        t = data[strata] if strata else None
        return scale * gamma_batch(data[a], data[b], w, g, t, ties)

    label = f"gamma({a},{b}" + (f"|{strata}" if strata else "") + ")"
    return Functional(label, fn, cols)


def spearman_functional(a="y", b="z", strata=None, ties="mid") -> Functional:
    return gamma_functional(a, b, square, strata, scale=3.0, ties=ties)


# ---------------------------------------------------------------------------
# moments and covariance kernel


@dataclass(frozen=True)
class ConditionalMoment:
    """y -> weighted mean of x^power over units with y_i <= y.

    Below the smallest y it returns the value at the smallest point.
    """

    values: np.ndarray
    means: np.ndarray

    @classmethod
    def build(cls, y, x, w, power: float) -> "ConditionalMoment":
        y = np.asarray(y, dtype=float)
        order = np.argsort(y, kind="stable")
        ys = y[order]
        wx = np.cumsum((w * np.asarray(x, dtype=float) ** power)[order])
        ww = np.cumsum(np.asarray(w, dtype=float)[order])
        last = np.append(ys[1:] != ys[:-1], True)
        return cls(ys[last], wx[last] / ww[last])

    def __call__(self, y):
        idx = np.searchsorted(self.values, y, side="right") - 1
        out = self.means[np.maximum(idx, 0)]
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class MomentSet:
    f: float
    d: float
    mean_x: float
    mean_inv_x: float
    K_minus1: Callable
    K_plus1: Callable

    @property
    def A(self) -> float:
        return self.mean_x * self.mean_inv_x / self.f


def moment_set(y, x, pi, d=None, N: Optional[int] = None) -> MomentSet:
    """Plug-in moments for the covariance kernel.

    Without ``d`` the arrays describe a whole population and plain averages
    are used. With a sample indicator ``d`` (or sample-only arrays and an
    explicit ``N``) every average is Hajek-weighted by 1/pi.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    pi = np.asarray(getattr(pi, "pi", pi), dtype=float)
    if d is None and N is None:
        w = np.ones_like(pi)
        n, N = pi.sum(), len(pi)
    else:
        if d is not None:
            N = len(pi) if N is None else N
            keep = np.asarray(d, dtype=bool)
            y, x, pi = y[keep], x[keep], pi[keep]
        w = 1.0 / pi
        n = len(pi)
    w = w / w.sum()
    return MomentSet(
        f=float(n / N),
        d=float(np.sum(w * pi * (1.0 - pi))),
        mean_x=float(np.sum(w * x)),
        mean_inv_x=float(np.sum(w / x)),
        K_minus1=ConditionalMoment.build(y, x, w, -1.0),
        K_plus1=ConditionalMoment.build(y, x, w, 1.0),
    )


def kernel_C1(m: MomentSet, F: Callable, y, t, printed: bool = False):
    """Covariance kernel of the sampling part sqrt(n)(F_H - F_N).

    By default the third term is f{(E[X]/f)(K_-1(y) + K_-1(t) - E[1/X]) - 1}
    F(y)F(t), which is what linearising the Hajek estimator gives and what
    collapses to f(A - 1)(F(y^t) - F(y)F(t)) under independence.
    ``printed=True`` instead keeps the -1 inside the E[X]/f factor.
    """
    if m.d == 0:
        raise SingularKernelError("d = E[pi(1 - pi)] is zero; the kernel is undefined")
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    f, ex = m.f, m.mean_x
    a = np.minimum(y, t)
    Fa, Fy, Ft = F(a), F(y), F(t)
    first = f * (ex / f * m.K_minus1(a) - 1.0) * Fa
    second = (
        f**3 / m.d * (1.0 - m.K_plus1(y) / ex) * (1.0 - m.K_plus1(t) / ex) * Fy * Ft
    )
    inner = m.K_minus1(y) + m.K_minus1(t) - m.mean_inv_x
    if printed:
        third = f * (ex / f * (inner - 1.0)) * Fy * Ft
    else:
        third = f * (ex / f * inner - 1.0) * Fy * Ft
    return first - second - third


def kernel_C2(F: Callable, y, t):
    """Brownian-bridge kernel F(y ^ t) - F(y)F(t)."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    return F(np.minimum(y, t)) - F(y) * F(t)


def kernel_C(m: MomentSet, F: Callable, y, t, printed: bool = False):
    """Covariance kernel C1 + f C2 of sqrt(n)(F_H - F)."""
    return kernel_C1(m, F, y, t, printed) + m.f * kernel_C2(F, y, t)


def kernel_matrix(m: MomentSet, F: Callable, grid, printed: bool = False) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    return kernel_C(m, F, grid[:, None], grid[None, :], printed)


def df_functional(grid, column: str = "y") -> Functional:
    """Hajek d.f. evaluated on a fixed grid (vector-valued)."""
    grid = np.asarray(grid, dtype=float)

    def fn(data, w):
        v = np.asarray(data[column], dtype=float)
        below = v[..., None, :] <= grid[:, None]
        return np.sum(below * w[..., None, :], axis=-1) / w.sum(axis=-1)[..., None]

    return Functional(f"df({column})", fn, (column,))
