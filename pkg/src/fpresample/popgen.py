"""Finite populations drawn from the three superpopulation models used in
the simulation studies, plus a brute-force oracle for true quantiles."""

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import InvalidArgument

QUANTILE_MODEL = "quantile-model"
STRATIFIED = "stratified-gaussian"
MARSHALL_OLKIN = "marshall-olkin"
MODEL_KINDS = (QUANTILE_MODEL, STRATIFIED, MARSHALL_OLKIN)

STRATUM_WEIGHTS = np.array([0.4, 0.3, 0.2, 0.1])
STRATUM_MEANS = np.array([[800.0, 300.0], [900.0, 400.0], [1000.0, 500.0], [1100.0, 600.0]])
STRATUM_SD = (150.0, 60.0)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Population:
    """A finite population.

    ``y`` is the study variable, ``z`` an optional second study variable,
    ``x`` the (positive) size variable driving inclusion probabilities and
    ``t`` optional integer stratum labels.
    """

    y: np.ndarray
    x: np.ndarray
    z: Optional[np.ndarray] = None
    t: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "y", _frozen(self.y))
        object.__setattr__(self, "x", _frozen(self.x))
        if self.z is not None:
            object.__setattr__(self, "z", _frozen(self.z))
        if self.t is not None:
            object.__setattr__(self, "t", _frozen(self.t, dtype=np.int64))
        N = len(self.y)
        if N < 1:
            raise InvalidArgument("population must contain at least one unit")
        for name in ("x", "z", "t"):
            v = getattr(self, name)
            if v is not None and len(v) != N:
                raise InvalidArgument(f"{name} has length {len(v)}, expected {N}")
        if not np.all(np.isfinite(self.x)) or np.any(self.x <= 0):
            raise InvalidArgument("size variable x must be finite and strictly positive")
        if not np.all(np.isfinite(self.y)):
            raise InvalidArgument("y contains non-finite values")
        if self.z is not None and not np.all(np.isfinite(self.z)):
            raise InvalidArgument("z contains non-finite values")

    @property
    def N(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class ModelSpec:
    """Superpopulation model selector.

    ``params`` holds model-specific overrides: ``w_var`` (log-normal
    variance of the size-variable noise) for the quantile and
    Marshall-Olkin models.
    """

    kind: str
    target_spearman: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidArgument(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        rho = self.target_spearman
        if self.kind == STRATIFIED and not 0.0 <= rho < 1.0:
            raise InvalidArgument("stratified model needs rho_s in [0, 1)")
        if self.kind == MARSHALL_OLKIN and not 0.0 <= rho <= 1.0:
            raise InvalidArgument("Marshall-Olkin model needs rho_s in [0, 1]")
        w_var = self.params.get("w_var")
        if w_var is not None and w_var <= 0:
            raise InvalidArgument("w_var must be positive")

    def generate(self, N: int, rng: np.random.Generator) -> Population:
        if self.kind == QUANTILE_MODEL:
            return gen_quantile_model(N, rng, w_var=self.params.get("w_var", 0.125))
        if self.kind == STRATIFIED:
            return gen_stratified_model(N, self.target_spearman, rng)
        return gen_marshall_olkin_model(
            N, self.target_spearman, rng, w_var=self.params.get("w_var", 0.4)
        )

    def draw_y(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw the study variable alone (used by the quantile oracle)."""
        if self.kind == QUANTILE_MODEL:
            return _quantile_model_y(size, rng)
        return self.generate(size, rng).y


def _check_N(N):
    if int(N) != N or N < 1:
        raise InvalidArgument(f"N must be a positive integer, got {N!r}")
    return int(N)


def _quantile_model_y(N, rng):
    v = np.abs(rng.normal(0.0, 7.0, N))
    eps = rng.standard_normal(N)
    return (12.5 + 3.0 * v**1.2 + 15.0 * eps) ** 2 + 4000.0


def gen_quantile_model(N: int, rng: np.random.Generator, w_var: float = 0.125) -> Population:
    """y = (12.5 + 3 V^1.2 + 15 eps)^2 + 4000 with V half-normal (scale 7),
    and size variable x = y^0.2 W, W log-normal with log-variance ``w_var``."""
    N = _check_N(N)
    y = _quantile_model_y(N, rng)
    w = np.exp(rng.normal(0.0, np.sqrt(w_var), N))
    return Population(y=y, x=y**0.2 * w)


def stratified_covariance(rho_s: float) -> np.ndarray:
    """Within-stratum covariance giving Spearman correlation ``rho_s`` for a
    bivariate normal (Pearson r = 2 sin(pi rho_s / 6))."""
    s1, s2 = STRATUM_SD
    off = s1 * s2 * 2.0 * np.sin(np.pi * rho_s / 6.0)
    return np.array([[s1**2, off], [off, s2**2]])


def gen_stratified_model(N: int, rho_s: float, rng: np.random.Generator) -> Population:
    """Four strata with weights (.4, .3, .2, .1); (y, z) bivariate normal
    within each stratum. The size variable equals the stratum label."""
    N = _check_N(N)
    if not 0.0 <= rho_s < 1.0:
        raise InvalidArgument(f"rho_s must lie in [0, 1), got {rho_s}")
    t = rng.choice(4, size=N, p=STRATUM_WEIGHTS) + 1
    chol = np.linalg.cholesky(stratified_covariance(rho_s))
    yz = STRATUM_MEANS[t - 1] + rng.standard_normal((N, 2)) @ chol.T
    return Population(y=yz[:, 0], z=yz[:, 1], x=t.astype(float), t=t)


def cuadras_auge_alpha(rho_s: float) -> float:
    """Invert rho_s = 3 a / (4 - a) for the Cuadras-Auge parameter a."""
    return 4.0 * rho_s / (3.0 + rho_s)


def size_polynomial(u):
    return u**3 / 3.0 - 0.5 * u**2 + 0.10 * u + 0.5


def marshall_olkin_w_var(f: float) -> float:
    """Log-normal variance used for the size noise at sampling fraction f."""
    if np.isclose(f, 1.0 / 10.0):
        return 0.4
    if np.isclose(f, 1.0 / 3.0):
        return 0.08
    raise InvalidArgument(f"no size-noise variance defined for sampling fraction {f}")


def sample_cuadras_auge(N: int, alpha: float, rng: np.random.Generator):
    """Uniform pairs with copula min(u,v)^a (uv)^(1-a), via exponential shocks."""
    inf = np.full(N, np.inf)
    e1 = rng.exponential(1.0 / (1.0 - alpha), N) if alpha < 1 else inf
    e2 = rng.exponential(1.0 / (1.0 - alpha), N) if alpha < 1 else inf
    e12 = rng.exponential(1.0 / alpha, N) if alpha > 0 else inf
    return np.exp(-np.minimum(e1, e12)), np.exp(-np.minimum(e2, e12))


def gen_marshall_olkin_model(
    N: int, rho_s: float, rng: np.random.Generator, w_var: float = 0.4
) -> Population:
    """(y, z) uniform margins joined by a Cuadras-Auge copula with Spearman
    correlation ``rho_s``; size x = f(y + z) W, W log-normal(0, w_var)."""
    N = _check_N(N)
    if not 0.0 <= rho_s <= 1.0:
        raise InvalidArgument(f"rho_s must lie in [0, 1], got {rho_s}")
    y, z = sample_cuadras_auge(N, cuadras_auge_alpha(rho_s), rng)
    w = np.exp(rng.normal(0.0, np.sqrt(w_var), N))
    return Population(y=y, z=z, x=size_polynomial(y + z) * w)


Sampler = Callable[[int, np.random.Generator], np.ndarray]


def true_quantile_oracle(
    model: Union[ModelSpec, Sampler], p, sims: int, rng: np.random.Generator
):
    """Empirical p-quantile(s) of ``sims`` independent draws of y.

    ``model`` is a ModelSpec, any object with ``draw_y(size, rng)``, or a
    callable ``(size, rng) -> values``.
    The quantile is the left-continuous inverse of the empirical d.f.
    """
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((p_arr <= 0) | (p_arr >= 1)):
        raise InvalidArgument("p must lie strictly between 0 and 1")
    if sims < 10**4:
        raise InvalidArgument("the quantile oracle needs at least 1e4 draws")
    draw = getattr(model, "draw_y", model)
    values = np.sort(draw(int(sims), rng))
    idx = np.ceil(p_arr * sims).astype(int) - 1
    q = values[np.clip(idx, 0, sims - 1)]
    return float(q[0]) if np.ndim(p) == 0 else q
