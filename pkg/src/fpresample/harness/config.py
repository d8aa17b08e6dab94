"""Scenario configuration files.

A config file is INI text with one section per scenario. Keys in
``[DEFAULT]`` are shared by every section. Lists are comma separated.

    [table1]
    study = quantile          ; quantile | cond-test | marg-test | kernel | design | controls | quantile-ci
    model = quantile-model    ; quantile-model | stratified-gaussian | marshall-olkin
    N = 500
    n = 50
    f = 0.1                   ; optional, checked against n/N
    sampling = pareto         ; srs | pareto | conditional-poisson (aliases pa, cp)
    resampling = pareto
    M = 500
    reps = 300
    p = 0.10, 0.25, 0.50, 0.75, 0.90
    alpha = 0.05
    rho = 0                   ; dependence of the generated population
    rho_grid = 0, 0.3, 0.6    ; test studies: power curve grid
    w_var = 0.125             ; log-normal size noise variance
    seed = 42
    oracle_sims = 1000000

Unknown keys are rejected so that typos do not silently fall back to
defaults.
"""

import configparser
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

from .. import designs
from ..errors import ConfigError, InvalidArgument
from ..popgen import MARSHALL_OLKIN, MODEL_KINDS, QUANTILE_MODEL, ModelSpec, marshall_olkin_w_var

STUDIES = ("quantile", "cond-test", "marg-test", "kernel", "design", "controls", "quantile-ci")

DEFAULT_P = (0.10, 0.25, 0.50, 0.75, 0.90)
DEFAULT_RHO_GRID = tuple(round(0.1 * k, 1) for k in range(10))

PROFILES = {"desk": {"reps": 300, "M": 500}, "paper": {"reps": 1000, "M": 1000}}

_FLOAT_LISTS = ("p", "alpha", "rho_grid", "x")
_INTS = ("N", "n", "M", "reps", "seed", "oracle_sims", "draws", "moment_N")
_FLOATS = ("f", "rho", "w_var")
_STRINGS = ("study", "model", "sampling", "resampling", "data")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    study: str
    model: str = QUANTILE_MODEL
    N: int = 500
    n: int = 50
    f: Optional[float] = None
    sampling: str = designs.PARETO
    resampling: str = designs.PARETO
    M: int = 500
    reps: int = 300
    p: Tuple[float, ...] = DEFAULT_P
    alpha: Tuple[float, ...] = (0.05,)
    rho: float = 0.0
    rho_grid: Tuple[float, ...] = DEFAULT_RHO_GRID
    w_var: Optional[float] = None
    seed: int = 0
    oracle_sims: int = 10**6
    draws: int = 200_000
    moment_N: int = 10**6
    x: Tuple[float, ...] = ()
    data: Optional[str] = None
    base_dir: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        _validate(self)

    @property
    def fraction(self) -> float:
        return self.n / self.N

    def model_spec(self, rho: Optional[float] = None) -> ModelSpec:
        params = {}
        w_var = self.w_var
        if w_var is None and self.model == MARSHALL_OLKIN:
            w_var = marshall_olkin_w_var(self.f if self.f is not None else self.fraction)
        if w_var is not None:
            params["w_var"] = w_var
        return ModelSpec(self.model, self.rho if rho is None else rho, params)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def _fail(cfg, msg):
    raise ConfigError(f"[{cfg.name}] {msg}")


def _validate(cfg: ScenarioConfig):
    if cfg.study not in STUDIES:
        _fail(cfg, f"unknown study {cfg.study!r}; expected one of {STUDIES}")
    if cfg.model not in MODEL_KINDS:
        _fail(cfg, f"unknown model {cfg.model!r}; expected one of {MODEL_KINDS}")
    for key in ("sampling", "resampling"):
        try:
            spec = designs.DesignSpec(getattr(cfg, key))
        except InvalidArgument as exc:
            _fail(cfg, f"{key}: {exc}")
        object.__setattr__(cfg, key, spec.kind)
    if not designs.DesignSpec(cfg.resampling).fixed_size:
        _fail(cfg, "the resampling design must have a fixed sample size")
    if cfg.N < 1 or cfg.n < 1:
        _fail(cfg, "N and n must be positive")
    if cfg.n > cfg.N:
        _fail(cfg, f"n={cfg.n} exceeds N={cfg.N}")
    if cfg.M < 2:
        _fail(cfg, "M must be at least 2")
    if cfg.reps < 1:
        _fail(cfg, "reps must be at least 1")
    if cfg.f is not None and not math.isclose(cfg.f, cfg.fraction, rel_tol=0.02):
        _fail(cfg, f"declared f={cfg.f} does not match n/N={cfg.fraction:.6g}")
    if not 0 <= cfg.seed < 2**64:
        _fail(cfg, "seed must be an unsigned 64-bit integer")
    if any(not 0 < p < 1 for p in cfg.p):
        _fail(cfg, "p values must lie strictly between 0 and 1")
    if not cfg.alpha or any(not 0 < a < 1 for a in cfg.alpha):
        _fail(cfg, "alpha values must lie strictly between 0 and 1")
    if any(not 0 <= r <= 1 for r in (cfg.rho, *cfg.rho_grid)):
        _fail(cfg, "dependence values must lie in [0, 1]")
    if cfg.w_var is not None and cfg.w_var <= 0:
        _fail(cfg, "w_var must be positive")
    if cfg.study == "quantile-ci" and not cfg.data:
        _fail(cfg, "quantile-ci needs a data file")
    if cfg.study == "design" and not cfg.x:
        _fail(cfg, "design check needs the size values x")
    try:
        for rho in {cfg.rho, *(cfg.rho_grid if cfg.study in ("cond-test", "marg-test") else ())}:
            cfg.model_spec(rho)
    except InvalidArgument as exc:
        _fail(cfg, str(exc))


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _section(name, items, base_dir) -> ScenarioConfig:
    kwargs = {}
    for key, raw in items:
        # configparser lower-cases keys; N and n are the only case-sensitive pair
        real = {"n_pop": "N", "m": "M", "moment_n": "moment_N"}.get(key, key)
        if real not in _INTS + _FLOATS + _FLOAT_LISTS + _STRINGS:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        try:
            if real in _INTS:
                kwargs[real] = int(raw.strip().replace("_", ""))
            elif real in _FLOATS:
                kwargs[real] = float(raw)
            elif real in _FLOAT_LISTS:
                kwargs[real] = _floats(raw)
            else:
                kwargs[real] = raw.strip()
        except ValueError as exc:
            raise ConfigError(f"[{name}] bad value for {key!r}: {raw!r} ({exc})") from None
    if "study" not in kwargs:
        raise ConfigError(f"[{name}] missing required key 'study'")
    return ScenarioConfig(name=name, base_dir=str(base_dir), **kwargs)


class _CaseConfigParser(configparser.ConfigParser):
    def optionxform(self, optionstr):
        # keep N (population size) apart from n (sample size)
        key = optionstr.strip()
        if key == "N":
            return "n_pop"
        return key.lower()


def parse_config(text: str, base_dir=".", source="<string>") -> list:
    parser = _CaseConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    sections = parser.sections()
    if not sections:
        raise ConfigError(f"{source}: no scenario sections")
    return [_section(name, parser.items(name), base_dir) for name in sections]


def load_config(path, profile: Optional[str] = None, seed: Optional[int] = None) -> list:
    """Read every scenario in ``path``; ``profile`` overrides reps and M,
    ``seed`` overrides each scenario's seed."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    scenarios = parse_config(text, path.parent, str(path))
    return [apply_overrides(s, profile, seed) for s in scenarios]


def apply_overrides(cfg: ScenarioConfig, profile: Optional[str] = None, seed: Optional[int] = None):
    changes = {}
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}; expected one of {tuple(PROFILES)}")
        if profile != "desk":
            changes.update(PROFILES[profile])
    if seed is not None:
        changes["seed"] = seed
    return replace(cfg, **changes) if changes else cfg
