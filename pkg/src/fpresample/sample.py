"""The observed sample: sampled units' columns, their inclusion
probabilities and the population size they were drawn from."""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import designs
from .errors import InvalidArgument
from .popgen import Population


@dataclass(frozen=True)
class Sample:
    """Sampled units. ``columns`` maps names (``y``, ``z``, ``t``, ``x``) to
    arrays of length n; ``pi`` holds their inclusion probabilities."""

    columns: Dict[str, np.ndarray]
    pi: np.ndarray
    N: int
    design: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        cols = {k: np.asarray(v) for k, v in self.columns.items()}
        n = len(pi)
        if n == 0:
            raise InvalidArgument("sample is empty")
        if any(len(v) != n for v in cols.values()):
            raise InvalidArgument("all sample columns must have the sample's length")
        if "x" not in cols:
            raise InvalidArgument("sample needs the size variable column 'x'")
        if np.any(pi <= 0) or np.any(pi > 1):
            raise InvalidArgument("inclusion probabilities must lie in (0, 1]")
        if self.N < n:
            raise InvalidArgument(f"population size N={self.N} is smaller than n={n}")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "columns", cols)

    @property
    def n(self) -> int:
        return len(self.pi)

    @property
    def weights(self) -> np.ndarray:
        return 1.0 / self.pi

    def __getitem__(self, name):
        return self.columns[name]

    @classmethod
    def from_population(cls, pop: Population, d, pi) -> "Sample":
        d = np.asarray(d, dtype=bool)
        pi = np.asarray(getattr(pi, "pi", pi), dtype=float)
        cols = {"y": pop.y[d], "x": pop.x[d]}
        if pop.z is not None:
            cols["z"] = pop.z[d]
        if pop.t is not None:
            cols["t"] = pop.t[d]
        return cls(cols, pi[d], pop.N)


def draw_sample(pop: Population, n: int, design, rng: np.random.Generator) -> Sample:
    """pips sample of size n from ``pop`` using its size variable (equal
    probabilities n/N under srs)."""
    spec = design if isinstance(design, designs.DesignSpec) else designs.DesignSpec(design)
    if spec.kind == designs.SRS:
        probs = designs.InclusionProbs(np.full(pop.N, n / pop.N), n)
    else:
        probs = designs.inclusion_probs(pop.x, n)
    d = designs.draw(spec, probs, rng)
    s = Sample.from_population(pop, d, probs)
    return Sample(s.columns, s.pi, s.N, design=spec.kind)
