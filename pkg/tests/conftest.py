import numpy as np
import pytest

from fpresample import popgen
from fpresample.sample import draw_sample


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def strat_sample():
    """Pareto sample of n=150 from a stratified population of N=1500 (rho_s=0)."""
    g = np.random.default_rng(7)
    pop = popgen.gen_stratified_model(1500, 0.0, g)
    return draw_sample(pop, 150, "pareto", g)


@pytest.fixture(scope="session")
def qm_sample():
    g = np.random.default_rng(11)
    pop = popgen.gen_quantile_model(1500, g)
    return draw_sample(pop, 150, "pareto", g)
