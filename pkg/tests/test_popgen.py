import numpy as np
import pytest
from scipy import stats

from fpresample import popgen
from fpresample.errors import InvalidArgument


def test_zero_size_population_rejected(rng):
    with pytest.raises(InvalidArgument):
        popgen.gen_quantile_model(0, rng)
    with pytest.raises(InvalidArgument):
        popgen.gen_stratified_model(0, 0.0, rng)


def test_population_validation():
    with pytest.raises(InvalidArgument):
        popgen.Population(y=[1.0, 2.0], x=[1.0, 0.0])
    with pytest.raises(InvalidArgument):
        popgen.Population(y=[1.0, 2.0], x=[1.0])
    with pytest.raises(InvalidArgument):
        popgen.Population(y=[1.0, np.nan], x=[1.0, 1.0])


def test_population_arrays_are_read_only(rng):
    pop = popgen.gen_stratified_model(20, 0.0, rng)
    with pytest.raises(ValueError):
        pop.y[0] = 0.0


def test_quantile_model_floor_and_determinism():
    a = popgen.gen_quantile_model(5000, np.random.default_rng(1))
    b = popgen.gen_quantile_model(5000, np.random.default_rng(1))
    assert np.array_equal(a.y, b.y) and np.array_equal(a.x, b.x)
    assert a.y.min() >= 4000.0
    assert np.all(a.x > 0)


def test_quantile_model_mean_agrees_across_generators():
    # same model driven by two unrelated bit generators
    N = 10**6
    m1 = popgen.gen_quantile_model(N, np.random.Generator(np.random.PCG64(3))).y
    m2 = popgen.gen_quantile_model(N, np.random.Generator(np.random.MT19937(4))).y
    se = np.sqrt(m1.var() / N + m2.var() / N)
    assert abs(m1.mean() - m2.mean()) < 4 * se


def test_quantile_model_size_noise_variance(rng):
    pop = popgen.gen_quantile_model(200_000, rng, w_var=0.125)
    logw = np.log(pop.x) - 0.2 * np.log(pop.y)
    assert logw.var() == pytest.approx(0.125, rel=0.02)


class TestStratified:
    def test_independent_within_strata(self):
        pop = popgen.gen_stratified_model(100_000, 0.0, np.random.default_rng(5))
        for k in range(1, 5):
            m = pop.t == k
            r = stats.spearmanr(pop.y[m], pop.z[m])[0]
            assert abs(r) < 3.0 / np.sqrt(m.sum())

    def test_target_spearman(self):
        pop = popgen.gen_stratified_model(100_000, 0.5, np.random.default_rng(6))
        for k in range(1, 5):
            m = pop.t == k
            assert stats.spearmanr(pop.y[m], pop.z[m])[0] == pytest.approx(0.5, abs=0.02)

    def test_stratum_weights_and_means(self):
        pop = popgen.gen_stratified_model(100_000, 0.3, np.random.default_rng(8))
        freq = np.bincount(pop.t, minlength=5)[1:] / pop.N
        assert np.allclose(freq, popgen.STRATUM_WEIGHTS, atol=0.01)
        assert freq[3] == pytest.approx(0.1, abs=0.01)
        for k in range(1, 5):
            m = pop.t == k
            assert pop.y[m].mean() == pytest.approx(popgen.STRATUM_MEANS[k - 1, 0], abs=5)
            assert pop.z[m].mean() == pytest.approx(popgen.STRATUM_MEANS[k - 1, 1], abs=2)
        assert np.array_equal(pop.x, pop.t.astype(float))

    def test_rho_out_of_range(self, rng):
        with pytest.raises(InvalidArgument):
            popgen.gen_stratified_model(10, 1.0, rng)
        with pytest.raises(InvalidArgument):
            popgen.ModelSpec("stratified-gaussian", -0.1)


class TestMarshallOlkin:
    def test_independence_copula_is_uniform(self):
        N = 50_000
        pop = popgen.gen_marshall_olkin_model(N, 0.0, np.random.default_rng(9), w_var=0.08)
        # DKW band for the joint d.f. of two independent uniforms on a grid
        eps = np.sqrt(np.log(2 / 0.001) / (2 * N))
        for u in (0.2, 0.5, 0.8):
            for v in (0.3, 0.6):
                emp = np.mean((pop.y <= u) & (pop.z <= v))
                assert abs(emp - u * v) < eps

    def test_target_spearman(self):
        pop = popgen.gen_marshall_olkin_model(100_000, 0.4, np.random.default_rng(10))
        # the singular component makes ties; scipy uses midranks
        assert stats.spearmanr(pop.y, pop.z)[0] == pytest.approx(0.4, abs=0.02)

    def test_comonotone_limit(self, rng):
        pop = popgen.gen_marshall_olkin_model(1000, 1.0, rng)
        assert np.array_equal(pop.y, pop.z)

    def test_size_correlation_band(self):
        pop = popgen.gen_marshall_olkin_model(100_000, 0.5, np.random.default_rng(12), w_var=0.08)
        r = np.corrcoef(pop.x, pop.y)[0, 1]
        assert 0.35 <= r <= 0.55

    def test_alpha_inversion(self):
        for rho in (0.0, 0.25, 0.6, 1.0):
            a = popgen.cuadras_auge_alpha(rho)
            assert 3 * a / (4 - a) == pytest.approx(rho)

    def test_w_var_by_fraction(self):
        assert popgen.marshall_olkin_w_var(0.1) == 0.4
        assert popgen.marshall_olkin_w_var(1 / 3) == 0.08
        with pytest.raises(InvalidArgument):
            popgen.marshall_olkin_w_var(0.5)


class TestOracle:
    def test_uniform_median(self):
        q = popgen.true_quantile_oracle(lambda k, g: g.random(k), 0.5, 10**6, np.random.default_rng(0))
        assert q == pytest.approx(0.5, abs=0.002)

    def test_two_seeds_agree(self):
        spec = popgen.ModelSpec("quantile-model")
        a = popgen.true_quantile_oracle(spec, [0.1, 0.5, 0.9], 10**6, np.random.default_rng(1))
        b = popgen.true_quantile_oracle(spec, [0.1, 0.5, 0.9], 10**6, np.random.default_rng(2))
        assert np.allclose(a, b, rtol=0.005)
        assert np.all(np.diff(a) > 0)

    def test_left_continuous_inverse(self):
        # draws 0..9 repeated: the 0.3-quantile is the smallest v with F(v) >= 0.3
        q = popgen.true_quantile_oracle(lambda k, g: np.arange(k) % 10, 0.3, 10**4, None)
        assert q == 2

    def test_errors(self, rng):
        spec = popgen.ModelSpec("quantile-model")
        with pytest.raises(InvalidArgument):
            popgen.true_quantile_oracle(spec, 0.0, 10**4, rng)
        with pytest.raises(InvalidArgument):
            popgen.true_quantile_oracle(spec, 0.5, 100, rng)
        with pytest.raises(InvalidArgument):
            popgen.ModelSpec("lognormal")
