import numpy as np
import pytest
from scipy import stats

from fpresample import estimate, popgen
from fpresample.designs import inclusion_probs
from fpresample.errors import DegenerateCellError, InvalidArgument, SingularKernelError
from fpresample.estimate import (
    ConditionalMoment,
    MomentSet,
    WeightedEDF,
    cum_weight_at_points,
    gamma_g,
    hajek_df,
    ht_df,
    kernel_C,
    kernel_C1,
    kernel_C2,
    moment_set,
    naive_edf,
    quantile,
    spearman_rho,
)
from fpresample.sample import draw_sample


class TestHajek:
    def test_two_unit_masses(self):
        F = hajek_df([1.0, 2.0], [0.2, 0.8])
        assert np.allclose(F.masses, [0.8, 0.2])
        assert F(1.5) == pytest.approx(0.8)

    def test_single_unit_is_unit_step(self):
        F = hajek_df([7.0], [0.3])
        assert F(6.999) == 0.0 and F(7.0) == 1.0
        assert quantile(F, 0.01) == 7.0 and quantile(F, 0.99) == 7.0

    def test_equal_pi_is_sample_edf(self, rng):
        y = rng.normal(size=40)
        H = hajek_df(y, np.full(40, 0.1))
        E = naive_edf(y, None)
        grid = np.linspace(-3, 3, 61)
        assert np.allclose(H(grid), E(grid))
        assert np.allclose(H(grid), np.mean(y[None, :] <= grid[:, None], axis=1))

    def test_indicator_selects_units(self):
        F = hajek_df([5.0, 1.0, 2.0], [0.5, 0.2, 0.8], d=[False, True, True])
        assert np.allclose(F.values, [1.0, 2.0])

    def test_empty_sample(self):
        with pytest.raises(InvalidArgument):
            hajek_df([], [])

    def test_coincident_values_merge(self):
        F = hajek_df([3.0, 3.0, 1.0], [0.5, 0.5, 0.5])
        assert np.allclose(F.values, [1.0, 3.0])
        assert np.allclose(F.masses, [1 / 3, 2 / 3])


class TestHorvitzThompson:
    def test_census(self):
        y = np.array([4.0, 1.0, 3.0])
        F = ht_df(y, np.ones(3), np.ones(3, dtype=bool), 3)
        assert F.total_mass == pytest.approx(1.0)
        assert F(3.0) == pytest.approx(2 / 3)

    def test_equal_pi_total_is_one(self, rng):
        N, n = 100, 10
        d = np.zeros(N, dtype=bool)
        d[rng.choice(N, n, replace=False)] = True
        F = ht_df(rng.normal(size=N), np.full(N, n / N), d, N)
        assert F.total_mass == pytest.approx(1.0)

    def test_unequal_total_is_weight_ratio(self, qm_sample):
        s = qm_sample
        F = ht_df(s["y"], s.pi, None, s.N)
        assert F.total_mass == pytest.approx(np.sum(1 / s.pi) / s.N)
        assert F.total_mass == pytest.approx(1.0, abs=0.15)


class TestQuantile:
    def test_inf_rule(self):
        F = WeightedEDF([1.0, 2.0], [0.8, 0.2])
        assert quantile(F, 0.9) == 2.0
        assert quantile(F, 0.8) == 1.0  # at the jump: lower point
        assert quantile(F, 0.5) == 1.0

    def test_vectorised(self):
        F = WeightedEDF([1.0, 2.0, 3.0], [0.25, 0.25, 0.5])
        assert list(quantile(F, [0.2, 0.25, 0.3, 0.75])) == [1.0, 1.0, 2.0, 3.0]

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, p):
        with pytest.raises(InvalidArgument):
            quantile(WeightedEDF([1.0], [1.0]), p)

    def test_edf_validation(self):
        with pytest.raises(InvalidArgument):
            WeightedEDF([2.0, 1.0], [0.5, 0.5])
        with pytest.raises(InvalidArgument):
            WeightedEDF([1.0, 2.0], [0.5, 0.0])


def _quantile_model_cdf(rng, size=10**6):
    ys = np.sort(popgen.ModelSpec("quantile-model").draw_y(size, rng))
    return lambda v: np.searchsorted(ys, v, side="right") / size


def test_naive_edf_is_inconsistent_under_pips():
    g = np.random.default_rng(21)
    F = _quantile_model_cdf(g)
    pop = popgen.gen_quantile_model(10**4, g)
    s = draw_sample(pop, 1000, "pareto", g)
    naive = naive_edf(s["y"], None)
    hajek = hajek_df(s["y"], s.pi)
    assert naive.sup_distance(F) >= 0.02
    assert hajek.sup_distance(F) < naive.sup_distance(F)


def test_glivenko_cantelli():
    g = np.random.default_rng(22)
    F = _quantile_model_cdf(g)

    def median_sup(N, n):
        out = []
        for _ in range(100):
            s = draw_sample(popgen.gen_quantile_model(N, g), n, "pareto", g)
            out.append(hajek_df(s["y"], s.pi).sup_distance(F))
        return np.median(out)

    assert median_sup(4000, 400) < median_sup(500, 50)


class TestCumWeight:
    def test_modes(self):
        v = np.array([3.0, 1.0, 3.0, 2.0])
        w = np.array([1.0, 2.0, 3.0, 4.0])
        assert cum_weight_at_points(v, w).tolist() == [10, 2, 10, 6]
        assert cum_weight_at_points(v, w, "mid").tolist() == [8, 1, 8, 4]
        # ordinal: the first 3 comes first; each point loses half its own weight
        assert cum_weight_at_points(v, w, "ordinal").tolist() == [6.5, 1, 8.5, 4]

    def test_batched_rows(self, rng):
        v = rng.integers(0, 5, (3, 12)).astype(float)
        w = rng.random((3, 12))
        out = cum_weight_at_points(v, w)
        for r in range(3):
            brute = [(w[r] * (v[r] <= x)).sum() for x in v[r]]
            assert np.allclose(out[r], brute)

    def test_unknown_mode(self):
        with pytest.raises(InvalidArgument):
            cum_weight_at_points([1.0], [1.0], "dense")


class TestGamma:
    def test_independent_is_zero(self):
        g = np.random.default_rng(23)
        n = 4000
        x, y = g.normal(size=n), g.normal(size=n)
        assert abs(spearman_rho(x, y)) < 3 / np.sqrt(n)

    def test_comonotone_is_one_third(self, rng):
        x = rng.normal(size=2000)
        assert gamma_g(x, x, np.ones(2000)) == pytest.approx(1 / 3, abs=1e-3)
        assert gamma_g(x, np.exp(x), rng.random(2000) + 0.5) == pytest.approx(1 / 3, abs=2e-3)

    def test_matches_rank_spearman(self):
        g = np.random.default_rng(24)
        for n in (20, 80, 300):
            x = g.normal(size=n)
            y = 0.5 * x + g.normal(size=n)
            assert spearman_rho(x, y) == pytest.approx(stats.spearmanr(x, y)[0], abs=3 / n)

    def test_ties_use_midranks_by_default(self):
        x = np.array([1.0, 1.0, 2.0, 3.0, 3.0, 4.0])
        y = np.array([2.0, 1.0, 1.0, 4.0, 3.0, 3.0])
        n = len(x)
        F = (stats.rankdata(x) - 0.5) / n
        G = (stats.rankdata(y) - 0.5) / n
        expected = 3 * np.mean((F + G - 1) ** 2 - (F - G) ** 2)
        assert spearman_rho(x, y) == pytest.approx(expected, abs=1e-12)

    def test_ordinal_ties_follow_position(self):
        x = np.array([1.0, 1.0, 2.0, 2.0])
        y = np.array([1.0, 2.0, 3.0, 4.0])
        # position breaks the ties the same way as y: perfectly concordant
        assert spearman_rho(x, y, ties="ordinal") == pytest.approx(spearman_rho(y, y))
        assert spearman_rho(x, y, ties="ordinal") > spearman_rho(x, y)

    def test_strata_pool_within_cell_measures(self, rng):
        x = rng.normal(size=200)
        t = np.repeat([1, 2], 100)
        # comonotone in stratum 1, anti-monotone in stratum 2: cancels
        y = np.where(t == 1, x, -x)
        assert gamma_g(x, y, np.ones(200), strata=t) == pytest.approx(0.0, abs=1e-12)
        # independent within strata but shifted together: only the pooled
        # measure sees dependence
        u = rng.normal(size=200) + 10 * t
        v = rng.normal(size=200) + 10 * t
        assert spearman_rho(u, v, strata=t) == pytest.approx(0.0, abs=0.3)
        assert spearman_rho(u, v) > 0.7

    def test_degenerate_cell_is_named(self):
        x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        t = np.array([1, 1, 1, 2, 2])
        y = np.array([1.0, 3.0, 2.0, 7.0, 7.0])
        with pytest.raises(DegenerateCellError) as info:
            gamma_g(x, y, np.ones(5), strata=t)
        assert info.value.cells == (2,)
        assert "2" in str(info.value)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgument):
            gamma_g([1.0, 2.0], [1.0], [1.0, 1.0])


def _const(c):
    return ConditionalMoment(np.array([-np.inf]), np.array([float(c)]))


class TestMomentSet:
    def test_equal_pi(self, rng):
        N, n = 1000, 100
        m = moment_set(rng.normal(size=N), np.ones(N), np.full(N, n / N))
        assert m.f == pytest.approx(0.1)
        assert m.d == pytest.approx(0.1 * 0.9)

    def test_invariants(self, rng):
        pop = popgen.gen_quantile_model(5000, rng)
        pi = inclusion_probs(pop.x, 500).pi
        m = moment_set(pop.y, pop.x, pi)
        assert 0 < m.f < 1 and m.d > 0
        assert m.mean_x * m.mean_inv_x >= 1.0
        top = pop.y.max()
        assert m.K_plus1(top) == pytest.approx(m.mean_x)
        assert m.K_minus1(top) == pytest.approx(m.mean_inv_x)
        # below the data: value at the smallest point
        assert m.K_plus1(-1.0) == m.K_plus1(pop.y.min())

    def test_independent_x_gives_flat_conditional_moment(self):
        g = np.random.default_rng(25)
        N = 200_000
        y, x = g.normal(size=N), g.lognormal(0, 0.5, N)
        m = moment_set(y, x, inclusion_probs(x, N // 10).pi)
        grid = np.quantile(y, [0.1, 0.3, 0.5, 0.7, 0.9])
        assert np.allclose(m.K_minus1(grid), m.mean_inv_x, rtol=0.02)

    def test_hajek_weighted_sample_version(self, strat_sample):
        s = strat_sample
        m = moment_set(s["y"], s["x"], s.pi, N=s.N)
        w = s.weights / s.weights.sum()
        assert m.f == pytest.approx(s.n / s.N)
        assert m.mean_x == pytest.approx(np.sum(w * s["x"]))

    def test_A_stable_across_seeds(self):
        def A(seed):
            pop = popgen.gen_quantile_model(10**4, np.random.default_rng(seed))
            return moment_set(pop.y, pop.x, inclusion_probs(pop.x, 1000).pi).A

        assert A(1) == pytest.approx(A(2), rel=0.01)


class TestKernel:
    F = staticmethod(stats.norm.cdf)
    grid = np.array([-1.2, -0.3, 0.0, 0.7, 1.5])

    def _indep(self, f=0.1, mx=2.5, mix=0.55, d=0.05):
        return MomentSet(f, d, mx, mix, _const(mix), _const(mx))

    def test_independence_reduction(self):
        m = self._indep()
        y, t = self.grid[:, None], self.grid[None, :]
        lhs = kernel_C1(m, self.F, y, t)
        rhs = m.f * (m.A - 1) * kernel_C2(self.F, y, t)
        assert np.allclose(lhs, rhs, atol=1e-14)

    def test_srs_reduction_is_brownian_bridge(self):
        f = 0.2
        m = MomentSet(f, f * (1 - f), 1.0, 1.0, _const(1.0), _const(1.0))
        y, t = self.grid[:, None], self.grid[None, :]
        assert np.allclose(kernel_C(m, self.F, y, t), kernel_C2(self.F, y, t), atol=1e-14)

    def test_printed_grouping_fails_reduction(self):
        m = self._indep()
        y, t = self.grid[:, None], self.grid[None, :]
        printed = kernel_C1(m, self.F, y, t, printed=True)
        rhs = m.f * (m.A - 1) * kernel_C2(self.F, y, t)
        assert not np.allclose(printed, rhs, atol=1e-6)

    def test_symmetric_nonnegative_diagonal(self, rng):
        pop = popgen.gen_stratified_model(20_000, 0.0, rng)
        pi = inclusion_probs(pop.x, 2000).pi
        m = moment_set(pop.y, pop.x, pi)
        ys = np.sort(pop.y)
        F = lambda v: np.searchsorted(ys, v, side="right") / len(ys)
        grid = np.quantile(pop.y, np.linspace(0.05, 0.95, 15))
        C = estimate.kernel_matrix(m, F, grid)
        assert np.allclose(C, C.T)
        assert np.all(np.diag(C) >= 0)

    def test_singular(self):
        m = MomentSet(0.1, 0.0, 1.0, 1.0, _const(1.0), _const(1.0))
        with pytest.raises(SingularKernelError):
            kernel_C(m, self.F, 0.0, 0.0)


def test_functional_on_edf_matches_quantile(qm_sample):
    s = qm_sample
    med = estimate.Functional.on_edf("median", lambda F: F.quantile(0.5))
    direct = estimate.quantile_functional(0.5)
    assert med(s.columns, s.weights) == pytest.approx(direct(s.columns, s.weights))
    assert med(s.columns, s.weights) == hajek_df(s["y"], s.pi).quantile(0.5)
