import numpy as np
import pytest

from fpresample import popgen
from fpresample.errors import DegenerateCellError, InvalidArgument, NumericWarning
from fpresample.estimate import quantile_functional, spearman_rho
from fpresample.infer import (
    cond_independence_test,
    intervals_from,
    marg_independence_test,
    normal_interval,
    quantile_ci,
)
from fpresample.resample import bootstrap
from fpresample.sample import Sample, draw_sample


class TestQuantileCI:
    def test_alpha_near_one_collapses(self, qm_sample):
        ci = quantile_ci(qm_sample, 0.5, alpha=1 - 1e-9, M=100, rng=1)
        assert ci.length < 1e-6 * abs(ci.point)
        assert ci.lower <= ci.point <= ci.upper

    def test_nesting(self, qm_sample):
        dist = bootstrap(quantile_functional([0.1, 0.5, 0.9]), qm_sample, M=200, rng=2)
        for wide, mid, narrow in zip(*(intervals_from(dist, a) for a in (0.01, 0.05, 0.10))):
            assert wide.lower < mid.lower < narrow.lower <= narrow.point
            assert narrow.point <= narrow.upper < mid.upper < wide.upper
            assert mid.level == pytest.approx(0.95)

    def test_list_of_p_shares_run(self, qm_sample):
        cis = quantile_ci(qm_sample, [0.25, 0.75], M=100, rng=3)
        single = quantile_ci(qm_sample, 0.25, M=100, rng=3)
        assert cis[0].point == single.point
        assert cis[0].point < cis[1].point

    def test_zero_width_warns(self):
        y = np.zeros(50)
        y[0] = 1.0
        s = Sample({"y": y, "x": np.ones(50)}, np.full(50, 0.1), 500)
        with pytest.warns(NumericWarning):
            ci = quantile_ci(s, 0.5, M=50, rng=4)
        assert ci.length == 0 and ci.point == 0.0

    def test_normal_interval_formula(self):
        ci = normal_interval(10.0, 4.0, 16, 0.05)
        assert ci.upper - 10.0 == pytest.approx(1.959963984540054)
        assert 10.0 in ci and 12.0 not in ci

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5])
    def test_alpha_domain(self, qm_sample, alpha):
        with pytest.raises(InvalidArgument):
            quantile_ci(qm_sample, 0.5, alpha=alpha, M=10)


def _stratified(rho, N, n, seed, design="pareto"):
    g = np.random.default_rng(seed)
    return draw_sample(popgen.gen_stratified_model(N, rho, g), n, design, g)


class TestConditional:
    def test_comonotone_rejects(self):
        s = _stratified(0.0, 1500, 150, 5)
        s = Sample({**s.columns, "z": s["y"] * 0.5 + 3}, s.pi, s.N)
        res = cond_independence_test(s, 0.05, M=200, rng=6)
        assert res.reject and res.p_value == 0.0
        assert res.statistic == pytest.approx(1.0, abs=0.05)

    def test_monotone_transform_invariance(self, strat_sample):
        s = strat_sample
        t = Sample({**s.columns, "y": np.exp(s["y"] / 200), "z": s["z"] ** 3}, s.pi, s.N)
        a = cond_independence_test(s, 0.05, M=50, rng=7)
        b = cond_independence_test(t, 0.05, M=50, rng=7)
        assert a.statistic == pytest.approx(b.statistic, abs=1e-12)

    def test_decision_rule(self, strat_sample):
        for res in cond_independence_test(strat_sample, [0.01, 0.05, 0.2], M=200, rng=8):
            assert res.reject == (abs(res.statistic) > res.critical_value)
            assert 0.0 <= res.p_value <= 1.0
            assert res.interval is None

    def test_critical_value_monotone_in_alpha(self, strat_sample):
        c = [r.critical_value for r in cond_independence_test(strat_sample, [0.01, 0.05, 0.2], M=300, rng=9)]
        assert c[0] >= c[1] >= c[2]

    def test_median_null_p_value(self):
        ps = []
        for r in range(200):
            s = _stratified(0.0, 150, 50, 100 + r)
            try:
                ps.append(cond_independence_test(s, 0.05, M=200, rng=r).p_value)
            except DegenerateCellError:
                continue
        assert len(ps) > 150
        assert np.median(ps) == pytest.approx(0.5, abs=0.1)

    def test_statistic_is_conditional_spearman(self, strat_sample):
        s = strat_sample
        res = cond_independence_test(s, 0.05, M=20, rng=10)
        assert res.statistic == pytest.approx(spearman_rho(s["y"], s["z"], s.weights, s["t"]))


class TestMarginal:
    def _mo(self, rho, seed, N=750, n=250):
        g = np.random.default_rng(seed)
        pop = popgen.gen_marshall_olkin_model(N, rho, g, w_var=0.08)
        return draw_sample(pop, n, "cp", g)

    def test_no_p_value_and_ci_rule(self):
        s = self._mo(0.0, 11)
        for res in marg_independence_test(s, [0.01, 0.05, 0.1], M=200, rng=12):
            assert res.p_value is None
            assert res.reject == (0.0 not in res.interval)
            assert res.critical_value == pytest.approx(res.interval.upper - res.statistic)

    def test_comonotone_rejects(self):
        res = marg_independence_test(self._mo(1.0, 13), 0.05, M=200, rng=14)
        assert res.reject
        assert res.statistic == pytest.approx(1 / 3, abs=0.01)

    def test_deterministic(self):
        s = self._mo(0.3, 15)
        a = marg_independence_test(s, 0.05, M=100, rng=16)
        b = marg_independence_test(s, 0.05, M=100, rng=16)
        assert a == b
