"""Likelihood, analytic gradient and fitting tests.

The likelihood values are checked against the independent slow reference
in tests/reference.py; gradients are checked against central finite
differences and against structural identities (zero score at the
conditional-variance fixed point, the -z/4 weight derivative under the
null).  Fitting tests keep the series short so the whole file stays well
under a minute.
"""

import numpy as np
import pytest

from sthygarch.estimate import (
    FitResult,
    fit,
    loglik,
    loglik_gradient,
    neg2_loglik_terms,
)
from sthygarch.estimate import _pack, _unpack, _path_and_gradient, _estimation_conventions
from sthygarch.model import ModelParams, TransitionSpec, variance_path
from sthygarch.simulate import child_seed, simulate_path

from reference import ref_loglik_terms, ref_variance_path

DESIGN = dict(a0=0.35, a1=0.30, a2=0.40, b0=0.10, b1=0.20, b2=0.0, d=0.60, gamma=1.50)
WIDE = dict(a0=0.20, a1=0.25, a2=0.30, b0=0.15, b1=0.45, b2=0.15, d=0.55, gamma=1.20)

SPECS = {
    "lagged-return": TransitionSpec.lagged_return(),
    "lagged-variance": TransitionSpec.lagged_variance(lag=2),
    "asym-avg": TransitionSpec.asym_average(),
}


def _sim(params, spec, n, seed, burn=500, k_max=400):
    rng = np.random.default_rng(child_seed(900, seed))
    return simulate_path(ModelParams(**params), spec, n, burn, rng, k_max=k_max).y


class TestLoglik:
    @pytest.mark.parametrize("raw", [DESIGN, WIDE])
    @pytest.mark.parametrize("kind", sorted(SPECS))
    def test_matches_reference(self, raw, kind):
        spec = SPECS[kind]
        y = _sim(DESIGN, TransitionSpec.lagged_return(), 20, seed=3)
        params = ModelParams(**raw)
        lt = neg2_loglik_terms(params, spec, y, k_max=30)
        ref = ref_loglik_terms(raw, y, 30, kind=kind, lag=spec.lag)
        np.testing.assert_allclose(lt, ref, rtol=1e-12)
        assert loglik(params, spec, y, k_max=30) == pytest.approx(
            -0.5 * float(np.sum(ref)), rel=1e-12)

    def test_constant_variance_closed_form(self):
        # a1 = a2 = b1 = 0, d -> the FIGARCH arm still filters y^2, so use
        # y = 0: every h_t collapses to the unconditional intercepts and
        # l_t = log(2 pi h) exactly.
        params = ModelParams(a0=2.0, a1=0.0, a2=0.0, b0=2.0, b2=0.0, b1=0.0,
                             d=0.5, gamma=0.0)
        y = np.zeros(8)
        lt = neg2_loglik_terms(params, TransitionSpec.lagged_return(), y,
                               k_max=10, presample=0.0, h1_init=2.0,
                               h2_init=2.0, h_init=2.0)
        np.testing.assert_allclose(lt, np.log(2 * np.pi) + np.log(2.0),
                                   rtol=1e-14)

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            loglik(ModelParams(**DESIGN), TransitionSpec.lagged_return(), [])

    def test_truncation_insensitivity_per_observation(self):
        # doubling the coefficient horizon moves the average log-likelihood
        # by O(tail mass * score noise / sqrt(T)); the margin tracks the
        # k^-d tail, so d = 0.3 gets a looser bound than d = 0.6
        spec = TransitionSpec.lagged_return()
        for d, bound in ((0.6, 1e-4), (0.3, 1e-3)):
            raw = dict(DESIGN, d=d)
            y = _sim(raw, spec, 1000, seed=17, burn=1000, k_max=1000)
            p = ModelParams(**raw)
            l1 = loglik(p, spec, y, k_max=1000)
            l2 = loglik(p, spec, y, k_max=2000)
            assert abs(l2 - l1) / y.size < bound


class TestGradient:
    @pytest.mark.parametrize("kind", sorted(SPECS))
    def test_finite_difference(self, kind):
        spec = SPECS[kind]
        y = _sim(WIDE, spec if kind != "asym-avg" else TransitionSpec.lagged_return(),
                 200, seed=11)
        rng = np.random.default_rng(7)
        for _ in range(4):
            d = rng.uniform(0.35, 0.8)
            b1 = d * rng.uniform(0.3, 0.9)
            raw = dict(
                a0=rng.uniform(0.05, 0.5), a1=rng.uniform(0.05, 0.45),
                a2=rng.uniform(0.05, 0.45), b0=rng.uniform(0.05, 0.5),
                b1=b1, b2=b1 * rng.uniform(0.1, 0.9), d=d,
                gamma=rng.uniform(0.3, 2.5),
            )
            theta = ModelParams(**raw).as_array()
            g = loglik_gradient(ModelParams(**raw), spec, y, k_max=150)
            for i in range(8):
                h = 1e-6 * max(1.0, abs(theta[i]))
                up, dn = theta.copy(), theta.copy()
                up[i] += h
                dn[i] -= h
                fd = (loglik(ModelParams.from_array(up), spec, y, k_max=150)
                      - loglik(ModelParams.from_array(dn), spec, y, k_max=150)) / (2 * h)
                assert g[i] == pytest.approx(fd, rel=2e-5, abs=1e-7), (kind, i)

    def test_zero_at_conditional_variance_fixed_point(self):
        # y_t^2 == h_t makes every score term vanish; the causal filter
        # reaches that fixed point after T substitutions of y <- sqrt(h)
        spec = TransitionSpec.lagged_return()
        params = ModelParams(**WIDE)
        conv = dict(presample=1.0, h1_init=1.0, h2_init=1.0, h_init=1.0)
        y = np.full(150, 0.9)
        for _ in range(152):
            y = np.sqrt(variance_path(params, spec, y, k_max=60, **conv).h)
        g = loglik_gradient(params, spec, y, k_max=60, **conv)
        assert float(np.max(np.abs(g))) < 1e-8

    @pytest.mark.parametrize("kind", sorted(SPECS))
    def test_weight_slope_under_null(self, kind):
        # at gamma = 0 the variance responds to gamma as -(z/4)(h2 - h1);
        # checked against the filter itself by one-sided differencing
        spec = SPECS[kind]
        y = _sim(DESIGN, TransitionSpec.lagged_return(), 150, seed=23)
        p0 = ModelParams(**dict(DESIGN, gamma=0.0))
        conv = _estimation_conventions(y, spec)
        path, _, DH = _path_and_gradient(p0, spec, y, 120, conv)
        np.testing.assert_allclose(
            DH[:, 7], -0.25 * path.z * (path.h2 - path.h1), rtol=1e-12, atol=1e-15)
        eps = 1e-6
        h_eps = variance_path(ModelParams(**dict(DESIGN, gamma=eps)), spec, y,
                              k_max=120, **conv).h
        fd = (h_eps - path.h) / eps
        np.testing.assert_allclose(DH[:, 7], fd, rtol=5e-5, atol=1e-9)

    def test_requires_interior_d(self):
        y = _sim(DESIGN, TransitionSpec.lagged_return(), 60, seed=2)
        with pytest.raises(ValueError, match="0 < d < 1"):
            loglik_gradient(ModelParams(**dict(DESIGN, d=1.0, b1=0.2)),
                            TransitionSpec.lagged_return(), y)


class TestReparameterization:
    def test_round_trip(self):
        for raw in (DESIGN, WIDE):
            raw = dict(raw, b2=max(raw["b2"], 0.01), gamma=max(raw["gamma"], 0.1))
            p = ModelParams(**raw)
            u = _pack(p, "full", None, None)
            q, w, _ = _unpack(u, "full", None, None)
            np.testing.assert_allclose(q.as_array(), p.as_array(), rtol=1e-9)
            assert w is None

    def test_fixed_b2_dimension(self):
        p = ModelParams(**DESIGN)
        assert _pack(p, "full", 0.0, None).size == 7
        assert _pack(p, "null", 0.0, None).size == 6
        assert _pack(p, "hygarch", None, None, w=0.4).size == 8
        q, w, _ = _unpack(_pack(p, "hygarch", None, None, w=0.4),
                          "hygarch", None, None)
        assert w == pytest.approx(0.4, rel=1e-9)
        assert q.gamma == 0.0


@pytest.fixture(scope="module")
def data():
    return _sim(DESIGN, TransitionSpec.lagged_return(), 400, seed=42,
                burn=800, k_max=500)


@pytest.fixture(scope="module")
def full_fit(data):
    return fit(data, TransitionSpec.lagged_return(), "full", k_max=300,
               fix_b2=0.0, multistart=3)


class TestFit:
    def test_result_fields(self, data, full_fit):
        r = full_fit
        assert isinstance(r, FitResult)
        assert r.fit_kind == "full"
        assert r.n_obs == data.size and r.k_max == 300
        assert r.params.b2 == 0.0
        assert np.isfinite(r.loglik)
        assert r.loglik_per_obs == pytest.approx(r.loglik / data.size, rel=1e-14)
        assert r.presample == pytest.approx(float(np.mean(data ** 2)), rel=1e-14)
        if r.converged:
            assert r.grad_norm < 1e-6

    def test_loglik_self_consistent(self, data, full_fit):
        r = full_fit
        conv = dict(presample=r.presample, h1_init=r.presample,
                    h2_init=r.presample, h_init=r.presample,
                    threshold=r.threshold)
        again = loglik(r.params, r.spec, data, r.k_max, **conv)
        assert again == pytest.approx(r.loglik, abs=1e-8)

    def test_beats_truth(self, data, full_fit):
        at_truth = loglik(ModelParams(**DESIGN), TransitionSpec.lagged_return(),
                          data, k_max=300)
        assert full_fit.loglik >= at_truth - 1e-6

    def test_deterministic(self, data):
        a = fit(data, TransitionSpec.lagged_return(), "null", k_max=200,
                fix_b2=0.0, multistart=2)
        b = fit(data, TransitionSpec.lagged_return(), "null", k_max=200,
                fix_b2=0.0, multistart=2)
        np.testing.assert_array_equal(a.params.as_array(), b.params.as_array())
        assert a.loglik == b.loglik and a.n_iter == b.n_iter

    def test_nested_orderings(self, data, full_fit):
        null = fit(data, TransitionSpec.lagged_return(), "null", k_max=300,
                   fix_b2=0.0, multistart=3)
        hyg = fit(data, TransitionSpec.lagged_return(), "hygarch", k_max=300,
                  fix_b2=0.0, multistart=3)
        # gamma = 0 and w = 1/2 are both inside the larger families
        assert full_fit.loglik >= null.loglik - 1e-6
        assert hyg.loglik >= null.loglik - 1e-6
        assert 0.0 < hyg.w < 1.0
        assert hyg.spec.kind == "fixed-w"
        assert hyg.spec.fixed_w == pytest.approx(hyg.w)

    def test_hygarch_pinned_weight_equals_null(self, data):
        null = fit(data, TransitionSpec.lagged_return(), "null", k_max=200,
                   fix_b2=0.0, multistart=2)
        pinned = fit(data, TransitionSpec.lagged_return(), "hygarch", k_max=200,
                     fix_b2=0.0, fix_w=0.5, multistart=2)
        assert pinned.loglik == pytest.approx(null.loglik, abs=1e-9)
        assert pinned.w == 0.5

    def test_maxiter_flagged_not_raised(self, data):
        r = fit(data, TransitionSpec.lagged_return(), "null", k_max=200,
                fix_b2=0.0, multistart=1, maxiter=2)
        assert not r.converged
        assert np.isfinite(r.loglik)

    def test_user_start_honored(self, data):
        r = fit(data, TransitionSpec.lagged_return(), "full", k_max=200,
                fix_b2=0.0, multistart=1, start=ModelParams(**DESIGN))
        assert np.isfinite(r.loglik)

    def test_validation(self, data):
        spec = TransitionSpec.lagged_return()
        with pytest.raises(ValueError, match="fit_kind"):
            fit(data, spec, "ridge")
        with pytest.raises(ValueError, match="at least 50"):
            fit(data[:30], spec)
        with pytest.raises(ValueError, match="fix_b2"):
            fit(data, spec, fix_b2=0.1)
        with pytest.raises(ValueError, match="not identified"):
            fit(data, TransitionSpec.fixed_weight(0.5), "full")

    def test_asym_threshold_recorded(self):
        y = _sim(DESIGN, TransitionSpec.lagged_return(), 220, seed=5)
        r = fit(y, TransitionSpec.asym_average(), "null", k_max=150,
                fix_b2=0.0, multistart=1, maxiter=40)
        assert r.threshold == pytest.approx(
            float(np.quantile(y ** 2, 0.95)), rel=1e-12)
