import math

import numpy as np
import pytest
from scipy import integrate, stats

from nriap.errors import ToleranceError
from nriap.quadrature import (
    gauss_legendre,
    graded_breaks,
    integrate_halfline,
    integrate_logscale,
    panel_rule,
)
from nriap.tables import CumulativeTable


class TestPanels:
    def test_gauss_legendre_is_exact_for_polynomials(self):
        x, w = gauss_legendre(8)
        for k in range(16):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            assert np.dot(w, x**k) == pytest.approx(exact, abs=1e-14)

    def test_panel_rule_integrates_piecewise_function(self):
        nodes, weights = panel_rule([0.0, 0.3, 1.0], 16)
        f = np.where(nodes < 0.3, 1.0, nodes**2)
        assert np.dot(weights, f) == pytest.approx(0.3 + (1 - 0.027) / 3, rel=1e-14)

    def test_graded_breaks_cluster_at_singular_point(self):
        b = graded_breaks(0.0, 1.0, points=[0.5], singular=[0.25])
        assert b[0] == 0.0 and b[-1] == 1.0 and 0.5 in b
        assert np.all(np.diff(b) > 0)
        assert np.min(np.abs(b - 0.25)[b != 0.25]) < 1e-12

    def test_graded_mesh_resolves_log_singularity(self):
        # int_0^1 log|x - 1/3| dx
        exact = (2 / 3) * math.log(2 / 3) - 2 / 3 + (1 / 3) * math.log(1 / 3) - 1 / 3
        nodes, weights = panel_rule(graded_breaks(0.0, 1.0, singular=[1 / 3], levels=30), 24)
        assert np.dot(weights, np.log(np.abs(nodes - 1 / 3))) == pytest.approx(exact, rel=1e-12)


class TestHalfLine:
    def test_power_law_tail(self):
        val, err = integrate_halfline(lambda s: 1.0 / (1.0 + s) ** 3, atol=1e-12)
        assert val == pytest.approx(0.5, abs=1e-11)
        assert err < 1e-12

    def test_bounded_phase_inversion_integrand(self):
        # P(G1 <= G2) for independent Gamma(a) and Gamma(b), by inverting
        # the characteristic function of G1 - G2; equals a Beta(a, b) c.d.f.
        a, b = 1.5, 0.7

        def integrand(s):
            mod = (1 + s * s) ** (-(a + b) / 2)
            return mod * np.sin((a - b) * np.arctan(s)) / s

        val, _ = integrate_halfline(integrand, atol=1e-12)
        assert 0.5 - val / math.pi == pytest.approx(stats.beta.cdf(0.5, a, b), abs=1e-10)

    def test_batch_members_are_independent(self):
        a = np.array([1.0, 2.0, 4.0])
        val, _ = integrate_halfline(lambda s: np.exp(-a[:, None] * s[None, :]), atol=1e-13)
        np.testing.assert_allclose(val, 1.0 / a, rtol=1e-11)

    def test_nonconvergent_integral_raises_with_estimate(self):
        with pytest.raises(ToleranceError) as info:
            integrate_halfline(lambda s: 1.0 / (1.0 + s), atol=1e-10, max_panels=40)
        assert info.value.achieved is not None


class TestLogScale:
    @pytest.mark.parametrize("p", [1.5, 2.0, 5.0])
    def test_matches_scipy_on_algebraic_decay(self, p):
        f = lambda s: 1.0 / (1.0 + s) ** p  # noqa: E731
        val, _ = integrate_logscale(f, 1e-10, atol=1e-12)
        ref = integrate.quad(f, 0, np.inf, epsabs=1e-13)[0]
        assert val == pytest.approx(ref, abs=1e-9)

    def test_agrees_with_doubling_panels(self):
        f = lambda s: np.exp(-s) * np.cos(s) ** 2  # noqa: E731
        a, _ = integrate_logscale(f, 1e-12, atol=1e-13)
        b, _ = integrate_halfline(f, atol=1e-13)
        assert a == pytest.approx(b, abs=1e-11)


class TestCumulativeTable:
    def test_cdf_and_quantile_are_inverse(self):
        tab = CumulativeTable(lambda x: 1.0 + np.sin(3 * x) ** 2, 0.0, 2.0)
        q = np.linspace(0.0, 1.0, 101)
        np.testing.assert_allclose(tab.cdf(tab.quantile(q)), q, atol=1e-12)

    def test_total_matches_quad(self):
        f = lambda x: np.exp(-x) * (1 + x)  # noqa: E731
        tab = CumulativeTable(f, 0.0, 3.0, breaks=(1.0,))
        assert tab.total == pytest.approx(integrate.quad(f, 0, 3)[0], rel=1e-13)
