import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdti import bounds
from pdti.bounds import (
    GFunction,
    bks_g,
    commutator_g,
    fourier_l1_bound,
    gaussian_profile,
    gfunction_bound,
    heinz_g,
    heinz_plus_g,
    interp_g,
    l2_norm_on_line,
    l1_bound_objective,
    psi_norm_upper_fourier,
    psi_norm_upper_kernel,
    psi_norm_upper_shifted,
    sup_norm,
)
from pdti.errors import DivergenceError, ParameterError

# square-integrable entries used across the property tests
INTEGRABLE = [
    heinz_g(1, 0.25),
    heinz_g(2, 0.5),
    heinz_g(3, 1.0),
    heinz_plus_g(1, 0.25),
    heinz_plus_g(1, 0.5),
    commutator_g(0.5, 0.5, 0.5),
    commutator_g(0.3, 0.2, 0.8),
    bks_g(0.3),
    bks_g(0.7),
    interp_g(0.5, 0.5),
    interp_g(0.2, 0.6),
    interp_g(0.4, 0.9, "plus"),
]
IDS = [f"{g.label}{tuple(g.params.values())}" for g in INTEGRABLE]


def direct_ratio(p, q, c, s, t):
    return (np.exp(p * t) + s * np.exp(q * t)) / (np.exp(c * t) + s * np.exp(-c * t))


class TestProfiles:
    def test_heinz_closed_form(self):
        t = np.array([-3.0, -0.5, 0.7, 2.0])
        assert np.allclose(heinz_g(1, 0.25)(t), np.sinh(t / 4) / np.sinh(t / 2), rtol=1e-14)

    def test_heinz_half_is_zero(self):
        assert np.all(heinz_g(1, 0.5)(np.linspace(-5, 5, 11)) == 0)

    def test_heinz_zero_is_one(self):
        assert np.allclose(heinz_g(1, 0.0)(np.linspace(-30, 30, 13)), 1.0, atol=1e-15)

    @pytest.mark.parametrize("m,omega", [(2, 0.5), (1, 0.25), (3, 1.0)])
    def test_heinz_origin_limit(self, m, omega):
        g = heinz_g(m, omega)
        # series branch at 0 against the direct quotient just outside it
        assert g(0.0) == pytest.approx((m - 2 * omega) / m, rel=1e-14)
        t = 1e-6
        direct = math.sinh((m - 2 * omega) * t / 2) / math.sinh(m * t / 2)
        assert g(t) == pytest.approx(direct, rel=1e-9)

    def test_heinz_plus_value(self):
        # cosh(1/4) / cosh(1/2)
        assert heinz_plus_g(1, 0.25)(1.0) == pytest.approx(0.914676, abs=1e-6)
        assert heinz_plus_g(1, 0.25)(1.0) == pytest.approx(math.cosh(0.25) / math.cosh(0.5), rel=1e-14)

    def test_heinz_plus_half(self):
        t = np.linspace(-4, 4, 9)
        assert np.allclose(heinz_plus_g(2, 1.0)(t), 1 / np.cosh(t), rtol=1e-14)

    def test_commutator_limits(self):
        assert np.allclose(commutator_g(0.0, 0.5, 0.5)(np.linspace(-10, 10, 7)), 1.0)
        assert commutator_g(1.0, 1.0, 0.0)(1.0) == 0.0
        assert commutator_g(0.5, 0.5, 0.5)(0.0) == pytest.approx(0.5)
        assert commutator_g(0.3, 0.2, 0.8)(1e-6) == pytest.approx(0.7, rel=1e-6)

    def test_commutator_constraint(self):
        with pytest.raises(ParameterError):
            commutator_g(0.5, 0.3, 0.3)

    def test_bks_values(self):
        assert bks_g(0.3)(0.0) == pytest.approx(0.3)
        assert bks_g(0.3)(1e-6) == pytest.approx(0.3, rel=1e-9)
        assert bks_g(0.5)(2.0) == pytest.approx(0.44340, abs=1e-5)
        assert np.allclose(bks_g(1.0)(np.linspace(-9, 9, 7)), 1.0)

    def test_interp_limits(self):
        assert np.allclose(interp_g(1, 1)(np.linspace(-9, 9, 7)), 1.0)
        assert np.all(interp_g(0, 0)(np.linspace(-9, 9, 7)) == 0)
        assert interp_g(0.2, 0.6)(0.0) == pytest.approx(0.4)
        assert interp_g(0.2, 0.6)(1e-6) == pytest.approx(0.4, rel=1e-6)

    @pytest.mark.parametrize(
        "make",
        [lambda: heinz_g(0, 0.0), lambda: heinz_g(1, 2.0), lambda: bks_g(1.5), lambda: interp_g(0.5, 1.2), lambda: interp_g(0.5, 0.5, "x")],
    )
    def test_parameter_errors(self, make):
        with pytest.raises(ParameterError):
            make()

    @pytest.mark.parametrize("g", INTEGRABLE, ids=IDS)
    def test_derivative_matches_finite_difference(self, g):
        t = np.random.default_rng(5).uniform(-20, 20, 100)
        h = 1e-5
        fd = (g(t + h) - g(t - h)) / (2 * h)
        assert np.max(np.abs(fd - g.deriv(t))) <= 1e-7

    @pytest.mark.parametrize(
        "g",
        [heinz_g(1, 0.25), heinz_g(3, 1.0), heinz_plus_g(1, 0.25), bks_g(0.3), commutator_g(0.5, 0.5, 0.5), interp_g(0.5, 0.5, "plus")],
        ids=lambda g: g.label,
    )
    def test_even(self, g):
        t = np.linspace(0.1, 15, 40)
        assert np.allclose(g(t), g(-t), rtol=1e-12, atol=1e-15)

    @given(st.floats(-40, 40))
    def test_matches_direct_quotient(self, t):
        g = interp_g(0.2, 0.6)
        if abs(t) > 1e-3:
            assert g(t) == pytest.approx(float(direct_ratio(0.1, -0.3, 0.5, -1, t)), rel=1e-10, abs=1e-300)

    def test_no_overflow_far_out(self):
        t = np.array([-800.0, 800.0])
        for g in INTEGRABLE:
            assert np.all(np.isfinite(g(t)))
            assert np.all(np.isfinite(g.deriv(t)))

    def test_scalar_in_scalar_out(self):
        assert np.ndim(heinz_g(1, 0.25)(0.3)) == 0


class TestL2:
    def test_gaussian(self):
        assert l2_norm_on_line(gaussian_profile().eval) == pytest.approx(math.pi**0.25, abs=1e-8)

    def test_zero(self):
        assert l2_norm_on_line(lambda t: 0.0 * t) == 0.0

    def test_constant_diverges(self):
        with pytest.raises(DivergenceError):
            l2_norm_on_line(heinz_g(1, 0.0).eval)

    def test_heinz_quarter_closed_form(self):
        # sinh(t/4) / sinh(t/2) = 1 / (2 cosh(t/4)): ||g||^2 = 2 and ||g'||^2 = 1/24
        g = heinz_g(1, 0.25)
        assert l2_norm_on_line(g.eval) == pytest.approx(math.sqrt(2), rel=1e-10)
        assert l2_norm_on_line(g.deriv) == pytest.approx(math.sqrt(1 / 24), rel=1e-10)

    def test_slow_algebraic_decay(self):
        # 1 / (1 + t^2) has ||.||^2 = pi / 2
        assert l2_norm_on_line(lambda t: 1 / (1 + t * t)) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-8)


class TestFourierBound:
    def test_heinz_quarter_fixture(self):
        b = fourier_l1_bound(heinz_g(1, 0.25))
        expected = 2 * math.sqrt(2 * math.sqrt(2) * math.sqrt(1 / 24))
        assert b.value == pytest.approx(expected, rel=1e-10)
        assert b.value == pytest.approx(1.519671371303185, rel=1e-10)
        assert b.c_star == pytest.approx(math.sqrt(1 / 24) / math.sqrt(2), rel=1e-10)

    def test_unit_norms(self):
        assert float(l1_bound_objective(1.0, 1.0, 1.0)) == pytest.approx(2 * math.sqrt(2))

    @pytest.mark.parametrize("g", INTEGRABLE, ids=IDS)
    def test_value_identity(self, g):
        b = fourier_l1_bound(g)
        assert b.value == pytest.approx(math.sqrt(2 * b.c_star) * b.l2_g + math.sqrt(2 / b.c_star) * b.l2_gprime, abs=1e-12)
        assert b.value == pytest.approx(2 * math.sqrt(2 * b.l2_g * b.l2_gprime), rel=1e-12)

    @pytest.mark.parametrize("g", INTEGRABLE, ids=IDS)
    def test_minimal_over_random_c(self, g):
        b = fourier_l1_bound(g)
        cs = np.exp(np.random.default_rng(1).uniform(-8, 8, 50))
        assert np.all(l1_bound_objective(cs, b.l2_g, b.l2_gprime) >= b.value * (1 - 1e-14))

    @pytest.mark.parametrize("g", INTEGRABLE, ids=IDS)
    def test_dominates_sup(self, g):
        b = fourier_l1_bound(g)
        assert b.value >= sup_norm(g)

    def test_zero_profile(self):
        b = fourier_l1_bound(heinz_g(1, 0.5))
        assert b.value == 0.0
        assert psi_norm_upper_fourier(heinz_g(1, 0.5)) == 0.0

    def test_scaling_doubles(self):
        g = bks_g(0.4)
        g2 = GFunction("twice", lambda t: 2 * g(t), lambda t: 2 * g.deriv(t), integrable=True)
        assert fourier_l1_bound(g2).value == pytest.approx(2 * fourier_l1_bound(g).value, rel=1e-10)

    @pytest.mark.parametrize("make", [lambda: heinz_g(1, 0.0), lambda: heinz_g(2, 2.0), lambda: bks_g(1.0), lambda: heinz_plus_g(1, 0.0)])
    def test_boundary_is_vacuous(self, make):
        b = gfunction_bound(make())
        assert b.vacuous and not b.integrable
        rec = b.to_record()
        assert rec["bound"] is None and rec["vacuous"] is True

    def test_record_fields(self):
        rec = gfunction_bound(bks_g(0.5)).to_record()
        assert set(rec) >= {"label", "params", "l2_g", "l2_gprime", "c_star", "bound", "integrable"}

    def test_shoulder_bounds_agree(self):
        g = bks_g(0.5)
        assert psi_norm_upper_fourier(g) == fourier_l1_bound(g).value
        assert psi_norm_upper_shifted(g, 0.0, 1.0, 1.0) == psi_norm_upper_fourier(g)

    def test_shifted_factors(self):
        g = bks_g(0.5)
        base = psi_norm_upper_fourier(g)
        assert psi_norm_upper_shifted(g, 0.3, 2.0, 3.0) == pytest.approx(6 * base)
        assert psi_norm_upper_shifted(heinz_g(1, 0.5), 0.3, 2.0, 3.0) == 0.0


class TestKernelBound:
    def fourier(self, s, t):
        return np.exp(1j * s * t)

    def test_boxcar(self):
        box = lambda s: 1.0 if -1 <= s <= 1 else 0.0
        val = psi_norm_upper_kernel(self.fourier, box, 1.0, 1.0, 2.0, (-2.0, 2.0), kernel_sup=lambda s: 1.0)
        assert val == pytest.approx(4.0, rel=2e-3)

    def test_boxcar_grid_kernel_sup(self):
        box = lambda s: 1.0 if -1 <= s <= 1 else 0.0
        val = psi_norm_upper_kernel(self.fourier, box, 1.0, 1.0, 2.0, (-2.0, 2.0), n_s=801, n_t=11)
        assert val == pytest.approx(4.0, rel=1e-2)

    def test_zero_transform(self):
        assert psi_norm_upper_kernel(self.fourier, lambda s: 0.0, 1.0, 1.0, 1.0, (-1.0, 1.0)) == 0.0

    def test_constants_multiply(self):
        box = lambda s: 1.0 if abs(s) <= 1 else 0.0
        a = psi_norm_upper_kernel(self.fourier, box, 1.0, 1.0, 1.0, (-2, 2), kernel_sup=lambda s: 1.0)
        b = psi_norm_upper_kernel(self.fourier, box, 2.0, 3.0, 1.0, (-2, 2), kernel_sup=lambda s: 1.0)
        assert b == pytest.approx(6 * a)

    def test_infinite_range(self):
        with pytest.raises(DivergenceError):
            psi_norm_upper_kernel(self.fourier, lambda s: 1.0, 1.0, 1.0, 1.0, (-math.inf, math.inf))


def test_sup_norms():
    assert sup_norm(bks_g(0.5)) == pytest.approx(0.5)
    assert sup_norm(heinz_plus_g(1, 0.25)) == pytest.approx(1.0)
    assert sup_norm(interp_g(0.2, 0.6)) == pytest.approx(0.43025, abs=1e-5)


def test_catalog_constructors():
    assert set(bounds.CATALOG) == {"heinz", "heinz_plus", "commutator", "bks", "interp", "interp_plus"}
    assert bounds.CATALOG["interp_plus"](0.5, 0.5).label == "interp_plus"
