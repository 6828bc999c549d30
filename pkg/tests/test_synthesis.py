"""Synthesis-chain tests: weight excess, spectral factor, level search,
interpolant solving and controller assembly."""

import numpy as np
import pytest

from delayhinf import synthesis
from delayhinf.errors import NoCrossing
from delayhinf.quasipoly import RationalFunction, RealPolynomial
from delayhinf.synthesis import (
    FirstOrderU,
    Weights,
    assemble,
    compute_E,
    gamma_data,
    gamma_opt,
    infinite_pole_test,
    interpolation_residual,
    optimal_interpolant,
    relative_degree_route,
    solve_L,
)


def _normalize_to(coeffs, target_lead):
    c = np.asarray(coeffs, dtype=float)
    return c * (target_lead / c[-1])


class TestComputeE:
    def test_constant_weight_example_level(self, w1):
        e, beta, on_axis = compute_E(0.67, w1)
        # printed listing: (0.93 + 0.44 s^2) / (0.45 (0.16 - s^2))
        num = _normalize_to(e.num.coeffs, 0.44)
        den = _normalize_to(e.den.coeffs, -0.45)
        assert np.allclose(num, [0.93, 0.0, 0.44], atol=0.005)
        assert np.allclose(den, [0.45 * 0.16, 0.0, -0.45], atol=0.005)
        assert len(beta) == 1 and on_axis[0]
        assert beta[0] == pytest.approx(1.45j, abs=5e-3)

    def test_constant_weight_has_no_rhp_zeros(self):
        w = RationalFunction(RealPolynomial([2.0]), RealPolynomial([1.0]))
        e, beta, _ = compute_E(1.0, w)
        assert e.num.degree == 0
        assert e(0.7 + 0.2j) == pytest.approx(3.0)
        assert len(beta) == 0

    def test_improper_weight_example_level(self, w1):
        e, beta, on_axis = compute_E(0.60, w1)
        num = _normalize_to(e.num.coeffs, 0.35)
        assert np.allclose(num, [0.94, 0.0, 0.35], atol=0.005)
        assert np.allclose(_normalize_to(e.den.coeffs, -0.36),
                           [0.36 * 0.16, 0.0, -0.36], atol=0.005)
        assert len(beta) == 1 and on_axis[0]


class TestSpectralFactor:
    def test_shaped_factor_constant_weight(self, gd_const):
        # printed listing: 0.67 (0.4 - s) / (0.70 + 0.50 s); normalize the
        # denominator lead to 0.50 before comparing all four numbers
        f = gd_const.shaped
        scale = 0.50 / f.den.coeffs[-1]
        num = f.num.coeffs * scale
        den = f.den.coeffs * scale
        assert np.allclose(num, [0.67 * 0.4, -0.67], atol=0.02)
        assert np.allclose(den, [0.70, 0.50], atol=0.02)
        assert f(0.0).real > 0

    def test_shaped_factor_improper_weight(self, gd_improper):
        # printed listing: 0.36 (0.4 - s) / (0.0059 s^2 + 0.31 s + 0.35)
        f = gd_improper.shaped
        scale = 0.0059 / f.den.coeffs[-1]
        num = f.num.coeffs * scale
        den = f.den.coeffs * scale
        assert np.allclose(num, [0.36 * 0.4, -0.36], atol=0.02)
        assert np.allclose(den, [0.35, 0.31, 0.0059], atol=0.02)
        assert f.relative_degree == 1  # strictly proper

    def test_scalar_identity(self):
        w1c = RationalFunction(RealPolynomial([2.0]), RealPolynomial([1.0]))
        w2c = RationalFunction(RealPolynomial([0.5]), RealPolynomial([1.0]))
        g = synthesis.spectral_factor(1.0, w1c, w2c)
        expected = (1.0 - (0.25 - 1.0) * (4.0 - 1.0)) ** -0.5
        assert g(1.3 + 0.4j) == pytest.approx(expected)

    def test_identity_residual_on_grid(self, gd_const, gd_improper):
        for gd, w2 in ((gd_const, 0.5), (gd_improper, None)):
            w = np.logspace(-3, 3, 100)
            s = 1j * w
            w2v = gd.weights.W2(s)
            dens = 1.0 - (np.conj(w2v) * w2v / gd.level**2 - 1.0) * gd.excess(s)
            g = gd.outer_spectral
            resid = np.abs(g(s) * g(-s) * dens - 1.0)
            assert np.max(resid) < 1e-8

    def test_outer_has_lhp_zeros_and_poles(self, gd_const):
        g = gd_const.outer_spectral
        assert np.all(g.zeros().real < 0)
        assert np.all(g.poles().real < 0)


class TestGammaOpt:
    def test_constant_weight_level(self, gamma_opt_const):
        assert gamma_opt_const == pytest.approx(0.57, abs=0.01)

    def test_improper_weight_level(self, gamma_opt_improper):
        assert gamma_opt_improper == pytest.approx(0.59, abs=0.01)

    def test_weight_scaling_homogeneity(self, plant_factored, weights_const,
                                        gamma_opt_const):
        scaled = gamma_opt(plant_factored, weights_const.scaled(2.0), (0.6, 2.4))
        assert scaled == pytest.approx(2.0 * gamma_opt_const, rel=2e-3)

    def test_no_crossing_raises(self, plant_factored, weights_const):
        with pytest.raises(NoCrossing):
            gamma_opt(plant_factored, weights_const, (0.9, 1.2))


class TestSolveL:
    def test_constant_weight_pair_matches_listing(self, interp_const):
        assert np.allclose(interp_const.den.coeffs, [0.65, 1.86, 1.49, 1.0], atol=0.02)
        assert np.allclose(interp_const.num.coeffs, [3.43, 2.84, 2.51, 0.79], atol=0.02)
        assert interp_const.degree_bound == 3

    def test_improper_weight_pair_matches_listing(self, interp_improper):
        assert np.allclose(interp_improper.den.coeffs, [1.61, 0.45, 1.64, 1.0], atol=0.02)
        assert np.allclose(interp_improper.num.coeffs, [2.10, 1.91, 2.45, 0.98], atol=0.02)

    def test_residuals_below_tolerance(self, plant_factored, gd_const, interp_const):
        assert interpolation_residual(interp_const, gd_const, plant_factored) < 1e-6

    def test_optimal_pair_residuals(self, plant_factored, weights_const,
                                    gamma_opt_const):
        gd, pair = optimal_interpolant(plant_factored, weights_const, gamma_opt_const)
        assert pair.degree_bound == 2
        assert interpolation_residual(pair, gd, plant_factored) < 1e-6


class TestAssemble:
    def test_central_controller_finite_on_grid(self, plant_factored, gd_const,
                                               interp_const):
        c = assemble(0.67, plant_factored, gd_const, interp_const, None)
        w = np.logspace(-2, 2, 120)
        vals = c(1j * w)
        assert np.all(np.isfinite(vals))

    def test_center_equals_num_over_den(self, plant_factored, gd_const, interp_const):
        c = assemble(0.67, plant_factored, gd_const, interp_const, None)
        s = 0.9 + 0.4j
        lu = c.num_u(s) / c.den_u(s)
        assert lu == pytest.approx(interp_const.num(s) / interp_const.den(s))

    def test_cancellation_at_excess_and_inner_zeros(self, plant_factored, gd_const,
                                                    interp_const):
        # every RHP zero of the excess and of the finite inner factor must
        # kill 1 + inner*shaped*L_U
        c = assemble(0.67, plant_factored, gd_const, interp_const,
                     FirstOrderU.constant(0.35))
        for x in gd_const.cancellation_points(plant_factored.unstable_poles):
            val = 1.0 + complex(c.nyquist_map(x))
            assert abs(val) < 1e-6

    def test_rational_branches_match_pointwise(self, plant_factored, gd_const,
                                               interp_const):
        u = FirstOrderU(gain=0.3, zero=1.5, pole=2.5)
        c = assemble(0.67, plant_factored, gd_const, interp_const, u)
        s = 0.8 + 1.7j
        assert c.den_u_rational()(s) == pytest.approx(c.den_u(s))
        assert c.num_u_rational()(s) == pytest.approx(c.num_u(s))

    def test_deflated_equals_direct_form_away_from_cancellations(
            self, plant_factored, gd_const, interp_const):
        c = assemble(0.67, plant_factored, gd_const, interp_const, None)
        s = np.array([0.9 + 0.3j, 2.0 + 5.0j, 0.1 + 0.7j])
        direct = (gd_const.excess(s) * plant_factored.inner_fin(s)
                  * plant_factored.outer_inv(s) * gd_const.shaped(s)
                  * (c.num_u(s) / c.den_u(s))
                  / (1.0 + c.nyquist_map(s)))
        assert np.allclose(c(s), direct, rtol=1e-8)


class TestInfinitePoleTest:
    def test_constant_weight_central_is_infinite(self, gd_const, interp_const):
        # tail product about 1.33 * 0.79 = 1.05 >= 1
        assert infinite_pole_test(gd_const, interp_const) is True
        f_inf = gd_const.shaped.limit_at_infinity()
        assert f_inf * abs(interp_const.tail_ratio) == pytest.approx(1.05, abs=0.02)

    def test_strictly_proper_shaped_factor_is_finite(self, gd_improper,
                                                     interp_improper):
        assert infinite_pole_test(gd_improper, interp_improper) is False

    def test_zero_center_is_finite(self, gd_const, interp_const):
        pair = synthesis.InterpolantPair(
            den=interp_const.den, num=RealPolynomial([0.0]),
            degree_bound=interp_const.degree_bound, anchor=2.0, mode="SUBOPTIMAL",
        )
        assert infinite_pole_test(gd_const, pair) is False


class TestRelativeDegreeRoute:
    def test_improper_complement_gives_finite_case(self, w1):
        w2 = RationalFunction(RealPolynomial([0.5, 0.01]), RealPolynomial([1.0]))
        assert relative_degree_route(w1, w2) == "FINITE_CASE"

    def test_constant_complement_can_be_infinite(self, w1):
        w2 = RationalFunction(RealPolynomial([0.5]), RealPolynomial([1.0]))
        assert relative_degree_route(w1, w2) == "INFINITE_POSSIBLE"

    def test_strictly_proper_w1_improper_w2(self):
        w1 = RationalFunction(RealPolynomial([1.0]), RealPolynomial([1.0, 1.0]))
        w2 = RationalFunction(RealPolynomial([0.0, 1.0]), RealPolynomial([1.0]))
        assert relative_degree_route(w1, w2) == "FINITE_CASE"


class TestFirstOrderU:
    def test_sup_norm_bound_enforced(self):
        with pytest.raises(ValueError):
            FirstOrderU(gain=0.9, zero=5.0, pole=1.0)
        u = FirstOrderU(gain=0.5, zero=1.0, pole=2.0)
        w = np.logspace(-3, 4, 200)
        assert np.max(np.abs(u(1j * w))) <= u.sup_norm + 1e-12
        assert u.sup_norm <= 1.0

    def test_constant_form(self):
        u = FirstOrderU.constant(0.35)
        assert u.is_constant
        assert u(2.3 + 1j) == pytest.approx(0.35)
