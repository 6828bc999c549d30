"""Plant normalization, classification and factorization tests."""

import numpy as np
import pytest

from delayhinf import plantmodel
from delayhinf.errors import AssumptionA1Violation
from delayhinf.plantmodel import (
    RawPlant,
    check_assumptions,
    classify,
    default_rhp_box,
    factorize,
    normalize,
)
from delayhinf.quasipoly import (
    DelayRational,
    QuasiPolynomial,
    RealPolynomial,
    qp_winding_count,
)


class TestNormalize:
    def test_worked_example_divides_by_square(self, plant_raw, plant_norm):
        assert plant_norm.stabilizer.degree == 2
        assert np.allclose(plant_norm.stabilizer.coeffs, [1.0, 2.0, 1.0])
        assert np.allclose(plant_norm.R.numerators[0].coeffs, [3.0, 1.0])
        assert np.allclose(plant_norm.T.numerators[0].coeffs, [0.0, 0.0, 1.0])
        s = 0.7 + 0.9j
        assert plant_norm.R(s) / plant_norm.T(s) == pytest.approx(plant_raw(s))

    def test_delay_free_plant_single_terms(self):
        raw = RawPlant(
            QuasiPolynomial((("0", [-2.0, 1.0]),)),
            QuasiPolynomial((("0", [3.0, 4.0, 1.0]),)),
        )
        norm = normalize(raw)
        assert len(norm.R.terms) == 1 and len(norm.T.terms) == 1
        assert norm.stabilizer.degree == 2

    def test_delay_ordering_violation_rejected(self):
        raw = RawPlant(
            QuasiPolynomial((("1/10", [1.0, 1.0]),)),   # h1 = 0.1
            QuasiPolynomial((("1/5", [1.0, 0.0, 1.0]),)),  # tau1 = 0.2 > h1
        )
        with pytest.raises(AssumptionA1Violation):
            normalize(raw)


class TestClassify:
    def test_denominator_is_f_system(self, plant_norm):
        cls = classify(plant_norm.T)
        assert cls.tag == "F_SYSTEM"
        # degree drops kill both high-frequency ratios
        assert cls.xi == (0.0, 0.0)
        assert len(cls.phi_roots) == 0

    def test_numerator_is_i_system(self, plant_norm):
        cls = classify(plant_norm.R)
        assert cls.tag == "I_SYSTEM"
        assert cls.xi == (2.0,)
        # 1 + 2 r^2 has roots of modulus 1/sqrt(2) (quadratic oracle)
        assert len(cls.phi_roots) == 2
        assert np.allclose(np.abs(cls.phi_roots), 1.0 / np.sqrt(2.0), atol=1e-12)

    def test_single_term_system_is_f(self):
        den = RealPolynomial([1.0, 1.0])
        d = DelayRational((("0", [2.0, 1.0]),), den)
        assert classify(d).tag == "F_SYSTEM"

    def test_invariant_under_biproper_stable_scaling(self, plant_norm):
        # multiply every term by (s+2)/(s+3): tag must not change
        extra_num = RealPolynomial([2.0, 1.0])
        extra_den = RealPolynomial([3.0, 1.0])
        for system in (plant_norm.R, plant_norm.T):
            scaled = DelayRational(
                tuple((d, p * extra_num) for d, p in system.terms),
                system.common_den * extra_den,
            )
            assert classify(scaled).tag == classify(system).tag


class TestCheckAssumptions:
    def test_worked_example_passes_case_one(self, plant_norm):
        rep = check_assumptions(plant_norm)
        assert rep.passed
        assert rep.case == "IF"
        assert rep.cls_R.tag == "I_SYSTEM"
        assert rep.cls_T.tag == "F_SYSTEM"

    def test_axis_pole_fails_a2(self):
        raw = RawPlant(
            QuasiPolynomial((("0", [1.0, 1.0]),)),
            QuasiPolynomial((("0", [4.0, 0.0, 1.0]),)),  # poles at +/- 2j
        )
        rep = check_assumptions(normalize(raw))
        assert not rep.a2[0]
        assert not rep.passed

    def test_equal_lead_delays_without_conjugate_route_fails_a4(self):
        # numerator F-system whose conjugate has an exploding term ratio
        raw = RawPlant(
            QuasiPolynomial((("0", [2.0, 1.0]), ("1/2", [0.5]))),
            QuasiPolynomial((("0", [3.0, 4.0, 1.0]),)),
        )
        rep = check_assumptions(normalize(raw))
        assert rep.cls_T.tag == "F_SYSTEM"
        assert not rep.a4[0]
        assert rep.case is None


class TestFactorize:
    def test_finite_inner_matches_reported_coefficients(self, plant_factored):
        r = plant_factored.inner_fin_rational
        num = r.num.coeffs / r.num.coeffs[-1]
        den = r.den.coeffs / r.den.coeffs[-1]
        assert np.allclose(num, [3.79, -0.93, 1.0], atol=0.01)
        assert np.allclose(den, [3.79, 0.93, 1.0], atol=0.01)

    def test_conjugate_blaschke_zero(self, plant_factored):
        assert plant_factored.case == "IF"
        assert len(plant_factored.inner_zeros) == 1
        assert plant_factored.inner_zeros[0] == pytest.approx(0.247, abs=2e-3)

    def test_unstable_pole_list(self, plant_factored):
        poles = plant_factored.unstable_poles
        assert plant_factored.ell == 2
        assert poles[1] == pytest.approx(0.4672 + 1.8890j, abs=2e-3)

    def test_delay_free_plant_single_rhp_zero(self):
        raw = RawPlant(
            QuasiPolynomial((("0", [-2.0, 1.0]),)),       # zero at +2
            QuasiPolynomial((("0", [3.0, 4.0, 1.0]),)),   # stable poles
        )
        f = factorize(normalize(raw))
        assert f.ell == 0
        assert len(f.inner_fin) == 0
        s = np.array([0.5 + 0.3j, 2.5, 1j * 1.7])
        expected = (s - 2.0) / (s + 2.0)
        assert np.allclose(f.inner_inf(s), expected, rtol=1e-9)
        assert np.max(np.abs(np.abs(f.inner_inf(1j * np.logspace(-2, 2, 60))) - 1)) < 1e-10

    def test_reconstruction_matches_plant(self, plant_norm, plant_factored):
        w = np.logspace(-2, 3, 200)
        target = plant_norm(1j * w)
        got = plant_factored(1j * w)
        assert np.max(np.abs(got - target) / np.abs(target)) < 1e-6

    def test_unimodularity_on_grid(self, plant_factored):
        w = np.logspace(-2, 3, 200)
        assert np.max(np.abs(np.abs(plant_factored.inner_inf(1j * w)) - 1)) < 1e-6
        assert np.max(np.abs(np.abs(plant_factored.inner_fin(1j * w)) - 1)) < 1e-6

    def test_outer_factor_is_zero_free_in_rhp(self, plant_factored):
        box = default_rhp_box(plant_factored.plant.raw.numerator,
                              plant_factored.plant.raw.denominator)
        # moderate sub-box keeps the contour cheap; the outer factor has
        # neither zeros nor poles in the half plane
        from delayhinf.quasipoly import ContourBox

        sub = ContourBox(0.0, box.re_max, -40.0, 40.0)
        assert qp_winding_count(lambda s: plant_factored.outer(s), sub) == 0

    def test_outer_inverse_consistency(self, plant_factored):
        s = 0.9 + 2.3j
        assert plant_factored.outer(s) * plant_factored.outer_inv(s) == pytest.approx(1.0)
