"""Tests for the infinite-unstable-pole-case stabilization search."""

import numpy as np
import pytest

from delayhinf import plantmodel, stabinf, synthesis
from delayhinf.quasipoly import QuasiPolynomial, RationalFunction, RealPolynomial
from delayhinf.stabinf import (
    AsymptoticData,
    admissible_uinf,
    asymptotics,
    certify,
    l1u_stable_region,
    objective,
    search,
    stable_gain_interval,
)
from delayhinf.synthesis import FirstOrderU, InterpolantPair


@pytest.fixture(scope="module")
def asym(gd_const, interp_const):
    return asymptotics(gd_const, interp_const)


class TestAsymptotics:
    def test_worked_example_tail_data(self, asym):
        assert asym.tail_ratio == pytest.approx(0.79, abs=0.01)
        assert asym.tail_gain == pytest.approx(1.33, abs=0.01)
        assert asym.parity == 1

    def test_equal_pair_gives_unit_ratio(self, interp_const, gd_const):
        pair = InterpolantPair(den=interp_const.den, num=interp_const.den,
                               degree_bound=interp_const.degree_bound,
                               anchor=2.0, mode="SUBOPTIMAL")
        assert asymptotics(gd_const, pair).tail_ratio == 1.0

    def test_strictly_proper_shaped_factor(self, gd_improper, interp_improper):
        assert asymptotics(gd_improper, interp_improper).tail_gain == 0.0


def admissible_scan_oracle(f, k, parity, step=1e-3):
    """Direct inequality scan in the parity-adjusted variable."""
    ut = np.arange(-1.0, 1.0 + step / 2, step)
    denom = 1.0 + k * ut
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.abs((k + ut) / denom)
    ok = m < 1.0 / f
    ok[np.abs(denom) < 1e-12] = False
    sign = -1.0 if parity % 2 else 1.0
    return ut * sign, ok


class TestAdmissibleInterval:
    def test_worked_example_interval(self, asym):
        ivs = admissible_uinf(asym).intervals
        assert len(ivs) == 1
        assert ivs[0].lo == pytest.approx(0.095, abs=0.01)
        assert ivs[0].hi == pytest.approx(0.96, abs=0.01)

    def test_small_tail_gain_admits_everything(self):
        ad = AsymptoticData(tail_gain=0.8, tail_ratio=0.5, parity=0)
        ivs = admissible_uinf(ad).intervals
        assert len(ivs) == 1
        assert (ivs[0].lo, ivs[0].hi) == (-1.0, 1.0)

    def test_large_ratio_and_gain_admits_nothing(self):
        ad = AsymptoticData(tail_gain=1.2, tail_ratio=1.5, parity=0)
        assert admissible_uinf(ad).is_empty

    def test_randomized_against_inequality_scan(self):
        rng = np.random.default_rng(2024)
        done = 0
        while done < 100:
            f = float(rng.uniform(0.2, 2.0))
            k = float(rng.uniform(-2.0, 2.0))
            parity = int(rng.integers(0, 2))
            if abs(abs(k) - 1.0) < 5e-3 or abs(f - 1.0) < 5e-3:
                continue  # resolution-limited boundary cases
            ad = AsymptoticData(tail_gain=f, tail_ratio=k, parity=parity)
            iv = admissible_uinf(ad)
            us, ok = admissible_scan_oracle(f, k, parity)
            mine = np.array([iv.contains(float(u)) for u in us])
            disagree = us[mine != ok]
            ends = [e for i in iv.intervals for e in (i.lo, i.hi)] + [-1.0, 1.0]
            for u in disagree:
                assert min(abs(u - e) for e in ends) < 1.5e-3, (f, k, parity, u)
            done += 1


class TestDenominatorBranchStability:
    def test_worked_example_constant_gain_interval(self, interp_const):
        iv = stable_gain_interval(interp_const)
        assert iv.lo == pytest.approx(-0.19, abs=0.02)
        assert iv.hi == pytest.approx(0.46, abs=0.02)

    def test_zero_parameter_reduces_to_denominator_roots(self, interp_const):
        # oracle: companion-matrix roots of the bare denominator polynomial
        roots = np.roots(interp_const.den.coeffs[::-1])
        assert np.all(roots.real < 0)
        kept = l1u_stable_region(interp_const, [FirstOrderU.constant(0.0)])
        assert len(kept) == 1

    def test_wide_section_approaches_constant_verdict(self, interp_const):
        for g in (-0.1, 0.2, 0.42):
            wide = FirstOrderU(gain=g, zero=999.0, pole=1000.0)
            const = FirstOrderU.constant(g)
            verdict_wide = bool(l1u_stable_region(interp_const, [wide]))
            verdict_const = bool(l1u_stable_region(interp_const, [const]))
            assert verdict_wide == verdict_const


class TestObjective:
    def test_crossing_structure_matches_reported_minimizer(self, gd_const,
                                                           interp_const):
        # crossing-frequency curve falls, peak-gain curve rises; the
        # max-scalarization minimum sits near gain 0.35
        us = np.arange(0.15, 0.46, 0.01)
        js = []
        for u in us:
            om, em = objective(FirstOrderU.constant(float(u)), gd_const, interp_const)
            js.append(max(om, em))
        best = us[int(np.argmin(js))]
        assert best == pytest.approx(0.35, abs=0.03)

    def test_no_crossing_reports_zero_frequency(self, gd_const, interp_const):
        tame = InterpolantPair(den=interp_const.den,
                               num=RealPolynomial(1e-3 * interp_const.num.coeffs),
                               degree_bound=interp_const.degree_bound,
                               anchor=2.0, mode="SUBOPTIMAL")
        om, em = objective(None, gd_const, tame)
        assert om == 0.0
        assert em < 1.0

    def test_peak_at_least_one_when_crossing_exists(self, gd_const, interp_const):
        for u in (0.15, 0.25, 0.40):
            om, em = objective(FirstOrderU.constant(u), gd_const, interp_const)
            if om > 0:
                assert em >= 1.0


def dense_indented_winding(f, segs, n=30000):
    total = 0.0
    for seg_fn, _ in segs:
        t = np.linspace(0.0, 1.0, n)
        v = np.asarray(f(seg_fn(t)), dtype=complex)
        total += float(np.sum(np.angle(v[1:] / v[:-1])))
    return int(round(total / (2 * np.pi)))


class TestCertify:
    def test_reported_parameter_is_certified(self, plant_factored, gd_const,
                                             interp_const):
        res = certify(FirstOrderU.constant(0.35), plant_factored, gd_const,
                      interp_const, rho=0.67)
        assert res.encirclements == 2
        assert res.required == 2
        assert res.stable

    def test_flag_matches_dense_winding_oracle(self, plant_factored, gd_const,
                                               interp_const):
        from delayhinf.quasipoly import _box_segments
        from delayhinf.synthesis import assemble

        u = FirstOrderU.constant(0.10)
        res = certify(u, plant_factored, gd_const, interp_const, rho=0.67)
        ctrl = assemble(0.67, plant_factored, gd_const, interp_const, u)
        exclusions = []
        for b in gd_const.axis_betas:
            exclusions.extend([complex(0, b.imag), complex(0, -b.imag)])
        segs = _box_segments(res.box, exclusions)
        z_direct = dense_indented_winding(lambda s: 1.0 + ctrl.nyquist_map(s), segs)
        assert (z_direct == res.required) == res.stable

    def test_doubling_contour_height_is_invariant(self, plant_factored, gd_const,
                                                  interp_const):
        from delayhinf.quasipoly import ContourBox, qp_winding_count
        from delayhinf.synthesis import assemble

        u = FirstOrderU.constant(0.35)
        res = certify(u, plant_factored, gd_const, interp_const, rho=0.67)
        ctrl = assemble(0.67, plant_factored, gd_const, interp_const, u)
        big = ContourBox(res.box.re_min, res.box.re_max,
                         2 * res.box.im_min, 2 * res.box.im_max,
                         indent_radius=res.box.indent_radius)
        exclusions = []
        for b in gd_const.axis_betas:
            exclusions.extend([complex(0, b.imag), complex(0, -b.imag)])
        w = qp_winding_count(lambda s: 1.0 + ctrl.nyquist_map(s), big, exclusions)
        assert w == res.encirclements

    def test_inadmissible_parameter_rejected(self, plant_factored, gd_const,
                                             interp_const):
        with pytest.raises(ValueError):
            certify(FirstOrderU.constant(0.0), plant_factored, gd_const,
                    interp_const, rho=0.67)


class TestTheoremSoundness:
    def test_touch_only_gain_curve_certifies_required_zero(self):
        # the interpolation conditions force |shaped * L_U| = 1 exactly at
        # every axis excess zero, so the sufficient "below one everywhere"
        # condition can only appear as a touch at those excluded
        # frequencies; with no unstable poles the certificate must then be
        # stable with zero required encirclements
        raw = plantmodel.RawPlant(
            QuasiPolynomial((("0", [-2.0, 1.0]),)),
            QuasiPolynomial((("0", [3.0, 4.0, 1.0]),)),
        )
        f = plantmodel.factorize(plantmodel.normalize(raw))
        w1 = RationalFunction(RealPolynomial([1.0, 0.1]), RealPolynomial([0.4, 1.0]))
        weights = synthesis.Weights(
            W1=w1, W2=RationalFunction(RealPolynomial([0.5]), RealPolynomial([1.0])))
        gd = synthesis.gamma_data(1.2, weights)
        pair = synthesis.solve_L(1.2, f, gd)
        beta_freq = abs(gd.axis_betas[0].imag)
        found = []
        for g in np.arange(-0.9, 0.91, 0.05):
            u = FirstOrderU.constant(float(g))
            if not l1u_stable_region(pair, [u]):
                continue
            if synthesis.infinite_pole_test(gd, pair, u):
                continue
            om, em = objective(u, gd, pair)
            if om <= beta_freq + 1e-6 and em <= 1.0 + 1e-2:
                found.append(u)
        assert found
        for u in found:
            res = certify(u, f, gd, pair, rho=1.2)
            assert res.required == 0
            assert res.stable


class TestSearch:
    def test_worked_example_returns_reported_gain(self, plant_factored,
                                                  weights_const, gamma_opt_const):
        res, gd, pair = search([0.67], plant_factored, weights_const,
                               gamma_value=gamma_opt_const)
        assert res.stable
        assert res.rho == 0.67
        assert res.u.is_constant
        assert res.u.gain == pytest.approx(0.35, abs=0.03)

    def test_overall_admissible_set_matches_report(self, gd_const, interp_const):
        ad = asymptotics(gd_const, interp_const)
        lemma_iv = admissible_uinf(ad).intervals[0]
        stab_iv = stable_gain_interval(interp_const)
        lo = max(lemma_iv.lo, stab_iv.lo)
        hi = min(lemma_iv.hi, stab_iv.hi)
        assert lo == pytest.approx(0.095, abs=0.01)
        assert hi == pytest.approx(0.46, abs=0.02)

    def test_schedule_below_optimal_level_rejected(self, plant_factored,
                                                   weights_const, gamma_opt_const):
        with pytest.raises(ValueError):
            search([0.5], plant_factored, weights_const,
                   gamma_value=gamma_opt_const)
