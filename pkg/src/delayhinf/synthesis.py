"""Skew-Toeplitz suboptimal synthesis for the factored delay plant.

Given mixed-sensitivity weights, the synthesis pipeline builds

  * the weight-excess rational function E (whose right-half-plane zeros,
    together with the plant's unstable poles, carry the interpolation
    conditions),
  * the outer spectral factor G of the scalar spectral density and the
    shaped factor F = G * prod (s - eta_i)/(s + eta_i) over the mirrored
    sensitivity-weight poles,
  * the central interpolant pair (num, den) solving the homogeneous
    interpolation system, and
  * controller evaluators parameterized by a norm-bounded free parameter.

The optimal performance level is located as the largest determinant
crossing of the square interpolation system over a user bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AxisRoot,
    DegenerateNullspace,
    ImproperDensity,
    L1AtMinusAZero,
    NoCrossing,
    UnsupportedMultiplicity,
)
from .plantmodel import FactoredPlant
from .quasipoly import (
    BlaschkeProduct,
    DeflatedCallable,
    DeflatedQP,
    QuasiPolynomial,
    RationalFunction,
    RealPolynomial,
    poly_roots,
    symmetrize_conjugates,
)

__all__ = [
    "Weights",
    "GammaData",
    "InterpolantPair",
    "FirstOrderU",
    "Controller",
    "compute_E",
    "spectral_factor",
    "gamma_data",
    "gamma_opt",
    "optimal_interpolant",
    "solve_L",
    "assemble",
    "infinite_pole_test",
    "relative_degree_route",
]

AXIS_BAND = 1e-6


@dataclass(frozen=True)
class Weights:
    """Mixed-sensitivity weight pair; the second entry may be improper."""

    W1: RationalFunction
    W2: RationalFunction

    def __post_init__(self):
        if self.W1.relative_degree < 0:
            raise ValueError("sensitivity weight must be proper")
        if self.W1.num.degree == 0 and self.W1.den.degree == 0:
            raise ValueError("sensitivity weight must be nonconstant")
        if self.W1.den.degree > 0:
            poles = poly_roots(self.W1.den)
            if np.any(poles.real >= -AXIS_BAND):
                raise ValueError("sensitivity weight must have open-LHP poles")

    def scaled(self, c: float) -> "Weights":
        return Weights(self.W1 * c, self.W2 * c)


def compute_E(level: float, W1: RationalFunction):
    """Weight-excess function W1(-s)W1(s)/level^2 - 1 and its RHP zeros.

    Zeros on the imaginary axis (within tolerance) are flagged, not fatal:
    they are excluded from Nyquist contours downstream.  The returned list
    holds every strict-RHP zero plus one representative (positive imaginary
    part) of each axis pair.
    """
    if level <= 0:
        raise ValueError("performance level must be positive")
    g2 = level * level
    n1r = W1.num.reflect()
    d1r = W1.den.reflect()
    num = n1r * W1.num - g2 * (d1r * W1.den)
    den = g2 * (d1r * W1.den)
    e_rat = RationalFunction(num, den, cancel_tol=0.0)
    if num.degree == 0:
        return e_rat, np.array([], dtype=complex), np.array([], dtype=bool)
    roots = poly_roots(num)
    strict = []
    axis = []
    for r in roots:
        band = AXIS_BAND * (1.0 + abs(r))
        if r.real > band:
            strict.append(r)
        elif abs(r.real) <= band and r.imag > 0:
            axis.append(complex(0.0, r.imag))
    beta = np.array(sorted(strict, key=lambda z: (z.real, z.imag))
                    + sorted(axis, key=lambda z: z.imag), dtype=complex)
    on_axis = np.array([False] * len(strict) + [True] * len(axis), dtype=bool)
    return e_rat, beta, on_axis


def _mirror_split(poly: RealPolynomial):
    """Split an even real polynomial p(s) = c * q(s) q(-s) with q stable.

    Returns (q monic-from-roots, c).  Raises AxisRoot for roots on the
    imaginary axis and ImproperDensity when the +/- pairing fails.
    """
    if poly.degree == 0:
        return RealPolynomial([1.0]), float(poly.coeffs[0])
    roots = poly_roots(poly)
    stable = [r for r in roots if r.real < -AXIS_BAND * (1.0 + abs(r))]
    anti = [r for r in roots if r.real > AXIS_BAND * (1.0 + abs(r))]
    if len(stable) + len(anti) != len(roots):
        raise AxisRoot("spectral density polynomial has an imaginary-axis root")
    if len(stable) != len(anti):
        raise ImproperDensity("roots do not split into mirror-image halves")
    m = len(stable)
    c = poly.lead * (-1.0) ** m
    q = RealPolynomial.from_roots(symmetrize_conjugates(np.array(stable)))
    return q, c


def spectral_factor(level: float, W1: RationalFunction, W2: RationalFunction,
                    identity_tol: float = 1e-8) -> RationalFunction:
    """Outer spectral factor G of (1 - (W2(-s)W2(s)/level^2 - 1) E)^{-1}.

    All zeros and poles of G lie in the open left half plane, the sign is
    normalized so G(0) > 0, and the factorization identity is verified on
    a grid to `identity_tol`.
    """
    e_rat, _, _ = compute_E(level, W1)
    g2 = level * level
    a_poly = W2.num.reflect() * W2.num - g2 * (W2.den.reflect() * W2.den)
    b_poly = g2 * (W2.den.reflect() * W2.den)
    num_poly = b_poly * e_rat.den                      # B * dE
    den_poly = b_poly * e_rat.den - a_poly * e_rat.num  # B*dE - A*nE
    q_num, c_num = _mirror_split(num_poly)
    q_den, c_den = _mirror_split(den_poly)
    ratio = c_num / c_den
    if ratio <= 0:
        raise ImproperDensity("spectral density is not positive on the axis")
    c = math.sqrt(ratio)
    g = RationalFunction(c * q_num, q_den, cancel_tol=1e-9)
    if g(0.0).real < 0:
        g = RationalFunction(-1.0 * (c * q_num), q_den, cancel_tol=0.0)
    _verify_spectral_identity(g, e_rat, a_poly, b_poly, identity_tol)
    return g


def _verify_spectral_identity(g, e_rat, a_poly, b_poly, tol):
    w = np.logspace(-3, 3, 100)
    s = 1j * w
    dens = 1.0 - (a_poly(s) / b_poly(s)) * e_rat(s)
    resid = np.abs(g(s) * g(-s) * dens - 1.0)
    if np.max(resid) > tol:
        raise ImproperDensity(
            f"spectral factor identity residual {np.max(resid):.2e} exceeds {tol:.0e}"
        )


@dataclass(frozen=True)
class GammaData:
    """Synthesis data at one performance level."""

    level: float
    weights: Weights
    excess: RationalFunction                 # E
    outer_spectral: RationalFunction         # G (sign tied to shaped factor)
    shaped: RationalFunction                 # F = G * Blaschke(mirror poles)
    excess_rhp_zeros: np.ndarray             # beta: strict RHP + axis reps
    beta_on_axis: np.ndarray                 # mask aligned with the above
    mirror_poles: np.ndarray                 # eta: RHP poles of W1(-s)
    n_weight: int = field(default=0)

    @property
    def axis_betas(self) -> np.ndarray:
        return self.excess_rhp_zeros[self.beta_on_axis]

    @property
    def strict_betas(self) -> np.ndarray:
        return self.excess_rhp_zeros[~self.beta_on_axis]

    def cancellation_points(self, alpha: np.ndarray) -> np.ndarray:
        """All points where the controller denominator must vanish: every
        axis/RHP root of the excess numerator plus the finite inner zeros."""
        pts = list(alpha)
        for b, ax in zip(self.excess_rhp_zeros, self.beta_on_axis):
            pts.append(b)
            pts.append(np.conj(b) if not ax else -b)  # axis pairs are {jb, -jb}
        # conjugates of strict betas are already roots; dedupe
        out = []
        for p in pts:
            if not any(abs(p - q) < 1e-9 * (1.0 + abs(p)) for q in out):
                out.append(complex(p))
        return np.array(sorted(out, key=lambda z: (z.real, z.imag)), dtype=complex)


def gamma_data(level: float, weights: Weights,
               factored: FactoredPlant | None = None) -> GammaData:
    """Assemble the level-dependent synthesis functions.

    The shaped factor's sign is normalized positive at the origin (the
    stored spectral factor carries the matching sign so that
    shaped = outer_spectral * Blaschke(mirror poles) holds exactly).
    """
    e_rat, beta, on_axis = compute_E(level, weights.W1)
    g = spectral_factor(level, weights.W1, weights.W2)
    eta = -poly_roots(weights.W1.den) if weights.W1.den.degree else np.array([], complex)
    eta = symmetrize_conjugates(eta)
    if len(eta) != len(beta):
        raise UnsupportedMultiplicity(
            f"{len(beta)} excess zeros vs {len(eta)} mirrored weight poles; "
            "non-minimal sensitivity weight is unsupported"
        )
    blaschke_eta = BlaschkeProduct(tuple(eta)).as_rational()
    shaped = g * blaschke_eta
    if shaped(0.0).real < 0:
        g = -1.0 * g
        shaped = -1.0 * shaped
    return GammaData(
        level=level, weights=weights, excess=e_rat, outer_spectral=g,
        shaped=shaped, excess_rhp_zeros=beta, beta_on_axis=on_axis,
        mirror_poles=eta, n_weight=len(beta),
    )


def _interp_points(gd: GammaData, factored: FactoredPlant):
    """Representative interpolation points (conjugates deduplicated).

    Yields (point, on_axis) covering the excess RHP zeros and the plant's
    unstable poles; repeated points raise UnsupportedMultiplicity.
    """
    pts = []
    for b, ax in zip(gd.excess_rhp_zeros, gd.beta_on_axis):
        if not ax and b.imag < 0:
            continue  # conjugate partner carries the rows
        pts.append((complex(b), bool(ax)))
    for a in factored.unstable_poles:
        if a.imag < 0:
            continue
        pts.append((complex(a), False))
    for i, (p, _) in enumerate(pts):
        for q, _ in pts[i + 1:]:
            if abs(p - q) < 1e-8 * (1.0 + abs(p)):
                raise UnsupportedMultiplicity(
                    f"repeated interpolation point near {p:.6g}"
                )
    return pts


def _interp_matrix(gd: GammaData, factored: FactoredPlant, degree: int) -> np.ndarray:
    """Real homogeneous system for the interpolant pair coefficients.

    Unknown layout: [den coeffs (degree+1) | num coeffs (degree+1)].
    Each representative point x with factor w = inner(x) * shaped(x)
    contributes den(x) + w num(x) = 0 and num(-x) + w den(-x) = 0; complex
    rows are split into real/imaginary parts and conjugate-redundant rows
    are dropped (axis points carry only the first condition).
    """
    rows = []
    ncoef = degree + 1
    for x, on_axis in _interp_points(gd, factored):
        w = complex(factored.inner_inf(x)) * complex(gd.shaped(x))
        powers = x ** np.arange(ncoef)
        powers_m = (-x) ** np.arange(ncoef)
        row_a = np.concatenate([powers, w * powers])        # den(x) + w num(x)
        row_b = np.concatenate([w * powers_m, powers_m])    # num(-x) + w den(-x)
        if abs(x.imag) < 1e-12 * (1.0 + abs(x)):
            rows.append(row_a.real)
            rows.append(row_b.real)
        elif on_axis:
            rows.append(row_a.real)
            rows.append(row_a.imag)
        else:
            rows.append(row_a.real)
            rows.append(row_a.imag)
            rows.append(row_b.real)
            rows.append(row_b.imag)
    m = np.array(rows)
    norms = np.max(np.abs(m), axis=1, keepdims=True)
    return m / np.where(norms > 0, norms, 1.0)


def _det_sign(gd: GammaData, factored: FactoredPlant):
    degree = gd.n_weight + factored.ell - 1
    m = _interp_matrix(gd, factored, degree)
    if m.shape[0] != m.shape[1]:
        return None, m.shape
    sign, _ = np.linalg.slogdet(m)
    return float(sign), m.shape


def gamma_opt(factored: FactoredPlant, weights: Weights, bracket,
              grid_n: int = 200, rel_tol: float = 1e-4) -> float:
    """Largest performance level in `bracket` where the square optimal-degree
    interpolation system turns singular (determinant sign change).

    Grid scan over a geometric grid followed by bisection.  Levels where
    the spectral factorization does not exist are skipped; sign changes are
    only accepted between structurally identical systems.
    """
    lo, hi = bracket
    if not (0 < lo < hi):
        raise ValueError("bracket must satisfy 0 < lo < hi")
    gammas = np.geomspace(lo, hi, grid_n)
    samples = []
    for g in gammas:
        try:
            gd = gamma_data(float(g), weights)
            sign, shape = _det_sign(gd, factored)
            samples.append((float(g), sign, shape))
        except (AxisRoot, ImproperDensity, UnsupportedMultiplicity):
            samples.append((float(g), None, None))
    crossing = None
    for (g1, s1, sh1), (g2, s2, sh2) in zip(samples, samples[1:]):
        if s1 is None or s2 is None or sh1 != sh2:
            continue
        if s1 * s2 < 0:
            crossing = (g1, g2)
    if crossing is None:
        raise NoCrossing("interpolation determinant has constant sign on the bracket")
    g1, g2 = crossing
    s1, _ = _det_sign(gamma_data(g1, weights), factored)
    while (g2 - g1) > rel_tol * g2:
        mid = 0.5 * (g1 + g2)
        try:
            sm, _ = _det_sign(gamma_data(mid, weights), factored)
        except (AxisRoot, ImproperDensity):
            break
        if sm == s1:
            g1 = mid
        else:
            g2 = mid
    return 0.5 * (g1 + g2)


@dataclass(frozen=True)
class InterpolantPair:
    """Central-interpolant polynomial pair: central controller parameter is
    num/den; both polynomials are reported with the denominator monic."""

    den: RealPolynomial          # multiplies the identity branch
    num: RealPolynomial          # multiplies the shaped branch
    degree_bound: int
    anchor: float                # extra-condition point of the suboptimal system
    mode: str

    @property
    def tail_ratio(self) -> float:
        """Exact limit of num/den at infinity from top coefficients."""
        i = self.degree_bound
        c_den = self.den.coeffs[i] if self.den.degree >= i else 0.0
        c_num = self.num.coeffs[i] if self.num.degree >= i else 0.0
        if c_den == 0.0:
            return math.inf if c_num else 0.0
        return float(c_num / c_den)


def solve_L(level: float, factored: FactoredPlant, gd: GammaData,
            mode: str = "SUBOPTIMAL", a: float = 2.0,
            residual_tol: float = 1e-6) -> InterpolantPair:
    """Solve the interpolation system for the central interpolant pair.

    OPTIMAL mode takes the null vector of the (singular) square system at
    the optimal level; SUBOPTIMAL mode appends the two extra conditions
    anchored at -a and solves the one-dimensional residual space, with the
    denominator normalized monic.
    """
    if mode not in ("OPTIMAL", "SUBOPTIMAL"):
        raise ValueError("mode must be OPTIMAL or SUBOPTIMAL")
    if abs(gd.level - level) > 1e-9 * level:
        raise ValueError("level must match the synthesis data")
    n_total = gd.n_weight + factored.ell
    degree = n_total - 1 if mode == "OPTIMAL" else n_total
    m = _interp_matrix(gd, factored, degree)
    if mode == "SUBOPTIMAL":
        if a <= 0:
            raise ValueError("anchor must be positive")
        w_a = (complex(gd.excess(a)) + 1.0) * complex(gd.shaped(a)) \
            * complex(factored.inner_inf(a))
        powers_m = (-a) ** np.arange(degree + 1)
        extra = np.concatenate([w_a.real * powers_m, powers_m])
        extra = extra / np.max(np.abs(extra))
        m = np.vstack([m, extra])
    _, svals, vh = np.linalg.svd(m)
    ncoef = degree + 1
    if mode == "OPTIMAL":
        if svals[-2] < 1e-8 * svals[0]:
            raise DegenerateNullspace("optimal interpolation nullspace dimension > 1")
        v = vh[-1]
    else:
        # more unknowns than rows: the trailing right-singular vector spans
        # the residual space; a second vanishing singular value means the
        # row system itself lost rank
        if svals[-1] < 1e-10 * svals[0]:
            raise DegenerateNullspace("suboptimal interpolation rows lost rank")
        v = vh[-1]
    den_c = v[:ncoef]
    num_c = v[ncoef:]
    if mode == "SUBOPTIMAL":
        leadd = den_c[-1]
        if abs(leadd) < 1e-10 * np.max(np.abs(v)):
            raise DegenerateNullspace("denominator polynomial lost its leading coefficient")
        den_c = den_c / leadd
        num_c = num_c / leadd
    else:
        top = v[np.argmax(np.abs(v))]
        den_c = den_c / top
        num_c = num_c / top
    pair = InterpolantPair(
        den=RealPolynomial(den_c), num=RealPolynomial(num_c),
        degree_bound=degree, anchor=a, mode=mode,
    )
    if mode == "SUBOPTIMAL" and abs(pair.den(-a)) < 1e-9 * pair.den.scale:
        raise L1AtMinusAZero("denominator polynomial vanishes at the anchor reflection")
    _check_residuals(pair, gd, factored, residual_tol)
    return pair


def _check_residuals(pair, gd, factored, tol):
    worst = interpolation_residual(pair, gd, factored)
    if worst > tol:
        raise DegenerateNullspace(
            f"interpolation residual {worst:.2e} exceeds {tol:.0e}"
        )


def interpolation_residual(pair: InterpolantPair, gd: GammaData,
                           factored: FactoredPlant) -> float:
    """Worst relative residual of the interpolation conditions."""
    worst = 0.0
    for x, _ in _interp_points(gd, factored):
        w = complex(factored.inner_inf(x)) * complex(gd.shaped(x))
        r1 = pair.den(x) + w * pair.num(x)
        s1 = abs(pair.den(x)) + abs(w * pair.num(x)) + 1e-300
        r2 = pair.num(-x) + w * pair.den(-x)
        s2 = abs(pair.num(-x)) + abs(w * pair.den(-x)) + 1e-300
        worst = max(worst, abs(r1) / s1, abs(r2) / s2)
    return worst


def optimal_interpolant(factored: FactoredPlant, weights: Weights,
                        level_guess: float, window: float = 2e-3):
    """Polish the optimal level locally and solve the singular system.

    Golden-section minimization of the smallest singular value of the
    square system over level_guess * (1 +/- window) sharpens the level far
    beyond the bisection tolerance so the null vector is clean.
    """
    def smin(level):
        gd = gamma_data(level, weights)
        m = _interp_matrix(gd, factored, gd.n_weight + factored.ell - 1)
        return np.linalg.svd(m, compute_uv=False)[-1]

    lo = level_guess * (1.0 - window)
    hi = level_guess * (1.0 + window)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = smin(x1), smin(x2)
    for _ in range(60):
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = smin(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = smin(x2)
        if hi - lo < 1e-13 * level_guess:
            break
    level = 0.5 * (lo + hi)
    gd = gamma_data(level, weights)
    pair = solve_L(level, factored, gd, mode="OPTIMAL")
    return gd, pair


@dataclass(frozen=True)
class FirstOrderU:
    """First-order free parameter gain * (zero + s)/(pole + s), sup-norm <= 1."""

    gain: float
    zero: float
    pole: float

    def __post_init__(self):
        if abs(self.gain) > 1.0 + 1e-12:
            raise ValueError("free-parameter gain must satisfy |gain| <= 1")
        if self.pole <= 0:
            raise ValueError("free-parameter pole must be positive")
        if self.pole < abs(self.gain * self.zero) - 1e-12:
            raise ValueError("pole >= |gain * zero| is required for unit sup-norm")

    @classmethod
    def constant(cls, gain: float) -> "FirstOrderU":
        return cls(gain=gain, zero=1.0, pole=1.0)

    @property
    def is_constant(self) -> bool:
        return self.zero == self.pole

    @property
    def sup_norm(self) -> float:
        # |U(jw)|^2 is monotone in w^2 for a first-order section
        return max(abs(self.gain), abs(self.gain * self.zero) / self.pole)

    @property
    def tail_value(self) -> float:
        return self.gain

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=complex)
        out = self.gain * (self.zero + s_arr) / (self.pole + s_arr)
        return complex(out) if np.ndim(s) == 0 else out


class _ZeroU:
    """Central-controller free parameter (identically zero)."""

    tail_value = 0.0
    sup_norm = 0.0
    is_constant = True

    def __call__(self, s):
        return np.zeros_like(np.asarray(s, dtype=complex)) if np.ndim(s) else 0.0


ZERO_U = _ZeroU()


class Controller:
    """Suboptimal controller evaluator with built-in cancellation handling.

    Evaluation uses the pole-free-in-RHP core
        core(s) = (den_U(s) + inner(s) shaped(s) num_U(s)) / (nE(s) nm_d(s))
    so the removable singularities at the excess zeros and finite-inner
    zeros never produce 0/0:
        C(s) = outer^{-1}(s) shaped(s) num_U(s) / (dE(s) dm_d(s) core(s)).
    """

    def __init__(self, factored: FactoredPlant, gd: GammaData,
                 pair: InterpolantPair, u=None):
        self.factored = factored
        self.gd = gd
        self.pair = pair
        self.u = u if u is not None else ZERO_U
        m_d_rat = factored.inner_fin_rational
        self._de = gd.excess.den
        self._dmd = m_d_rat.den
        denom_poly = gd.excess.num * m_d_rat.num
        cancel = gd.cancellation_points(factored.unstable_poles)
        self._denom_defl = DeflatedQP(QuasiPolynomial(((0, denom_poly),)), cancel)
        self._num_defl = DeflatedCallable(self._den_u_plus_shaped_num, cancel)
        self._cancel = cancel

    # -- branch evaluators -------------------------------------------------
    def num_u(self, s):
        """num(s) + den(-s) U(s)."""
        s_arr = np.asarray(s, dtype=complex)
        return self.pair.num(s_arr) + self.pair.den(-s_arr) * self.u(s_arr)

    def den_u(self, s):
        """den(s) + num(-s) U(s)."""
        s_arr = np.asarray(s, dtype=complex)
        return self.pair.den(s_arr) + self.pair.num(-s_arr) * self.u(s_arr)

    def _den_u_plus_shaped_num(self, s):
        s_arr = np.asarray(s, dtype=complex)
        mnf = self.factored.inner_inf(s_arr) * self.gd.shaped(s_arr)
        return self.den_u(s_arr) + mnf * self.num_u(s_arr)

    def denominator_core(self, s):
        """(den_U + inner*shaped*num_U) / (nE nm_d): zero exactly at the
        residual unstable controller poles."""
        return self._num_defl(s) / self._denom_defl(s)

    def nyquist_map(self, s):
        """inner * shaped * num_U / den_U (the open-loop map around -1)."""
        s_arr = np.asarray(s, dtype=complex)
        mnf = self.factored.inner_inf(s_arr) * self.gd.shaped(s_arr)
        return mnf * self.num_u(s_arr) / self.den_u(s_arr)

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=complex)
        out = (self.factored.outer_inv(s_arr) * self.gd.shaped(s_arr)
               * self.num_u(s_arr)
               / (self._de(s_arr) * self._dmd(s_arr) * self.denominator_core(s_arr)))
        return complex(out) if np.ndim(s) == 0 else out

    # -- rational forms for a first-order free parameter --------------------
    def den_u_rational(self) -> RationalFunction:
        return self._branch_rational(self.pair.den, self.pair.num)

    def num_u_rational(self) -> RationalFunction:
        return self._branch_rational(self.pair.num, self.pair.den)

    def _branch_rational(self, own: RealPolynomial, other: RealPolynomial):
        if isinstance(self.u, _ZeroU):
            return RationalFunction(own, RealPolynomial([1.0]), cancel_tol=0.0)
        if not isinstance(self.u, FirstOrderU):
            raise TypeError("rational branch forms need a first-order free parameter")
        u = self.u
        pole = RealPolynomial([u.pole, 1.0])
        zero = RealPolynomial([u.zero * u.gain, u.gain])
        return RationalFunction(own * pole + other.reflect() * zero, pole,
                                cancel_tol=0.0)


def assemble(level: float, factored: FactoredPlant, gd: GammaData,
             pair: InterpolantPair, u=None) -> Controller:
    """Controller for a free parameter with unit sup-norm bound."""
    if u is not None and not callable(u):
        raise TypeError("free parameter must be callable or None")
    if abs(gd.level - level) > 1e-9 * level:
        raise ValueError("level must match the synthesis data")
    return Controller(factored, gd, pair, u)


def infinite_pole_test(gd: GammaData, pair: InterpolantPair, u=None) -> bool:
    """True when the controller has infinitely many unstable poles.

    Exact high-frequency limit from leading coefficients: the limit of
    |shaped| times |L_U| at infinity reaching one is the threshold.
    """
    f_inf = gd.shaped.limit_at_infinity()
    if f_inf == 0.0:
        return False
    k = pair.tail_ratio
    if u is None or isinstance(u, _ZeroU):
        lu_inf = abs(k) if math.isfinite(k) else math.inf
    else:
        if not isinstance(u, FirstOrderU):
            raise TypeError("tail test needs a first-order (or zero) free parameter")
        sgn = -1.0 if pair.degree_bound % 2 else 1.0
        ut = sgn * u.tail_value
        den = 1.0 + k * ut
        if den == 0.0:
            return True
        lu_inf = abs((k + ut) / den)
    return f_inf * lu_inf >= 1.0


def relative_degree_route(W1: RationalFunction, W2: RationalFunction) -> str:
    """FINITE_CASE when the shaped spectral factor is forced strictly proper
    (proper sensitivity weight, improper complementary weight)."""
    if W1.relative_degree >= 0 and W2.relative_degree < 0:
        return "FINITE_CASE"
    return "INFINITE_POSSIBLE"
