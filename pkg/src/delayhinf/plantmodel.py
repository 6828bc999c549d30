"""Plant ingestion, classification and inner-outer factorization.

A raw delay plant is a ratio of quasi-polynomials.  Dividing both sides by
a stable polynomial (s+1)^d puts it into a normalized form whose terms are
proper stable rational functions times delay factors.  A polynomial test on
the high-frequency term ratios decides whether the numerator/denominator
systems have finitely many right-half-plane zeros (F-systems); a system
whose conjugate passes the test is an I-system.  Depending on the case, the
plant factors into an infinite-dimensional inner part, a finite Blaschke
product and an outer part, each exposed as a structured evaluator with
removable singularities handled by deflation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AssumptionA1Violation,
    AxisZero,
    DegenerateLeadTerm,
    InnerCheckFailed,
)
from .quasipoly import (
    BlaschkeProduct,
    ContourBox,
    DeflatedQP,
    DelayRational,
    QuasiPolynomial,
    RationalFunction,
    RealPolynomial,
    conjugate,
    poly_roots,
    qp_rhp_roots,
)

__all__ = [
    "RawPlant",
    "NormalizedPlant",
    "SystemClass",
    "AssumptionReport",
    "FactoredPlant",
    "normalize",
    "classify",
    "check_assumptions",
    "factorize",
    "default_rhp_box",
    "axis_zero_margin",
]

AXIS_TOL = 1e-6
UNIT_CIRCLE_BAND = 1e-8


@dataclass(frozen=True)
class RawPlant:
    """Delay plant as a ratio of quasi-polynomials."""

    numerator: QuasiPolynomial
    denominator: QuasiPolynomial

    def __call__(self, s):
        return self.numerator(s) / self.denominator(s)

    def a1_violations(self) -> list[str]:
        """Structural assumption checks: delay ordering and degree caps."""
        out = []
        num, den = self.numerator, self.denominator
        if num.delays[0] < den.delays[0]:
            out.append("A.1(b): smallest numerator delay below smallest denominator delay")
        ndeg = [p.degree for _, p in num.terms]
        ddeg = [p.degree for _, p in den.terms]
        i_max = int(np.argmax(ndeg))
        j_max = int(np.argmax(ddeg))
        if ndeg[i_max] > ddeg[j_max]:
            out.append(
                f"A.1(c): max numerator degree {ndeg[i_max]} exceeds max denominator degree {ddeg[j_max]}"
            )
        if num.delays[i_max] < den.delays[j_max]:
            out.append(
                "A.1(c): delay of max-degree numerator term below that of max-degree denominator term"
            )
        for _, p in list(num.terms) + list(den.terms):
            if p.is_zero:
                out.append("A.1(a): a delay term has an identically zero polynomial")
        return out


@dataclass(frozen=True)
class NormalizedPlant:
    """Plant rewritten as a ratio of proper-stable delay systems."""

    R: DelayRational
    T: DelayRational
    stabilizer: RealPolynomial
    raw: RawPlant

    def __call__(self, s):
        return self.raw.numerator(s) / self.raw.denominator(s)


def normalize(raw: RawPlant) -> NormalizedPlant:
    """Divide numerator and denominator terms by (s+1)^d.

    d is the largest polynomial degree appearing in the plant, so every
    resulting term is proper and stable and the ratio is unchanged.
    """
    bad = raw.a1_violations()
    if bad:
        raise AssumptionA1Violation("; ".join(bad))
    d = max(p.degree for _, p in list(raw.numerator.terms) + list(raw.denominator.terms))
    stab = RealPolynomial.from_roots([-1.0] * d) if d else RealPolynomial([1.0])
    R = DelayRational(tuple(raw.numerator.terms), stab)
    T = DelayRational(tuple(raw.denominator.terms), stab)
    return NormalizedPlant(R=R, T=T, stabilizer=stab, raw=raw)


@dataclass(frozen=True)
class SystemClass:
    """Finitely-many-RHP-zeros classification of a delay system."""

    tag: str  # "F_SYSTEM" | "I_SYSTEM" | "INDETERMINATE"
    phi_roots: np.ndarray
    xi: tuple
    detail: str = ""

    @property
    def is_f(self) -> bool:
        return self.tag == "F_SYSTEM"

    @property
    def is_i(self) -> bool:
        return self.tag == "I_SYSTEM"


def _axis_ratio(qp: QuasiPolynomial, w):
    """|qp(jw)| normalized by the absolute-coefficient envelope at w.

    Scale-free closeness-to-zero measure: the envelope sums |c_k| w^k over
    every term, so both term cancellation and plain polynomial zeros show
    up as dips while high-frequency growth is normalized away.
    """
    w = np.asarray(w, dtype=float)
    s = 1j * w
    local = np.zeros(w.shape)
    for _, p in qp.terms:
        local += np.polynomial.polynomial.polyval(w, np.abs(p.coeffs))
    local = np.maximum(local, 1e-300)
    return np.abs(qp(s)) / local


def _axis_min_modulus(qp: QuasiPolynomial, w_max: float, n: int = 4000) -> float:
    """Min normalized axis modulus over a dense grid with local refinement."""
    w = np.linspace(0.0, w_max, n)
    vals = _axis_ratio(qp, w)
    k = int(np.argmin(vals))
    lo = w[max(k - 1, 0)]
    hi = w[min(k + 1, n - 1)]
    vf = vals[k: k + 1]
    for _ in range(40):
        wf = np.linspace(lo, hi, 12)
        vf = _axis_ratio(qp, wf)
        j = int(np.argmin(vf))
        lo, hi = wf[max(j - 1, 0)], wf[min(j + 1, 11)]
        if hi - lo < 1e-12 * (1.0 + hi):
            break
    return float(min(np.min(vals), np.min(vf)))


def axis_zero_margin(qp: QuasiPolynomial, w_max: float | None = None) -> float:
    """Normalized distance of |qp| from zero along the imaginary axis."""
    if w_max is None:
        w_max = _default_omega_cap(qp)
    return _axis_min_modulus(qp, w_max)


def _default_omega_cap(qp: QuasiPolynomial) -> float:
    pos = [d for d in qp.delays if d > 0]
    cauchy = max(_cauchy_bound(p) for _, p in qp.terms)
    if not pos:
        return 4.0 * (1.0 + cauchy)
    return max(20.0 * math.pi / float(min(pos)), 4.0 * (1.0 + cauchy))


def _cauchy_bound(p: RealPolynomial) -> float:
    if p.degree == 0 or p.is_zero:
        return 1.0
    return 1.0 + float(np.max(np.abs(p.coeffs[:-1])) / abs(p.lead))


def default_rhp_box(*qps: QuasiPolynomial, indent_radius: float = 1e-3) -> ContourBox:
    """Finite window standing in for the right half plane.

    Wide enough in imaginary extent to capture several periods of any delay
    root chain, and in real extent to cover polynomial root bounds.
    """
    re_max = 1.0 + max(
        max(_cauchy_bound(p) for _, p in qp.terms) for qp in qps
    )
    im_cap = max(_default_omega_cap(qp) for qp in qps)
    return ContourBox(0.0, re_max, -im_cap, im_cap, indent_radius=indent_radius)


def _xi_limits(D: DelayRational) -> tuple:
    """High-frequency limits of each term against the leading term.

    Computed exactly from coefficients: zero when the degree drops, the
    leading-coefficient ratio when degrees match, infinite otherwise.
    """
    lead = D.numerators[0]
    if lead.is_zero:
        raise DegenerateLeadTerm("leading delay term vanishes identically")
    out = []
    for p in D.numerators[1:]:
        if p.is_zero or p.degree < lead.degree:
            out.append(0.0)
        elif p.degree == lead.degree:
            out.append(float(p.lead / lead.lead))
        else:
            out.append(math.inf)
    return tuple(out)


def _finite_zero_test(D: DelayRational):
    """Root-modulus test for finitely many RHP zeros.

    Returns (verdict, phi_roots, xi); verdict None flags a root on the unit
    circle (boundary case excluded by the strict inequality).
    """
    xi = _xi_limits(D)
    if any(math.isinf(x) for x in xi):
        return False, np.array([], dtype=complex), xi
    delays = D.delays
    n_den = 1
    for d in delays:
        n_den = n_den * d.denominator // math.gcd(n_den, d.denominator)
    exps = [int((d - delays[0]) * n_den) for d in delays]
    deg = max(exps)
    coeffs = np.zeros(deg + 1)
    coeffs[0] = 1.0
    for e, x in zip(exps[1:], xi):
        if x != 0.0:
            coeffs[e] += x
    phi = RealPolynomial(coeffs)
    if phi.degree == 0:
        return True, np.array([], dtype=complex), xi
    roots = poly_roots(phi)
    mods = np.abs(roots)
    if np.any(np.abs(mods - 1.0) <= UNIT_CIRCLE_BAND):
        return None, roots, xi
    return bool(np.min(mods) > 1.0), roots, xi


def classify(D: DelayRational, w_max: float | None = None) -> SystemClass:
    """Classify a delay system as F-system, I-system or indeterminate.

    Raises AxisZero when the system has a zero on (or within tolerance of)
    the imaginary axis, which the classification excludes.
    """
    qp = D.numerator_qp()
    if axis_zero_margin(qp, w_max) < AXIS_TOL:
        raise AxisZero("delay system has an imaginary-axis zero within tolerance")
    verdict, phi_roots, xi = _finite_zero_test(D)
    if verdict is None:
        return SystemClass("INDETERMINATE", phi_roots, xi,
                           "root-modulus test hit the unit circle")
    if verdict:
        return SystemClass("F_SYSTEM", phi_roots, xi)
    cverdict, _, _ = _finite_zero_test(conjugate(D))
    if cverdict is None:
        return SystemClass("INDETERMINATE", phi_roots, xi,
                           "conjugate root-modulus test hit the unit circle")
    if cverdict:
        return SystemClass("I_SYSTEM", phi_roots, xi)
    return SystemClass("INDETERMINATE", phi_roots, xi,
                       "neither the system nor its conjugate passes the finite-zero test")


@dataclass(frozen=True)
class AssumptionReport:
    """Per-assumption pass/fail evidence for a normalized plant."""

    a1: tuple
    a2: tuple
    a3: tuple
    a4: tuple
    case: str | None
    cls_R: SystemClass | None
    cls_T: SystemClass | None

    @property
    def passed(self) -> bool:
        return all(flag for flag, _ in (self.a1, self.a2, self.a3, self.a4))

    def as_dict(self) -> dict:
        return {
            "A1": {"passed": self.a1[0], "detail": self.a1[1]},
            "A2": {"passed": self.a2[0], "detail": self.a2[1]},
            "A3": {"passed": self.a3[0], "detail": self.a3[1]},
            "A4": {"passed": self.a4[0], "detail": self.a4[1]},
            "case": self.case,
            "numerator_class": self.cls_R.tag if self.cls_R else None,
            "denominator_class": self.cls_T.tag if self.cls_T else None,
            "passed": self.passed,
        }


def check_assumptions(plant: NormalizedPlant) -> AssumptionReport:
    """Evaluate the plant assumptions; failures are reported, not raised."""
    a1_bad = plant.raw.a1_violations()
    a1 = (not a1_bad, "; ".join(a1_bad) or "delay ordering and degree caps hold")

    m_num = axis_zero_margin(plant.raw.numerator)
    m_den = axis_zero_margin(plant.raw.denominator)
    a2_ok = m_num >= AXIS_TOL and m_den >= AXIS_TOL
    a2 = (a2_ok, f"axis margins: zeros {m_num:.2e}, poles {m_den:.2e}")

    cls_T = cls_R = None
    try:
        cls_T = classify(plant.T)
        a3 = (cls_T.is_f, f"denominator system classified {cls_T.tag}")
    except (AxisZero, DegenerateLeadTerm) as exc:
        a3 = (False, f"denominator classification failed: {exc}")

    case = None
    try:
        cls_R = classify(plant.R)
        h1 = plant.R.delays[0]
        tau1 = plant.T.delays[0]
        if cls_R.is_f and h1 > tau1:
            case = "FF"
            a4 = (a3[0], "case (ii): both systems F with strict leading-delay gap")
        elif cls_R.is_i:
            case = "IF"
            a4 = (a3[0], "case (i): numerator I-system over F-system denominator")
        elif cls_R.is_f:
            # F without a delay gap: usable only if the conjugate also passes
            if _finite_zero_test(conjugate(plant.R))[0]:
                case = "IF"
                a4 = (a3[0], "case (i): numerator is also I-system (no delay gap)")
            else:
                a4 = (False,
                      "both systems F but equal leading delays and the conjugate test fails")
        else:
            a4 = (False, f"numerator system classified {cls_R.tag}: {cls_R.detail}")
    except (AxisZero, DegenerateLeadTerm) as exc:
        a4 = (False, f"numerator classification failed: {exc}")
    if not a4[0]:
        case = None

    return AssumptionReport(a1=a1, a2=a2, a3=a3, a4=a4, case=case,
                            cls_R=cls_R, cls_T=cls_T)


class _InnerDelayFactor:
    """Infinite-dimensional inner factor evaluator.

    Case IF: exp(-(h1-tau1)s) * B(s) * Q1(s) / Qbar(s), with B the Blaschke
    product over the conjugate system's RHP zeros (which deflate Qbar).
    Case FF: exp(-(h1-tau1)s) * B(s), B over the numerator's RHP zeros.
    """

    def __init__(self, delay_gap: float, blaschke: BlaschkeProduct,
                 num_qp: QuasiPolynomial | None, den_defl: DeflatedQP | None):
        self.delay_gap = delay_gap
        self.blaschke = blaschke
        self.num_qp = num_qp
        self.den_defl = den_defl

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=complex)
        if self.num_qp is None:
            core = self.blaschke(s_arr)
        else:
            core = self.num_qp(s_arr) / (
                self.den_defl(s_arr) * self.blaschke.denominator_factor(s_arr)
            )
        if self.delay_gap:
            core = core * np.exp(-self.delay_gap * s_arr)
        if np.ndim(s) == 0:
            return complex(core)
        return core


class _OuterFactor:
    """Outer factor evaluator: deflated top/bottom quasi-polynomials with
    Blaschke denominators restoring the cancelled inner parts."""

    def __init__(self, top: DeflatedQP, top_b: BlaschkeProduct,
                 bot: DeflatedQP, bot_b: BlaschkeProduct):
        self.top = top
        self.top_b = top_b
        self.bot = bot
        self.bot_b = bot_b

    def __call__(self, s):
        return (self.top(s) * self.top_b.denominator_factor(s)) / (
            self.bot(s) * self.bot_b.denominator_factor(s)
        )

    def inv(self, s):
        return (self.bot(s) * self.bot_b.denominator_factor(s)) / (
            self.top(s) * self.top_b.denominator_factor(s)
        )


@dataclass(frozen=True)
class FactoredPlant:
    """Inner-outer factorization P = inner_inf * outer / inner_fin."""

    inner_inf: _InnerDelayFactor
    inner_fin: BlaschkeProduct
    outer: _OuterFactor
    unstable_poles: np.ndarray
    case: str
    plant: NormalizedPlant
    inner_zeros: np.ndarray  # zeros generating the Blaschke part of inner_inf

    @property
    def ell(self) -> int:
        return len(self.unstable_poles)

    @property
    def inner_fin_rational(self) -> RationalFunction:
        return self.inner_fin.as_rational()

    def outer_inv(self, s):
        return self.outer.inv(s)

    def __call__(self, s):
        """Reconstruct the plant from its factors."""
        return self.inner_inf(s) * self.outer(s) / self.inner_fin(s)


def factorize(plant: NormalizedPlant, cls_R: SystemClass | None = None,
              cls_T: SystemClass | None = None,
              unimodularity_tol: float = 1e-6) -> FactoredPlant:
    """Build the plant factorization for case IF or FF.

    Case FF (both systems F with a strict leading-delay gap) keeps the
    numerator delay structure inside a pure delay times Blaschke product;
    case IF forms the conjugate-system ratio, kept as a structured
    evaluator because it is infinite dimensional by nature.
    """
    if cls_R is None:
        cls_R = classify(plant.R)
    if cls_T is None:
        cls_T = classify(plant.T)
    if not cls_T.is_f:
        raise AxisZero(f"denominator system must be an F-system, got {cls_T.tag}")

    h1 = plant.R.delays[0]
    tau1 = plant.T.delays[0]
    delay_gap = float(h1 - tau1)
    t_qp = plant.T.numerator_qp().shifted(tau1)
    alpha = qp_rhp_roots(lambda s: t_qp(s), default_rhp_box(t_qp))
    m_d = BlaschkeProduct(tuple(alpha))
    bot_defl = DeflatedQP(t_qp, alpha)

    if cls_R.is_f and h1 > tau1:
        case = "FF"
        r_qp = plant.R.numerator_qp()
        zeros = qp_rhp_roots(lambda s: r_qp(s), default_rhp_box(r_qp))
        blaschke = BlaschkeProduct(tuple(zeros))
        inner = _InnerDelayFactor(delay_gap, blaschke, None, None)
        outer = _OuterFactor(DeflatedQP(r_qp, zeros), blaschke, bot_defl, m_d)
    else:
        rbar = conjugate(plant.R)
        rbar_qp = rbar.numerator_qp()
        if not _finite_zero_test(rbar)[0]:
            raise AxisZero(
                "numerator system is neither F with delay gap nor I; factorization undefined"
            )
        case = "IF"
        # the conjugate enters the factorization only up to an inner sign;
        # normalize its lowest-delay leading coefficient positive so the
        # inner/outer split (and everything downstream of it) is reproducible
        if rbar_qp.terms[0][1].lead < 0:
            rbar_qp = QuasiPolynomial(tuple((d, -p) for d, p in rbar_qp.terms))
        zeros = qp_rhp_roots(lambda s: rbar_qp(s), default_rhp_box(rbar_qp))
        blaschke = BlaschkeProduct(tuple(zeros))
        r1_qp = plant.R.numerator_qp().shifted(h1)
        rbar_defl = DeflatedQP(rbar_qp, zeros)
        inner = _InnerDelayFactor(delay_gap, blaschke, r1_qp, rbar_defl)
        outer = _OuterFactor(rbar_defl, blaschke, bot_defl, m_d)

    factored = FactoredPlant(
        inner_inf=inner, inner_fin=m_d, outer=outer,
        unstable_poles=np.asarray(alpha, dtype=complex), case=case,
        plant=plant, inner_zeros=np.asarray(zeros, dtype=complex),
    )
    _verify_inner(factored, unimodularity_tol)
    return factored


def _verify_inner(f: FactoredPlant, tol: float):
    w = np.logspace(-2, 3, 200)
    dev_n = np.max(np.abs(np.abs(f.inner_inf(1j * w)) - 1.0))
    dev_d = np.max(np.abs(np.abs(f.inner_fin(1j * w)) - 1.0))
    if dev_n > tol or dev_d > tol:
        raise InnerCheckFailed(
            f"inner factors deviate from unit modulus by {max(dev_n, dev_d):.2e}"
        )
