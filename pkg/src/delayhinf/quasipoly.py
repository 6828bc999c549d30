"""Quasi-polynomial arithmetic and right-half-plane root analysis.

The analytic substrate of the toolbox: real polynomials, quasi-polynomials
(finite sums of polynomials times exponential delay factors), rational and
delay-rational transfer functions, and contour-based zero counting.

Root certificates come from the argument principle: a winding count over a
rectangular contour (with semicircular indentations around flagged
imaginary-axis points) bounds the zero hunt, recursive box subdivision
isolates zeros, and Newton polishing refines them.  Polynomial roots use an
Aberth-Ehrlich simultaneous iteration so no eigensolver is needed on the
main path; companion-matrix results serve as an independent oracle in the
test-suite only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import numpy.polynomial.polynomial as npoly

from .errors import ContourThroughZero, NonConvergence, RootCountMismatch

__all__ = [
    "RealPolynomial",
    "QuasiPolynomial",
    "RationalFunction",
    "DelayRational",
    "ContourBox",
    "BlaschkeProduct",
    "DeflatedQP",
    "DeflatedCallable",
    "poly_roots",
    "qp_eval",
    "qp_winding_count",
    "qp_rhp_roots",
    "conjugate",
    "symmetrize_conjugates",
]

_TRIM_REL = 1e-12


def _trim(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coefficients must be a non-empty 1-D sequence")
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(1)
    keep = np.nonzero(np.abs(c) > _TRIM_REL * scale)[0]
    return np.array(c[: keep[-1] + 1], dtype=float)


@dataclass(frozen=True)
class RealPolynomial:
    """Real polynomial stored as ascending-degree coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = _trim(self.coeffs)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_roots(cls, roots, lead: float = 1.0) -> "RealPolynomial":
        """Monic-from-roots polynomial scaled by `lead`; conjugate pairs realified."""
        if len(roots) == 0:
            return cls(np.array([lead]))
        c = npoly.polyfromroots(np.asarray(roots, dtype=complex))
        if np.max(np.abs(c.imag)) > 1e-8 * max(np.max(np.abs(c.real)), 1e-300):
            raise ValueError("root set is not closed under conjugation")
        return cls(lead * c.real)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    @property
    def lead(self) -> float:
        return float(self.coeffs[-1])

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __call__(self, s):
        return npoly.polyval(s, self.coeffs)

    def derivative(self) -> "RealPolynomial":
        return RealPolynomial(npoly.polyder(self.coeffs))

    def reflect(self) -> "RealPolynomial":
        """p(-s): flips the sign of odd-degree coefficients."""
        signs = (-1.0) ** np.arange(len(self.coeffs))
        return RealPolynomial(self.coeffs * signs)

    def monic(self) -> "RealPolynomial":
        return RealPolynomial(self.coeffs / self.lead)

    def __mul__(self, other):
        if isinstance(other, RealPolynomial):
            return RealPolynomial(npoly.polymul(self.coeffs, other.coeffs))
        return RealPolynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __add__(self, other: "RealPolynomial") -> "RealPolynomial":
        return RealPolynomial(npoly.polyadd(self.coeffs, other.coeffs))

    def __sub__(self, other: "RealPolynomial") -> "RealPolynomial":
        return RealPolynomial(npoly.polysub(self.coeffs, other.coeffs))

    def __neg__(self) -> "RealPolynomial":
        return RealPolynomial(-self.coeffs)

    def __repr__(self):
        return f"RealPolynomial({np.array2string(self.coeffs, precision=6)})"


ONE = RealPolynomial(np.array([1.0]))


def _quadratic_roots(c0: complex, c1: complex, c2: complex) -> list[complex]:
    # numerically stable: avoid cancellation in -b +/- sqrt(disc)
    disc = c1 * c1 - 4.0 * c2 * c0
    sq = np.sqrt(complex(disc))
    if c1.real * sq.real + c1.imag * sq.imag >= 0.0:
        q = -0.5 * (c1 + sq)
    else:
        q = -0.5 * (c1 - sq)
    roots = []
    roots.append(q / c2)
    roots.append(c0 / q if q != 0 else -c1 / (2.0 * c2))
    return roots


def symmetrize_conjugates(roots: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """Pair roots of a real-coefficient object into exact conjugate pairs.

    Near-real roots snap to the real axis; paired roots are averaged so the
    returned list is closed under conjugation to machine precision.
    """
    roots = np.asarray(roots, dtype=complex)
    out = []
    used = np.zeros(len(roots), dtype=bool)
    order = np.lexsort((roots.imag, np.abs(roots.imag), roots.real))
    for i in order:
        if used[i]:
            continue
        z = roots[i]
        used[i] = True
        band = tol * (1.0 + abs(z))
        if abs(z.imag) <= band:
            out.append(complex(z.real, 0.0))
            continue
        best, best_d = -1, np.inf
        for j in range(len(roots)):
            if used[j]:
                continue
            d = abs(roots[j] - np.conj(z))
            if d < best_d:
                best, best_d = j, d
        if best >= 0 and best_d <= 10 * band:
            used[best] = True
            zz = 0.5 * (z + np.conj(roots[best]))
            out.append(zz)
            out.append(np.conj(zz))
        else:
            out.append(z)
    out.sort(key=lambda r: (r.real, r.imag))
    return np.array(out, dtype=complex)


def poly_roots(p, tol: float = 1e-9, max_iter: int = 100) -> np.ndarray:
    """All roots of a nonconstant real polynomial, with multiplicity.

    Aberth-Ehrlich simultaneous iteration from a circle of Cauchy-bound
    radius; degrees one and two use closed forms.  Roots of real input are
    returned conjugate-paired and sorted by (re, im).

    Raises NonConvergence if the iteration stalls or a residual check
    `|p(root)| <= tol_res * max|coeff| * max(1,|root|)^deg` fails.
    """
    if isinstance(p, RealPolynomial):
        c = np.asarray(p.coeffs, dtype=float)
    else:
        c = _trim(p)
    deg = len(c) - 1
    if deg < 1:
        raise ValueError("poly_roots requires a nonconstant polynomial")
    scale = np.max(np.abs(c))

    # roots at the origin come out exactly
    nz = np.nonzero(np.abs(c) > _TRIM_REL * scale)[0]
    k0 = nz[0]
    roots = [0.0 + 0.0j] * k0
    c = c[k0:]
    deg = len(c) - 1
    if deg >= 1:
        if deg == 1:
            roots.append(complex(-c[0] / c[1]))
        elif deg == 2:
            roots.extend(_quadratic_roots(*[complex(v) for v in c]))
        else:
            roots.extend(_aberth(c, max_iter))
    roots = symmetrize_conjugates(np.array(roots, dtype=complex))
    res_scale = scale * np.maximum(1.0, np.abs(roots)) ** (len(c) - 1 + k0)
    resid = np.abs(npoly.polyval(roots, np.concatenate([np.zeros(k0), c])))
    if np.any(resid > max(tol, 1e-9) * res_scale * 1e3):
        raise NonConvergence(
            f"polynomial root residual {np.max(resid / res_scale):.2e} too large"
        )
    return roots


def _aberth(c: np.ndarray, max_iter: int) -> list[complex]:
    deg = len(c) - 1
    dc = npoly.polyder(c)
    r_hi = 1.0 + np.max(np.abs(c[:-1]) / abs(c[-1]))
    r_geo = (abs(c[0]) / abs(c[-1])) ** (1.0 / deg)
    radius = min(max(r_geo, 1e-6), r_hi)
    ang = 2.0 * np.pi * np.arange(deg) / deg + np.pi / (2.0 * deg) + 0.13
    z = radius * np.exp(1j * ang)
    for _ in range(max_iter):
        pv = npoly.polyval(z, c)
        dpv = npoly.polyval(z, dc)
        dpv = np.where(np.abs(dpv) < 1e-300, 1e-300, dpv)
        w = pv / dpv
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        ssum = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - w * ssum
        denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
        step = w / denom
        z = z - step
        if np.max(np.abs(step) / (1.0 + np.abs(z))) < 1e-15:
            break
    else:
        # fall through to the residual gate in poly_roots
        pass
    # final Newton polish
    for _ in range(2):
        pv = npoly.polyval(z, c)
        dpv = npoly.polyval(z, dc)
        mask = np.abs(dpv) > 1e-300
        z = np.where(mask, z - pv / np.where(mask, dpv, 1.0), z)
    return list(z)


def _as_fraction(delay) -> Fraction:
    if isinstance(delay, Fraction):
        return delay
    if isinstance(delay, int):
        return Fraction(delay)
    if isinstance(delay, str):
        return Fraction(delay)
    raise TypeError(
        f"delays must be exact rationals (Fraction, int or 'num/den' string), got {delay!r}"
    )


@dataclass(frozen=True)
class QuasiPolynomial:
    """Finite sum sum_i p_i(s) exp(-h_i s) with exact rational delays h_i."""

    terms: tuple

    def __post_init__(self):
        norm = []
        for delay, poly in self.terms:
            d = _as_fraction(delay)
            if d < 0:
                raise ValueError("delays must be nonnegative")
            if not isinstance(poly, RealPolynomial):
                poly = RealPolynomial(np.asarray(poly, dtype=float))
            norm.append((d, poly))
        norm.sort(key=lambda t: t[0])
        if not norm:
            raise ValueError("a quasi-polynomial needs at least one term")
        for (d1, _), (d2, _) in zip(norm, norm[1:]):
            if d1 == d2:
                raise ValueError("delays must be strictly increasing")
        object.__setattr__(self, "terms", tuple(norm))
        object.__setattr__(self, "_delays_f", np.array([float(d) for d, _ in norm]))

    @property
    def delays(self) -> tuple:
        return tuple(d for d, _ in self.terms)

    @property
    def scale(self) -> float:
        return max(p.scale for _, p in self.terms)

    def __call__(self, s):
        return qp_eval(self, s)

    def derivative(self) -> "QuasiPolynomial":
        # d/ds [p e^{-hs}] = (p' - h p) e^{-hs}
        return QuasiPolynomial(
            tuple((d, p.derivative() - float(d) * p) for d, p in self.terms)
        )

    def shifted(self, delta) -> "QuasiPolynomial":
        """Multiply by exp(delta*s): subtract delta from every delay."""
        delta = _as_fraction(delta)
        return QuasiPolynomial(tuple((d - delta, p) for d, p in self.terms))

    def delay_denominator(self) -> int:
        """Common integer N with every delay equal to an integer over N."""
        n = 1
        for d in self.delays:
            n = n * d.denominator // math.gcd(n, d.denominator)
        return n


def qp_eval(q: QuasiPolynomial, s):
    """Evaluate sum_i p_i(s) exp(-h_i s); overflow maps to inf values."""
    s_arr = np.asarray(s, dtype=complex)
    out = np.zeros_like(s_arr)
    with np.errstate(over="ignore", invalid="ignore"):
        for (d, p), hf in zip(q.terms, q._delays_f):
            if hf == 0.0:
                out = out + p(s_arr)
            else:
                out = out + p(s_arr) * np.exp(-hf * s_arr)
    if np.ndim(s) == 0:
        return complex(out)
    return out


def _cancel_common(num: RealPolynomial, den: RealPolynomial, tol: float):
    if num.is_zero or num.degree == 0 or den.degree == 0:
        return num, den
    try:
        zn = poly_roots(num)
        zd = poly_roots(den)
    except NonConvergence:
        return num, den
    keep_n = list(zn)
    keep_d = []
    cancelled = False
    for r in zd:
        hit = None
        for i, z in enumerate(keep_n):
            if abs(z - r) <= tol * (1.0 + abs(r)):
                hit = i
                break
        if hit is None:
            keep_d.append(r)
        else:
            keep_n.pop(hit)
            cancelled = True
    if not cancelled:
        return num, den
    num2 = RealPolynomial.from_roots(symmetrize_conjugates(np.array(keep_n)), num.lead)
    den2 = RealPolynomial.from_roots(symmetrize_conjugates(np.array(keep_d)), den.lead)
    return num2, den2


@dataclass(frozen=True)
class RationalFunction:
    """Ratio of real polynomials; stored coprime to tolerance.

    The numerator degree may exceed the denominator degree (improper
    weights are legal inputs).
    """

    num: RealPolynomial
    den: RealPolynomial
    cancel_tol: float = 1e-9

    def __post_init__(self):
        num, den = self.num, self.den
        if not isinstance(num, RealPolynomial):
            num = RealPolynomial(np.asarray(num, dtype=float))
        if not isinstance(den, RealPolynomial):
            den = RealPolynomial(np.asarray(den, dtype=float))
        if den.is_zero:
            raise ValueError("denominator must not be identically zero")
        if self.cancel_tol > 0:
            num, den = _cancel_common(num, den, self.cancel_tol)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __call__(self, s):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.num(s) / self.den(s)

    @property
    def relative_degree(self) -> int:
        return self.den.degree - self.num.degree

    def zeros(self) -> np.ndarray:
        return poly_roots(self.num) if self.num.degree >= 1 else np.array([], complex)

    def poles(self) -> np.ndarray:
        return poly_roots(self.den) if self.den.degree >= 1 else np.array([], complex)

    def reflect(self) -> "RationalFunction":
        return RationalFunction(self.num.reflect(), self.den.reflect(), cancel_tol=0.0)

    def inv(self) -> "RationalFunction":
        return RationalFunction(self.den, self.num, cancel_tol=0.0)

    def __mul__(self, other):
        if isinstance(other, RationalFunction):
            return RationalFunction(self.num * other.num, self.den * other.den)
        return RationalFunction(self.num * float(other), self.den, cancel_tol=0.0)

    __rmul__ = __mul__

    def limit_at_infinity(self) -> float:
        """Exact |.|-limit as |s| -> inf from leading coefficients (inf if improper)."""
        rd = self.relative_degree
        if rd > 0:
            return 0.0
        if rd < 0:
            return math.inf
        return abs(self.num.lead / self.den.lead)


RF_ONE = RationalFunction(ONE, ONE, cancel_tol=0.0)


@dataclass(frozen=True)
class DelayRational:
    """Delay system sum_i G_i(s) exp(-h_i s) over one common stable denominator."""

    terms: tuple
    common_den: RealPolynomial = field(default=ONE)

    def __post_init__(self):
        # normalize every term onto the common denominator
        norm = []
        den = self.common_den
        for delay, rat in self.terms:
            d = _as_fraction(delay)
            if isinstance(rat, RationalFunction):
                if rat.den.degree != den.degree or not np.allclose(
                    rat.den.coeffs, den.coeffs, rtol=1e-10, atol=0.0
                ):
                    raise ValueError("terms must share the common denominator")
                norm.append((d, rat.num))
            else:
                norm.append((d, rat if isinstance(rat, RealPolynomial) else RealPolynomial(rat)))
        norm.sort(key=lambda t: t[0])
        for (d1, _), (d2, _) in zip(norm, norm[1:]):
            if d1 == d2:
                raise ValueError("delays must be strictly increasing")
        object.__setattr__(self, "terms", tuple(norm))
        object.__setattr__(self, "_qp", QuasiPolynomial(tuple(norm)))

    @classmethod
    def from_numerators(cls, delays, numerators, common_den) -> "DelayRational":
        return cls(tuple(zip(delays, numerators)), common_den)

    @property
    def delays(self) -> tuple:
        return tuple(d for d, _ in self.terms)

    @property
    def numerators(self) -> tuple:
        return tuple(p for _, p in self.terms)

    def numerator_qp(self) -> QuasiPolynomial:
        return self._qp

    def rationals(self) -> tuple:
        return tuple(
            RationalFunction(p, self.common_den, cancel_tol=0.0) for _, p in self.terms
        )

    def __call__(self, s):
        return self._qp(s) / self.common_den(s)


def conjugate(R: DelayRational) -> DelayRational:
    """Conjugate delay system: exp(-h_n s) R(-s) M(s).

    M(s) = d(-s)/d(s) is the finite-dimensional inner factor built from the
    common stable denominator d, so the result is again proper-stable with
    the same denominator and delay set {h_n - h_i}.  On the imaginary axis
    |R| and |conjugate(R)| agree.
    """
    h_n = R.delays[-1]
    terms = [(h_n - d, p.reflect()) for d, p in R.terms]
    return DelayRational(tuple(terms), R.common_den)


@dataclass(frozen=True)
class BlaschkeProduct:
    """Finite Blaschke product prod (s - z_i)/(s + conj(z_i)) from a zero list."""

    zeros: tuple

    def __post_init__(self):
        zs = tuple(complex(z) for z in self.zeros)
        object.__setattr__(self, "zeros", zs)
        object.__setattr__(self, "_z", np.array(zs, dtype=complex))

    def __call__(self, s):
        return self.eval_excluding(s, None)

    def eval_excluding(self, s, skip: int | None):
        s_arr = np.asarray(s, dtype=complex)
        out = np.ones_like(s_arr)
        for i, z in enumerate(self._z):
            if i == skip:
                continue
            out = out * (s_arr - z) / (s_arr + np.conj(z))
        if np.ndim(s) == 0:
            return complex(out)
        return out

    def denominator_factor(self, s):
        """prod (s + conj(z_i)) alone (used by deflated evaluations)."""
        s_arr = np.asarray(s, dtype=complex)
        out = np.ones_like(s_arr)
        for z in self._z:
            out = out * (s_arr + np.conj(z))
        if np.ndim(s) == 0:
            return complex(out)
        return out

    def as_rational(self) -> RationalFunction:
        num = RealPolynomial.from_roots(self._z) if len(self._z) else ONE
        den = RealPolynomial.from_roots(-np.conj(self._z)) if len(self._z) else ONE
        return RationalFunction(num, den, cancel_tol=0.0)

    def __len__(self):
        return len(self.zeros)


class DeflatedQP:
    """Evaluate q(s) / prod_k (s - z_k) where every z_k is a root of q.

    Away from the roots the quotient is computed directly; inside a guard
    radius it switches to a Taylor series built from exact quasi-polynomial
    derivatives, so removable singularities evaluate smoothly.
    """

    _NDERIV = 5

    def __init__(self, qp: QuasiPolynomial, roots, guard: float | None = None):
        self.qp = qp
        self.roots = np.asarray(roots, dtype=complex)
        ders = [qp]
        for _ in range(self._NDERIV):
            ders.append(ders[-1].derivative())
        self._ders = ders
        if guard is None:
            guard = 0.02 * (1.0 + float(np.max(np.abs(self.roots))) if len(self.roots) else 1.0)
            if len(self.roots) > 1:
                d = np.abs(self.roots[:, None] - self.roots[None, :])
                np.fill_diagonal(d, np.inf)
                guard = min(guard, 0.3 * float(np.min(d)))
        self.guard = max(guard, 1e-12)
        # factorial-scaled derivative values at each root (root treated exact)
        self._series = np.array(
            [[ders[k](z) / math.factorial(k) for k in range(1, self._NDERIV + 1)]
             for z in self.roots],
            dtype=complex,
        ) if len(self.roots) else np.zeros((0, self._NDERIV))

    def __call__(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
        if len(self.roots) == 0:
            out = np.asarray(self.qp(s_arr), dtype=complex)
            return complex(out[0]) if np.ndim(s) == 0 else out
        denom = np.ones_like(s_arr)
        for z in self.roots:
            denom = denom * (s_arr - z)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self.qp(s_arr), dtype=complex) / denom
        for j, z in enumerate(self.roots):
            dz = s_arr - z
            mask = np.abs(dz) < self.guard
            if not np.any(mask):
                continue
            dd = np.zeros_like(dz[mask])
            for k in range(self._NDERIV - 1, -1, -1):
                dd = dd * dz[mask] + self._series[j, k]
            rest = np.ones_like(dd)
            for i, zi in enumerate(self.roots):
                if i != j:
                    rest = rest * (s_arr[mask] - zi)
            out[mask] = dd / rest
        return complex(out[0]) if np.ndim(s) == 0 else out


class DeflatedCallable:
    """Evaluate f(s) / prod_k (s - x_k) for a generic analytic evaluator f
    whose value at every x_k is (numerically) zero.

    Divided differences handle the outer guard band; very close to a point
    the quotient switches to a two-term series with numerically
    differentiated derivatives frozen at construction time.
    """

    def __init__(self, f: Callable, points, guard: float | None = None,
                 inner: float | None = None):
        self.f = f
        self.points = np.asarray(points, dtype=complex)
        if guard is None:
            guard = 0.05 * (1.0 + float(np.max(np.abs(self.points))) if len(self.points) else 1.0)
            if len(self.points) > 1:
                d = np.abs(self.points[:, None] - self.points[None, :])
                np.fill_diagonal(d, np.inf)
                guard = min(guard, 0.3 * float(np.min(d)))
        self.guard = max(guard, 1e-10)
        self.inner = inner if inner is not None else 1e-5
        self._d1 = []
        self._d2 = []
        for x in self.points:
            h = 1e-4 * (1.0 + abs(x))
            fp = complex(f(x + h))
            fm = complex(f(x - h))
            f0 = complex(f(x))
            self._d1.append((fp - fm) / (2.0 * h))
            self._d2.append((fp - 2.0 * f0 + fm) / (h * h))
        self._f0 = np.array([complex(f(x)) for x in self.points])

    def cancellation_residual(self, scale: float = 1.0) -> float:
        if len(self.points) == 0:
            return 0.0
        return float(np.max(np.abs(self._f0))) / max(scale, 1e-300)

    def __call__(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
        if len(self.points) == 0:
            out = np.asarray(self.f(s_arr), dtype=complex) + np.zeros_like(s_arr)
            return complex(out[0]) if np.ndim(s) == 0 else out
        denom = np.ones_like(s_arr)
        for x in self.points:
            denom = denom * (s_arr - x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self.f(s_arr), dtype=complex) / denom
        for j, x in enumerate(self.points):
            dx = s_arr - x
            mask = np.abs(dx) < self.guard
            if not np.any(mask):
                continue
            sm = s_arr[mask]
            dxm = dx[mask]
            near = np.abs(dxm) < self.inner * (1.0 + abs(x))
            quotient = np.empty_like(dxm)
            if np.any(~near):
                fv = np.asarray(self.f(sm[~near]), dtype=complex)
                quotient[~near] = (fv - self._f0[j]) / dxm[~near]
            if np.any(near):
                quotient[near] = self._d1[j] + 0.5 * self._d2[j] * dxm[near]
            rest = np.ones_like(dxm)
            for i, xi in enumerate(self.points):
                if i != j:
                    rest = rest * (sm - xi)
            out[mask] = quotient / rest
        return complex(out[0]) if np.ndim(s) == 0 else out


@dataclass(frozen=True)
class ContourBox:
    """Finite rectangle in the closed right half plane used for zero counting."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    indent_radius: float = 1e-3

    def __post_init__(self):
        if self.re_min < 0:
            raise ValueError("re_min must be >= 0 for RHP analysis")
        if self.im_max <= self.im_min or self.re_max <= self.re_min:
            raise ValueError("degenerate box")
        if not (0 < self.indent_radius < (self.im_max - self.im_min) / 4):
            raise ValueError("indent_radius must be positive and < height/4")

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (
            self.re_min - margin <= z.real <= self.re_max + margin
            and self.im_min - margin <= z.imag <= self.im_max + margin
        )

    def split(self, fr_re: float = 0.5, fr_im: float = 0.5) -> list["ContourBox"]:
        rm = self.re_min + fr_re * self.width
        im = self.im_min + fr_im * self.height
        radius = min(self.indent_radius, 0.2 * fr_re * self.width,
                     0.2 * fr_im * self.height, 0.2 * (1 - fr_re) * self.width,
                     0.2 * (1 - fr_im) * self.height)
        radius = max(radius, 1e-12)
        kw = dict(indent_radius=radius)
        return [
            ContourBox(self.re_min, rm, self.im_min, im, **kw),
            ContourBox(rm, self.re_max, self.im_min, im, **kw),
            ContourBox(self.re_min, rm, im, self.im_max, **kw),
            ContourBox(rm, self.re_max, im, self.im_max, **kw),
        ]


def _box_segments(box: ContourBox, exclusions: Sequence[complex]):
    """Counterclockwise boundary as parametric segments, indenting around
    excluded points that sit on the left edge (bulge into the box)."""
    segs = []

    def line(z0, z1):
        z0, z1 = complex(z0), complex(z1)
        segs.append((lambda t, a=z0, b=z1: a + t * (b - a), abs(z1 - z0)))

    c_bl = complex(box.re_min, box.im_min)
    c_br = complex(box.re_max, box.im_min)
    c_tr = complex(box.re_max, box.im_max)
    c_tl = complex(box.re_min, box.im_max)
    line(c_bl, c_br)
    line(c_br, c_tr)
    line(c_tr, c_tl)

    r = box.indent_radius
    on_left = sorted(
        [complex(p) for p in exclusions
         if abs(p.real - box.re_min) < r
         and box.im_min + r < p.imag < box.im_max - r],
        key=lambda p: -p.imag,
    )
    cursor = c_tl
    for p in on_left:
        top = complex(box.re_min, p.imag + r)
        bot = complex(box.re_min, p.imag - r)
        line(cursor, top)
        # traveling downward, bulge into Re > re_min so p stays outside
        segs.append((
            lambda t, c=complex(box.re_min, p.imag), rr=r:
                c + rr * np.exp(1j * (np.pi / 2 - np.pi * t)),
            np.pi * r,
        ))
        cursor = bot
    line(cursor, c_bl)
    return segs


def _winding_of_segments(f, segs, *, n0: int = 33, phase_cap: float = np.pi / 2,
                         max_pts: int = 200_000) -> tuple[float, np.ndarray, np.ndarray]:
    total = 0.0
    all_pts = []
    all_vals = []
    for seg_fn, length in segs:
        n = max(n0, min(int(length * 4) + 9, 2000))
        t = np.linspace(0.0, 1.0, n)
        z = seg_fn(t)
        v = np.asarray(f(z), dtype=complex)
        for _ in range(60):
            absv = np.abs(v)
            vs = np.where(absv > 0, v, 1e-300)
            d = np.angle(vs[1:] / vs[:-1])
            scale = np.median(absv) + np.max(absv) * 1e-16
            tiny = absv < 1e-13 * scale
            bad = (np.abs(d) >= phase_cap) | tiny[1:] | tiny[:-1]
            if not np.any(bad):
                break
            idx = np.nonzero(bad)[0]
            gaps = t[idx + 1] - t[idx]
            if np.all(gaps < 1e-13):
                raise ContourThroughZero(
                    "contour refinement exhausted; |f| ~ "
                    f"{absv.min():.2e} near t={t[idx[np.argmin(absv[idx])]]:.6f}"
                )
            tm = t[idx] + 0.5 * gaps
            zm = seg_fn(tm)
            vm = np.asarray(f(zm), dtype=complex)
            t = np.insert(t, idx + 1, tm)
            z = np.insert(z, idx + 1, zm)
            v = np.insert(v, idx + 1, vm)
            if len(t) > max_pts:
                raise ContourThroughZero("contour sample budget exceeded")
        else:
            raise ContourThroughZero("contour refinement depth exceeded")
        total += float(np.sum(np.angle(np.where(np.abs(v) > 0, v, 1e-300)[1:]
                                       / np.where(np.abs(v) > 0, v, 1e-300)[:-1])))
        all_pts.append(z)
        all_vals.append(v)
    return total, np.concatenate(all_pts), np.concatenate(all_vals)


def qp_winding_count(f: Callable, box: ContourBox,
                     axis_exclusions: Sequence[complex] = (),
                     return_path: bool = False):
    """Zeros minus poles of `f` inside `box` by the argument principle.

    `f` must be analytic and zero-free on the contour itself; points listed
    in `axis_exclusions` that fall on the left edge are bypassed with
    semicircular indentations bulging into the box (excluding them from the
    count).  Sampling is refined until consecutive phase increments stay
    below pi/2.
    """
    segs = _box_segments(box, axis_exclusions)
    total, pts, vals = _winding_of_segments(f, segs)
    w = total / (2.0 * np.pi)
    n = int(round(w))
    if abs(w - n) > 0.25:
        raise ContourThroughZero(
            f"winding total {w:.3f} is not close to an integer"
        )
    if return_path:
        return n, pts, vals
    return n


def _newton_polish(f, z0: complex, fprime=None, maxiter: int = 50) -> complex | None:
    z = complex(z0)
    for _ in range(maxiter):
        fv = complex(f(z))
        if fprime is not None:
            dv = complex(fprime(z))
        else:
            h = 1e-6 * (1.0 + abs(z))
            dv = (complex(f(z + h)) - complex(f(z - h))) / (2.0 * h)
        if dv == 0:
            return None
        step = fv / dv
        z = z - step
        if abs(step) < 1e-13 * (1.0 + abs(z)):
            return z
    return None


def _local_scale(f, z: complex) -> float:
    d = 1e-2 * (1.0 + abs(z))
    vals = [abs(complex(f(z + d))), abs(complex(f(z - d))),
            abs(complex(f(z + 1j * d))), abs(complex(f(z - 1j * d)))]
    return max(max(vals), 1e-300)


_JITTER = (0.5, 0.53, 0.47, 0.58, 0.41, 0.62)


def qp_rhp_roots(f: Callable, box: ContourBox,
                 axis_exclusions: Sequence[complex] = (),
                 fprime=None, res_tol: float = 1e-9) -> np.ndarray:
    """All zeros of `f` inside `box`, certified against the winding count.

    Recursive box subdivision isolates zeros; Newton with a numerically
    differentiated derivative polishes them.  Raises RootCountMismatch when
    the polished roots cannot reproduce the count.
    """
    total, box = _winding_with_jitter(f, box, axis_exclusions)
    roots: list[complex] = []
    stack = [(box, total)]
    min_size = 1e-7 * (1.0 + max(abs(box.re_max), abs(box.im_max), abs(box.im_min)))
    while stack:
        b, n = stack.pop()
        if n <= 0:
            continue
        if n == 1:
            z0 = complex(0.5 * (b.re_min + b.re_max), 0.5 * (b.im_min + b.im_max))
            z = _newton_polish(f, z0, fprime)
            if z is not None and b.contains(z, margin=1e-9 * (1.0 + abs(z))):
                if abs(complex(f(z))) <= res_tol * _local_scale(f, z) * 10.0:
                    roots.append(z)
                    continue
        if max(b.width, b.height) < min_size:
            center = complex(0.5 * (b.re_min + b.re_max), 0.5 * (b.im_min + b.im_max))
            roots.extend([center] * n)
            continue
        stack.extend(_split_counted(f, b, n, axis_exclusions))
    if len(roots) != total:
        raise RootCountMismatch(
            f"winding count {total} but {len(roots)} polished roots"
        )
    roots_arr = symmetrize_conjugates(np.array(roots, dtype=complex))
    return roots_arr


def _winding_with_jitter(f, box, axis_exclusions):
    """Winding count plus the box actually used (nudged off touching zeros)."""
    last = None
    for _ in range(3):
        try:
            return qp_winding_count(f, box, axis_exclusions), box
        except ContourThroughZero as exc:  # zero touching the contour: nudge box
            last = exc
            box = ContourBox(
                box.re_min, box.re_max * 1.013 + 1e-9,
                box.im_min * 1.011 - 1e-9, box.im_max * 1.011 + 1e-9,
                indent_radius=box.indent_radius,
            )
    raise last


def _split_counted(f, b: ContourBox, n: int, axis_exclusions):
    for fr in _JITTER:
        try:
            subs = b.split(fr, fr)
            counted = []
            for sb in subs:
                m = qp_winding_count(f, sb, axis_exclusions)
                if m > 0:
                    counted.append((sb, m))
            if sum(m for _, m in counted) == n:
                return counted
        except ContourThroughZero:
            continue
    raise RootCountMismatch(
        f"could not split a box holding {n} zeros without touching one"
    )
