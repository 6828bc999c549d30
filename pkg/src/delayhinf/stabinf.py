"""Stable-controller search when the central controller has infinitely many
unstable poles.

The free-parameter tail value is confined to the interval where the
controller regains finitely many unstable poles (an exact Moebius-inequality
computation on the tail gains), candidates are filtered by stability of the
denominator branch, ranked by how small the outermost unit-gain crossing and
the peak gain are, and the winner is certified by counting encirclements of
-1 along a rectangular contour that covers the region where the open-loop
map exceeds unit magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SearchExhausted
from .plantmodel import FactoredPlant
from .quasipoly import (
    ContourBox,
    RationalFunction,
    RealPolynomial,
    poly_roots,
    qp_winding_count,
)
from .synthesis import (
    Controller,
    FirstOrderU,
    GammaData,
    InterpolantPair,
    Weights,
    assemble,
    gamma_data,
    infinite_pole_test,
    solve_L,
)

__all__ = [
    "AsymptoticData",
    "Interval",
    "IntervalSet",
    "StabSearchResult",
    "InfSearchParams",
    "asymptotics",
    "admissible_uinf",
    "l1u_stable_region",
    "stable_gain_interval",
    "objective",
    "certify",
    "search",
]


@dataclass(frozen=True)
class AsymptoticData:
    """High-frequency data of the shaped factor and interpolant pair."""

    tail_gain: float   # limit of |shaped factor| at infinity
    tail_ratio: float  # limit of num/den of the interpolant pair
    parity: int        # degree bound mod 2

    @property
    def sign(self) -> float:
        return -1.0 if self.parity % 2 else 1.0


def asymptotics(gd: GammaData, pair: InterpolantPair) -> AsymptoticData:
    """Exact limits from leading coefficients."""
    return AsymptoticData(
        tail_gain=gd.shaped.limit_at_infinity(),
        tail_ratio=pair.tail_ratio,
        parity=pair.degree_bound % 2,
    )


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_open: bool = True
    hi_open: bool = True

    def contains(self, x: float) -> bool:
        if self.lo_open:
            if x <= self.lo:
                return False
        elif x < self.lo:
            return False
        if self.hi_open:
            if x >= self.hi:
                return False
        elif x > self.hi:
            return False
        return True

    def negated(self) -> "Interval":
        return Interval(-self.hi, -self.lo, self.hi_open, self.lo_open)

    @property
    def width(self) -> float:
        return max(self.hi - self.lo, 0.0)


@dataclass(frozen=True)
class IntervalSet:
    """Disjoint sorted intervals inside [-1, 1]."""

    intervals: tuple

    def __post_init__(self):
        ivs = sorted(self.intervals, key=lambda i: i.lo)
        for a, b in zip(ivs, ivs[1:]):
            if b.lo < a.hi:
                raise ValueError("intervals must be disjoint")
        object.__setattr__(self, "intervals", tuple(ivs))

    @property
    def is_empty(self) -> bool:
        return not self.intervals or all(i.width <= 0 for i in self.intervals)

    def contains(self, x: float) -> bool:
        return any(i.contains(x) for i in self.intervals)

    def negated(self) -> "IntervalSet":
        return IntervalSet(tuple(i.negated() for i in self.intervals))

    def grid(self, step: float) -> np.ndarray:
        pts = np.arange(-1.0, 1.0 + step / 2, step)
        return pts[[self.contains(float(p)) for p in pts]]


def _moebius_inv(y: float, k: float) -> float:
    """Inverse of u -> (k+u)/(1+ku)."""
    return (y - k) / (1.0 - k * y)


def admissible_uinf(ad: AsymptoticData) -> IntervalSet:
    """Tail values of the free parameter giving finitely many unstable poles.

    Solves |(k + u~)/(1 + k u~)| < 1/f exactly on [-1, 1] for the
    parity-adjusted tail value u~, then maps back through the parity sign.
    An empty set means no suboptimal controller with finitely many unstable
    poles exists at this level.
    """
    f = ad.tail_gain
    k = ad.tail_ratio
    if f == 0.0:
        return IntervalSet((Interval(-1.0, 1.0, False, False),))
    if not math.isfinite(k):
        return IntervalSet(())
    pieces: list[Interval]
    if abs(k) < 1.0:
        if f < 1.0:
            pieces = [Interval(-1.0, 1.0, False, False)]
        else:
            lo = max(-1.0, _moebius_inv(-1.0 / f, k))
            hi = min(1.0, _moebius_inv(1.0 / f, k))
            pieces = [Interval(lo, hi, True, True)] if lo < hi else []
    elif abs(k) == 1.0:
        pieces = [Interval(-1.0, 1.0, False, False)] if f < 1.0 else []
    else:
        if f >= 1.0:
            pieces = []
        else:
            b_lo = _moebius_inv(-1.0 / f, k)
            b_hi = _moebius_inv(1.0 / f, k)
            if b_lo > b_hi:
                b_lo, b_hi = b_hi, b_lo
            pieces = []
            if b_lo > -1.0:
                pieces.append(Interval(-1.0, b_lo, False, True))
            if b_hi < 1.0:
                pieces.append(Interval(b_hi, 1.0, True, False))
    out = IntervalSet(tuple(pieces))
    return out if ad.sign > 0 else out.negated()


def _den_branch_poly(pair: InterpolantPair, u: FirstOrderU | None):
    """Numerator polynomial of den(s) + num(-s) U(s) after clearing (pole+s)."""
    if u is None:
        return pair.den
    num_reflect = pair.num.reflect()
    if u.is_constant:
        return pair.den + u.gain * num_reflect
    lin_pole = RealPolynomial([u.pole, 1.0])
    lin_zero = RealPolynomial([u.gain * u.zero, u.gain])
    return pair.den * lin_pole + num_reflect * lin_zero


def _is_stable_poly(p) -> bool:
    if p.degree < 1:
        return not p.is_zero
    return bool(np.all(poly_roots(p).real < 0))


def l1u_stable_region(pair: InterpolantPair, candidates) -> list:
    """Subset of candidate free parameters keeping the denominator branch
    den(s) + num(-s) U(s) zero-free in the closed right half plane."""
    return [u for u in candidates if _is_stable_poly(_den_branch_poly(pair, u))]


def stable_gain_interval(pair: InterpolantPair, lo: float = -1.0, hi: float = 1.0,
                         step: float = 0.005) -> Interval | None:
    """Largest contiguous constant-gain run around zero keeping the
    denominator branch stable, with bisection-polished endpoints."""
    grid = np.arange(lo, hi + step / 2, step)
    ok = np.array([_is_stable_poly(_den_branch_poly(pair, FirstOrderU.constant(g)))
                   for g in grid])
    if not ok.any():
        return None
    i0 = int(np.argmin(np.abs(grid)))
    if not ok[i0]:
        i0 = int(np.nonzero(ok)[0][0])
    i_lo = i0
    while i_lo > 0 and ok[i_lo - 1]:
        i_lo -= 1
    i_hi = i0
    while i_hi < len(grid) - 1 and ok[i_hi + 1]:
        i_hi += 1

    def refine(a, b):
        # a stable, b unstable
        for _ in range(40):
            m = 0.5 * (a + b)
            if _is_stable_poly(_den_branch_poly(pair, FirstOrderU.constant(m))):
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    left = grid[i_lo] if i_lo == 0 else refine(grid[i_lo], grid[i_lo - 1])
    right = grid[i_hi] if i_hi == len(grid) - 1 else refine(grid[i_hi], grid[i_hi + 1])
    return Interval(float(left), float(right), True, True)


def _loop_gain_rational(gd: GammaData, pair: InterpolantPair,
                        u: FirstOrderU | None) -> RationalFunction:
    """shaped * (num + den(-s)U)/(den + num(-s)U) as one rational function."""
    if u is None:
        num_b, den_b = pair.num, pair.den
    elif u.is_constant:
        num_b = pair.num + u.gain * pair.den.reflect()
        den_b = pair.den + u.gain * pair.num.reflect()
    else:
        lin_pole = RealPolynomial([u.pole, 1.0])
        lin_zero = RealPolynomial([u.gain * u.zero, u.gain])
        num_b = pair.num * lin_pole + pair.den.reflect() * lin_zero
        den_b = pair.den * lin_pole + pair.num.reflect() * lin_zero
    return RationalFunction(gd.shaped.num * num_b, gd.shaped.den * den_b,
                            cancel_tol=0.0)


def objective(u: FirstOrderU | None, gd: GammaData, pair: InterpolantPair,
              grid=(1e-2, 1e4, 2000)):
    """Outermost unit-gain crossing and peak of |shaped * L_U| on the axis.

    No crossing means the tail magnitude condition holds at every frequency
    and the sufficient stability theorem applies directly (crossing
    frequency reported as zero).
    """
    fl = _loop_gain_rational(gd, pair, u)
    lo, hi, n = grid
    w = np.concatenate([[0.0], np.logspace(math.log10(lo), math.log10(hi), int(n))])
    g = np.abs(fl(1j * w))
    diff = g - 1.0
    idx = np.nonzero(diff[:-1] * diff[1:] < 0)[0]
    omega_max = 0.0
    if len(idx):
        i = idx[-1]
        a, b = w[i], w[i + 1]
        fa = diff[i]
        for _ in range(60):
            m = 0.5 * (a + b)
            fm = abs(fl(1j * m)) - 1.0
            if fa * fm <= 0:
                b = m
            else:
                a, fa = m, fm
        omega_max = 0.5 * (a + b)
    # peak with golden polish around the grid argmax
    k = int(np.argmax(g))
    lo_w = w[max(k - 1, 0)]
    hi_w = w[min(k + 1, len(w) - 1)]
    eta_max = float(g[k])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo_w, hi_w
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1 = -abs(fl(1j * x1))
    f2 = -abs(fl(1j * x2))
    for _ in range(60):
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = -abs(fl(1j * x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = -abs(fl(1j * x2))
        if b - a < 1e-12 * (1.0 + b):
            break
    eta_max = max(eta_max, -f1, -f2)
    return float(omega_max), float(eta_max)


@dataclass(frozen=True)
class StabSearchResult:
    """Certified (or refuted) stabilization candidate."""

    u: FirstOrderU
    omega_max: float
    eta_max: float
    encirclements: int
    required: int
    stable: bool
    rho: float
    nyquist_path: np.ndarray = field(default=None, repr=False, compare=False)
    nyquist_values: np.ndarray = field(default=None, repr=False, compare=False)
    box: ContourBox = field(default=None, repr=False, compare=False)


def _coverage_radius(fl: RationalFunction, tail: float) -> float:
    """Radius beyond which |fl| < 1 everywhere (rational-function bound)."""
    zs = fl.zeros()
    ps = fl.poles()
    feats = np.concatenate([np.abs(zs), np.abs(ps), [1.0]])
    r = 2.0 * float(np.max(feats))
    for _ in range(60):
        bound = tail
        for z in np.abs(zs):
            bound *= (r + z) / r
        for p in np.abs(ps):
            bound *= r / (r - p)
        if bound < 1.0 - 1e-9:
            return r
        r *= 2.0
    raise SearchExhausted("could not bound the unit-gain region of the loop map")


def certify(u: FirstOrderU | None, factored: FactoredPlant, gd: GammaData,
            pair: InterpolantPair, rho: float | None = None,
            keep_path: bool = True) -> StabSearchResult:
    """Encirclement certificate for one free parameter.

    Counts the winding of the open-loop map around -1 over a rectangle
    covering the region where its magnitude can reach one, indenting the
    imaginary-axis zeros of the weight-excess function; the controller is
    stable exactly when the count matches the off-axis zeros of the excess
    function and the finite inner factor.
    """
    if infinite_pole_test(gd, pair, u):
        raise ValueError("free parameter fails the finite-pole tail condition")
    ctrl = assemble(gd.level, factored, gd, pair, u)
    fl = _loop_gain_rational(gd, pair, u)
    tail = fl.limit_at_infinity()
    radius = _coverage_radius(fl, tail)

    # branch-denominator unstable roots add poles of the map inside the box
    den_b = _den_branch_poly(pair, u) if u is not None else pair.den
    den_roots = poly_roots(den_b) if den_b.degree >= 1 else np.array([], complex)
    p_in = int(np.sum(den_roots.real > 0))

    omega_max, _ = objective(u, gd, pair)
    w = np.logspace(-2, math.log10(radius) + 0.3, 3000)
    g = np.abs(fl(1j * w))
    above = np.nonzero(g >= 1.0 - 1e-3)[0]
    omega_tail = float(w[above[-1]]) if len(above) else 0.0
    im_max = max(radius, 1.5 * omega_tail)
    cancel = gd.cancellation_points(factored.unstable_poles)
    if len(cancel):
        im_max = max(im_max, 1.3 * float(np.max(np.abs(cancel.imag))) + 1.0)
    box = ContourBox(0.0, radius, -im_max, im_max, indent_radius=1e-3)

    exclusions = []
    for b in gd.axis_betas:
        exclusions.extend([complex(0.0, b.imag), complex(0.0, -b.imag)])
    f_nyq = lambda s: 1.0 + ctrl.nyquist_map(s)
    winding, pts, vals = qp_winding_count(f_nyq, box, exclusions, return_path=True)
    encircle = winding + p_in
    required = len(gd.strict_betas) + factored.ell
    _, eta_max = objective(u, gd, pair)
    return StabSearchResult(
        u=u if u is not None else FirstOrderU.constant(0.0),
        omega_max=omega_max, eta_max=eta_max,
        encirclements=encircle, required=required,
        stable=bool(encircle == required), rho=float(rho if rho else gd.level),
        nyquist_path=pts if keep_path else None,
        nyquist_values=(vals - 1.0) if keep_path else None,  # map samples, not 1+map
        box=box,
    )


@dataclass(frozen=True)
class InfSearchParams:
    """Grid resolutions for the first-order free-parameter search."""

    gain_step: float = 0.005
    zero_grid: tuple = (-10.0, 10.0, 0.5)
    pole_grid: tuple = (0.5, 10.0, 0.5)
    constant_first: bool = True
    anchor: float = 2.0
    omega_scale: float = 1.0


def search(rho_schedule, factored: FactoredPlant, weights: Weights,
           gamma_value: float, params: InfSearchParams = InfSearchParams()):
    """Level-by-level search for a certified stable suboptimal controller.

    Per level: tail data -> admissible tail-gain intervals -> stable
    denominator-branch candidates -> minimize max(crossing frequency, peak
    gain) -> encirclement certificate.  Returns the first certified result;
    raises SearchExhausted with per-level diagnostics otherwise.
    """
    rhos = list(rho_schedule)
    if any(b <= a for a, b in zip(rhos, rhos[1:])):
        raise ValueError("level schedule must be strictly increasing")
    if rhos and rhos[0] <= gamma_value:
        raise ValueError(
            f"schedule starts at {rhos[0]} but must exceed the optimal level {gamma_value:.4f}"
        )
    diagnostics = []
    for rho in rhos:
        gd = gamma_data(rho, weights)
        pair = solve_L(rho, factored, gd, mode="SUBOPTIMAL", a=params.anchor)
        ad = asymptotics(gd, pair)
        admissible = admissible_uinf(ad)
        if admissible.is_empty:
            diagnostics.append((rho, "no admissible tail gain"))
            continue
        candidates = _candidate_parameters(pair, admissible, params)
        if not candidates:
            diagnostics.append((rho, "no stable denominator-branch candidate"))
            continue
        scored = []
        for u in candidates:
            if infinite_pole_test(gd, pair, u):
                continue
            om, em = objective(u, gd, pair)
            scored.append((max(om, params.omega_scale * em),
                           (u.gain, u.zero, u.pole), u, om, em))
        if not scored:
            diagnostics.append((rho, "no candidate passes the tail condition"))
            continue
        scored.sort(key=lambda t: (t[0], t[1]))
        _, _, best, om, em = scored[0]
        result = certify(best, factored, gd, pair, rho=rho)
        if result.stable:
            return result, gd, pair
        diagnostics.append(
            (rho, f"certificate failed: {result.encirclements} vs {result.required}")
        )
    raise SearchExhausted("no certified stable controller on the schedule",
                          diagnostics)


def _candidate_parameters(pair, admissible, params: InfSearchParams):
    gains = admissible.grid(params.gain_step)
    stable = []
    if params.constant_first:
        stable = l1u_stable_region(
            pair, [FirstOrderU.constant(float(g)) for g in gains]
        )
        if stable:
            return stable
    z_lo, z_hi, z_step = params.zero_grid
    p_lo, p_hi, p_step = params.pole_grid
    zs = np.arange(z_lo, z_hi + z_step / 2, z_step)
    ps = np.arange(p_lo, p_hi + p_step / 2, p_step)
    cands = []
    for g in gains:
        for z in zs:
            for p in ps:
                if p >= abs(g * z):
                    cands.append(FirstOrderU(gain=float(g), zero=float(z),
                                             pole=float(p)))
    return l1u_stable_region(pair, cands)
