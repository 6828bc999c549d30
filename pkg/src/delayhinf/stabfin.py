"""Stable-controller search when the central controller has finitely many
unstable poles.

The controller's unstable poles are the right-half-plane zeros of a
two-branch combination of the interpolant pair; dividing the free parameter
out turns stabilization into a unit-sensitivity interpolation problem:
find S = mu * B(s) * exp(-G(s)) with B the Blaschke product over one zero
set, S equal to one on the other zero set, and Re G >= 0.  The logarithmic
interpolation data lives on the unit disk after a conformal map; a Pick
matrix bisection gives the smallest feasible sensitivity level and the
classical Schur/Nevanlinna recursion produces the interpolant with a free
Schur-class parameter.  Feasibility of the resulting free parameter is a
single sup-norm inequality checked on a refined frequency grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import (
    CancellationFailure,
    DegenerateMap,
    InfiniteZeros,
    PickNotPSD,
    SearchExhausted,
)
from .plantmodel import FactoredPlant
from .quasipoly import (
    BlaschkeProduct,
    ContourBox,
    DeflatedCallable,
    DeflatedQP,
    QuasiPolynomial,
    poly_roots,
    qp_rhp_roots,
    qp_winding_count,
)
from .synthesis import (
    FirstOrderU,
    GammaData,
    InterpolantPair,
    Weights,
    gamma_data,
    solve_L,
)

__all__ = [
    "P1P2",
    "DiskData",
    "NPInterpolant",
    "FinCertificate",
    "FinSearchParams",
    "build_P1P2",
    "disk_data",
    "pick_mu_opt",
    "np_interpolant",
    "compute_SU_and_U",
    "eq20_max_ratio",
    "feasible_gain_window",
    "search_fin",
]

AXIS_BAND = 1e-6


class _BranchEvaluator:
    """One pole-branch evaluator over the excess/inner numerator product,
    with removable singularities deflated."""

    def __init__(self, f, denom_qp: QuasiPolynomial, points):
        self.num = DeflatedCallable(f, points)
        self.den = DeflatedQP(denom_qp, points)
        self.points = np.asarray(points, dtype=complex)

    def __call__(self, s):
        return self.num(s) / self.den(s)


@dataclass(frozen=True)
class P1P2:
    """Pole-branch evaluators and their certified RHP zero lists."""

    p1: _BranchEvaluator
    p2: _BranchEvaluator
    p_zeros: np.ndarray   # RHP zeros of the first branch (controller poles at U=0)
    s_zeros: np.ndarray   # RHP zeros of the second branch
    box: ContourBox

    @property
    def n_p(self) -> int:
        return len(self.p_zeros)

    @property
    def n_s(self) -> int:
        return len(self.s_zeros)


def _feature_box(gd: GammaData, factored: FactoredPlant,
                 pair: InterpolantPair) -> ContourBox:
    feats = [1.0]
    for arr in (factored.unstable_poles, gd.excess_rhp_zeros):
        if len(arr):
            feats.append(float(np.max(np.abs(arr))))
    if gd.shaped.den.degree:
        feats.append(float(np.max(np.abs(poly_roots(gd.shaped.den)))))
    im_max = 1.2 * max(feats)

    def cauchy(p):
        if p.degree < 1 or p.is_zero:
            return 1.0
        return 1.0 + float(np.max(np.abs(p.coeffs[:-1])) / abs(p.lead))

    re_max = 1.0 + 2.0 * max(cauchy(pair.den), cauchy(pair.num))
    return ContourBox(0.0, re_max, -im_max, im_max, indent_radius=1e-3)


def build_P1P2(factored: FactoredPlant, gd: GammaData, pair: InterpolantPair,
               box: ContourBox | None = None,
               zero_residual_tol: float = 1e-6) -> P1P2:
    """Branch evaluators and their certified right-half-plane zeros.

    Requires the strictly proper route (the branches then have finitely
    many RHP zeros); a growing zero count under box extension raises
    InfiniteZeros.
    """
    if gd.shaped.relative_degree < 1:
        raise InfiniteZeros("branch construction requires a strictly proper shaped factor")
    m_d_rat = factored.inner_fin_rational
    denom_poly = gd.excess.num * m_d_rat.num
    cancel = gd.cancellation_points(factored.unstable_poles)
    denom_qp = QuasiPolynomial(((0, denom_poly),))

    def mnf(s):
        return factored.inner_inf(s) * gd.shaped(s)

    def num1(s):
        s_arr = np.asarray(s, dtype=complex)
        return pair.den(s_arr) + pair.num(s_arr) * mnf(s_arr)

    def num2(s):
        s_arr = np.asarray(s, dtype=complex)
        return pair.num(-s_arr) + pair.den(-s_arr) * mnf(s_arr)

    p1 = _BranchEvaluator(num1, denom_qp, cancel)
    p2 = _BranchEvaluator(num2, denom_qp, cancel)
    for branch, name in ((p1, "first"), (p2, "second")):
        resid = branch.num.cancellation_residual(scale=max(pair.den.scale, 1.0))
        if resid > 1e-5:
            raise CancellationFailure(
                f"{name} branch numerator residual {resid:.2e} at a removable point"
            )
    if box is None:
        box = _feature_box(gd, factored, pair)
    p_zeros = qp_rhp_roots(p1, box)
    s_zeros = qp_rhp_roots(p2, box)
    wide = ContourBox(box.re_min, box.re_max, 1.5 * box.im_min, 1.5 * box.im_max,
                      indent_radius=box.indent_radius)
    if qp_winding_count(p1, wide) != len(p_zeros) or \
            qp_winding_count(p2, wide) != len(s_zeros):
        raise InfiniteZeros("zero count grew when the search box was extended")
    for branch, zeros in ((p1, p_zeros), (p2, s_zeros)):
        for z in zeros:
            d = 1e-2 * (1.0 + abs(z))
            local = max(abs(branch(z + d)), abs(branch(z + 1j * d)))
            if abs(branch(z)) > zero_residual_tol * local:
                raise CancellationFailure(
                    f"branch zero {z:.6g} fails its residual check"
                )
    return P1P2(p1=p1, p2=p2, p_zeros=p_zeros, s_zeros=s_zeros, box=box)


def _conjugate_layout(points: np.ndarray):
    """Order conjugate-closed points as [pair-rep, pair-conj, ..., reals],
    returning (ordered points, pair index list, real index list)."""
    pts = list(points)
    used = [False] * len(pts)
    ordered = []
    pairs = []
    reals = []
    order = sorted(range(len(pts)), key=lambda i: (-abs(pts[i].imag), pts[i].real))
    for i in order:
        if used[i]:
            continue
        p = pts[i]
        used[i] = True
        if abs(p.imag) < 1e-9 * (1.0 + abs(p)):
            reals.append(len(ordered))
            ordered.append(complex(p.real, 0.0))
            continue
        partner = None
        for j in range(len(pts)):
            if not used[j] and abs(pts[j] - np.conj(p)) < 1e-6 * (1.0 + abs(p)):
                partner = j
                break
        if partner is None:
            raise DegenerateMap("zero list is not conjugate closed")
        used[partner] = True
        rep = p if p.imag > 0 else np.conj(p)
        pairs.append((len(ordered), len(ordered) + 1))
        ordered.append(complex(rep))
        ordered.append(complex(np.conj(rep)))
    return np.array(ordered, dtype=complex), pairs, reals


@dataclass(frozen=True)
class DiskData:
    """Conformally mapped interpolation data for the unit-sensitivity task."""

    a: float
    s_points: np.ndarray          # interpolation points in the half plane
    nodes: np.ndarray             # disk images (s - a)/(s + a)
    values: np.ndarray            # inverse Blaschke values at the points
    branches: np.ndarray          # integer branch offsets (conjugate-odd)
    blaschke_p: BlaschkeProduct   # over the first branch's zeros
    blaschke_s: BlaschkeProduct   # over the second branch's zeros (reference)
    pair_idx: tuple
    real_idx: tuple


def disk_data(p1p2: P1P2, a: float = 1.0) -> DiskData:
    """Map the second branch's zeros into the disk and attach the inverse
    Blaschke values that the unit sensitivity must interpolate."""
    if a <= 0:
        raise ValueError("conformal parameter must be positive")
    s_pts, pairs, reals = _conjugate_layout(p1p2.s_zeros)
    blaschke_p = BlaschkeProduct(tuple(p1p2.p_zeros))
    values = np.array([1.0 / complex(blaschke_p(s)) for s in s_pts])
    nodes = (s_pts - a) / (s_pts + a)
    if np.any(np.abs(nodes) >= 1.0 - 1e-9):
        raise DegenerateMap("a mapped interpolation point reached the unit circle")
    return DiskData(
        a=a, s_points=s_pts, nodes=nodes, values=values,
        branches=np.zeros(len(s_pts), dtype=int),
        blaschke_p=blaschke_p, blaschke_s=BlaschkeProduct(tuple(p1p2.s_zeros)),
        pair_idx=tuple(pairs), real_idx=tuple(reals),
    )


def _pick_matrix(dd: DiskData, mu: float, branches: np.ndarray) -> np.ndarray:
    logs = np.log(dd.values.astype(complex))
    v = 2.0 * math.log(mu) - logs[:, None] - np.conj(logs)[None, :] \
        + 2j * np.pi * (branches[None, :] - branches[:, None])
    denom = 1.0 - dd.nodes[:, None] * np.conj(dd.nodes)[None, :]
    q = v / denom
    return 0.5 * (q + q.conj().T)


def _is_psd(m: np.ndarray, tol: float = 1e-9) -> bool:
    w = np.linalg.eigvalsh(m)
    scale = max(float(np.max(np.abs(w))), 1.0)
    return bool(w[0] >= -tol * scale)


def _branch_assignments(dd: DiskData, n_bound: int):
    """Conjugate-odd integer assignments: a pair's partner gets the negated
    integer; real points stay at zero (real data forces it)."""
    if n_bound < 0:
        raise ValueError("branch bound must be nonnegative")
    for combo in product(range(-n_bound, n_bound + 1), repeat=len(dd.pair_idx)):
        n = np.zeros(len(dd.nodes), dtype=int)
        for (i, j), val in zip(dd.pair_idx, combo):
            n[i] = val
            n[j] = -val
        yield n


def pick_mu_opt(dd: DiskData, n_bound: int = 2):
    """Smallest sensitivity level with a positive semi-definite Pick matrix,
    minimized over conjugate-odd integer assignments.

    The minimum eigenvalue is nondecreasing in the level, so bisection is
    valid; infeasible assignments are skipped.
    """
    for i in dd.real_idx:
        if dd.values[i].real <= 0 or abs(dd.values[i].imag) > 1e-9 * abs(dd.values[i]):
            raise DegenerateMap(
                "a real interpolation point carries a non-positive value; "
                "no real-symmetric branch exists"
            )
    best = None
    best_n = None
    for n in _branch_assignments(dd, n_bound):
        mu_hi = max(float(np.max(np.abs(dd.values))), 1.0) * 2.0
        ok = False
        for _ in range(60):
            if _is_psd(_pick_matrix(dd, mu_hi, n)):
                ok = True
                break
            mu_hi *= 2.0
        if not ok:
            continue
        mu_lo = 1e-9
        for _ in range(100):
            mid = math.sqrt(mu_lo * mu_hi)
            if _is_psd(_pick_matrix(dd, mid, n)):
                mu_hi = mid
            else:
                mu_lo = mid
            if mu_hi - mu_lo < 1e-9 * mu_hi:
                break
        if best is None or mu_hi < best:
            best = mu_hi
            best_n = n
    if best is None:
        raise PickNotPSD("no integer assignment made the Pick matrix feasible")
    return float(best), best_n


class NPInterpolant:
    """Positive-real disk interpolant with a Schur-class free parameter.

    Built by Cayley transform to the Schur class and the classical
    Nevanlinna recursion; evaluation closes the chain with the mapped free
    parameter and symmetrizes so conjugate arguments give conjugate values.
    """

    def __init__(self, dd: DiskData, mu: float, q, branches=None,
                 residual_tol: float = 1e-6):
        self.dd = dd
        self.mu = float(mu)
        self.q = q
        self.branches = dd.branches if branches is None else np.asarray(branches)
        logs = np.log(dd.values.astype(complex))
        targets = math.log(mu) - logs - 2j * np.pi * self.branches
        self._targets = targets
        b_vals = (targets - 1.0) / (targets + 1.0)
        chain = []
        nodes = list(dd.nodes)
        vals = np.array(b_vals, dtype=complex)
        for j in range(len(nodes)):
            z_j = nodes[j]
            c_j = complex(vals[j])
            if abs(c_j) >= 1.0 - 1e-12:
                raise PickNotPSD(
                    f"Schur recursion parameter |c|={abs(c_j):.6f} at stage {j}; "
                    "level is not above the feasibility threshold"
                )
            chain.append((z_j, c_j))
            if j + 1 < len(nodes):
                zs = np.array(nodes[j + 1:])
                tail = vals[j + 1:]
                moeb = (tail - c_j) / (1.0 - np.conj(c_j) * tail)
                blasch = (zs - z_j) / (1.0 - np.conj(z_j) * zs)
                vals = np.concatenate([vals[: j + 1], moeb / blasch])
        self.chain = tuple(chain)
        self._check_residuals(residual_tol)
        self._check_boundary()

    # -- evaluation ---------------------------------------------------------
    def _q_disk(self, z):
        z_arr = np.asarray(z, dtype=complex)
        safe = np.abs(1.0 - z_arr) > 1e-12
        s = self.dd.a * (1.0 + z_arr) / np.where(safe, 1.0 - z_arr, 1.0)
        tail = getattr(self.q, "tail_value", 0.0)
        return np.where(safe, self.q(np.where(safe, s, 0.0)), tail)

    def _schur_eval_raw(self, z):
        z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
        b = np.asarray(self._q_disk(z_arr), dtype=complex) * np.ones_like(z_arr)
        for z_j, c_j in reversed(self.chain):
            t = b * (z_arr - z_j) / (1.0 - np.conj(z_j) * z_arr)
            b = (c_j + t) / (1.0 + np.conj(c_j) * t)
        return b

    def _g_raw(self, z):
        b = self._schur_eval_raw(z)
        return (1.0 + b) / (1.0 - b)

    def g(self, z):
        """Symmetrized positive-real interpolant value(s)."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
        out = 0.5 * (self._g_raw(z_arr) + np.conj(self._g_raw(np.conj(z_arr))))
        return complex(out[0]) if np.ndim(z) == 0 else out

    def half_plane_exponent(self, s):
        """G(s) = g((s - a)/(s + a))."""
        s_arr = np.asarray(s, dtype=complex)
        return self.g((s_arr - self.dd.a) / (s_arr + self.dd.a))

    # -- construction checks -------------------------------------------------
    def _check_residuals(self, tol):
        res = np.abs(self.g(self.dd.nodes) - self._targets)
        scale = 1.0 + np.abs(self._targets)
        if np.any(res / scale > tol):
            raise PickNotPSD(
                f"interpolation residual {np.max(res / scale):.2e} exceeds {tol:.0e}"
            )

    def _check_boundary(self, n: int = 360, tol: float = 1e-8):
        th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        vals = self.g(0.999999 * np.exp(1j * th))
        if np.min(vals.real) < -tol:
            raise PickNotPSD(
                f"interpolant loses positive realness on the boundary "
                f"({np.min(vals.real):.2e})"
            )


def np_interpolant(dd: DiskData, mu: float, q, branches=None) -> NPInterpolant:
    """Positive-real interpolant of the log-sensitivity data at level mu."""
    return NPInterpolant(dd, mu, q, branches)


class _UnitSensitivity:
    """S(s) = mu * B_p(s) * exp(-G(s)): stable, zero exactly on the first
    branch's zeros, equal to one on the second branch's zeros."""

    def __init__(self, npint: NPInterpolant):
        self.npint = npint
        self.blaschke = npint.dd.blaschke_p
        self.mu = npint.mu

    def __call__(self, s):
        return self.mu * self.blaschke(s) * np.exp(-self.npint.half_plane_exponent(s))

    def excluding(self, s, idx: int):
        """S(s) / (s - p_idx) with the Blaschke factor removed analytically."""
        s_arr = np.asarray(s, dtype=complex)
        z = self.blaschke.zeros[idx]
        rest = self.blaschke.eval_excluding(s_arr, idx) / (s_arr + np.conj(z))
        return self.mu * rest * np.exp(-self.npint.half_plane_exponent(s_arr))


class _FreeParameter:
    """U = ((1 - S)/S) * (P1/P2) with all removable singularities deflated."""

    def __init__(self, su: _UnitSensitivity, p1p2: P1P2):
        self.su = su
        self.p1p2 = p1p2
        self._one_minus_s = DeflatedCallable(lambda s: 1.0 - su(s), p1p2.s_zeros)
        self._p2_defl = DeflatedCallable(p1p2.p2, p1p2.s_zeros)
        self._p1_defl = DeflatedCallable(p1p2.p1, p1p2.p_zeros)
        self._guard_s = self._one_minus_s.guard
        self._guard_p = self._p1_defl.guard

    def __call__(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
        su_v = np.asarray(self.su(s_arr), dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (1.0 - su_v) * np.asarray(self.p1p2.p1(s_arr)) \
                / (su_v * np.asarray(self.p1p2.p2(s_arr)))
        for i, sz in enumerate(self.p1p2.s_zeros):
            mask = np.abs(s_arr - sz) < self._guard_s
            if np.any(mask):
                sm = s_arr[mask]
                num = self._single_deflation(self._one_minus_s, sm, i)
                den = self._single_deflation(self._p2_defl, sm, i)
                out[mask] = (num / den) * np.asarray(self.p1p2.p1(sm)) \
                    / np.asarray(self.su(sm))
        for i, pz in enumerate(self.p1p2.p_zeros):
            mask = np.abs(s_arr - pz) < self._guard_p
            if np.any(mask):
                sm = s_arr[mask]
                p1_q = self._single_deflation(self._p1_defl, sm, i)
                s_q = self.su.excluding(sm, i)
                out[mask] = (1.0 - np.asarray(self.su(sm))) * p1_q \
                    / (s_q * np.asarray(self.p1p2.p2(sm)))
        return complex(out[0]) if np.ndim(s) == 0 else out

    @staticmethod
    def _single_deflation(defl: DeflatedCallable, s, idx: int):
        """f(s)/(s - x_idx): restore every other deflation factor."""
        rest = np.ones_like(s)
        for k, x in enumerate(defl.points):
            if k != idx:
                rest = rest * (s - x)
        return defl(s) * rest


def compute_SU_and_U(npint: NPInterpolant, dd: DiskData, p1p2: P1P2,
                     residual_tol: float = 1e-6):
    """Unit sensitivity and free parameter with cancellation checks.

    Verifies S equals one (to tolerance) at every second-branch zero so the
    free parameter's removable singularities genuinely cancel.
    """
    su = _UnitSensitivity(npint)
    resid = np.max(np.abs(np.asarray(su(dd.s_points)) - 1.0))
    if resid > residual_tol:
        raise CancellationFailure(
            f"unit-sensitivity residual {resid:.2e} at an interpolation point"
        )
    u = _FreeParameter(su, p1p2)
    return su, u


def eq20_max_ratio(u, grid=(1e-2, 1e4, 3000), refine: int = 5) -> float:
    """Sup of |U(j w)| on a log grid with golden refinement of the peaks."""
    lo, hi, n = grid
    w = np.concatenate([[0.0], np.logspace(math.log10(lo), math.log10(hi), int(n))])
    vals = np.abs(np.asarray(u(1j * w)))
    order = np.argsort(vals)[::-1]
    peak = float(vals[order[0]])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    for k in order[:refine]:
        k = int(k)
        a = w[max(k - 1, 0)]
        b = w[min(k + 1, len(w) - 1)]
        x1 = b - invphi * (b - a)
        x2 = a + invphi * (b - a)
        f1 = -abs(complex(u(1j * x1)))
        f2 = -abs(complex(u(1j * x2)))
        for _ in range(50):
            if f1 < f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - invphi * (b - a)
                f1 = -abs(complex(u(1j * x1)))
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + invphi * (b - a)
                f2 = -abs(complex(u(1j * x2)))
            if b - a < 1e-10 * (1.0 + b):
                break
        peak = max(peak, -f1, -f2)
    return peak


@dataclass(frozen=True)
class FinCertificate:
    """Feasible (or shortcut) stable-controller certificate."""

    rho: float
    mu: float | None
    mu_opt: float | None
    q_param: FirstOrderU | None
    branches: object
    max_ratio: float
    stable: bool
    u: object = field(repr=False, compare=False, default=None)
    su: object = field(repr=False, compare=False, default=None)
    p1p2: P1P2 = field(repr=False, compare=False, default=None)
    dd: DiskData = field(repr=False, compare=False, default=None)
    shortcut: bool = False


class _ZeroParameter:
    tail_value = 0.0

    def __call__(self, s):
        return np.zeros_like(np.asarray(s, dtype=complex)) if np.ndim(s) else 0.0


@dataclass(frozen=True)
class FinSearchParams:
    """Schedules and grids for the finite-unstable-pole search."""

    q_step: float = 0.01
    n_bound: int = 2
    a: float = 1.0
    anchor: float = 2.0
    mu_schedule: tuple | None = None
    mu_max: float = 1e4


def _default_mu_schedule(mu_opt: float) -> list:
    base = [m * mu_opt / 6.15 for m in (2.0, 5.0, 10.0, 50.0, 100.0)]
    base.append(100.0)
    return sorted({m for m in base if m > mu_opt * 1.01})


def feasible_gain_window(dd: DiskData, p1p2: P1P2, mu: float,
                         branches=None, q_step: float = 0.01):
    """Constant free-parameter gains passing the sup-norm inequality.

    Returns (gains, feasible mask, max ratios) over the [-1, 1] grid.
    """
    gains = np.round(np.arange(-1.0, 1.0 + q_step / 2, q_step), 10)
    mask = np.zeros(len(gains), dtype=bool)
    ratios = np.full(len(gains), np.inf)
    for i, g in enumerate(gains):
        q = FirstOrderU.constant(float(g))
        try:
            npint = np_interpolant(dd, mu, q, branches)
            _, u = compute_SU_and_U(npint, dd, p1p2)
            ratios[i] = eq20_max_ratio(u)
            mask[i] = ratios[i] <= 1.0
        except (PickNotPSD, CancellationFailure):
            continue
    return gains, mask, ratios


def search_fin(rho_schedule, factored: FactoredPlant, weights: Weights,
               gamma_value: float,
               params: FinSearchParams = FinSearchParams()):
    """Level/sensitivity-level/free-parameter schedule search.

    Per level: build the branch evaluators (a zero-free first branch is an
    immediate certificate for the zero parameter), map the disk data, find
    the smallest feasible sensitivity level, then walk the level schedule
    and the constant free-parameter grid until the sup-norm inequality
    holds.  Raises SearchExhausted with per-(level, sensitivity) notes.
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
        p1p2 = build_P1P2(factored, gd, pair)
        if p1p2.n_p == 0:
            return FinCertificate(
                rho=rho, mu=None, mu_opt=None, q_param=None, branches=None,
                max_ratio=0.0, stable=True, u=_ZeroParameter(), su=None,
                p1p2=p1p2, dd=None, shortcut=True,
            ), gd, pair
        dd = disk_data(p1p2, a=params.a)
        mu_opt, best_n = pick_mu_opt(dd, n_bound=params.n_bound)
        schedule = params.mu_schedule or _default_mu_schedule(mu_opt)
        for mu in schedule:
            if mu <= mu_opt * (1.0 + 1e-9) or mu > params.mu_max:
                diagnostics.append((rho, mu, "level below feasibility threshold"))
                continue
            gains = np.round(np.arange(-1.0, 1.0 + params.q_step / 2,
                                       params.q_step), 10)
            for g in gains:
                q = FirstOrderU.constant(float(g))
                try:
                    npint = np_interpolant(dd, float(mu), q, best_n)
                    su, u = compute_SU_and_U(npint, dd, p1p2)
                except (PickNotPSD, CancellationFailure):
                    continue
                ratio = eq20_max_ratio(u)
                if ratio <= 1.0:
                    return FinCertificate(
                        rho=rho, mu=float(mu), mu_opt=mu_opt, q_param=q,
                        branches=best_n, max_ratio=float(ratio), stable=True,
                        u=u, su=su, p1p2=p1p2, dd=dd, shortcut=False,
                    ), gd, pair
            diagnostics.append((rho, mu, "no feasible constant free parameter"))
    raise SearchExhausted("no feasible stable-controller certificate", diagnostics)
