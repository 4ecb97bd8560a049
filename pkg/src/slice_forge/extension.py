"""Representation and extension formulas, spherical data and finite-difference checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    ComplexifiedQuaternion,
    CPoint,
    ImaginaryUnit,
    Quaternion,
    as_quaternion,
    decompose,
    phi,
    phi_extended,
    quat_inv,
    quat_mul,
    splitting_basis,
)
from .domains import AxialDomain, symmetric_completion_region
from .hinge import is_hinged, latitude_runs
from .slicefun import (
    OutsideDomain,
    PowerSeries,
    SliceFunctionHandle,
    SphericalData,
    series_derivative_coeffs,
    series_eval,
    spherical_data_raw,
)

UNIT_SEPARATION = 1e-9
CAP_PROBES = 8
CAP_TOL = 1e-8
FD_STEP = 1e-5


class CoincidentUnits(ValueError):
    pass


class OutsideDJK(ValueError):
    pass


class CapDisagreement(ValueError):
    pass


class OutsideCompletion(ValueError):
    pass


class InconsistentExtension(ValueError):
    pass


class NotHinged(ValueError):
    pass


class NoSecondUnit(ValueError):
    pass


class TooCloseToBoundary(ValueError):
    pass


def _inv_difference(J: Quaternion, K: Quaternion) -> Quaternion:
    d = J - K
    if abs(d) <= UNIT_SEPARATION:
        raise CoincidentUnits(f"|J - K| = {abs(d):.3g} is too small")
    return quat_inv(d)


def rep_formula(fJ: Quaternion, fK: Quaternion, J: Quaternion, K: Quaternion, I: Quaternion) -> Quaternion:
    """``(J-K)^-1 [J fJ - K fK] + I (J-K)^-1 [fJ - fK]``."""
    inv = _inv_difference(J, K)
    if I == J:
        return fJ
    if I == K:
        return fK
    b = quat_mul(inv, quat_mul(J, fJ) - quat_mul(K, fK))
    c = quat_mul(inv, fJ - fK)
    return b + quat_mul(I, c)


def sphere_pair(fJ: Quaternion, fK: Quaternion, J: Quaternion, K: Quaternion) -> tuple[Quaternion, Quaternion]:
    """``(b, c)`` with ``f(alpha + beta I) = b + I c`` recovered from two units."""
    inv = _inv_difference(J, K)
    return quat_mul(inv, quat_mul(J, fJ) - quat_mul(K, fK)), quat_mul(inv, fJ - fK)


@dataclass(frozen=True)
class StemSampleRequest:
    f: SliceFunctionHandle
    J: ImaginaryUnit
    K: ImaginaryUnit
    z: CPoint


def stem_double_index(req: StemSampleRequest) -> ComplexifiedQuaternion:
    """``F^{J,K}(z)``; for ``beta < 0`` the bar of the value at ``conj z``."""
    z = req.z
    if z.beta < 0:
        return stem_double_index(StemSampleRequest(req.f, req.J, req.K, z.conj())).bar()
    _inv_difference(req.J, req.K)
    xJ, xK = phi(req.J, z), phi(req.K, z)
    if not (req.f.in_domain(xJ) and req.f.in_domain(xK)):
        raise OutsideDJK(f"({z.alpha}, {z.beta}) is not in D^(J,K)")
    b, c = sphere_pair(req.f.raw(xJ), req.f.raw(xK), req.J, req.K)
    return ComplexifiedQuaternion(b, c)


@dataclass(frozen=True)
class SingleIndexResult:
    value: ComplexifiedQuaternion
    cap_spread: float
    epsilon_used: float


def cap_units(J: ImaginaryUnit, eps: float, count: int = CAP_PROBES) -> list[ImaginaryUnit]:
    """Units at geodesic distance ``eps`` from ``J``, equally spaced around it."""
    e1, e2 = splitting_basis(J)
    e2 = ImaginaryUnit.of(e2)
    out = []
    for k in range(count):
        th = 2 * math.pi * k / count
        v = J * math.cos(eps) + (e1 * math.cos(th) + e2 * math.sin(th)) * math.sin(eps)
        out.append(ImaginaryUnit.of(v))
    return out


def stem_single_index(f: SliceFunctionHandle, J: ImaginaryUnit, z: CPoint, eps: float,
                      tol: float = CAP_TOL, probes: int = CAP_PROBES) -> SingleIndexResult:
    """``F^J(z)`` as the common value of ``F^{J,K}(z)`` over units ``K`` near ``J``."""
    zu = CPoint(z.alpha, abs(z.beta))
    if not f.in_domain(phi(J, zu)):
        raise OutsideDomain(f"phi_J({zu.alpha}, {zu.beta}) is outside the domain")
    vals = []
    for K in cap_units(J, eps, probes):
        try:
            vals.append(stem_double_index(StemSampleRequest(f, J, K, z)))
        except OutsideDJK as exc:
            raise OutsideDomain(f"probe unit left the domain; shrink eps ({exc})") from exc
    arr = np.array([v.p.to_list() + v.q.to_list() for v in vals])
    mean = arr.mean(0)
    spread = float(np.max(np.linalg.norm(arr - mean, axis=1)) * 2)
    if spread > tol:
        raise CapDisagreement(f"probes disagree by {spread:.3g} > {tol:.3g}")
    value = ComplexifiedQuaternion(Quaternion(*map(float, mean[:4])), Quaternion(*map(float, mean[4:])))
    return SingleIndexResult(value, spread, eps)


# -- global extension on hinged domains ---------------------------------------

def _axial(f: SliceFunctionHandle) -> AxialDomain:
    if not isinstance(f.domain, AxialDomain):
        raise TypeError("global extension needs a function restricted to an axial domain")
    return f.domain


def _band_pairs(dom: AxialDomain, first: int, last: int, min_sep: float = 0.1):
    """Unit pairs inside one latitude band: the furthest-apart pair first,
    then pairs through the middle sample at other longitudes."""
    r1, r2 = float(dom.lats[first]), float(dom.lats[last])
    rm = float(dom.lats[(first + last) // 2])
    cands = [(r1, math.pi / 2, r2, 3 * math.pi / 2),
             (rm, 0.3, r2, 0.3 + 2.5),
             (r1, 1.1, rm, 1.1 + 2.0)]
    for ra, ta, rb, tb in cands:
        J, K = ImaginaryUnit.at_latitude(ra, ta), ImaginaryUnit.at_latitude(rb, tb)
        if abs(J - K) >= min_sep:
            yield J, K


@dataclass(frozen=True)
class ExtensionResult:
    value: Quaternion
    consistency_spread: float
    bands: int


def extend_global(f: SliceFunctionHandle, x: Quaternion, tol: float = 1e-9) -> ExtensionResult:
    """Value at ``x`` of the slice regular extension of ``f`` to the symmetric completion.

    Every latitude band over ``(alpha, beta)`` contributes estimates from a few
    unit pairs; their spread, relative to ``max(1, |value|)``, must stay within ``tol``.
    """
    dom = _axial(f)
    x = as_quaternion(x)
    alpha, beta, I, _ = decompose(x)
    cell = dom.grid.cell_of(alpha, beta)
    if cell is None or not symmetric_completion_region(dom).mask[cell]:
        raise OutsideCompletion(f"({alpha}, {beta}) is outside the symmetric completion of {dom.name}")
    rep = is_hinged(dom)
    if not rep.hinged:
        raise NotHinged(f"{dom.name} is not hinged at resolution (witness {rep.point})")
    z = CPoint(alpha, beta)
    estimates = []
    runs = latitude_runs(dom, cell)
    for first, last in runs:
        for J, K in _band_pairs(dom, first, last):
            F = stem_double_index(StemSampleRequest(f, J, K, z))
            estimates.append((abs(J - K), phi_extended(I, F)))
    if not estimates:
        raise NoSecondUnit(f"no latitude band at ({alpha}, {beta}) offers two distinct units")
    # report the estimate from the best-conditioned pair
    value = max(estimates, key=lambda t: t[0])[1]
    scale = max(1.0, abs(value))
    spread = max(abs(e - value) for _, e in estimates) / scale
    if spread > tol:
        raise InconsistentExtension(f"latitude bands disagree by {spread:.3g} (relative) > {tol:.3g}")
    return ExtensionResult(value, spread, len(runs))


# -- spherical value and derivative -------------------------------------------

def _partner_unit(f: SliceFunctionHandle, alpha: float, beta: float, I: ImaginaryUnit) -> ImaginaryUnit:
    """A second unit ``K`` with ``alpha + beta K`` in the same sphere component
    as ``alpha + beta I``: ``-I`` when available, else the antipode on the
    same latitude, else the furthest unit of the latitude band."""
    z = CPoint(alpha, beta)
    if f.in_domain(phi(-I, z)):
        candidates = [-I]
    else:
        candidates = []
    if not isinstance(f.domain, AxialDomain):
        if candidates:
            return candidates[0]
        raise NoSecondUnit(f"no second unit on the sphere of ({alpha}, {beta})")
    dom = f.domain
    if candidates and _same_sphere_component(dom, z, I, -I):
        return -I
    K = ImaginaryUnit(0.0, -I.x, -I.y, I.z) if abs(I.z) < 1 - 1e-9 else None
    if K is not None and abs(K - I) > 0.1:
        return K
    cell = dom.grid.cell_of(alpha, beta)
    for first, last in latitude_runs(dom, cell):
        if dom.lats[first] - 1e-12 <= I.z <= dom.lats[last] + 1e-12:
            r2 = dom.lats[first] if abs(dom.lats[first] - I.z) > abs(dom.lats[last] - I.z) else dom.lats[last]
            K = ImaginaryUnit.at_latitude(float(r2), math.atan2(I.y, I.x) + math.pi)
            if abs(K - I) > UNIT_SEPARATION:
                return K
    raise NoSecondUnit(f"no second unit on the sphere of ({alpha}, {beta})")


def _same_sphere_component(dom: AxialDomain, z: CPoint, I: ImaginaryUnit, K: ImaginaryUnit) -> bool:
    cell = dom.grid.cell_of(z.alpha, z.beta)
    lo, hi = sorted((I.z, K.z))
    inside = [r for r in dom.lats if lo <= r <= hi] + [lo, hi]
    return all(dom.mask_at(r)[cell] for r in inside)


def spherical_data_formula(f: SliceFunctionHandle, x: Quaternion) -> SphericalData:
    """``(f°_s, f'_s)`` at ``x`` from the two-unit formula."""
    x = as_quaternion(x)
    if not f.in_domain(x):
        raise OutsideDomain(f"{x!r} is outside the domain")
    alpha, beta, I, arbitrary = decompose(x)
    if arbitrary:
        return SphericalData(f.raw(x), None)
    K = _partner_unit(f, alpha, beta, I)
    z = CPoint(alpha, beta)
    fI, fK = f.raw(x), f.raw(phi(K, z))
    b, c = sphere_pair(fI, fK, I, K)
    return SphericalData(b, c * (1.0 / beta))


def spherical_data(f: SliceFunctionHandle, x: Quaternion) -> SphericalData:
    """Raw form when ``x^c`` is available, two-unit formula otherwise."""
    x = as_quaternion(x)
    if f.in_domain(x.conj()):
        return spherical_data_raw(f, x)
    return spherical_data_formula(f, x)


# -- derivatives and finite differences ---------------------------------------

def _fd_points_ok(f: SliceFunctionHandle, pts) -> None:
    for p in pts:
        if not f.in_domain(p):
            raise TooCloseToBoundary(f"{p!r} (finite-difference stencil) is outside the domain")


def _slice_partials(f: SliceFunctionHandle, I: Quaternion, z: CPoint, h: float):
    P = [phi(I, CPoint(z.alpha + da, z.beta + db)) for da, db in ((h, 0), (-h, 0), (0, h), (0, -h))]
    _fd_points_ok(f, [phi(I, CPoint(z.alpha + 2 * da, z.beta + 2 * db))
                      for da, db in ((h, 0), (-h, 0), (0, h), (0, -h))])
    v = [f.raw(p) for p in P]
    return (v[0] - v[1]) * (0.5 / h), (v[2] - v[3]) * (0.5 / h)


def slice_derivative(f: SliceFunctionHandle, x: Quaternion, h: float = FD_STEP) -> Quaternion:
    """``f'_c(x)``: exact term-wise for power series, else ``½(∂α - I ∂β) f_I``."""
    x = as_quaternion(x)
    b = f.backend
    if isinstance(b, PowerSeries):
        if not f.in_domain(x):
            raise OutsideDomain(f"{x!r} is outside the domain")
        return series_eval(series_derivative_coeffs(b.coeffs), x, b.radius)
    alpha, beta, I, _ = decompose(x)
    da, db = _slice_partials(f, I, CPoint(alpha, beta), h)
    return (da - quat_mul(I, db)) * 0.5


def dbar_residual(f: SliceFunctionHandle, I: ImaginaryUnit, z: CPoint, h: float = FD_STEP) -> float:
    """``|½(∂α + I ∂β) f_I|`` at ``z`` by central differences."""
    da, db = _slice_partials(f, I, z, h)
    return abs((da + quat_mul(I, db)) * 0.5)


@dataclass(frozen=True)
class DifferentialCheck:
    lhs: Quaternion
    rhs: Quaternion
    err: float


def differential_check(f: SliceFunctionHandle, x0: Quaternion, v: Quaternion, h: float = FD_STEP) -> DifferentialCheck:
    """Compare the directional difference quotient with ``v1 f'_c + v2 f'_s``,
    where ``v = v1 + v2`` splits along ``C_J ⊕ C_J^⊥`` (``v2 = 0`` at real points)."""
    x0, v = as_quaternion(x0), as_quaternion(v)
    _fd_points_ok(f, [x0 + v * (2 * h), x0 - v * (2 * h)])
    lhs = (f.raw(x0 + v * h) - f.raw(x0 - v * h)) * (0.5 / h)
    fc = slice_derivative(f, x0)
    alpha, beta, J, real = decompose(x0)
    if real:
        rhs = quat_mul(v, fc)
    else:
        v1 = Quaternion(v.w) + J * v.im().dot(J)
        v2 = v - v1
        fs = spherical_data(f, x0).require_derivative()
        rhs = quat_mul(v1, fc) + quat_mul(v2, fs)
    return DifferentialCheck(lhs, rhs, abs(lhs - rhs))


def spine_stem_agreement(f: SliceFunctionHandle, pairs, points) -> float:
    """Max disagreement of ``F^{J,K}`` across unit pairs at the given points."""
    worst = 0.0
    for z in points:
        vals = [stem_double_index(StemSampleRequest(f, J, K, z)) for J, K in pairs]
        for v in vals[1:]:
            worst = max(worst, (v - vals[0]).magnitude())
    return worst
