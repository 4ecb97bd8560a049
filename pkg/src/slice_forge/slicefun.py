"""Stem functions, induced slice functions and quaternionic power series.

A stem function maps ``D ⊆ R_C`` into ``H_C`` and satisfies
``F(conj z) = bar F(z)``.  It induces the slice function
``f(alpha + beta I) = phi_I(F(alpha + ı beta))``.  Power series
``sum x^n a_n`` (coefficients on the right) are the exact oracle used by
every numerical check downstream.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .algebra import (
    ONE,
    ZERO,
    ComplexifiedQuaternion,
    CPoint,
    Quaternion,
    as_quaternion,
    decompose,
    phi,
    phi_extended,
    quat_inv,
    quat_mul,
)

log = logging.getLogger(__name__)

STEM_SYMMETRY_TOL = 1e-10
REAL_AXIS_TOL = 1e-10


class OutsideRadius(ValueError):
    pass


class OutsideDomain(ValueError):
    pass


class OnRealAxis(ValueError):
    pass


class RealAxisMismatch(ValueError):
    pass


# -- power series -------------------------------------------------------------

def estimate_radius(coeffs: Sequence[Quaternion], tail: int | None = None) -> float:
    """Cauchy-Hadamard estimate ``1 / max_n |a_n|^(1/n)`` over the last ``tail``
    coefficients (all of them by default)."""
    n0 = 1 if tail is None else max(1, len(coeffs) - tail)
    roots = [abs(as_quaternion(a)) ** (1.0 / n) for n, a in enumerate(coeffs) if n >= n0]
    m = max(roots, default=0.0)
    return math.inf if m == 0.0 else 1.0 / m


def _check_radius(r2: float, radius: float) -> None:
    if math.isfinite(radius) and r2 >= radius * radius:
        raise OutsideRadius(f"|x| = {math.sqrt(r2):.6g} is not below the radius {radius:.6g}")


def series_eval(coeffs: Sequence[Quaternion], x: Quaternion, radius: float = math.inf) -> Quaternion:
    """``sum x^n a_n`` by Horner: ``a_0 + x (a_1 + x (a_2 + ...))``."""
    x = as_quaternion(x)
    _check_radius(x.norm(), radius)
    acc = ZERO
    for a in reversed(coeffs):
        acc = quat_mul(x, acc) + as_quaternion(a)
    return acc


def power_recurrence(alpha: float, beta: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Real sequences with ``(alpha + beta I)^m = s_m + t_m I`` for ``m < n``."""
    s = np.empty(n)
    t = np.empty(n)
    sm, tm = 1.0, 0.0
    for m in range(n):
        s[m], t[m] = sm, tm
        sm, tm = alpha * sm - beta * tm, beta * sm + alpha * tm
    return s, t


def series_sphere_coeffs(coeffs: Sequence[Quaternion], alpha: float, beta: float,
                         radius: float = math.inf) -> tuple[Quaternion, Quaternion]:
    """``(b, c)`` with ``f(alpha + beta I) = b + I c`` for every unit ``I``."""
    _check_radius(alpha * alpha + beta * beta, radius)
    n = len(coeffs)
    if n == 0:
        return ZERO, ZERO
    s, t = power_recurrence(alpha, beta, n)
    A = np.array([as_quaternion(a).to_list() for a in coeffs])
    return Quaternion(*map(float, s @ A)), Quaternion(*map(float, t @ A))


def series_derivative_coeffs(coeffs: Sequence[Quaternion]) -> list[Quaternion]:
    return [as_quaternion(a) * float(n) for n, a in enumerate(coeffs) if n > 0]


# -- stem-side domain descriptors ---------------------------------------------

class StemDomain(Protocol):
    def contains(self, z: CPoint) -> bool: ...
    def sample(self, n: int, rng: np.random.Generator) -> list[CPoint]: ...
    def real_samples(self, n: int) -> list[float]: ...


@dataclass(frozen=True)
class DiskDomain:
    """Open disk in ``R_C`` centered on the real axis (conjugation invariant)."""

    center: float = 0.0
    radius: float = math.inf

    def contains(self, z: CPoint) -> bool:
        return (z.alpha - self.center) ** 2 + z.beta ** 2 < self.radius ** 2

    def _r(self) -> float:
        return min(self.radius, 4.0) * 0.95

    def sample(self, n, rng):
        rho = self._r() * np.sqrt(rng.random(n))
        th = rng.uniform(-math.pi, math.pi, n)
        return [CPoint(self.center + a, b) for a, b in zip(rho * np.cos(th), rho * np.sin(th))]

    def real_samples(self, n):
        r = self._r()
        return list(np.linspace(self.center - r, self.center + r, n))


@dataclass(frozen=True)
class RegionDomain:
    """Conjugation-symmetric set whose upper half is a raster region."""

    region: object  # PlanarRegion

    def contains(self, z: CPoint) -> bool:
        return self.region.contains(CPoint(z.alpha, abs(z.beta)))

    def sample(self, n, rng):
        cells = self.region.cells()
        if len(cells) == 0:
            return []
        pick = cells[rng.integers(0, len(cells), n)]
        g = self.region.grid
        out = []
        for (p, q), sign in zip(pick, rng.choice([-1.0, 1.0], n)):
            c = g.center(int(p), int(q))
            out.append(CPoint(c.alpha, sign * c.beta))
        return out

    def real_samples(self, n):
        g = self.region.grid
        cols = self.region.real_cells()
        if len(cols) == 0:
            return []
        idx = np.unique(np.linspace(0, len(cols) - 1, min(n, len(cols))).astype(int))
        return [g.alpha_min + (cols[i] + 0.5) * g.h for i in idx]


# -- stem functions -----------------------------------------------------------

@dataclass(frozen=True)
class StemFunction:
    evaluator: Callable[[CPoint], ComplexifiedQuaternion]
    domain: StemDomain = field(default_factory=DiskDomain)
    symmetry_validated: bool = False

    def __call__(self, z: CPoint) -> ComplexifiedQuaternion:
        if not self.domain.contains(z):
            raise OutsideDomain(f"{z} is outside the stem domain")
        return self.evaluator(z)


def series_stem(coeffs: Sequence[Quaternion], radius: float = math.inf) -> StemFunction:
    """The stem ``F(z) = sum z^n a_n`` with powers taken in ``R_C``."""
    coeffs = [as_quaternion(a) for a in coeffs]

    def F(z: CPoint) -> ComplexifiedQuaternion:
        b, c = series_sphere_coeffs(coeffs, z.alpha, z.beta, radius)
        return ComplexifiedQuaternion(b, c)

    return StemFunction(F, DiskDomain(0.0, radius), symmetry_validated=True)


def induce(F: StemFunction, x: Quaternion) -> Quaternion:
    alpha, beta, unit, _ = decompose(x)
    return phi_extended(unit, F(CPoint(alpha, beta)))


def induce_at(F: StemFunction, alpha: float, beta: float, unit: Quaternion) -> Quaternion:
    """Induced value at ``alpha + beta I`` for an explicit (possibly negative) beta."""
    return phi_extended(unit, F(CPoint(alpha, beta)))


def schwarz_reflect(F_upper: StemFunction, real_points: Iterable[float] | None = None,
                    tol: float = REAL_AXIS_TOL) -> StemFunction:
    """Extend stem data given on ``beta >= 0`` by ``F(conj z) = bar F(z)``.

    Real-axis values must already be bar-fixed (no ı part).
    """
    pts = list(real_points) if real_points is not None else F_upper.domain.real_samples(65)
    for a in pts:
        v = F_upper.evaluator(CPoint(float(a), 0.0))
        err = (v.bar() - v).magnitude()
        if err > tol:
            raise RealAxisMismatch(f"F({a}) has ı-part of size {err / 2:.3g}")

    def F(z: CPoint) -> ComplexifiedQuaternion:
        if z.beta >= 0:
            return F_upper.evaluator(z)
        return F_upper.evaluator(z.conj()).bar()

    return StemFunction(F, F_upper.domain, symmetry_validated=True)


@dataclass(frozen=True)
class SymmetryReport:
    samples: int
    max_err: float
    tolerance: float
    passed: bool
    warning: str | None = None


def stem_symmetry_check(F: StemFunction, samples: int = 200, seed: int = 0,
                        tol: float = STEM_SYMMETRY_TOL) -> SymmetryReport:
    rng = np.random.default_rng(seed)
    pts = F.domain.sample(samples, rng) if samples > 0 else []
    if not pts:
        log.warning("stem symmetry check ran on an empty sample set")
        return SymmetryReport(0, 0.0, tol, True, "empty sample set")
    worst = 0.0
    for z in pts:
        worst = max(worst, (F(z.conj()) - F(z).bar()).magnitude())
    return SymmetryReport(len(pts), worst, tol, worst <= tol)


@dataclass(frozen=True)
class GridStem:
    """Stem values on a node lattice, bilinearly interpolated.

    ``values[p, q]`` holds ``F(alpha0 + p h + ı q h)`` as 8 floats (p then q
    part); only ``beta >= 0`` is stored and the lower half is reflected.
    """

    alpha0: float
    h: float
    values: np.ndarray

    def __call__(self, z: CPoint) -> ComplexifiedQuaternion:
        flip = z.beta < 0
        u = (z.alpha - self.alpha0) / self.h
        v = abs(z.beta) / self.h
        nx, ny = self.values.shape[:2]
        if not (0 <= u <= nx - 1 and 0 <= v <= ny - 1):
            raise OutsideDomain(f"{z} is outside the sampled stem grid")
        p0, q0 = min(int(u), nx - 2), min(int(v), ny - 2)
        du, dv = u - p0, v - q0
        V = self.values
        out = ((1 - du) * (1 - dv) * V[p0, q0] + du * (1 - dv) * V[p0 + 1, q0]
               + (1 - du) * dv * V[p0, q0 + 1] + du * dv * V[p0 + 1, q0 + 1])
        val = ComplexifiedQuaternion(Quaternion(*map(float, out[:4])), Quaternion(*map(float, out[4:])))
        return val.bar() if flip else val

    def stem(self) -> StemFunction:
        nx, ny = self.values.shape[:2]
        a1 = self.alpha0 + (nx - 1) * self.h
        b1 = (ny - 1) * self.h
        from .planar import Grid, Rect, rasterize

        region = rasterize(Rect(self.alpha0, a1, -1.0, b1), Grid(self.alpha0, a1, b1, self.h))
        return StemFunction(self, RegionDomain(region))


# -- slice function handles ---------------------------------------------------

@dataclass(frozen=True)
class PowerSeries:
    coeffs: tuple[Quaternion, ...]
    radius: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(as_quaternion(a) for a in self.coeffs))


@dataclass(frozen=True)
class Stem:
    stem: StemFunction


@dataclass(frozen=True)
class Pointwise:
    evaluator: Callable[[Quaternion], Quaternion]
    contains: Callable[[Quaternion], bool] | None = None


@dataclass(frozen=True)
class BallDomain:
    """Open ball ``B(center, radius)`` with real center."""

    center: float = 0.0
    radius: float = 1.0

    def contains(self, x: Quaternion) -> bool:
        x = as_quaternion(x)
        return abs(x - self.center) < self.radius

    def contains_slice(self, unit: Quaternion, z: CPoint) -> bool:
        return (z.alpha - self.center) ** 2 + z.beta ** 2 < self.radius ** 2


@dataclass(frozen=True)
class SliceFunctionHandle:
    """Evaluatable slice function with an optional quaternionic domain.

    ``domain`` may be None (the backend's natural domain), a :class:`BallDomain`
    or anything with ``contains(x: Quaternion) -> bool`` such as an axial domain.
    """

    backend: PowerSeries | Stem | Pointwise
    domain: object = None
    name: str = ""

    def in_domain(self, x: Quaternion) -> bool:
        x = as_quaternion(x)
        b = self.backend
        if isinstance(b, PowerSeries) and math.isfinite(b.radius) and not x.norm() < b.radius ** 2:
            return False
        if isinstance(b, Pointwise) and b.contains is not None and not b.contains(x):
            return False
        if isinstance(b, Stem):
            al, be, _, _ = decompose(x)
            if not b.stem.domain.contains(CPoint(al, be)):
                return False
        return self.domain is None or bool(self.domain.contains(x))

    def __call__(self, x: Quaternion) -> Quaternion:
        x = as_quaternion(x)
        if not self.in_domain(x):
            raise OutsideDomain(f"{x!r} is outside the domain of {self.name or 'f'}")
        return self.raw(x)

    def raw(self, x: Quaternion) -> Quaternion:
        """Backend evaluation without the domain check."""
        b = self.backend
        if isinstance(b, PowerSeries):
            return series_eval(b.coeffs, x, b.radius)
        if isinstance(b, Stem):
            return induce(b.stem, x)
        return b.evaluator(x)

    def at(self, unit: Quaternion, z: CPoint) -> Quaternion:
        """``f(alpha + beta I)``, allowing negative beta."""
        return self(phi(unit, z))

    def restrict(self, domain, name: str | None = None) -> "SliceFunctionHandle":
        return SliceFunctionHandle(self.backend, domain, self.name if name is None else name)

    @property
    def coeffs(self) -> tuple[Quaternion, ...] | None:
        return self.backend.coeffs if isinstance(self.backend, PowerSeries) else None


def series_handle(coeffs: Sequence, radius: float = math.inf, domain=None, name: str = "") -> SliceFunctionHandle:
    return SliceFunctionHandle(PowerSeries(tuple(as_quaternion(a) for a in coeffs), radius), domain, name)


@dataclass(frozen=True)
class SphericalData:
    value: Quaternion
    derivative: Quaternion | None

    def require_derivative(self) -> Quaternion:
        if self.derivative is None:
            raise OnRealAxis("the spherical derivative is undefined on the real axis")
        return self.derivative


def im_inverse(x: Quaternion) -> Quaternion:
    im = as_quaternion(x).im()
    if im.norm() == 0.0:
        raise OnRealAxis(f"{x!r} is real")
    return quat_inv(im)


def spherical_data_raw(f: SliceFunctionHandle, x: Quaternion) -> SphericalData:
    x = as_quaternion(x)
    fx = f(x)
    if x.im().norm() == 0.0:
        return SphericalData(fx, None)
    fxc = f(x.conj())
    value = (fx + fxc) * 0.5
    return SphericalData(value, quat_mul(im_inverse(x), (fx - fxc) * 0.5))


# -- function-spec parsing ----------------------------------------------------

def _non_slice_indicator(unit: Quaternion) -> Pointwise:
    """1 on ``C_I0`` minus the reals, 0 elsewhere; defined off the real axis."""
    def ev(x: Quaternion) -> Quaternion:
        im = x.im()
        n = abs(im)
        cross = abs(quat_mul(im, unit) - quat_mul(unit, im)) / 2.0
        return ONE if cross <= 1e-12 * max(1.0, n) else ZERO

    return Pointwise(ev, lambda x: x.im().norm() > 0.0)


NAMED_FUNCTIONS: dict[str, Callable[[], SliceFunctionHandle]] = {
    "x^2": lambda: series_handle([0, 0, 1], name="x^2"),
    "x^3": lambda: series_handle([0, 0, 0, 1], name="x^3"),
    "x": lambda: series_handle([0, 1], name="x"),
    "xi": lambda: series_handle([0, [0, 1, 0, 0]], name="xi"),
    "conj": lambda: SliceFunctionHandle(Pointwise(lambda x: x.conj()), None, "conj"),
    "indicator_i": lambda: SliceFunctionHandle(_non_slice_indicator(Quaternion(0, 1, 0, 0)), None, "indicator_i"),
}


def parse_function_spec(spec) -> SliceFunctionHandle:
    """Accept a built-in name, ``{"series": [[w,x,y,z], ...], "radius": R}`` or
    ``{"stem_grid": {"alpha0": a, "h": h, "values": [[[8 floats]...]...]}}``."""
    if isinstance(spec, SliceFunctionHandle):
        return spec
    if isinstance(spec, str):
        key = spec.strip().replace("²", "^2").replace("³", "^3").replace("**", "^")
        if key not in NAMED_FUNCTIONS:
            raise ValueError(f"unknown function {spec!r}; known: {sorted(NAMED_FUNCTIONS)}")
        return NAMED_FUNCTIONS[key]()
    if not isinstance(spec, dict):
        raise ValueError("function spec must be a name or an object")
    if "series" in spec:
        coeffs = [Quaternion.from_seq(c) if len(c) == 4 else None for c in spec["series"]]
        if any(c is None for c in coeffs):
            raise ValueError("series coefficients must be [w, x, y, z]")
        radius = float(spec.get("radius", math.inf))
        return series_handle(coeffs, radius, name="series")
    if "stem_grid" in spec:
        g = spec["stem_grid"]
        values = np.asarray(g["values"], dtype=float)
        if values.ndim != 3 or values.shape[2] != 8 or min(values.shape[:2]) < 2:
            raise ValueError("stem_grid values must have shape (nx >= 2, ny >= 2, 8)")
        gs = GridStem(float(g["alpha0"]), float(g["h"]), values)
        return SliceFunctionHandle(Stem(gs.stem()), None, "stem_grid")
    raise ValueError(f"unrecognized function spec keys: {sorted(spec)}")
