"""Quaternions, complexified quaternions and the slice embeddings.

Quaternions are stored as four floats ``w + x i + y j + z k``.  The
complexified algebra ``H_C = H + ı H`` is stored as a pair ``(p, q)``
standing for ``p + ı q``; ``ı`` is central and squares to ``-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

UNIT_TOL = 1e-12
RENORMALIZE_TOL = 1e-9


class NotAUnit(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Quaternion:
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_seq(cls, seq: Sequence[float]) -> "Quaternion":
        if len(seq) != 4:
            raise ValueError(f"quaternion needs 4 components, got {len(seq)}")
        return cls(*(float(c) for c in seq))

    @classmethod
    def real(cls, a: float) -> "Quaternion":
        return cls(float(a), 0.0, 0.0, 0.0)

    def to_list(self) -> list[float]:
        return [self.w, self.x, self.y, self.z]

    def __iter__(self):
        return iter((self.w, self.x, self.y, self.z))

    def __add__(self, o):
        o = as_quaternion(o)
        return Quaternion(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)

    __radd__ = __add__

    def __sub__(self, o):
        o = as_quaternion(o)
        return Quaternion(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)

    def __rsub__(self, o):
        return as_quaternion(o) - self

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, o):
        if isinstance(o, (int, float)):
            return Quaternion(self.w * o, self.x * o, self.y * o, self.z * o)
        return quat_mul(self, o)

    def __rmul__(self, o):
        if isinstance(o, (int, float)):
            return Quaternion(self.w * o, self.x * o, self.y * o, self.z * o)
        return quat_mul(as_quaternion(o), self)

    def __truediv__(self, o: float):
        return Quaternion(self.w / o, self.x / o, self.y / o, self.z / o)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def trace(self) -> float:
        return 2.0 * self.w

    def norm(self) -> float:
        """Squared Euclidean length ``q q^c``."""
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def __abs__(self) -> float:
        return math.sqrt(self.norm())

    def re(self) -> float:
        return self.w

    def im(self) -> "Quaternion":
        return Quaternion(0.0, self.x, self.y, self.z)

    def is_real(self, tol: float = 0.0) -> bool:
        return abs(self.x) <= tol and abs(self.y) <= tol and abs(self.z) <= tol

    def inv(self) -> "Quaternion":
        return quat_inv(self)

    def dot(self, o: "Quaternion") -> float:
        return self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z

    def __repr__(self) -> str:
        return f"Quaternion({self.w!r}, {self.x!r}, {self.y!r}, {self.z!r})"


def as_quaternion(v) -> Quaternion:
    if isinstance(v, Quaternion):
        return v
    if isinstance(v, (int, float)):
        return Quaternion(float(v))
    return Quaternion.from_seq(v)


ONE = Quaternion(1.0)
ZERO = Quaternion()
QI = Quaternion(0.0, 1.0)
QJ = Quaternion(0.0, 0.0, 1.0)
QK = Quaternion(0.0, 0.0, 0.0, 1.0)


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_inv(a: Quaternion) -> Quaternion:
    n = a.norm()
    if n == 0.0:
        raise ZeroDivisionError("quaternion 0 has no inverse")
    return a.conj() / n


class ImaginaryUnit(Quaternion):
    """Element of the sphere ``S`` of imaginary units (``u^2 = -1``).

    Inputs within ``RENORMALIZE_TOL`` of the sphere are projected onto it;
    anything further away raises :class:`NotAUnit`.
    """

    __slots__ = ()

    def __init__(self, w: float = 0.0, x: float = 0.0, y: float = 0.0, z: float = 0.0):
        w, x, y, z = float(w), float(x), float(y), float(z)
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if abs(w) > RENORMALIZE_TOL or abs(n - 1.0) > RENORMALIZE_TOL:
            raise NotAUnit(f"({w}, {x}, {y}, {z}) is not an imaginary unit")
        if abs(w) > UNIT_TOL or abs(n - 1.0) > UNIT_TOL:
            nim = math.sqrt(x * x + y * y + z * z)
            w, x, y, z = 0.0, x / nim, y / nim, z / nim
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @classmethod
    def of(cls, q) -> "ImaginaryUnit":
        if isinstance(q, ImaginaryUnit):
            return q
        q = as_quaternion(q)
        return cls(q.w, q.x, q.y, q.z)

    @classmethod
    def from_imag(cls, xyz: Sequence[float]) -> "ImaginaryUnit":
        """Build from the 3-element wire form ``[x, y, z]``."""
        if len(xyz) != 3:
            raise ValueError("unit needs 3 imaginary components")
        return cls(0.0, *xyz)

    @classmethod
    def at_latitude(cls, r: float, angle: float = math.pi / 2) -> "ImaginaryUnit":
        """Unit ``s cos(angle) i + s sin(angle) j + r k`` with ``s = sqrt(1-r^2)``.

        The default angle gives ``sqrt(1-r^2) j + r k``.
        """
        s = math.sqrt(max(0.0, 1.0 - r * r))
        return cls(0.0, s * math.cos(angle), s * math.sin(angle), r)

    @property
    def latitude(self) -> float:
        return self.z

    def __neg__(self) -> "ImaginaryUnit":
        return ImaginaryUnit(0.0, -self.x, -self.y, -self.z)

    def to_imag(self) -> list[float]:
        return [self.x, self.y, self.z]

    def __repr__(self) -> str:
        return f"ImaginaryUnit({self.x!r}, {self.y!r}, {self.z!r})"


UNIT_I = ImaginaryUnit(0.0, 1.0, 0.0, 0.0)
UNIT_J = ImaginaryUnit(0.0, 0.0, 1.0, 0.0)
UNIT_K = ImaginaryUnit(0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True, slots=True)
class CPoint:
    """Point ``alpha + ı beta`` of ``R_C``."""

    alpha: float
    beta: float

    def conj(self) -> "CPoint":
        return CPoint(self.alpha, -self.beta)

    def __mul__(self, o: "CPoint") -> "CPoint":
        return CPoint(self.alpha * o.alpha - self.beta * o.beta,
                      self.alpha * o.beta + self.beta * o.alpha)

    def __add__(self, o: "CPoint") -> "CPoint":
        return CPoint(self.alpha + o.alpha, self.beta + o.beta)

    def to_complex(self) -> complex:
        return complex(self.alpha, self.beta)


@dataclass(frozen=True, slots=True)
class ComplexifiedQuaternion:
    """``p + ı q`` with quaternions ``p``, ``q``."""

    p: Quaternion = ZERO
    q: Quaternion = ZERO

    @classmethod
    def from_pair(cls, pair) -> "ComplexifiedQuaternion":
        if len(pair) != 2:
            raise ValueError("complexified quaternion needs a pair of quaternions")
        return cls(as_quaternion(pair[0]), as_quaternion(pair[1]))

    @classmethod
    def from_cpoint(cls, z: CPoint) -> "ComplexifiedQuaternion":
        return cls(Quaternion(z.alpha), Quaternion(z.beta))

    def to_list(self) -> list[list[float]]:
        return [self.p.to_list(), self.q.to_list()]

    def __add__(self, o: "ComplexifiedQuaternion") -> "ComplexifiedQuaternion":
        return ComplexifiedQuaternion(self.p + o.p, self.q + o.q)

    def __sub__(self, o: "ComplexifiedQuaternion") -> "ComplexifiedQuaternion":
        return ComplexifiedQuaternion(self.p - o.p, self.q - o.q)

    def __neg__(self) -> "ComplexifiedQuaternion":
        return ComplexifiedQuaternion(-self.p, -self.q)

    def __mul__(self, o):
        if isinstance(o, (int, float)):
            return ComplexifiedQuaternion(self.p * o, self.q * o)
        return cq_mul(self, o)

    def bar(self) -> "ComplexifiedQuaternion":
        return ComplexifiedQuaternion(self.p, -self.q)

    def star(self) -> "ComplexifiedQuaternion":
        return ComplexifiedQuaternion(self.p.conj(), self.q.conj())

    def magnitude(self) -> float:
        return math.sqrt(self.p.norm() + self.q.norm())


IOTA = ComplexifiedQuaternion(ZERO, ONE)


def cq_mul(a: ComplexifiedQuaternion, b: ComplexifiedQuaternion) -> ComplexifiedQuaternion:
    return ComplexifiedQuaternion(
        quat_mul(a.p, b.p) - quat_mul(a.q, b.q),
        quat_mul(a.p, b.q) + quat_mul(a.q, b.p),
    )


def cq_involutions(a: ComplexifiedQuaternion) -> tuple[ComplexifiedQuaternion, ComplexifiedQuaternion]:
    return a.bar(), a.star()


class Decomposition(NamedTuple):
    alpha: float
    beta: float
    unit: ImaginaryUnit
    arbitrary: bool


def decompose(x: Quaternion) -> Decomposition:
    """Write ``x = alpha + beta I`` with ``beta >= 0``.

    For real ``x`` the unit is ``i`` and ``arbitrary`` is set, since any
    unit would do.
    """
    x = as_quaternion(x)
    beta = math.sqrt(x.x * x.x + x.y * x.y + x.z * x.z)
    if beta == 0.0:
        return Decomposition(float(x.w), 0.0, UNIT_I, True)
    return Decomposition(float(x.w), beta, ImaginaryUnit(0.0, x.x / beta, x.y / beta, x.z / beta), False)


def phi(unit: Quaternion, z: CPoint) -> Quaternion:
    """``alpha + ı beta  ->  alpha + beta I``."""
    return Quaternion(z.alpha + z.beta * unit.w, z.beta * unit.x, z.beta * unit.y, z.beta * unit.z)


def phi_extended(unit: Quaternion, v: ComplexifiedQuaternion) -> Quaternion:
    """``p + ı q  ->  p + I q``; real-linear and onto H, with
    ``phi_extended(I, z w) = phi(I, z) phi_extended(I, w)`` for ``z`` in ``R_C``."""
    return v.p + quat_mul(unit, v.q)


def splitting_basis(unit: Quaternion) -> tuple[ImaginaryUnit, Quaternion]:
    """Return ``(J, I J)`` completing ``{1, I}`` to an orthonormal basis.

    Gram-Schmidt seeds are tried in the fixed order i, j, k.
    """
    if not isinstance(unit, ImaginaryUnit):
        if abs(unit.norm() - 1.0) > UNIT_TOL or abs(unit.w) > UNIT_TOL:
            raise NotAUnit(f"{unit!r} is not an imaginary unit")
        unit = ImaginaryUnit.of(unit)
    for seed in (QI, QJ, QK):
        c = seed.dot(unit)
        v = Quaternion(0.0, seed.x - c * unit.x, seed.y - c * unit.y, seed.z - c * unit.z)
        n = abs(v)
        if n > 0.5:
            j = ImaginaryUnit(0.0, v.x / n, v.y / n, v.z / n)
            return j, quat_mul(unit, j)
    raise AssertionError("unreachable: one of i, j, k is far from span(I)")


def circularize_point(z: CPoint, units: Sequence[Quaternion]) -> list[Quaternion]:
    """Points of the sphere ``alpha + beta S`` hit by the given units."""
    return [phi(u, z) for u in units]


def dist(a: Quaternion, b: Quaternion) -> float:
    return abs(a - b)
