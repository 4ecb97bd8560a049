"""Axially symmetric quaternionic domains given by latitude-indexed profiles.

A domain is described by its half-slice traces: for a unit ``J`` with
latitude ``r = x_3`` the trace is a planar region ``D_r`` in the closed upper
half plane, and ``alpha + beta J`` (``beta >= 0``) lies in the domain iff
``(alpha, beta) ∈ D_r``.  Everything is sampled at finitely many latitudes
and rasterized on a :class:`~slice_forge.planar.Grid`.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .algebra import CPoint, Quaternion, as_quaternion, decompose
from .planar import (
    DEFAULT_GRID,
    Grid,
    HalfDisk,
    PlanarRegion,
    Rect,
    RegionSpec,
    Union,
    components,
    distance_to_complement,
    grid_path,
    label_mask,
    parse_region_spec,
    rasterize,
    real_disk_radii,
    real_disk_union,
    tube_epsilon,
)

DEFAULT_N_LAT = 129
SQRT2_2 = math.sqrt(2.0) / 2.0


class InvalidWidth(ValueError):
    pass


class InvalidSail(ValueError):
    pass


class PointOutsideDomain(ValueError):
    pass


# -- width functions ----------------------------------------------------------

@dataclass(frozen=True)
class WidthPiece:
    r0: float
    r1: float
    kind: str = "affine"  # affine | constant | zero
    a: float = 0.0
    b: float = 0.0
    open: bool = False

    def __post_init__(self):
        if self.kind not in ("affine", "constant", "zero"):
            raise InvalidWidth(f"unknown piece kind {self.kind!r}")
        if not self.r0 <= self.r1:
            raise InvalidWidth(f"empty interval [{self.r0}, {self.r1}]")

    def covers(self, r):
        if self.open:
            return (r > self.r0) & (r < self.r1)
        return (r >= self.r0) & (r <= self.r1)

    def value(self, r):
        if self.kind == "zero":
            return np.zeros_like(r, dtype=float)
        if self.kind == "constant":
            return np.full_like(r, self.b, dtype=float)
        return self.a * r + self.b

    def to_json(self) -> dict:
        return {"interval": [self.r0, self.r1], "kind": self.kind, "a": self.a, "b": self.b, "open": self.open}


@dataclass(frozen=True)
class WidthFunction:
    """Piecewise width ``w: [-1, 1] -> [0, 2]``; uncovered latitudes give 0 and
    overlapping pieces combine by max."""

    pieces: tuple[WidthPiece, ...] = ()

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for p in self.pieces:
            out = np.where(p.covers(r), np.maximum(out, p.value(r)), out)
        return out if out.ndim else float(out)

    def endpoints(self) -> list[float]:
        return sorted({e for p in self.pieces for e in (p.r0, p.r1)})

    def validate(self) -> None:
        probe = np.unique(np.concatenate([np.linspace(-1, 1, 2001), self.endpoints()]))
        probe = probe[(probe >= -1) & (probe <= 1)]
        vals = self(probe)
        if np.any(vals < -1e-12) or np.any(vals > 2 + 1e-12):
            bad = probe[(vals < -1e-12) | (vals > 2 + 1e-12)][0]
            raise InvalidWidth(f"width {self(bad)} at r = {bad} is outside [0, 2]")
        for end in (-1.0, 1.0):
            if abs(self(end)) > 1e-12:
                raise InvalidWidth(f"width must vanish at r = {end}, got {self(end)}")

    def to_json(self) -> dict:
        return {"pieces": [p.to_json() for p in self.pieces]}

    @classmethod
    def from_json(cls, data) -> "WidthFunction":
        try:
            pieces = []
            for p in data["pieces"]:
                r0, r1 = p["interval"]
                pieces.append(WidthPiece(float(r0), float(r1), p.get("kind", "affine"),
                                         float(p.get("a", 0.0)), float(p.get("b", 0.0)), bool(p.get("open", False))))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidWidth):
                raise
            raise InvalidWidth(f"malformed width function: {exc}") from exc
        w = cls(tuple(pieces))
        w.validate()
        return w

    def mirrored(self) -> "WidthFunction":
        """``r -> w(-r)``."""
        return WidthFunction(tuple(
            WidthPiece(-p.r1, -p.r0, p.kind, -p.a, p.b, p.open) for p in self.pieces))


def affine(r0, r1, a, b) -> WidthPiece:
    return WidthPiece(r0, r1, "affine", a, b)


def indicator(r0, r1, c) -> WidthPiece:
    return WidthPiece(r0, r1, "constant", 0.0, c, open=True)


# -- the C-shaped family ------------------------------------------------------

R1 = Rect(-1.0, 0.0, -1.0, 4.0)
R2 = Rect(2.0, 3.0, -1.0, 4.0)
R_SPEC = Union((R1, R2))
C_SPEC = Union((R1, R2, Rect(-1.0, 3.0, 3.0, 4.0)))


def c_family_spec(w1: float, w2: float) -> RegionSpec:
    """``R ∪ ((-1, w1) x (3, 4)) ∪ ((2 - w2, 3) x (3, 4))``."""
    return Union((R1, R2, Rect(-1.0, w1, 3.0, 4.0), Rect(2.0 - w2, 3.0, 3.0, 4.0)))


@dataclass(frozen=True)
class SailAttachment:
    """Copies of ``D'`` glued on latitude intervals.

    Intervals are open, except that an endpoint at ``±1`` is included (the
    pole belongs to a band ``x_3 > rho``).
    """

    intervals: tuple[tuple[float, float], ...]
    D_prime: RegionSpec
    D: RegionSpec

    def active(self, r: float) -> bool:
        for r0, r1 in self.intervals:
            if r0 < r < r1 or (r == r1 == 1.0) or (r == r0 == -1.0):
                return True
        return False

    def endpoints(self) -> list[float]:
        return [e for iv in self.intervals for e in iv]

    def to_json(self) -> dict:
        return {"latitudes": [list(iv) for iv in self.intervals],
                "Dprime": self.D_prime.to_json(), "D": self.D.to_json()}

    @classmethod
    def from_json(cls, data) -> "SailAttachment":
        try:
            ivs = tuple((float(a), float(b)) for a, b in data["latitudes"])
            return cls(ivs, parse_region_spec(data["Dprime"]), parse_region_spec(data["D"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSail(f"malformed sail: {exc}") from exc


# -- axial domains ------------------------------------------------------------

def latitude_samples(n_lat: int, extra: Sequence[float] = ()) -> np.ndarray:
    """``n_lat`` equispaced latitudes plus ``±sqrt(2)/2`` and each breakpoint
    shifted by half a step to either side, symmetrized."""
    if n_lat < 2:
        raise ValueError("need at least two latitude samples")
    base = np.linspace(-1.0, 1.0, n_lat)
    step = 2.0 / (n_lat - 1)
    pts = list(base) + [SQRT2_2, -SQRT2_2]
    for e in extra:
        if -1.0 < e < 1.0:
            pts += [e - step / 2, e + step / 2]
    pts += [-p for p in pts]
    arr = np.unique(np.clip(np.array(pts), -1.0, 1.0))
    keep = np.concatenate([[True], np.diff(arr) > 1e-12])
    return arr[keep]


class AxialDomain:
    """Speared-style axial domain with per-latitude raster traces.

    ``profile(r)`` returns the boolean mask of ``D_r`` (sails included) for any
    latitude; ``lats`` are the sample latitudes used by all set-level checks.
    """

    def __init__(self, name: str, grid: Grid, lats: Sequence[float],
                 profile: Callable[[float], np.ndarray], *,
                 w1: WidthFunction | None = None, w2: WidthFunction | None = None,
                 sails: Sequence[SailAttachment] = (), n_lat: int | None = None,
                 config: dict | None = None):
        self.name = name
        self.grid = grid
        self.lats = np.asarray(lats, dtype=float)
        self._profile = profile
        self.w1, self.w2 = w1, w2
        self.sails = tuple(sails)
        self.n_lat = n_lat if n_lat is not None else len(self.lats)
        self.config = config
        self._cache: dict[float, np.ndarray] = {}

    def __repr__(self):
        return f"AxialDomain({self.name!r}, {len(self.lats)} latitudes, grid {self.grid.shape})"

    def mask_at(self, r: float) -> np.ndarray:
        r = float(r)
        m = self._cache.get(r)
        if m is None:
            if len(self._cache) > 4096:
                self._cache.clear()
            m = np.asarray(self._profile(r), dtype=bool)
            m.setflags(write=False)
            self._cache[r] = m
        return m

    def slice_region(self, r: float) -> PlanarRegion:
        if not -1.0 <= r <= 1.0:
            raise ValueError(f"latitude {r} outside [-1, 1]")
        return PlanarRegion(self.grid, self.mask_at(r).copy())

    @cached_property
    def masks(self) -> np.ndarray:
        """Stacked sample masks, shape ``(n_lats, nx, ny)``."""
        out = np.stack([self.mask_at(r) for r in self.lats])
        out.setflags(write=False)
        return out

    @cached_property
    def mask_ids(self) -> np.ndarray:
        """Index of the first sample with an identical mask, per sample."""
        seen: dict[bytes, int] = {}
        ids = np.empty(len(self.lats), dtype=int)
        for a, m in enumerate(self.masks):
            ids[a] = seen.setdefault(np.packbits(m).tobytes(), a)
        return ids

    def lat_index(self, r: float) -> int:
        return int(np.argmin(np.abs(self.lats - r)))

    def contains_slice(self, r: float, z: CPoint) -> bool:
        cell = self.grid.cell_of(z.alpha, z.beta)
        return cell is not None and bool(self.mask_at(r)[cell])

    def contains(self, x: Quaternion) -> bool:
        alpha, beta, unit, arbitrary = decompose(as_quaternion(x))
        cell = self.grid.cell_of(alpha, beta)
        if cell is None:
            return False
        if arbitrary:
            return bool(self.masks[:, cell[0], cell[1]].any())
        return bool(self.mask_at(unit.latitude)[cell])

    def to_config(self) -> dict:
        if self.config is None:
            raise ValueError(f"domain {self.name} has no serializable config")
        return self.config


def _sail_masks(sails: Sequence[SailAttachment], grid: Grid) -> list[np.ndarray]:
    return [rasterize(s.D_prime, grid).mask for s in sails]


def build_axial(w1: WidthFunction, w2: WidthFunction, sails: Sequence[SailAttachment] = (),
                grid: Grid = DEFAULT_GRID, n_lat: int = DEFAULT_N_LAT, name: str = "custom",
                validate_sails: bool = True) -> AxialDomain:
    w1.validate()
    w2.validate()
    sails = tuple(sails)
    sail_masks = _sail_masks(sails, grid)

    def base(r: float) -> np.ndarray:
        return rasterize(c_family_spec(w1(r), w2(r)), grid).mask

    def profile(r: float) -> np.ndarray:
        m = base(r).copy()
        for s, sm in zip(sails, sail_masks):
            if s.active(r):
                m |= sm
        return m

    extra = w1.endpoints() + w2.endpoints() + [e for s in sails for e in s.endpoints()]
    lats = latitude_samples(n_lat, extra)
    config = {"w1": w1.to_json(), "w2": w2.to_json(), "sails": [s.to_json() for s in sails],
              "grid": grid.to_dict(), "n_lat": n_lat}
    dom = AxialDomain(name, grid, lats, profile, w1=w1, w2=w2, sails=sails, n_lat=n_lat, config=config)
    if validate_sails and sails:
        _validate_sails(dom, base, sail_masks)
    return dom


def _validate_sails(dom: AxialDomain, base: Callable[[float], np.ndarray], sail_masks) -> None:
    grid = dom.grid
    base_union = np.zeros(grid.shape, dtype=bool)
    base_masks = {float(r): base(r) for r in dom.lats}
    for m in base_masks.values():
        base_union |= m
    for k, (s, dp) in enumerate(zip(dom.sails, sail_masks)):
        d = rasterize(s.D, grid).mask
        if not d.any():
            raise InvalidSail(f"sail {k}: D is empty at this resolution")
        if (d & ~dp).any():
            raise InvalidSail(f"sail {k}: D is not contained in D'")
        lab = label_mask(dp)
        hit = set(np.unique(lab.labels[d])) - {0}
        if len(hit) != lab.count:
            raise InvalidSail(f"sail {k}: D misses {lab.count - len(hit)} component(s) of D'")
        for r0, r1 in s.intervals:
            inside = [r for r in base_masks if s.active(r) and r0 <= r <= r1]
            if not inside:
                raise InvalidSail(f"sail {k}: no sampled latitude in ({r0}, {r1})")
            if not any(not (d & ~base_masks[r]).any() for r in inside):
                raise InvalidSail(f"sail {k}: D is not inside the base trace at any latitude of ({r0}, {r1})")
        if (dp & ~d & base_union).any():
            raise InvalidSail(f"sail {k}: the circularization of D' minus D meets the base domain")


def table_domain(name: str, grid: Grid, bands: Sequence[tuple[float, float, np.ndarray]],
                 n_lat: int = DEFAULT_N_LAT, default: np.ndarray | None = None) -> AxialDomain:
    """Domain whose trace is the given mask on each closed latitude band
    ``[r0, r1]`` (first match wins) and ``default`` elsewhere."""
    empty = np.zeros(grid.shape, dtype=bool) if default is None else default

    def profile(r: float) -> np.ndarray:
        for r0, r1, m in bands:
            if r0 <= r <= r1:
                return m
        return empty

    extra = [e for r0, r1, _ in bands for e in (r0, r1)]
    lats = latitude_samples(n_lat, extra)
    return AxialDomain(name, grid, lats, profile, n_lat=n_lat)


def constant_domain(name: str, region: PlanarRegion, n_lat: int = 33) -> AxialDomain:
    """The circularization of a single planar trace."""
    m = region.mask.copy()
    return AxialDomain(name, region.grid, latitude_samples(n_lat), lambda r: m, n_lat=n_lat)


def ball_domain(center: float = 0.0, radius: float = 1.0, h: float | None = None, n_lat: int = 33) -> AxialDomain:
    if not radius > 0:
        raise ValueError("ball radius must be positive")
    h = h if h is not None else radius / 32.0
    pad = 2 * h
    grid = Grid(center - radius - pad, center + radius + pad, radius + pad, h)
    dom = constant_domain(f"ball({center:g},{radius:g})", rasterize(HalfDisk(center, radius), grid), n_lat)
    dom.config = {"ball": [center, radius], "grid": grid.to_dict(), "n_lat": n_lat}
    return dom


# -- built-ins ----------------------------------------------------------------

def _omega_widths(s: int) -> tuple[WidthFunction, WidthFunction]:
    if s == 0:
        w = WidthFunction((affine(-1, 0, 2, 2), affine(0, 1, -2, 2)))
        return w, w
    if s == 1:
        w = WidthFunction((affine(-1, -0.5, 4, 4), affine(-0.5, 0, -4, 0),
                           affine(0, 0.5, 4, 0), affine(0.5, 1, -4, 4)))
        return w, w
    if s == 2:
        w1 = WidthFunction((affine(-1, -0.2, 2, 2), WidthPiece(-0.2, 0.6, "constant", 0.0, 1.6),
                            affine(0.6, 1, -4, 4)))
        return w1, w1.mirrored()
    if s == 3:
        w1 = WidthFunction((indicator(-0.75, -0.5, 1.5), indicator(-0.25, 0.25, 1.5)))
        w2 = WidthFunction((indicator(-0.25, 0.25, 1.5), indicator(0.5, 0.75, 1.5)))
        return w1, w2
    raise KeyError(s)


SAIL_RHO = {0: 0.5, 1: 0.75, 2: 2.0 / 3.0}


def _omega_sails(s: int) -> tuple[SailAttachment, ...]:
    if s in SAIL_RHO:
        return (SailAttachment(((SAIL_RHO[s], 1.0),), Rect(2.0, 4.0, 3.0, 4.0), Rect(2.0, 3.0, 3.0, 4.0)),)
    return (SailAttachment(((-0.75, -0.5), (0.5, 0.75)), Rect(0.5, 1.5, 3.0, 6.0), Rect(0.5, 1.5, 3.0, 4.0)),)


BUILTIN_NAMES = ("omega0", "omega1", "omega2", "omega3", "omega0p", "omega1p", "omega2p", "omega3p")
_BALL = re.compile(r"^ball\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\)$")


def omega(s: int, primed: bool = False, grid: Grid = DEFAULT_GRID, n_lat: int = DEFAULT_N_LAT) -> AxialDomain:
    w1, w2 = _omega_widths(s)
    sails = _omega_sails(s) if primed else ()
    return build_axial(w1, w2, sails, grid, n_lat, name=f"omega{s}{'p' if primed else ''}")


@lru_cache(maxsize=32)
def _builtin_cached(name: str, h: float, n_lat: int) -> AxialDomain:
    m = _BALL.match(name.replace(" ", ""))
    if m:
        return ball_domain(float(m.group(1)), float(m.group(2)), n_lat=min(n_lat, 65))
    if name not in BUILTIN_NAMES:
        raise KeyError(f"unknown domain {name!r}; built-ins: {', '.join(BUILTIN_NAMES)}, ball(c,R)")
    grid = Grid(DEFAULT_GRID.alpha_min, DEFAULT_GRID.alpha_max, DEFAULT_GRID.beta_max, h)
    return omega(int(name[5]), name.endswith("p"), grid, n_lat)


def builtin(name: str, h: float = DEFAULT_GRID.h, n_lat: int = DEFAULT_N_LAT) -> AxialDomain:
    """Built-in domain by name (``omega0`` ... ``omega3p`` or ``ball(c,R)``); cached."""
    return _builtin_cached(name, float(h), int(n_lat))


def domain_from_config(data: dict, name: str = "custom", h: float | None = None,
                       n_lat: int | None = None) -> AxialDomain:
    """Domain config: ``{"w1": {...}, "w2": {...}, "sails": [...], "grid": {...}, "n_lat": N}``."""
    if not isinstance(data, dict):
        raise InvalidWidth("domain config must be an object")
    if "ball" in data:
        c, rad = data["ball"]
        return ball_domain(float(c), float(rad), n_lat=int(n_lat or data.get("n_lat", 33)))
    if "w1" not in data or "w2" not in data:
        raise InvalidWidth("domain config needs w1 and w2")
    w1 = WidthFunction.from_json(data["w1"])
    w2 = WidthFunction.from_json(data["w2"])
    sails = [SailAttachment.from_json(s) for s in data.get("sails", [])]
    grid = Grid.from_dict(data["grid"]) if "grid" in data else DEFAULT_GRID
    if h is not None:
        grid = Grid(grid.alpha_min, grid.alpha_max, grid.beta_max, h)
    return build_axial(w1, w2, sails, grid, int(n_lat or data.get("n_lat", DEFAULT_N_LAT)), name=name)


def load_domain(ref: str, h: float | None = None, n_lat: int | None = None) -> AxialDomain:
    """Resolve a built-in name or a path to a JSON domain config."""
    ref = ref.strip()
    if ref in BUILTIN_NAMES or _BALL.match(ref.replace(" ", "")):
        return builtin(ref, DEFAULT_GRID.h if h is None else h, DEFAULT_N_LAT if n_lat is None else n_lat)
    with open(ref, encoding="utf-8") as fh:
        data = json.load(fh)
    return domain_from_config(data, name=ref, h=h, n_lat=n_lat)


# -- set-level checks ---------------------------------------------------------

@dataclass(frozen=True)
class SpearedReport:
    speared: bool
    latitude: float | None = None
    component_bbox: tuple[float, float, float, float] | None = None


def is_speared(dom: AxialDomain) -> SpearedReport:
    seen = set()
    for a, r in enumerate(dom.lats):
        mid = dom.mask_ids[a]
        if mid in seen:
            continue
        seen.add(mid)
        lab = label_mask(dom.masks[a])
        bad = np.flatnonzero(~lab.meets_real[1:]) + 1
        if bad.size:
            comp = lab.component(dom.grid, int(bad[0]))
            return SpearedReport(False, float(r), comp.bbox())
    return SpearedReport(True)


def is_slice_domain(dom: AxialDomain) -> bool:
    if not dom.masks[:, :, 0].any():
        return False
    for a, r in enumerate(dom.lats):
        b = dom.lat_index(-r)
        full = np.concatenate([dom.masks[b][:, ::-1], dom.masks[a]], axis=1)
        lab = label_mask(full)
        if lab.count != 1:
            return False
    return True


def intersection_region(dom: AxialDomain) -> PlanarRegion:
    return PlanarRegion(dom.grid, np.logical_and.reduce(dom.masks, axis=0))


def symmetric_completion_region(dom: AxialDomain) -> PlanarRegion:
    return PlanarRegion(dom.grid, np.logical_or.reduce(dom.masks, axis=0))


def spine_core(dom: AxialDomain) -> tuple[PlanarRegion, PlanarRegion]:
    inter = intersection_region(dom)
    lab = components(inter)
    core = PlanarRegion(dom.grid, lab.meets_real[lab.labels] & inter.mask)
    return real_disk_union(inter), core


# -- local slice domains ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalSliceDomain:
    """A slice subdomain around ``x0``: half-ball ``B(anchor, delta)`` plus a
    tube of radius ``eps`` around ``path`` on the latitude band ``|r - r0| < eps``."""

    x0: Quaternion
    anchor: float
    delta: float
    path: tuple[CPoint, ...]
    eps: float
    latitude: float | None
    ball_mask: np.ndarray = field(repr=False)
    tube_mask: np.ndarray = field(repr=False)
    domain: AxialDomain = field(repr=False)
    verified: bool = False

    def mask_at(self, r: float) -> np.ndarray:
        if self.latitude is not None and abs(r - self.latitude) < self.eps:
            return self.ball_mask | self.tube_mask
        return self.ball_mask

    def as_domain(self) -> AxialDomain:
        lats = np.asarray(self.domain.lats)
        if self.latitude is not None:
            lats = np.unique(np.concatenate([lats, [self.latitude, -self.latitude]]))
        return AxialDomain(f"local({self.domain.name})", self.domain.grid, lats, self.mask_at)

    def contained_in_domain(self) -> bool:
        d = self.as_domain()
        return all(not (d.masks[a] & ~self.domain.mask_at(r)).any() for a, r in enumerate(d.lats))


def _maximin_path(mask: np.ndarray, clearance: np.ndarray, start: tuple[int, int], targets: np.ndarray):
    """Path from ``start`` to a target cell maximizing the minimal clearance."""
    levels = np.unique(clearance[mask])[::-1]
    lo, hi = 0, len(levels) - 1  # search smallest index whose threshold connects

    def connected(t: float):
        sub = mask & (clearance >= t)
        if not sub[start]:
            return None
        lab = label_mask(sub)
        k = lab.labels[start]
        return sub if (targets & (lab.labels == k)).any() else None

    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        sub = connected(levels[mid])
        if sub is not None:
            best = (levels[mid], sub)
            hi = mid - 1
        else:
            lo = mid + 1
    if best is None:
        return None, 0.0
    t, sub = best
    return grid_path(sub, start, targets & sub), float(t)


def local_slice_domain(dom: AxialDomain, x0: Quaternion, max_halvings: int = 40) -> LocalSliceDomain:
    if not dom.contains(x0):
        raise PointOutsideDomain(f"{x0!r} is not in {dom.name}")
    g = dom.grid
    alpha, beta, unit, arbitrary = decompose(as_quaternion(x0))
    inter = intersection_region(dom)
    radii = real_disk_radii(inter)
    A, B = g.centers

    def ball(p: int) -> tuple[float, float, np.ndarray]:
        a = g.alpha_min + (p + 0.5) * g.h
        d = max(radii.get(p, 0.0), g.h / 2)
        return a, d, ((A - a) ** 2 + B ** 2 < d * d) & inter.mask | _real_cell(g, p)

    if arbitrary or beta < g.h:
        p, _ = g.cell_of(alpha, 0.0)
        a, d, bm = ball(p)
        res = LocalSliceDomain(as_quaternion(x0), a, d, (CPoint(alpha, 0.0),), 0.0, None, bm,
                               np.zeros(g.shape, dtype=bool), dom)
        return _verify(res)

    r0 = unit.latitude
    mask = dom.mask_at(r0)
    start = g.cell_of(alpha, beta)
    clearance = distance_to_complement(PlanarRegion(g, mask.copy()))
    targets = np.zeros(g.shape, dtype=bool)
    targets[list(radii), 0] = True
    targets &= mask
    if not targets.any():
        raise PointOutsideDomain(f"no real point of {dom.name} is reachable from {x0!r}")
    cells, t = _maximin_path(mask, clearance, start, targets)
    if cells is None:
        raise PointOutsideDomain(f"{x0!r} is not connected to the real axis in its slice")
    path = tuple(g.center(p, q) for p, q in cells)
    pts = np.array([[c.alpha, c.beta] for c in path])
    ell = float(pts[:, 1].max())
    eps = tube_epsilon(max(t - g.h / 2, g.h / 4), ell)
    a, d, bm = ball(cells[-1][0])

    tree = cKDTree(pts)
    dcen, _ = tree.query(np.column_stack([A.ravel(), B.ravel()]))
    dcen = dcen.reshape(g.shape)
    path_mask = np.zeros(g.shape, dtype=bool)
    for p, q in cells:
        path_mask[p, q] = True
    for _ in range(max_halvings):
        tube = (dcen < eps) | path_mask
        band = [r for r in np.concatenate([dom.lats, [r0 - eps * 0.999, r0 + eps * 0.999]])
                if abs(r - r0) < eps and -1 <= r <= 1]
        if all(not (tube & ~dom.mask_at(r)).any() for r in band):
            break
        eps /= 2
    else:
        raise PointOutsideDomain(f"could not fit a tube around the path from {x0!r}")
    res = LocalSliceDomain(as_quaternion(x0), a, d, path + (CPoint(a, 0.0),), eps, r0, bm, tube, dom)
    return _verify(res)


def _real_cell(g: Grid, p: int) -> np.ndarray:
    m = np.zeros(g.shape, dtype=bool)
    m[p, 0] = True
    return m


def _verify(res: LocalSliceDomain) -> LocalSliceDomain:
    d = res.as_domain()
    ok = is_slice_domain(d) and res.contained_in_domain()
    return LocalSliceDomain(res.x0, res.anchor, res.delta, res.path, res.eps, res.latitude,
                            res.ball_mask, res.tube_mask, res.domain, ok)
