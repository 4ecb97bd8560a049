"""Rasterized regions in the closed upper half of R_C.

A :class:`Grid` covers ``[alpha_min, alpha_max] x [0, beta_max]`` with square
cells of side ``h``; cell ``(p, q)`` has center
``(alpha_min + (p + 1/2) h, (q + 1/2) h)``.  Row ``q = 0`` touches the real
axis and stands for real points.  Open region specs are sampled at cell
centers, so every verdict computed here holds "at resolution h".
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .algebra import CPoint

# 4-connectivity; diagonal contact between open rectangles is not a connection.
FOUR_NEIGHBORS = ndimage.generate_binary_structure(2, 1)


class EmptyGrid(ValueError):
    pass


class GridMismatch(ValueError):
    pass


class PointOutsideRegion(ValueError):
    pass


class NonpositiveDistance(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    alpha_min: float
    alpha_max: float
    beta_max: float
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise EmptyGrid(f"cell size must be positive, got {self.h}")
        if self.nx <= 0 or self.ny <= 0:
            raise EmptyGrid(f"grid {self} has no cells")

    @property
    def nx(self) -> int:
        return int(round((self.alpha_max - self.alpha_min) / self.h))

    @property
    def ny(self) -> int:
        return int(round(self.beta_max / self.h))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @cached_property
    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        a = self.alpha_min + (np.arange(self.nx) + 0.5) * self.h
        b = (np.arange(self.ny) + 0.5) * self.h
        return np.meshgrid(a, b, indexing="ij")

    def center(self, p: int, q: int) -> CPoint:
        return CPoint(self.alpha_min + (p + 0.5) * self.h, (q + 0.5) * self.h)

    def cell_of(self, alpha: float, beta: float) -> tuple[int, int] | None:
        """Cell containing ``(alpha, |beta|)``, or None outside the grid."""
        beta = abs(beta)
        p = math.floor((alpha - self.alpha_min) / self.h)
        q = math.floor(beta / self.h)
        if 0 <= p < self.nx and 0 <= q < self.ny:
            return p, q
        return None

    def to_dict(self) -> dict:
        return {"alpha_min": self.alpha_min, "alpha_max": self.alpha_max,
                "beta_max": self.beta_max, "h": self.h}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(float(d["alpha_min"]), float(d["alpha_max"]), float(d["beta_max"]), float(d["h"]))


DEFAULT_GRID = Grid(-2.0, 5.0, 8.0, 1.0 / 16)


# -- region specs -------------------------------------------------------------

class RegionSpec:
    """Open subset of the upper half plane given by a point predicate."""

    def contains(self, alpha, beta):
        raise NotImplementedError

    def contains_point(self, alpha: float, beta: float) -> bool:
        return bool(self.contains(np.float64(alpha), np.float64(beta)))

    def __or__(self, other: "RegionSpec") -> "RegionSpec":
        return Union((self, other))

    def __and__(self, other: "RegionSpec") -> "RegionSpec":
        return Intersection((self, other))

    def __sub__(self, other: "RegionSpec") -> "RegionSpec":
        return Difference(self, other)


@dataclass(frozen=True)
class Rect(RegionSpec):
    """Open rectangle ``(a0, a1) x (b0, b1)``."""

    a0: float
    a1: float
    b0: float
    b1: float

    def contains(self, alpha, beta):
        return (alpha > self.a0) & (alpha < self.a1) & (beta > self.b0) & (beta < self.b1)

    def to_json(self):
        return {"rects": [[self.a0, self.a1, self.b0, self.b1]]}


@dataclass(frozen=True)
class HalfDisk(RegionSpec):
    """Open disk centered on the real axis, intersected with beta >= 0."""

    center: float
    radius: float

    def contains(self, alpha, beta):
        return (alpha - self.center) ** 2 + beta ** 2 < self.radius ** 2

    def to_json(self):
        return {"half_disks": [[self.center, self.radius]]}


@dataclass(frozen=True)
class Union(RegionSpec):
    parts: tuple[RegionSpec, ...]

    def contains(self, alpha, beta):
        out = np.zeros(np.broadcast(alpha, beta).shape, dtype=bool)
        for part in self.parts:
            out = out | part.contains(alpha, beta)
        return out

    def to_json(self):
        return {"union": [p.to_json() for p in self.parts]}


@dataclass(frozen=True)
class Intersection(RegionSpec):
    parts: tuple[RegionSpec, ...]

    def contains(self, alpha, beta):
        out = np.ones(np.broadcast(alpha, beta).shape, dtype=bool)
        for part in self.parts:
            out = out & part.contains(alpha, beta)
        return out

    def to_json(self):
        return {"intersect": [p.to_json() for p in self.parts]}


@dataclass(frozen=True)
class Difference(RegionSpec):
    base: RegionSpec
    removed: RegionSpec

    def contains(self, alpha, beta):
        return self.base.contains(alpha, beta) & ~self.removed.contains(alpha, beta)

    def to_json(self):
        return {"minus": [self.base.to_json(), self.removed.to_json()]}


EMPTY_SPEC = Union(())


def parse_region_spec(data) -> RegionSpec:
    """Parse the region-spec JSON form.

    ``{"rects": [[a0,a1,b0,b1],...], "half_disks": [[c,R],...]}`` is the union
    of its members; ``{"union": [...]}``, ``{"intersect": [...]}`` and
    ``{"minus": [a, b]}`` nest.
    """
    if isinstance(data, RegionSpec):
        return data
    if not isinstance(data, dict):
        raise ValueError(f"region spec must be an object, got {type(data).__name__}")
    parts: list[RegionSpec] = []
    known = {"rects", "half_disks", "union", "intersect", "minus"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown region spec keys: {sorted(unknown)}")
    for r in data.get("rects", []):
        if len(r) != 4:
            raise ValueError(f"rect needs [a0, a1, b0, b1], got {r}")
        parts.append(Rect(*(float(v) for v in r)))
    for d in data.get("half_disks", []):
        if len(d) != 2:
            raise ValueError(f"half disk needs [center, radius], got {d}")
        parts.append(HalfDisk(float(d[0]), float(d[1])))
    if "union" in data:
        parts.append(Union(tuple(parse_region_spec(p) for p in data["union"])))
    if "intersect" in data:
        parts.append(Intersection(tuple(parse_region_spec(p) for p in data["intersect"])))
    if "minus" in data:
        a, b = data["minus"]
        parts.append(Difference(parse_region_spec(a), parse_region_spec(b)))
    if len(parts) == 1:
        return parts[0]
    return Union(tuple(parts))


# -- regions ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PlanarRegion:
    grid: Grid
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.mask.shape != self.grid.shape:
            raise GridMismatch(f"mask shape {self.mask.shape} != grid shape {self.grid.shape}")
        self.mask.setflags(write=False)

    def __eq__(self, other):
        return (isinstance(other, PlanarRegion) and self.grid == other.grid
                and np.array_equal(self.mask, other.mask))

    def __hash__(self):
        return hash((self.grid, self.mask.tobytes()))

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def is_empty(self) -> bool:
        return not self.mask.any()

    def contains(self, z: CPoint) -> bool:
        cell = self.grid.cell_of(z.alpha, z.beta)
        return cell is not None and bool(self.mask[cell])

    def real_cells(self) -> np.ndarray:
        return np.flatnonzero(self.mask[:, 0])

    def meets_real(self) -> bool:
        return bool(self.mask[:, 0].any())

    def cells(self) -> np.ndarray:
        return np.argwhere(self.mask)

    def bbox(self) -> tuple[float, float, float, float] | None:
        """Outer bounds ``(a0, a1, b0, b1)`` of the marked cells."""
        if self.is_empty():
            return None
        ps, qs = np.nonzero(self.mask)
        g = self.grid
        return (g.alpha_min + ps.min() * g.h, g.alpha_min + (ps.max() + 1) * g.h,
                qs.min() * g.h, (qs.max() + 1) * g.h)

    def __or__(self, other):
        return boolean(self, other, "union")

    def __and__(self, other):
        return boolean(self, other, "intersect")

    def __sub__(self, other):
        return boolean(self, other, "minus")

    def __le__(self, other):
        return boolean(self, other, "subset")

    def to_rle(self) -> list[list[list[int]]]:
        """Run-length encoding per beta-row: ``[[start, length], ...]``."""
        rows = []
        for q in range(self.grid.ny):
            col = self.mask[:, q].astype(np.int8)
            d = np.diff(np.concatenate(([0], col, [0])))
            starts = np.flatnonzero(d == 1)
            ends = np.flatnonzero(d == -1)
            rows.append([[int(s), int(e - s)] for s, e in zip(starts, ends)])
        return rows

    @classmethod
    def from_rle(cls, grid: Grid, rows) -> "PlanarRegion":
        mask = np.zeros(grid.shape, dtype=bool)
        for q, runs in enumerate(rows):
            for s, n in runs:
                mask[s:s + n, q] = True
        return cls(grid, mask)


def rasterize(spec, grid: Grid) -> PlanarRegion:
    """Mark every cell whose center lies in the region."""
    spec = parse_region_spec(spec)
    a, b = grid.centers
    return PlanarRegion(grid, np.asarray(spec.contains(a, b), dtype=bool).copy())


def empty_region(grid: Grid) -> PlanarRegion:
    return PlanarRegion(grid, np.zeros(grid.shape, dtype=bool))


def boolean(a: PlanarRegion, b: PlanarRegion, op: str):
    if a.grid != b.grid:
        raise GridMismatch(f"{a.grid} vs {b.grid}")
    if op == "union":
        return PlanarRegion(a.grid, a.mask | b.mask)
    if op == "intersect":
        return PlanarRegion(a.grid, a.mask & b.mask)
    if op == "minus":
        return PlanarRegion(a.grid, a.mask & ~b.mask)
    if op == "subset":
        return not (a.mask & ~b.mask).any()
    raise ValueError(f"unknown boolean op {op!r}")


def union_all(regions: Iterable[PlanarRegion], grid: Grid) -> PlanarRegion:
    mask = np.zeros(grid.shape, dtype=bool)
    for r in regions:
        if r.grid != grid:
            raise GridMismatch(f"{r.grid} vs {grid}")
        mask |= r.mask
    return PlanarRegion(grid, mask)


def intersect_all(regions: Iterable[PlanarRegion], grid: Grid) -> PlanarRegion:
    mask = np.ones(grid.shape, dtype=bool)
    for r in regions:
        if r.grid != grid:
            raise GridMismatch(f"{r.grid} vs {grid}")
        mask &= r.mask
    return PlanarRegion(grid, mask)


@dataclass(frozen=True, eq=False)
class ComponentLabels:
    labels: np.ndarray = field(repr=False)  # 0 = outside, 1..count
    count: int
    meets_real: np.ndarray = field(repr=False)  # indexed by label, entry 0 unused

    def label_at(self, cell: tuple[int, int]) -> int:
        return int(self.labels[cell])

    def component(self, grid: Grid, label: int) -> PlanarRegion:
        return PlanarRegion(grid, self.labels == label)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.count + 1)


def label_mask(mask: np.ndarray) -> ComponentLabels:
    labels, count = ndimage.label(mask, structure=FOUR_NEIGHBORS)
    meets = np.zeros(count + 1, dtype=bool)
    meets[np.unique(labels[:, 0])] = True
    meets[0] = False
    return ComponentLabels(labels, int(count), meets)


def components(a: PlanarRegion) -> ComponentLabels:
    return label_mask(a.mask)


def _cell_in(a: PlanarRegion, z: CPoint) -> tuple[int, int]:
    cell = a.grid.cell_of(z.alpha, z.beta)
    if cell is None or not a.mask[cell]:
        raise PointOutsideRegion(f"({z.alpha}, {z.beta}) is not in the region")
    return cell


def path_exists(a: PlanarRegion, start: CPoint, end: CPoint, labels: ComponentLabels | None = None) -> bool:
    c0, c1 = _cell_in(a, start), _cell_in(a, end)
    if c0 == c1:
        return True
    labels = labels or components(a)
    return labels.labels[c0] == labels.labels[c1]


def grid_path(mask: np.ndarray, start: tuple[int, int], targets: np.ndarray) -> list[tuple[int, int]] | None:
    """Shortest 4-neighbor cell path inside ``mask`` from ``start`` to any
    target cell (``targets`` is a boolean mask), or None."""
    nx, ny = mask.shape
    prev = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if targets[cur]:
            out = []
            while cur is not None:
                out.append(cur)
                cur = prev[cur]
            return out[::-1]
        p, q = cur
        for nb in ((p + 1, q), (p - 1, q), (p, q + 1), (p, q - 1)):
            if 0 <= nb[0] < nx and 0 <= nb[1] < ny and mask[nb] and nb not in prev:
                prev[nb] = cur
                queue.append(nb)
    return None


def _complement_tree(a: PlanarRegion) -> cKDTree:
    """KD-tree over centers of unmarked cells, padded by one ring outside the grid."""
    g = a.grid
    pad = np.pad(a.mask, ((1, 1), (0, 1)), constant_values=False)
    ps, qs = np.nonzero(~pad)
    alphas = g.alpha_min + (ps - 1 + 0.5) * g.h
    betas = (qs + 0.5) * g.h
    return cKDTree(np.column_stack([alphas, betas]))


def real_disk_radii(a: PlanarRegion) -> dict[int, float]:
    """For each real cell column ``p``: largest radius of a half-disk centered at
    ``(alpha_p, 0)`` whose cells all lie in ``a``."""
    cols = a.real_cells()
    if cols.size == 0:
        return {}
    g = a.grid
    tree = _complement_tree(a)
    pts = np.column_stack([g.alpha_min + (cols + 0.5) * g.h, np.zeros(cols.size)])
    d, _ = tree.query(pts)
    return {int(p): float(r - 0.5 * g.h) for p, r in zip(cols, d) if r > 0.5 * g.h}


def real_disk_union(a: PlanarRegion) -> PlanarRegion:
    """Union of the maximal real-centered half-disks inside ``a``."""
    g = a.grid
    mask = np.zeros(g.shape, dtype=bool)
    A, B = g.centers
    for p, radius in real_disk_radii(a).items():
        alpha = g.alpha_min + (p + 0.5) * g.h
        mask |= (A - alpha) ** 2 + B ** 2 < radius ** 2
    return PlanarRegion(g, mask & a.mask)


def distance_to_complement(a: PlanarRegion) -> np.ndarray:
    """Euclidean distance from each marked cell center to the nearest unmarked
    center (cells outside the grid count as unmarked; the real axis does not)."""
    g = a.grid
    pad = np.pad(a.mask, ((1, 1), (0, 1)), constant_values=False)
    mirrored = np.concatenate([pad[:, ::-1], pad], axis=1)
    d = ndimage.distance_transform_edt(mirrored) * g.h
    return d[1:-1, pad.shape[1]:pad.shape[1] + g.ny]


def tube_epsilon(dist: float, ell: float) -> float:
    """Tube radius ``dist / (ell + 1)`` keeping rotated copies of a tube inside
    the target open set, for units within that distance of the base unit."""
    if not dist > 0:
        raise NonpositiveDistance(f"distance must be positive, got {dist}")
    if ell < 0:
        raise ValueError(f"ell must be non-negative, got {ell}")
    return dist / (ell + 1.0)


def reflect_full(a: PlanarRegion) -> np.ndarray:
    """Mask on the full plane: rows ``-ny..-1`` mirror the region, rows ``0..ny-1`` hold it."""
    return np.concatenate([a.mask[:, ::-1], a.mask], axis=1)


def hausdorff(a: PlanarRegion, b: PlanarRegion) -> float:
    """Hausdorff distance between the cell-center sets of two regions."""
    if a.grid != b.grid:
        raise GridMismatch(f"{a.grid} vs {b.grid}")
    if a.is_empty() or b.is_empty():
        return 0.0 if a.is_empty() and b.is_empty() else math.inf
    g = a.grid
    pa = np.argwhere(a.mask) * g.h
    pb = np.argwhere(b.mask) * g.h
    da, _ = cKDTree(pb).query(pa)
    db, _ = cKDTree(pa).query(pb)
    return float(max(da.max(), db.max()))


def cells_to_points(grid: Grid, cells: Sequence[tuple[int, int]]) -> list[CPoint]:
    return [grid.center(p, q) for p, q in cells]
