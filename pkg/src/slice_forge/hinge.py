"""Chain equivalence on axial domains and the four domain classifiers.

Nodes are pairs (latitude sample, grid cell) with the cell inside that
latitude's trace.  Two nodes on the same cell are merged when

* R0: the cell lies on the real row (a real point sits on every slice);
* R1: the latitudes are consecutive samples both containing the cell
  (same connected component of the sphere trace);
* R2: for a latitude pair ``(a, b)`` and a connected component ``K`` of
  ``D_a ∩ D_b``, some cell of ``K`` already has its ``a`` and ``b`` nodes
  merged; then every cell of ``K`` gets them merged.

R2 with a real witness is a strongly hinged simple step; with a non-real
witness it is a double step nested around the chain that merged the
witness.  The closure is iterated to a fixpoint.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .algebra import CPoint, ImaginaryUnit, Quaternion, as_quaternion, decompose, phi
from .domains import AxialDomain, PointOutsideDomain, is_speared
from .planar import ComponentLabels, PlanarRegion, PointOutsideRegion, label_mask


class NotSpeared(ValueError):
    pass


class InternalInconsistency(RuntimeError):
    pass


def _analysis(dom: AxialDomain) -> dict:
    """Per-domain cache for closures and pair labelings."""
    cache = getattr(dom, "_hinge_analysis", None)
    if cache is None:
        cache = {"pairs": {}}
        dom._hinge_analysis = cache
    return cache


def pair_labels(dom: AxialDomain, a: int, b: int) -> ComponentLabels:
    """Components of ``D_a ∩ D_b`` (cached by mask identity)."""
    ma, mb = int(dom.mask_ids[a]), int(dom.mask_ids[b])
    key = (min(ma, mb), max(ma, mb))
    pairs = _analysis(dom)["pairs"]
    lab = pairs.get(key)
    if lab is None:
        lab = label_mask(dom.masks[a] & dom.masks[b])
        lab = ComponentLabels(lab.labels.astype(np.int32), lab.count, lab.meets_real)
        pairs[key] = lab
    return lab


def require_speared(dom: AxialDomain) -> None:
    cache = _analysis(dom)
    if "speared" not in cache:
        cache["speared"] = is_speared(dom)
    rep = cache["speared"]
    if not rep.speared:
        raise NotSpeared(f"{dom.name}: a component at latitude {rep.latitude} misses the real axis "
                         f"(bbox {rep.component_bbox})")


# -- point-level tests ----------------------------------------------------------

def _intersection(dom: AxialDomain, r: float, r2: float) -> PlanarRegion:
    return PlanarRegion(dom.grid, dom.mask_at(r) & dom.mask_at(r2))


def _cell(region: PlanarRegion, z: CPoint) -> tuple[int, int]:
    cell = region.grid.cell_of(z.alpha, z.beta)
    if cell is None or not region.mask[cell]:
        raise PointOutsideRegion(f"({z.alpha}, {z.beta}) is not in the intersection")
    return cell


def shadow_test(dom: AxialDomain, r: float, r2: float, z_from: CPoint, z_to: CPoint) -> bool:
    """Whether ``z_from`` and ``z_to`` are joined by a path in ``D_r ∩ D_r2``."""
    E = _intersection(dom, r, r2)
    c0, c1 = _cell(E, z_from), _cell(E, z_to)
    if c0 == c1:
        return True
    lab = label_mask(E.mask)
    return lab.labels[c0] == lab.labels[c1]


def strongly_hinged_test(dom: AxialDomain, r: float, r2: float, z: CPoint) -> bool:
    """Whether the component of ``z`` in ``D_r ∩ D_r2`` reaches the real axis."""
    E = _intersection(dom, r, r2)
    c = _cell(E, z)
    lab = label_mask(E.mask)
    return bool(lab.meets_real[lab.labels[c]])


# -- closure ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MergeEvent:
    time: int
    a: int
    b: int
    witness: tuple[int, int]
    real: bool
    cells: np.ndarray = field(repr=False)  # flat indices of merged cells


@dataclass(eq=False)
class HingeClosure:
    """Fixpoint of the merge rules; ``labels[a, p, q]`` is the smallest latitude
    index in the class of node ``(a, (p, q))`` or -1 outside the trace."""

    dom: AxialDomain
    labels: np.ndarray = field(repr=False)
    initial: np.ndarray = field(repr=False)
    events: list[MergeEvent] = field(repr=False)
    rounds: int
    converged: bool
    double_steps: bool

    def same_class(self, cell: tuple[int, int], a: int, b: int) -> bool:
        la, lb = self.labels[a][cell], self.labels[b][cell]
        return la >= 0 and la == lb

    def classes_at(self, cell: tuple[int, int]) -> list[list[int]]:
        col = self.labels[:, cell[0], cell[1]]
        out: dict[int, list[int]] = {}
        for a, l in enumerate(col):
            if l >= 0:
                out.setdefault(int(l), []).append(a)
        return list(out.values())

    def _cell_events(self) -> dict[int, list[int]]:
        idx = getattr(self, "_event_index", None)
        if idx is None:
            idx = {}
            for k, e in enumerate(self.events):
                for c in e.cells:
                    idx.setdefault(int(c), []).append(k)
            self._event_index = idx
        return idx

    def equivalence_time(self, cell: tuple[int, int], a: int, b: int) -> float:
        """Time of the first merge joining ``a`` and ``b`` at ``cell`` (0 if
        joined by R0/R1, inf if never)."""
        col = self.initial[:, cell[0], cell[1]].copy()
        if col[a] < 0 or col[b] < 0:
            return math.inf
        if col[a] == col[b]:
            return 0
        flat = cell[0] * self.dom.grid.ny + cell[1]
        for k in self._cell_events().get(flat, []):
            e = self.events[k]
            la, lb = col[e.a], col[e.b]
            new, old = min(la, lb), max(la, lb)
            col[col == old] = new
            if col[a] == col[b]:
                return e.time
        return math.inf


def _initial_labels(dom: AxialDomain) -> np.ndarray:
    masks = dom.masks
    n = len(dom.lats)
    L = np.where(masks, np.arange(n, dtype=np.int32)[:, None, None], -1).astype(np.int32)
    for a in range(1, n):  # R1
        link = masks[a] & masks[a - 1]
        L[a][link] = L[a - 1][link]
    real = masks[:, :, 0]  # R0
    first = np.where(real.any(0), real.argmax(0), -1).astype(np.int32)
    L[:, :, 0] = np.where(real, first[None, :], -1)
    return L


def _merge(L: np.ndarray, a: int, b: int, sel: np.ndarray) -> None:
    la, lb = L[a][sel], L[b][sel]
    new, old = np.minimum(la, lb), np.maximum(la, lb)
    cols = L[:, sel]
    L[:, sel] = np.where(cols == old[None, :], new[None, :], cols)


def hinge_closure(dom: AxialDomain, double_steps: bool = True, order_seed: int | None = None,
                  record_events: bool = True) -> HingeClosure:
    """Compute (and cache) the closure; ``double_steps=False`` restricts R2 to
    components meeting the real axis, i.e. chains of simple steps only."""
    require_speared(dom)
    cache = _analysis(dom)
    key = ("closure", double_steps)
    if order_seed is None and key in cache:
        return cache[key]
    L = _initial_labels(dom)
    initial = L.copy()
    n = len(dom.lats)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    if order_seed is not None:
        np.random.default_rng(order_seed).shuffle(pairs)
    masks = dom.masks
    ny = dom.grid.ny
    events: list[MergeEvent] = []
    rounds, time = 0, 0
    changed = True
    while changed:
        changed = False
        rounds += 1
        for a, b in pairs:
            E = masks[a] & masks[b]
            diff = E & (L[a] != L[b])
            if not diff.any():
                continue
            lab = pair_labels(dom, a, b)
            if double_steps:
                eq = E & (L[a] == L[b])
                touched = np.zeros(lab.count + 1, dtype=bool)
                touched[lab.labels[eq]] = True
                touched[0] = False
            else:
                touched = lab.meets_real.copy()
            comp_diff = np.unique(lab.labels[diff])
            todo = comp_diff[touched[comp_diff]]
            if todo.size == 0:
                continue
            sel = diff & touched[lab.labels]
            if record_events:
                for k in todo:
                    comp = lab.labels == k
                    real = bool(lab.meets_real[k])
                    if real:
                        w = (int(np.argmax(comp[:, 0])), 0)
                    else:
                        flat_w = int(np.argmax((comp & (L[a] == L[b])).ravel()))
                        w = (flat_w // ny, flat_w % ny)
                    time += 1
                    events.append(MergeEvent(time, a, b, w, real, np.flatnonzero((comp & diff).ravel())))
            _merge(L, a, b, sel)
            changed = True
    L.setflags(write=False)
    result = HingeClosure(dom, L, initial, events, rounds, True, double_steps)
    if order_seed is None:
        cache[key] = result
    return result


# -- classifiers ------------------------------------------------------------------

@dataclass(frozen=True)
class HingedReport:
    hinged: bool
    cell: tuple[int, int] | None = None
    point: CPoint | None = None
    latitudes: tuple[float, float] | None = None


def is_hinged(dom: AxialDomain, closure: HingeClosure | None = None) -> HingedReport:
    cl = closure or hinge_closure(dom)
    L = cl.labels
    big = np.iinfo(np.int32).max
    lo = np.where(L >= 0, L, big).min(0)
    hi = L.max(0)
    bad = (hi >= 0) & (lo != hi)
    if not bad.any():
        return HingedReport(True)
    p, q = (int(v) for v in np.argwhere(bad)[0])
    col = L[:, p, q]
    a = int(np.flatnonzero(col == lo[p, q])[0])
    b = int(np.flatnonzero(col == hi[p, q])[0])
    return HingedReport(False, (p, q), dom.grid.center(p, q), (float(dom.lats[a]), float(dom.lats[b])))


@dataclass(frozen=True)
class FloatingComponent:
    latitudes: tuple[float, float]
    bbox: tuple[float, float, float, float]
    cells: int


@dataclass(frozen=True)
class SpearSimpleReport:
    spear_simple: bool
    witnesses: tuple[FloatingComponent, ...] = ()
    failing_pairs: int = 0


def floating_components(dom: AxialDomain, r: float, r2: float) -> list[FloatingComponent]:
    """Components of ``D_r ∩ D_r2`` that miss the real axis."""
    E = _intersection(dom, r, r2)
    lab = label_mask(E.mask)
    out = []
    for k in range(1, lab.count + 1):
        if not lab.meets_real[k]:
            comp = lab.component(dom.grid, k)
            out.append(FloatingComponent((float(r), float(r2)), comp.bbox(), comp.count))
    return out


def is_spear_simple(dom: AxialDomain) -> SpearSimpleReport:
    """Every component of every sampled pairwise intersection meets the real axis.

    One witness is listed per distinct pair of traces; the failing latitude
    pair count covers all sampled pairs.
    """
    require_speared(dom)
    ids = dom.mask_ids
    n = len(dom.lats)
    verdict: dict[tuple[int, int], bool] = {}
    witnesses = []
    failing = 0
    for a in range(n):
        for b in range(a, n):
            key = (min(ids[a], ids[b]), max(ids[a], ids[b]))
            if key not in verdict:
                lab = pair_labels(dom, a, b)
                ok = bool(lab.meets_real[1:].all())
                verdict[key] = ok
                if not ok:
                    witnesses += floating_components(dom, dom.lats[a], dom.lats[b])
            if not verdict[key]:
                failing += 1
    return SpearSimpleReport(not witnesses, tuple(witnesses), failing)


@dataclass(frozen=True)
class SConnectedReport:
    s_connected: bool
    point: CPoint | None = None
    intervals: tuple[tuple[float, float], ...] = ()


def latitude_runs(dom: AxialDomain, cell: tuple[int, int]) -> list[tuple[int, int]]:
    """Maximal runs ``(first, last)`` of consecutive sample indices containing the cell."""
    col = dom.masks[:, cell[0], cell[1]]
    runs = []
    a = 0
    n = len(col)
    while a < n:
        if col[a]:
            b = a
            while b + 1 < n and col[b + 1]:
                b += 1
            runs.append((a, b))
            a = b + 1
        else:
            a += 1
    return runs


def is_s_connected(dom: AxialDomain) -> SConnectedReport:
    m = dom.masks
    starts = m.copy()
    starts[1:] &= ~m[:-1]
    nruns = starts.sum(0)
    bad = nruns > 1
    if not bad.any():
        return SConnectedReport(True)
    # report the cell with the most runs
    p, q = np.unravel_index(int(np.argmax(np.where(bad, nruns, 0))), nruns.shape)
    runs = latitude_runs(dom, (int(p), int(q)))
    ivs = tuple((float(dom.lats[a]), float(dom.lats[b])) for a, b in runs)
    return SConnectedReport(False, dom.grid.center(int(p), int(q)), ivs)


def main_sail(dom: AxialDomain, min_run: int = 2) -> float | None:
    """A sampled latitude whose trace contains every other trace.

    The containment must hold on at least ``min_run`` consecutive samples: a
    trace that contains the rest only at an isolated sample is usually a gap
    narrower than one cell.  Returns the middle of the longest such run.
    """
    m = dom.masks
    union = m.any(0)
    ok = np.array([not (union & ~m[a]).any() for a in range(len(dom.lats))])
    if len(ok) < min_run:
        min_run = len(ok)
    best = None
    a = 0
    while a < len(ok):
        if ok[a]:
            b = a
            while b + 1 < len(ok) and ok[b + 1]:
                b += 1
            if b - a + 1 >= min_run and (best is None or b - a > best[1] - best[0]):
                best = (a, b)
            a = b + 1
        else:
            a += 1
    if best is None:
        return None
    return float(dom.lats[(best[0] + best[1]) // 2])


@dataclass(frozen=True)
class ClassReport:
    domain: str
    spear_simple: bool
    s_connected: bool
    has_main_sail: bool
    hinged: bool
    main_sail_latitude: float | None
    witnesses: dict
    resolution: dict

    def row(self) -> tuple[bool, bool, bool, bool]:
        return (self.spear_simple, self.s_connected, self.has_main_sail, self.hinged)


def classify(dom: AxialDomain) -> ClassReport:
    require_speared(dom)
    ss = is_spear_simple(dom)
    sc = is_s_connected(dom)
    ms = main_sail(dom)
    hg = is_hinged(dom)
    if (ss.spear_simple or sc.s_connected or ms is not None) and not hg.hinged:
        raise InternalInconsistency(
            f"{dom.name}: a sufficient condition holds but the closure is not hinged at {hg.point}")
    witnesses = {}
    if not ss.spear_simple:
        witnesses["spear_simple"] = {
            "failing_latitude_pairs": ss.failing_pairs,
            "components": [{"latitudes": list(w.latitudes), "bbox": list(w.bbox), "cells": w.cells}
                           for w in ss.witnesses[:16]],
        }
    if not sc.s_connected:
        witnesses["s_connected"] = {"point": [sc.point.alpha, sc.point.beta],
                                    "latitude_intervals": [list(iv) for iv in sc.intervals]}
    if not hg.hinged:
        witnesses["hinged"] = {"point": [hg.point.alpha, hg.point.beta], "latitudes": list(hg.latitudes)}
    cl = hinge_closure(dom)
    resolution = {"h": dom.grid.h, "n_lat": dom.n_lat, "latitude_samples": int(len(dom.lats)),
                  "closure_rounds": cl.rounds}
    return ClassReport(dom.name, ss.spear_simple, sc.s_connected, ms is not None, hg.hinged, ms,
                       witnesses, resolution)


# -- chains -----------------------------------------------------------------------

Node = tuple[tuple[int, int], int]  # (cell, latitude index)


@dataclass(frozen=True)
class _Simple:
    kind: str  # "sphere" | "hinged"
    src: Node
    dst: Node
    anchor: float | None = None


@dataclass(frozen=True)
class _Double:
    src: Node
    dst: Node
    inner: tuple


@dataclass(frozen=True)
class ChainStep:
    kind: str  # "sphere", "hinged" or "double"
    at: tuple[int, ...]
    anchor: float | None = None


@dataclass(frozen=True)
class Chain:
    points: tuple[Quaternion, ...]
    planar: tuple[CPoint, ...]
    latitudes: tuple[float, ...]
    steps: tuple[ChainStep, ...]

    @property
    def length(self) -> int:
        return len(self.points) - 1

    @property
    def double_steps(self) -> int:
        return sum(1 for s in self.steps if s.kind == "double")

    def to_json(self) -> dict:
        return {
            "length": self.length,
            "points": [p.to_list() for p in self.points],
            "planar": [[z.alpha, z.beta] for z in self.planar],
            "latitudes": list(self.latitudes),
            "steps": [{"kind": s.kind, "at": list(s.at), **({"anchor": s.anchor} if s.anchor is not None else {})}
                      for s in self.steps],
            "double_steps": self.double_steps,
        }


class _ChainBuilder:
    def __init__(self, dom: AxialDomain, closure: HingeClosure, simple: HingeClosure):
        self.dom = dom
        self.cl = closure
        self.simple = simple
        self.g = dom.grid

    def same_run(self, cell, a, b) -> bool:
        lo, hi = min(a, b), max(a, b)
        return bool(self.dom.masks[lo:hi + 1, cell[0], cell[1]].all())

    def hinged_anchor(self, cell, a, b) -> float | None:
        lab = pair_labels(self.dom, a, b)
        k = lab.labels[cell]
        if k == 0 or not lab.meets_real[k]:
            return None
        p = int(np.argmax(lab.labels[:, 0] == k))
        return self.g.alpha_min + (p + 0.5) * self.g.h

    def simple_edge(self, cell, a, b):
        if self.same_run(cell, a, b):
            return _Simple("sphere", (cell, a), (cell, b))
        anchor = self.hinged_anchor(cell, a, b)
        if anchor is not None:
            return _Simple("hinged", (cell, a), (cell, b), anchor)
        return None

    def simple_path(self, cell, a, b):
        nodes = [i for i in range(len(self.dom.lats)) if self.dom.masks[i][cell]]
        prev = {a: None}
        queue = deque([a])
        while queue:
            u = queue.popleft()
            if u == b:
                break
            for v in nodes:
                if v not in prev:
                    e = self.simple_edge(cell, u, v)
                    if e is not None:
                        prev[v] = (u, e)
                        queue.append(v)
        if b not in prev:
            return None
        out = []
        v = b
        while prev[v] is not None:
            u, e = prev[v]
            out.append(e)
            v = u
        return out[::-1]

    def explain(self, cell, a, b, limit: float) -> list:
        if a == b:
            return []
        e = self.simple_edge(cell, a, b)
        if e is not None:
            return [e]
        if self.simple.same_class(cell, a, b):
            path = self.simple_path(cell, a, b)
            if path is not None:
                return path
        direct = self.direct_double(cell, a, b, limit)
        if direct is not None:
            return [direct]
        return self.replay(cell, a, b, limit)

    def direct_double(self, cell, a, b, limit):
        lab = pair_labels(self.dom, a, b)
        comp = lab.labels == lab.labels[cell]
        comp[cell] = False
        Ls = self.simple.labels
        cand = comp & (Ls[a] == Ls[b]) & (Ls[a] >= 0)
        if cand.any():
            pts = np.argwhere(cand)
            d = np.abs(pts - np.array(cell)).sum(1)
            w = tuple(int(v) for v in pts[int(np.argmin(d))])
            inner = self.explain(w, a, b, 0)
            return _Double((cell, a), (cell, b), tuple(inner))
        L = self.cl.labels
        cand = comp & (L[a] == L[b]) & (L[a] >= 0)
        best, best_t = None, limit
        for pq in np.argwhere(cand)[:256]:
            w = (int(pq[0]), int(pq[1]))
            t = self.cl.equivalence_time(w, a, b)
            if t < best_t:
                best, best_t = w, t
        if best is None:
            return None
        return _Double((cell, a), (cell, b), tuple(self.explain(best, a, b, best_t)))

    def replay(self, cell, a, b, limit) -> list:
        """Shortest path over the recorded merges at ``cell`` before ``limit``."""
        flat = cell[0] * self.g.ny + cell[1]
        evs = [self.cl.events[k] for k in self.cl._cell_events().get(flat, []) if self.cl.events[k].time < limit]
        nodes = [i for i in range(len(self.dom.lats)) if self.dom.masks[i][cell]]
        adj: dict[int, list] = {i: [] for i in nodes}
        for u, v in zip(nodes, nodes[1:]):
            if v == u + 1:
                adj[u].append((v, None))
                adj[v].append((u, None))
        for e in evs:
            adj[e.a].append((e.b, e))
            adj[e.b].append((e.a, e))
        prev = {a: None}
        queue = deque([a])
        while queue:
            u = queue.popleft()
            for v, e in adj[u]:
                if v not in prev:
                    prev[v] = (u, e)
                    queue.append(v)
        if b not in prev:
            raise InternalInconsistency(f"no recorded merge path at cell {cell} between {a} and {b}")
        hops = []
        v = b
        while prev[v] is not None:
            u, e = prev[v]
            hops.append((u, v, e))
            v = u
        out = []
        for u, v, e in reversed(hops):
            if e is None or e.real:
                out.append(self.simple_edge(cell, u, v))
            else:
                inner = self.explain(e.witness, e.a, e.b, e.time)
                if (e.a, e.b) != (u, v):
                    inner = [_reverse(x) for x in reversed(inner)]
                out.append(_Double((cell, u), (cell, v), tuple(inner)))
        return _compress_sphere(out)


def _reverse(item):
    if isinstance(item, _Simple):
        return _Simple(item.kind, item.dst, item.src, item.anchor)
    return _Double(item.dst, item.src, tuple(_reverse(x) for x in reversed(item.inner)))


def _compress_sphere(items: list) -> list:
    out = []
    for it in items:
        if (out and isinstance(it, _Simple) and isinstance(out[-1], _Simple)
                and it.kind == out[-1].kind == "sphere"):
            out[-1] = _Simple("sphere", out[-1].src, it.dst)
        else:
            out.append(it)
    return out


def _flatten(items, start: Node, nodes: list, steps: list) -> None:
    if not nodes:
        nodes.append(start)
    for it in items:
        s = len(nodes) - 1
        if isinstance(it, _Simple):
            nodes.append(it.dst)
            steps.append(ChainStep(it.kind, (s,), it.anchor))
        else:
            nodes.append(it.inner[0].src if it.inner else (it.src[0], it.src[1]))
            _flatten(it.inner, None, nodes, steps)
            nodes.append(it.dst)
            steps.append(ChainStep("double", (s, len(nodes) - 2)))


def _unit_angle(u: ImaginaryUnit) -> float:
    return math.atan2(u.y, u.x)


def _node_for(dom: AxialDomain, x: Quaternion):
    alpha, beta, unit, arbitrary = decompose(x)
    cell = dom.grid.cell_of(alpha, beta)
    if cell is None or not dom.contains(x):
        raise PointOutsideDomain(f"{x!r} is not in {dom.name}")
    col = dom.masks[:, cell[0], cell[1]]
    members = np.flatnonzero(col)
    r = 0.0 if arbitrary else unit.latitude
    a = int(members[np.argmin(np.abs(dom.lats[members] - r))])
    return cell, a, unit, arbitrary


def chain_find(dom: AxialDomain, x: Quaternion, y: Quaternion) -> Chain | None:
    """Explicit chain from ``x`` to ``y``, or None when the closure keeps them apart."""
    x, y = as_quaternion(x), as_quaternion(y)
    cx, ax, ux, rx = _node_for(dom, x)
    cy, ay, uy, ry = _node_for(dom, y)
    cl = hinge_closure(dom)
    if cx != cy or not cl.same_class(cx, ax, ay):
        return None
    builder = _ChainBuilder(dom, cl, hinge_closure(dom, double_steps=False))
    if ax == ay:
        items = [_Simple("sphere", (cx, ax), (cx, ay))]
    else:
        items = builder.explain(cx, ax, ay, math.inf)
    nodes: list = []
    steps: list = []
    _flatten(items, (cx, ax), nodes, steps)
    angle = _unit_angle(ux) if not rx else math.pi / 2
    units = {}
    for cell, a in nodes:
        units.setdefault(a, ImaginaryUnit.at_latitude(float(dom.lats[a]), angle))
    units[ax] = ux if not rx else units[ax]
    units[ay] = uy if not ry else units[ay]
    pts, planar, lats = [], [], []
    for cell, a in nodes:
        z = dom.grid.center(*cell)
        if (cell, a) == (cx, ax):
            p = x
            z = CPoint(decompose(x).alpha, decompose(x).beta)
        elif (cell, a) == (cy, ay):
            p = y
            z = CPoint(decompose(y).alpha, decompose(y).beta)
        else:
            p = phi(units[a], z)
        pts.append(p)
        planar.append(z)
        lats.append(float(units[a].latitude))
    return Chain(tuple(pts), tuple(planar), tuple(lats), tuple(steps))


def validate_chain(dom: AxialDomain, chain: Chain) -> list[str]:
    """Check every annotated step geometrically and the nesting of double steps.
    Returns a list of problems (empty when valid)."""
    problems = []
    t = chain.length
    if t < 1:
        return ["a chain needs at least one step"]
    g = dom.grid

    def cell_of(z):
        return g.cell_of(z.alpha, z.beta)

    def units_equal(s, s2):
        d1, d2 = decompose(chain.points[s]), decompose(chain.points[s2])
        return d1.arbitrary or d2.arbitrary or abs(d1.unit - d2.unit) < 1e-9

    simple_at = set()
    doubles = []
    for st in chain.steps:
        if st.kind in ("sphere", "hinged"):
            s = st.at[0]
            simple_at.add(s)
            z0, z1 = chain.planar[s], chain.planar[s + 1]
            r0, r1 = chain.latitudes[s], chain.latitudes[s + 1]
            if cell_of(z0) != cell_of(z1):
                problems.append(f"simple step at {s} leaves its sphere")
                continue
            c = cell_of(z0)
            if c[1] == 0 and dom.masks[:, c[0], 0].any():
                continue  # real point: every step is trivial
            if st.kind == "sphere":
                lo, hi = sorted((r0, r1))
                inside = [r for r in dom.lats if lo <= r <= hi] + [r0, r1]
                if not all(dom.mask_at(r)[c] for r in inside):
                    problems.append(f"sphere step at {s} crosses a gap in the latitude set")
            else:
                try:
                    ok = strongly_hinged_test(dom, r0, r1, z0)
                except PointOutsideRegion:
                    ok = False
                if not ok:
                    problems.append(f"step at {s} is not strongly hinged")
        else:
            lo, hi = st.at
            doubles.append((lo, hi))
            if not (0 <= lo < hi <= t - 1):
                problems.append(f"double step {st.at} out of range")
                continue
            if not (units_equal(lo, lo + 1) and units_equal(hi, hi + 1)):
                problems.append(f"double step {st.at}: shadowing pairs are not on common slices")
            if cell_of(chain.planar[lo]) != cell_of(chain.planar[hi + 1]) or \
                    cell_of(chain.planar[lo + 1]) != cell_of(chain.planar[hi]):
                problems.append(f"double step {st.at}: endpoints are not on matching spheres")
                continue
            try:
                ok = shadow_test(dom, chain.latitudes[lo], chain.latitudes[hi + 1],
                                 chain.planar[lo], chain.planar[lo + 1])
            except PointOutsideRegion:
                ok = False
            if not ok:
                problems.append(f"double step {st.at}: no shadowing path")
    remaining = sorted(set(range(t)) - simple_at)
    listed = sorted(i for d in doubles for i in d)
    if remaining != listed or len(listed) != 2 * len(doubles):
        problems.append(f"indices {remaining} are not exactly the double-step endpoints {doubles}")
    ds = sorted(doubles)
    for m in range(len(ds)):
        for n in range(m + 1, len(ds)):
            if not (ds[m][1] < ds[n][0] or ds[m][1] > ds[n][1]):
                problems.append(f"double steps {ds[m]} and {ds[n]} are intertwined")
    return problems
