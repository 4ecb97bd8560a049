"""Command-line front end: ``slice-forge <command> [flags]``.

Reports are JSON with sorted keys, so a fixed config and seed give
byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import __version__
from .algebra import CPoint, Quaternion, decompose
from .domains import (
    BUILTIN_NAMES,
    DEFAULT_N_LAT,
    AxialDomain,
    InvalidSail,
    InvalidWidth,
    builtin,
    is_slice_domain,
    is_speared,
    load_domain,
    spine_core,
    symmetric_completion_region,
)
from .extension import NotHinged, OutsideCompletion, extend_global
from .hinge import NotSpeared, chain_find, classify, validate_chain
from .planar import DEFAULT_GRID
from .slicefun import parse_function_spec
from .suites import RUNNERS, SUITES, make_rng

log = logging.getLogger("slice_forge")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NOT_SPEARED, EXIT_OUTSIDE = 0, 1, 2, 3, 4
H_RANGE = (1 / 64, 1 / 4)
N_LAT_RANGE = (3, 513)
N_LAT_RECOMMENDED = 33

# columns: spear-simple, S-connected, main sail, hinged
GOLDEN_TABLE1 = {
    "omega0": (True, True, True, True),
    "omega1": (True, False, True, True),
    "omega2": (False, True, True, True),
    "omega3": (False, False, True, True),
    "omega0p": (True, True, False, True),
    "omega1p": (True, False, False, True),
    "omega2p": (False, True, False, True),
    "omega3p": (False, False, False, True),
}
TABLE_COLUMNS = ("spear_simple", "s_connected", "main_sail", "hinged")

DOMAIN_NOTES = {
    "omega0": "both widths 2 - 2|r|",
    "omega1": "both widths peak at r = -1/2 and r = 1/2, vanish at r = 0",
    "omega2": "left width has a 1.6 plateau on (-0.2, 0.6); right width mirrored",
    "omega3": "widths 1.5 on separate latitude bands",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    domain: str | None = None
    function: str | None = None
    h: float | None = None
    n_lat: int | None = None
    tol: float | None = None
    seed: int = 0
    out: str | None = None
    threads: int = 1

    def resolution(self) -> dict:
        return {"h": self.h if self.h is not None else DEFAULT_GRID.h,
                "n_lat": self.n_lat if self.n_lat is not None else DEFAULT_N_LAT}


def _parse_h(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad step {text!r}") from exc


def _parse_point(text: str) -> Quaternion:
    try:
        v = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"point must be a JSON array [w,x,y,z]: {text!r}") from exc
    if not (isinstance(v, list) and len(v) == 4 and all(isinstance(t, (int, float)) for t in v)):
        raise ConfigError(f"point must be a JSON array [w,x,y,z]: {text!r}")
    return Quaternion.from_seq(v)


def _threads() -> int:
    raw = os.environ.get("SLICE_FORGE_THREADS", "")
    try:
        return max(1, int(raw)) if raw else max(1, min(8, os.cpu_count() or 1))
    except ValueError:
        log.warning("ignoring SLICE_FORGE_THREADS=%r", raw)
        return 1


def make_config(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(domain=getattr(ns, "domain", None), function=getattr(ns, "fn", None),
                    h=getattr(ns, "h", None), n_lat=getattr(ns, "n_lat", None),
                    tol=getattr(ns, "tol", None), seed=getattr(ns, "seed", 0) or 0,
                    out=getattr(ns, "out", None), threads=_threads())
    if cfg.h is not None and not (H_RANGE[0] - 1e-15 <= cfg.h <= H_RANGE[1] + 1e-15):
        raise ConfigError(f"--h must lie in [1/64, 1/4], got {cfg.h}")
    if cfg.n_lat is not None:
        if not (N_LAT_RANGE[0] <= cfg.n_lat <= N_LAT_RANGE[1]):
            raise ConfigError(f"--n-lat must lie in [{N_LAT_RANGE[0]}, {N_LAT_RANGE[1]}], got {cfg.n_lat}")
        if cfg.n_lat < N_LAT_RECOMMENDED:
            log.warning("n_lat=%d is below %d; latitude features may be missed", cfg.n_lat, N_LAT_RECOMMENDED)
    if cfg.tol is not None and not cfg.tol >= 0:
        raise ConfigError("--tol must be non-negative")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("--seed must be a 64-bit natural number")
    return cfg


def _meta(cfg: RunConfig, tolerances: dict | None = None) -> dict:
    return {"version": __version__, "resolution": cfg.resolution(), "seed": cfg.seed,
            "tolerances": tolerances or {}, "prng": "PCG64"}


def _emit(report: dict, cfg: RunConfig) -> None:
    text = json.dumps(report, sort_keys=True, indent=2, allow_nan=False, default=_jsonable) + "\n"
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonable(o):
    if isinstance(o, Quaternion):
        return o.to_list()
    if isinstance(o, CPoint):
        return [o.alpha, o.beta]
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _domain(cfg: RunConfig) -> AxialDomain:
    if not cfg.domain:
        raise ConfigError("--domain is required")
    try:
        return load_domain(cfg.domain, cfg.h, cfg.n_lat)
    except (OSError, KeyError, json.JSONDecodeError, InvalidWidth, InvalidSail, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot load domain {cfg.domain!r}: {exc}") from exc


def _function(cfg: RunConfig, required: bool = True):
    text = cfg.function
    if text is None:
        if required:
            raise ConfigError("--fn is required")
        return None
    spec = text
    stripped = text.strip()
    try:
        if stripped[:1] in "{[":
            spec = json.loads(stripped)
        elif os.path.isfile(stripped):
            with open(stripped, encoding="utf-8") as fh:
                spec = json.load(fh)
        return parse_function_spec(spec)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        raise ConfigError(f"bad function spec {text!r}: {exc}") from exc


# -- commands -----------------------------------------------------------------

def _class_row(report) -> dict:
    return dict(zip(TABLE_COLUMNS, report.row()))


def domain_report(dom: AxialDomain) -> dict:
    spine, core = spine_core(dom)
    comp = symmetric_completion_region(dom)
    return {"name": dom.name, "grid": dom.grid.to_dict(), "latitude_samples": int(len(dom.lats)),
            "distinct_traces": int(len(set(dom.mask_ids))), "slice_domain": is_slice_domain(dom),
            "completion_cells": comp.count, "spine_cells": spine.count, "core_cells": core.count,
            "completion_rle": comp.to_rle()}


def cmd_classify(cfg: RunConfig) -> int:
    dom = _domain(cfg)
    sp = is_speared(dom)
    if not sp.speared:
        _emit({"meta": _meta(cfg), "domain": dom.name, "speared": False,
               "witness": {"latitude": sp.latitude, "bbox": list(sp.component_bbox)}}, cfg)
        return EXIT_NOT_SPEARED
    try:
        rep = classify(dom)
    except NotSpeared as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_SPEARED
    _emit({"meta": _meta(cfg), "domain": dom.name, "speared": True, "class": _class_row(rep),
           "main_sail_latitude": rep.main_sail_latitude, "witnesses": rep.witnesses,
           "closure": rep.resolution, "domain_report": domain_report(dom)}, cfg)
    return EXIT_OK


def _mark(b: bool) -> str:
    return "✓" if b else "×"


def table1(h: float | None = None, n_lat: int | None = None, threads: int = 1) -> dict:
    """Classify the eight built-ins; returns rows and mismatches against the golden table."""
    hh = DEFAULT_GRID.h if h is None else h
    nn = DEFAULT_N_LAT if n_lat is None else n_lat

    def one(name):
        return name, classify(builtin(name, hh, nn))

    with ThreadPoolExecutor(max_workers=threads) as ex:
        results = dict(ex.map(one, BUILTIN_NAMES))
    rows, mismatches = {}, []
    for name in BUILTIN_NAMES:
        got = results[name].row()
        rows[name] = dict(zip(TABLE_COLUMNS, got))
        for col, g, w in zip(TABLE_COLUMNS, got, GOLDEN_TABLE1[name]):
            if g != w:
                mismatches.append({"domain": name, "column": col, "expected": w, "got": g})
    return {"rows": rows, "mismatches": mismatches,
            "main_sail_latitudes": {n: results[n].main_sail_latitude for n in BUILTIN_NAMES}}


def render_table(rows: dict) -> str:
    head = f"{'domain':<9}" + "".join(f"{c:>14}" for c in TABLE_COLUMNS)
    lines = [head]
    for name, row in rows.items():
        lines.append(f"{name:<9}" + "".join(f"{_mark(row[c]):>14}" for c in TABLE_COLUMNS))
    return "\n".join(lines)


def cmd_table1(cfg: RunConfig) -> int:
    res = table1(cfg.h, cfg.n_lat, cfg.threads)
    print(render_table(res["rows"]), file=sys.stderr)
    for m in res["mismatches"]:
        print(f"mismatch: {m['domain']} {m['column']} expected {_mark(m['expected'])} got {_mark(m['got'])}",
              file=sys.stderr)
    report = {"meta": _meta(cfg), "table": res["rows"], "mismatches": res["mismatches"],
              "main_sail_latitudes": res["main_sail_latitudes"], "match": not res["mismatches"]}
    _emit(report, cfg)
    return EXIT_OK if not res["mismatches"] else EXIT_FAIL


def run_suite(suite: str, cfg: RunConfig) -> dict:
    f = _function(cfg, required=False)
    rng = make_rng(cfg.seed)
    kw = {"f": f, "tol": cfg.tol}
    if suite == "stem":
        kw["dom"] = _domain(cfg) if cfg.domain else builtin("omega0")
    elif suite == "spherical":
        kw["doms"] = [_domain(cfg)] if cfg.domain else [builtin(n) for n in BUILTIN_NAMES]
    checks = RUNNERS[suite](rng, **kw)
    tol = {c["name"]: c["tolerance"] for c in checks}
    return {"meta": _meta(cfg, tol), "suite": suite, "function": cfg.function or "random polynomials",
            "checks": checks, "pass": all(c["pass"] for c in checks)}


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    report = run_suite(suite, cfg)
    _emit(report, cfg)
    for c in report["checks"]:
        if not c["pass"]:
            print(f"FAIL {c['name']}: max_err={c['max_err']} tol={c['tolerance']} worst={c['worst']}",
                  file=sys.stderr)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_extend(cfg: RunConfig, point: Quaternion) -> int:
    dom = _domain(cfg)
    f = _function(cfg).restrict(dom)
    tol = 1e-9 if cfg.tol is None else cfg.tol
    try:
        res = extend_global(f, point, tol)
    except (NotHinged, NotSpeared) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_SPEARED
    except OutsideCompletion as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTSIDE
    _emit({"meta": _meta(cfg, {"consistency": tol}), "domain": dom.name, "point": point,
           "value": res.value, "consistency_spread": res.consistency_spread, "bands": res.bands,
           "inside_domain": dom.contains(point)}, cfg)
    return EXIT_OK


def cmd_chain(cfg: RunConfig, x: Quaternion, y: Quaternion) -> int:
    dom = _domain(cfg)
    for p in (x, y):
        if not dom.contains(p):
            print(f"error: {p.to_list()} is outside {dom.name}", file=sys.stderr)
            return EXIT_CONFIG
    if decompose(x).beta != decompose(y).beta or decompose(x).alpha != decompose(y).alpha:
        log.warning("points lie on different spheres; equivalence is only defined on one sphere")
    try:
        chain = chain_find(dom, x, y)
    except NotSpeared as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_SPEARED
    report = {"meta": _meta(cfg), "domain": dom.name, "from": x, "to": y}
    if chain is None:
        report.update(equivalent=False, message="not equivalent at resolution")
    else:
        report.update(equivalent=True, certificate=chain.to_json(), problems=validate_chain(dom, chain))
    _emit(report, cfg)
    return EXIT_OK


def cmd_domains_list(cfg: RunConfig) -> int:
    items = []
    for name in BUILTIN_NAMES:
        base = name.rstrip("p")
        note = DOMAIN_NOTES[base] + ("; with sail attachment" if name.endswith("p") else "")
        items.append({"name": name, "sails": name.endswith("p"), "note": note})
    items.append({"name": "ball(c,R)", "sails": False, "note": "real-centered ball, slice domain"})
    _emit({"meta": _meta(cfg), "domains": items}, cfg)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", help="built-in name or path to a JSON domain config")
    common.add_argument("--fn", help="function: name, JSON spec, or path to a JSON spec")
    common.add_argument("--h", type=_parse_h, help="raster step (fractions like 1/32 accepted)")
    common.add_argument("--n-lat", type=int, dest="n_lat", help="equispaced latitude samples")
    common.add_argument("--tol", type=float, help="override the main tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="slice-forge", description="Slice regular functions on axial domains.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common], help="classify a speared domain")
    sub.add_parser("table1", parents=[common], help="classify the built-ins against the golden table")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=SUITES)
    e = sub.add_parser("extend", parents=[common], help="evaluate the extension to the symmetric completion")
    e.add_argument("--point", required=True, help="[w,x,y,z]")
    c = sub.add_parser("chain", parents=[common], help="certificate that two sphere points are equivalent")
    c.add_argument("--from", dest="from_", required=True, help="[w,x,y,z]")
    c.add_argument("--to", required=True, help="[w,x,y,z]")
    sub.add_parser("domains-list", parents=[common], help="list built-in domains")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = make_config(ns)
        cmd = ns.command
        if cmd == "classify":
            return cmd_classify(cfg)
        if cmd == "table1":
            return cmd_table1(cfg)
        if cmd == "verify":
            return cmd_verify(cfg, ns.suite)
        if cmd == "extend":
            return cmd_extend(cfg, _parse_point(ns.point))
        if cmd == "chain":
            return cmd_chain(cfg, _parse_point(ns.from_), _parse_point(ns.to))
        return cmd_domains_list(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
