"""Command-line front end.

    qhl geodesic --domain disk.json --from 0,0 --to 0.9,0 --out -
    qhl verify pommerenke --domain half_plane.json --h 0.05 --seed 7 --out out/

Exit codes: 0 success, 1 a verification failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .deform import deform
from .geometry import (BoundaryAnchor, DomainError, load_domain, sample_boundary,
                       vertical_infinity)
from .graph import GraphError, build_graph
from .gromov import busemann_field, choose_epsilon, estimate_delta
from .modulus import deformed_problem, discrete_modulus, euclidean_problem, segment_vertices
from .qhyp import qh_geodesic
from .svg import emit_svg
from .verify import (chord_cross_section, estimate_rough_starlike, refinement_check,
                     sample_bhk_triples, sample_pairs, uniformity_scale_sweep, verify_bhk314,
                     verify_bhk_uniform_bounds, verify_boundary_qs, verify_deformation_bounds,
                     verify_deformed_uniformity, verify_faltensatz, verify_gehring_hayman,
                     verify_llc, verify_pommerenke, verify_qh_sandwich, verify_separation,
                     verify_uniformity)
from .verify.report import jsonable

log = logging.getLogger("qhl")

COMMANDS = ("geodesic", "delta", "busemann", "deform", "modulus", "verify", "report")
FORMATS = ("json", "csv", "svg")
PROPERTIES = ("gehring_hayman", "separation", "pommerenke", "faltensatz", "uniformity", "llc",
              "boundary_qs", "deformation_bounds", "deformed_uniformity", "bhk_uniform_bounds",
              "bhk314", "rough_starlike", "qh_sandwich")
# refinement tolerance per property; absent means no h -> h/2 comparison
REFINE_TOL = {"gehring_hayman": 0.10, "separation": 0.15, "pommerenke": 0.10, "uniformity": 0.15,
              "bhk314": 0.15, "deformation_bounds": 0.15}
REFINE_KEYS = {"pommerenke": ["R"], "uniformity": ["A"], "deformation_bounds": ["M", "C_delta"]}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    domain: str | None = None
    h: float = 0.02
    stencil: int | None = None
    seed: int = 0
    eps: float | None = None
    pairs: int = 30
    triples: int = 500
    quads: int | None = None
    sample: int = 40
    out: str = "-"
    formats: tuple = ("json",)
    prop: str | None = None
    refine: bool = True
    options: dict = field(default_factory=dict)

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command != "report" and not self.domain:
            raise UsageError("--domain is required")
        if not (isinstance(self.h, (int, float)) and self.h > 0):
            raise UsageError("--h must be positive")
        if self.stencil is not None and self.stencil not in (8, 16, 26):
            raise UsageError("--stencil must be 8, 16 or 26")
        if self.seed < 0:
            raise UsageError("--seed must be nonnegative")
        if self.eps is not None and not self.eps > 0:
            raise UsageError("--eps must be positive")
        for name in ("pairs", "triples", "sample"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name} must be positive")
        if self.quads is not None and self.quads < 1:
            raise UsageError("--quads must be positive")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad or not self.formats:
            raise UsageError(f"unknown format(s) {bad}; choose from {','.join(FORMATS)}")
        if self.command == "verify" and self.prop not in PROPERTIES:
            raise UsageError(f"unknown property {self.prop!r}")
        return self

    def to_dict(self):
        d = asdict(self)
        d["formats"] = list(self.formats)
        return jsonable(d)


# ----------------------------------------------------------------------
# parsing

def _point(text):
    try:
        return np.array([float(v) for v in str(text).split(",")])
    except ValueError:
        raise UsageError(f"bad point {text!r}; expected comma-separated numbers") from None


def _segment(text):
    parts = str(text).split(":")
    if len(parts) != 2:
        raise UsageError(f"bad segment {text!r}; expected x0,y0:x1,y1")
    return _point(parts[0]), _point(parts[1])


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", help="domain spec (JSON file)")
    common.add_argument("--config", help="JSON file of RunConfig fields; flags take precedence")
    common.add_argument("--h", type=float)
    common.add_argument("--stencil", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--eps", type=float)
    common.add_argument("--pairs", type=int)
    common.add_argument("--triples", type=int)
    common.add_argument("--quads", type=int)
    common.add_argument("--sample", type=int)
    common.add_argument("--out", help="output directory, or - for standard output")
    common.add_argument("--format", dest="formats", help="comma-separated subset of json,csv,svg")
    common.add_argument("--base", help="base point o")
    common.add_argument("--anchor", help="infinity[:dx,dy] or point:qx,qy")
    common.add_argument("--R", type=float, help="anchor radius")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qhl", description="Quasihyperbolic geometry toolkit.")
    p.add_argument("--version", action="version", version=f"qhl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    g = sub.add_parser("geodesic", parents=[common], help="quasihyperbolic geodesic")
    g.add_argument("--from", dest="src", required=True)
    g.add_argument("--to", dest="dst", required=True)
    sub.add_parser("delta", parents=[common], help="four-point delta estimate")
    sub.add_parser("busemann", parents=[common], help="Busemann function on the graph")
    sub.add_parser("deform", parents=[common], help="conformal deformation")
    m = sub.add_parser("modulus", parents=[common], help="discrete modulus of E-F paths")
    m.add_argument("--E", required=True, help="segment x0,y0:x1,y1")
    m.add_argument("--F", required=True, help="segment x0,y0:x1,y1")
    m.add_argument("--p", type=float)
    m.add_argument("--deformed", action="store_true")
    v = sub.add_parser("verify", parents=[common], help="run a verifier")
    v.add_argument("prop", metavar="property", choices=PROPERTIES)
    v.add_argument("--sigma", help="cross-section chord:c[:axis] (faltensatz)")
    v.add_argument("--no-refine", dest="refine", action="store_false", default=None)
    r = sub.add_parser("report", parents=[common], help="summarize report files")
    r.add_argument("--input", required=True, help="directory of JSON reports")
    return p


_FIELDS = ("domain", "h", "stencil", "seed", "eps", "pairs", "triples", "quads", "sample", "out",
           "formats", "refine")
_OPTIONS = ("src", "dst", "base", "anchor", "R", "E", "F", "p", "deformed", "sigma", "input")


def config_from_args(ns):
    base = {}
    if ns.config:
        with open(ns.config) as fh:
            base = json.load(fh)
        unknown = set(base) - set(_FIELDS) - {"options"}
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
    kw = {}
    for name in _FIELDS:
        val = getattr(ns, name, None)
        if val is None:
            val = base.get(name)
        if val is not None:
            kw[name] = val
    if isinstance(kw.get("formats"), str):
        kw["formats"] = tuple(f.strip() for f in kw["formats"].split(",") if f.strip())
    elif "formats" in kw:
        kw["formats"] = tuple(kw["formats"])
    elif ns.command == "verify":
        kw["formats"] = ("json", "svg")
    elif ns.command in ("geodesic", "busemann", "deform", "modulus"):
        kw["formats"] = ("json", "csv")
    opts = dict(base.get("options", {}))
    for name in _OPTIONS:
        val = getattr(ns, name, None)
        if val is not None and val is not False:
            opts[name] = val
    return RunConfig(ns.command, prop=getattr(ns, "prop", None), options=opts, **kw).validate()


# ----------------------------------------------------------------------
# outputs

def write_atomic(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Output:
    """Collects named artifacts; ``--out -`` streams only the primary one."""

    def __init__(self, cfg, stem):
        self.cfg, self.stem, self.items = cfg, stem, []

    def add(self, fmt, text, primary=False):
        if fmt in self.cfg.formats or primary and self.cfg.out == "-":
            self.items.append((fmt, text, primary))

    def flush(self):
        if self.cfg.out == "-":
            for fmt, text, primary in self.items:
                if primary:
                    sys.stdout.write(text)
            return
        for fmt, text, _ in self.items:
            write_atomic(os.path.join(self.cfg.out, f"{self.stem}.{fmt}"), text)


def _meta(cfg):
    return {"config": cfg.to_dict(), "version": __version__}


def _dump(obj, cfg):
    d = jsonable(obj)
    d.update(_meta(cfg))
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


def _csv(header, rows):
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(repr(float(v)) if not isinstance(v, (int, np.integer)) else str(int(v))
                              for v in r))
    return "\n".join(lines) + "\n"


def _coord_header(dim):
    return [f"x{i}" for i in range(dim)]


# ----------------------------------------------------------------------
# shared setup

def _setup(cfg):
    try:
        dom = load_domain(cfg.domain)
    except FileNotFoundError:
        raise UsageError(f"domain file not found: {cfg.domain}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"domain file is not valid JSON: {exc}") from None
    return dom, build_graph(dom, cfg.h, cfg.stencil)


def _field(cfg, dom, g):
    o = cfg.options
    spec = o.get("anchor")
    lo, hi = dom.window
    if o.get("base") is not None:
        base = _point(o["base"])
    elif dom.kind == "half_space":
        base = np.zeros(dom.dim)
        base[-1] = min(1.0, 0.5 * hi[-1])
    elif dom.kind == "ball":
        base = np.asarray(dom.params["center"], float)
    else:
        raise UsageError("--base is required for this domain")
    if spec is None:
        if dom.kind != "half_space":
            raise UsageError("--anchor is required for this domain")
        spec = "infinity"
    kind, _, rest = spec.partition(":")
    if kind == "infinity":
        if rest:
            d = _point(rest)
            anchor = BoundaryAnchor("infinity", tuple(base), tuple(d / np.linalg.norm(d)))
            default_r = 0.2 * float(np.min(hi - lo))
        else:
            foot = base.copy()
            foot[-1] = 0.0
            anchor = vertical_infinity(dom.dim, foot)
            default_r = 0.45 * float(hi[-1])
    elif kind == "point":
        anchor = BoundaryAnchor("point", tuple(_point(rest)))
        default_r = 4.0
    else:
        raise UsageError(f"bad anchor {spec!r}")
    R = float(o.get("R") or default_r)
    return busemann_field(g, base, anchor, R)


def _delta(cfg, g):
    return estimate_delta(g, cfg.sample, cfg.seed, cfg.quads)


def _epsilon(cfg, g):
    """(eps, delta estimate or None)."""
    if cfg.eps is not None:
        return cfg.eps, None
    est = _delta(cfg, g)
    return choose_epsilon(est.delta), est


def _pairs(cfg, dom, count=None):
    return sample_pairs(dom, count or cfg.pairs, cfg.seed)


# ----------------------------------------------------------------------
# commands

def cmd_geodesic(cfg):
    dom, g = _setup(cfg)
    geo = qh_geodesic(g, _point(cfg.options["src"]), _point(cfg.options["dst"]))
    k = geo.path.cumulative("quasihyperbolic")
    e = geo.path.cumulative("euclidean")
    out = Output(cfg, "geodesic")
    rows = [(int(v), *c, kk, ee) for v, c, kk, ee in zip(geo.vertices, geo.coords, k, e)]
    out.add("csv", _csv(["vertex", *_coord_header(g.dim), "k", "euclidean"], rows), primary=True)
    out.add("json", _dump({"length_k": geo.value, "length_euclidean": float(e[-1]),
                           "diameter": geo.path.diameter, "from": geo.x, "to": geo.y,
                           "vertices": len(geo.vertices), "h": g.h}, cfg))
    if "svg" in cfg.formats and g.dim == 2:
        out.add("svg", emit_svg(dom, {"geodesic": geo.coords}))
    out.flush()
    return 0


def cmd_delta(cfg):
    _, g = _setup(cfg)
    est = _delta(cfg, g)
    out = Output(cfg, "delta")
    out.add("json", _dump({"delta": est.delta, "quadruples": est.quadruples, "mode": est.mode,
                           "h": est.h, "seed": est.seed, "witness": g.coords[list(est.witness)]
                           if est.witness else [], "epsilon": choose_epsilon(est.delta)}, cfg),
            primary=True)
    out.add("csv", _csv(_coord_header(g.dim), est.points))
    out.flush()
    return 0


def cmd_busemann(cfg):
    _, g = _setup(cfg)
    f = _field(cfg, g.domain, g)
    out = Output(cfg, "busemann")
    out.add("json", _dump({"base": f.base, "R": f.R, "anchor": asdict(f.anchor),
                           "max_anchor_gap": float(f.gap.max()), "snap_slack": f.snap_slack,
                           "vertices": g.n_vertices, "h": g.h}, cfg), primary=True)
    rows = [(i, *c, b, b2) for i, (c, b, b2) in enumerate(zip(g.coords, f.values, f.values_far))]
    out.add("csv", _csv(["vertex", *_coord_header(g.dim), "b", "b_far"], rows))
    out.flush()
    return 0


def cmd_deform(cfg):
    _, g = _setup(cfg)
    f = _field(cfg, g.domain, g)
    eps, est = _epsilon(cfg, g)
    dg = deform(g, f, eps)
    out = Output(cfg, "deform")
    fin = np.isfinite(dg.d_eps)
    out.add("json", _dump({"eps": eps, "delta": None if est is None else est.delta,
                           "d_eps_at_base": float(dg.d_eps[f.base_vertex]),
                           "rho_min": float(dg.rho.min()), "rho_max": float(dg.rho.max()),
                           "proxies": len(dg.proxies), "finite_d_eps": int(fin.sum()),
                           "tail_max": float(dg.tail[dg.proxies].max()) if len(dg.proxies) else 0.0,
                           "h": g.h}, cfg), primary=True)
    rows = [(i, *c, r, d) for i, (c, r, d) in enumerate(zip(g.coords, dg.rho, dg.d_eps))]
    out.add("csv", _csv(["vertex", *_coord_header(g.dim), "rho", "d_eps"], rows))
    out.flush()
    return 0


def cmd_modulus(cfg):
    dom, g = _setup(cfg)
    o = cfg.options
    E = segment_vertices(g, *_segment(o["E"]))
    F = segment_vertices(g, *_segment(o["F"]))
    if E.size == 0 or F.size == 0:
        raise UsageError("E or F contains no graph vertex")
    if o.get("deformed"):
        eps, _ = _epsilon(cfg, g)
        prob = deformed_problem(deform(g, _field(cfg, dom, g), eps), E, F, o.get("p"))
    else:
        prob = euclidean_problem(g, E, F, o.get("p"))
    sol = discrete_modulus(prob)
    out = Output(cfg, "modulus")
    d = json.loads(sol.to_json())
    d.update({"p": prob.p, "E_vertices": int(E.size), "F_vertices": int(F.size), "h": g.h})
    out.add("json", _dump(d, cfg), primary=True)
    out.add("csv", sol.density_csv(g.coords))
    if "svg" in cfg.formats and g.dim == 2:
        ov = {"E": g.coords[E], "F": g.coords[F]}
        if sol.paths:
            ov["path"] = g.coords[sol.paths[0]]
        out.add("svg", emit_svg(dom, ov))
    out.flush()
    return 0


def _sigma(cfg, dom, g):
    spec = cfg.options.get("sigma")
    if spec is None:
        if dom.kind == "ball":
            c = dom.params["center"][0] - 0.5 * dom.params["r"]
            return chord_cross_section(g, c, 0)
        raise UsageError("--sigma chord:c[:axis] is required for this domain")
    kind, _, rest = spec.partition(":")
    if kind != "chord" or not rest:
        raise UsageError(f"bad cross-section {spec!r}")
    parts = rest.split(":")
    return chord_cross_section(g, float(parts[0]), int(parts[1]) if len(parts) > 1 else 0)


def _rough_anchors(cfg, dom):
    pts = sample_boundary(dom, 6, cfg.seed)
    pts = pts[dom.in_window(pts, 0.2)]
    anchors = [BoundaryAnchor("point", tuple(q)) for q in pts]
    if dom.kind == "half_space":
        anchors.append(vertical_infinity(dom.dim))
    return anchors


def _run_property(cfg, dom, g):
    prop = cfg.prop
    if prop == "gehring_hayman":
        return verify_gehring_hayman(g, _pairs(cfg, dom))
    if prop == "separation":
        return verify_separation(g, _pairs(cfg, dom), seed=cfg.seed)
    if prop == "pommerenke":
        return verify_pommerenke(g, _pairs(cfg, dom))
    if prop == "uniformity":
        return verify_uniformity(g, _pairs(cfg, dom))
    if prop == "qh_sandwich":
        return verify_qh_sandwich(g, _pairs(cfg, dom))
    if prop == "bhk_uniform_bounds":
        pairs = _pairs(cfg, dom)
        A = verify_uniformity(g, pairs).constants["A"]
        return verify_bhk_uniform_bounds(g, pairs, A=A)
    if prop == "bhk314":
        return verify_bhk314(g, sample_bhk_triples(dom, cfg.pairs, cfg.seed), cfg.seed)
    if prop == "llc":
        return verify_llc(dom, g, max(cfg.pairs, 30), cfg.seed)
    if prop == "rough_starlike":
        return estimate_rough_starlike(g, _rough_anchors(cfg, dom), cfg.sample, cfg.seed)
    if prop == "faltensatz":
        pairs = _pairs(cfg, dom)
        consts = {"C_gh": verify_gehring_hayman(g, pairs).constants["C_gh"],
                  "C_sp": verify_separation(g, pairs, seed=cfg.seed).constants["C_sp"],
                  "R": verify_pommerenke(g, pairs).constants["R"]}
        return verify_faltensatz(g, _sigma(cfg, dom, g), max(cfg.pairs, 40), cfg.seed, consts)
    f = _field(cfg, dom, g)
    eps, est = _epsilon(cfg, g)
    if prop == "boundary_qs":
        A = verify_uniformity(g, _pairs(cfg, dom)).constants["A"]
        rep = verify_boundary_qs(dom, g, f, eps, cfg.triples, cfg.seed, A=A)
    else:
        dg = deform(g, f, eps)
        if prop == "deformed_uniformity":
            rep = verify_deformed_uniformity(g, dg, _pairs(cfg, dom))
        else:
            delta = (est or _delta(cfg, g)).delta
            rep = verify_deformation_bounds(g, dg, _pairs(cfg, dom), delta, seed=cfg.seed)
    rep.tolerances["eps"] = eps
    return rep


def _overlays(rep, g):
    if rep.overlays:
        return rep.overlays
    pts = np.asarray(rep.witness.get("points", []), float).reshape(-1, g.dim)
    ov = {"witness": pts}
    if len(pts) >= 2 and rep.property in ("gehring_hayman", "separation", "pommerenke",
                                          "uniformity", "qh_sandwich", "bhk_uniform_bounds", "bhk314"):
        ov["geodesic"] = qh_geodesic(g, g.snap(pts[0])[0], g.snap(pts[1])[0]).coords
    return ov


def cmd_verify(cfg):
    dom, g = _setup(cfg)
    tol = REFINE_TOL.get(cfg.prop)
    if cfg.refine and tol is not None:
        cache = {cfg.h: g}

        def run(h):
            gg = cache.get(h) or build_graph(dom, h, cfg.stencil)
            return _run_property(cfg, dom, gg)
        rep = refinement_check(run, cfg.h, tol, REFINE_KEYS.get(cfg.prop))
        g_rep = build_graph(dom, cfg.h / 2, cfg.stencil)
    else:
        rep = _run_property(cfg, dom, g)
        g_rep = g
    if cfg.prop == "uniformity":
        sweep = uniformity_scale_sweep(dom, seed=cfg.seed)
        rep.details["scale_sweep"] = sweep.to_dict()
        rep.constants["scale_growth"] = sweep.constants["growth"]
        for n in sweep.notes:
            rep.fail(n)
    out = Output(cfg, f"verify_{cfg.prop}")
    out.add("json", rep.to_json(_meta(cfg)), primary=True)
    if "svg" in cfg.formats and dom.dim == 2:
        out.add("svg", emit_svg(dom, _overlays(rep, g_rep)))
    out.flush()
    status = "pass" if rep.passed else "FAIL " + "; ".join(rep.notes)
    log.info("%s: %s", cfg.prop, status)
    return 0 if rep.passed else 1


def cmd_report(cfg):
    rows, failed = [], 0
    for path in sorted(glob.glob(os.path.join(cfg.options["input"], "*.json"))):
        with open(path) as fh:
            d = json.load(fh)
        if "property" not in d:
            continue
        rows.append({"file": os.path.basename(path), "property": d["property"], "pass": d["pass"],
                     "constants": d["constants"], "notes": d.get("notes", [])})
        failed += not d["pass"]
    if not rows:
        raise UsageError(f"no reports found in {cfg.options['input']}")
    out = Output(cfg, "summary")
    out.add("json", _dump({"reports": rows, "failed": failed, "total": len(rows)}, cfg), primary=True)
    out.add("csv", "property,pass,file\n" + "".join(f"{r['property']},{int(r['pass'])},{r['file']}\n"
                                                   for r in rows))
    out.flush()
    return 1 if failed else 0


HANDLERS = {"geodesic": cmd_geodesic, "delta": cmd_delta, "busemann": cmd_busemann,
            "deform": cmd_deform, "modulus": cmd_modulus, "verify": cmd_verify, "report": cmd_report}


def run(argv=None):
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(ns)
        return HANDLERS[cfg.command](cfg)
    except (UsageError, DomainError, GraphError, OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"qhl {ns.command}: error: {msg}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
