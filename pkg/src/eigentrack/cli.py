"""Command-line interface: ``eigentrack <command> [options]``.

Commands
--------
track      label eigenvalue curves (optionally eigenvector frames) of a family
riesz      contour projectors, rank scan and compressed spectra along a grid
match      matching distance of two spectra, or of two normal matrices
polyroots  root curves of a polynomial family, optional power substitution
example    the glued 2 x 2 example: eigenvalues, Hoelder quotients, angles
diagnose   tracking plus crossing orders and a Hoelder-quotient sweep

Exit status: 0 success, 2 configuration error, 3 numerical failure,
4 invariant violation.  All outputs are deterministic for a fixed command
line; floats are written with 17 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial

from . import family as fam
from . import polyroots as pr
from . import riesz as rz
from . import tracking as tr
from .core_linalg import eigen, frobenius_norm, hermitian_eigen
from .errors import BoundViolated, ConfigError, EigentrackError, NotInvariant
from .matching import check_normal_bound, matching_distance

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4

TOLERANCES = {
    "gap_tol": tr.GAP_TOL,
    "k_max": tr.K_MAX,
    "order_tol": tr.ORDER_TOL,
    "refine_depth": tr.REFINE_DEPTH,
    "multiset_tol": 1e-9,
    "residual_tol": 1e-8,
    "projector_tol": 1e-8,
    "trace_tol": 1e-6,
    "cluster_tol": 1e-8,
    "order_k_max": pr.K_MAX,
}

X_FUNCS = {
    "one": lambda x: np.ones_like(x),
    "x": lambda x: x,
    "x2": lambda x: x * x,
    "sin": np.sin,
    "cos": np.cos,
}


def fmt(x):
    return format(float(x), ".17g")


# ------------------------------------------------------------ spec parsing


def _field(obj, key, where, kind=None, default=...):
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{where}: missing field '{key}'")
        return default
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{where}: field '{key}' has type {type(val).__name__}")
    return val


def _only(obj, allowed, where):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(extra)}")


def _number(v, where):
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(p, (int, float)) for p in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{where}: expected a number or [re, im]")


def _matrix(rows, where):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError(f"{where}: expected a list of rows")
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ConfigError(f"{where}: matrix must be square")
    M = np.array([[_number(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)])
    if not np.any(M.imag):
        M = M.real
    return M


def _pair(v, where):
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v)):
        raise ConfigError(f"{where}: expected [lo, hi]")
    lo, hi = map(float, v)
    if not lo < hi:
        raise ConfigError(f"{where}: need lo < hi")
    return lo, hi


COMMON = ("generator", "grid", "contour", "name")


def load_spec(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(spec, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return spec


def build_family(spec, where="family"):
    """Matrix family from a parsed spec object."""
    gen = _field(spec, "generator", where, str)
    w = f"{where}.{gen}"
    if gen == "paper_example":
        _only(spec, COMMON + ("n_max",), w)
        n_max = _field(spec, "n_max", w, int, 8)
        try:
            return fam.paper_example_family(n_max)
        except ValueError as exc:
            raise ConfigError(f"{w}: {exc}") from None
    if gen == "schrodinger":
        _only(spec, COMMON + ("grid_points", "interval", "domain", "potential"), w)
        m = _field(spec, "grid_points", w, int)
        interval = _pair(_field(spec, "interval", w), f"{w}.interval")
        domain = _pair(_field(spec, "domain", w, default=[0.0, 1.0]), f"{w}.domain")
        terms = []
        for i, term in enumerate(_field(spec, "potential", w, list, [])):
            tw = f"{w}.potential[{i}]"
            if not isinstance(term, dict):
                raise ConfigError(f"{tw}: expected an object")
            _only(term, ("coef", "t_power", "x_func"), tw)
            xf = _field(term, "x_func", tw, str, "one")
            if xf not in X_FUNCS:
                raise ConfigError(f"{tw}: x_func must be one of {sorted(X_FUNCS)}")
            terms.append((float(_field(term, "coef", tw, (int, float))), int(_field(term, "t_power", tw, int, 0)), X_FUNCS[xf]))

        def potential(t, x):
            v = np.zeros_like(x)
            for c, p, f in terms:
                v = v + c * t ** p * f(x)
            return v

        try:
            return fam.schrodinger_family(potential, m, interval, domain, name=spec.get("name", "schrodinger"))
        except ValueError as exc:
            raise ConfigError(f"{w}: {exc}") from None
    if gen == "polynomial_entries":
        _only(spec, COMMON + ("entries", "structure", "domain"), w)
        rows = _field(spec, "entries", w, list)
        entries = []
        for i, row in enumerate(rows):
            if not isinstance(row, list):
                raise ConfigError(f"{w}.entries[{i}]: expected a row")
            entries.append([_entry_coeffs(e, f"{w}.entries[{i}][{j}]") for j, e in enumerate(row)])
        structure = _field(spec, "structure", w, str, "general")
        if structure not in fam.STRUCTURES:
            raise ConfigError(f"{w}: structure must be one of {fam.STRUCTURES}")
        domain = _pair(_field(spec, "domain", w, default=[-1.0, 1.0]), f"{w}.domain")
        try:
            return fam.polynomial_entry_family(entries, structure, domain, name=spec.get("name", "polynomial_entries"))
        except ValueError as exc:
            raise ConfigError(f"{w}: {exc}") from None
    if gen == "glued":
        _only(spec, COMMON + ("segments", "structure", "blend_margin"), w)
        segs = []
        for i, sg in enumerate(_field(spec, "segments", w, list)):
            sw = f"{w}.segments[{i}]"
            if not isinstance(sg, dict):
                raise ConfigError(f"{sw}: expected an object")
            _only(sg, ("index", "anchor", "s_range", "A", "B"), sw)
            try:
                segs.append(fam.SegmentSpec(
                    int(_field(sg, "index", sw, int)),
                    float(_field(sg, "anchor", sw, (int, float))),
                    float(_field(sg, "s_range", sw, (int, float))),
                    _matrix(_field(sg, "A", sw), f"{sw}.A"),
                    _matrix(_field(sg, "B", sw), f"{sw}.B"),
                ))
            except ValueError as exc:
                raise ConfigError(f"{sw}: {exc}") from None
        structure = _field(spec, "structure", w, str, None)
        try:
            return fam.glued_family(segs, float(_field(spec, "blend_margin", w, (int, float), 0.0)),
                                    structure, name=spec.get("name", "glued"))
        except ValueError as exc:
            raise ConfigError(f"{w}: {exc}") from None
    raise ConfigError(f"{where}: unknown generator {gen!r}")


def _entry_coeffs(e, where):
    """Ascending polynomial coefficients of a matrix entry: a number, [re, im] or a list of those."""
    if isinstance(e, (int, float)) and not isinstance(e, bool):
        return [complex(e)]
    if isinstance(e, list):
        return [_number(c, where) for c in e]
    raise ConfigError(f"{where}: expected a coefficient list")


def build_polynomial(spec, where="polynomial"):
    gen = _field(spec, "generator", where, str)
    if gen != "polynomial":
        raise ConfigError(f"{where}: polyroots needs generator 'polynomial', got {gen!r}")
    _only(spec, COMMON + ("coefficients", "convention", "domain"), where)
    conv = _field(spec, "convention", where, str, "signed")
    if conv not in ("signed", "monic"):
        raise ConfigError(f"{where}: convention must be 'signed' or 'monic'")
    coeffs = []
    for k, c in enumerate(_field(spec, "coefficients", where, list)):
        cw = f"{where}.coefficients[{k}]"
        vals = _entry_coeffs(c, cw)
        arr = np.array(vals)
        coeffs.append(Polynomial(arr.real if not np.any(arr.imag) else arr))
    if not coeffs:
        raise ConfigError(f"{where}: no coefficients")
    domain = _pair(_field(spec, "domain", where, default=[-1.0, 1.0]), f"{where}.domain")
    name = spec.get("name", "polynomial")
    if conv == "monic":
        return pr.PolynomialFamily.from_monic(coeffs, domain=domain, name=name)
    return pr.PolynomialFamily(tuple(coeffs), domain=domain, name=name)


def parse_grid(text, spec=None):
    if text is None:
        g = (spec or {}).get("grid")
        if g is None:
            raise ConfigError("no grid: pass --grid lo:hi:n or add 'grid' to the family spec")
        if not isinstance(g, dict):
            raise ConfigError("family.grid: expected an object")
        _only(g, ("t_lo", "t_hi", "points"), "family.grid")
        lo, hi, n = _field(g, "t_lo", "family.grid"), _field(g, "t_hi", "family.grid"), _field(g, "points", "family.grid", int)
    else:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"--grid: expected lo:hi:n, got {text!r}")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"--grid: cannot parse {text!r}") from None
    lo, hi = float(lo), float(hi)
    if n < 2:
        raise ConfigError("grid needs at least 2 points")
    if not lo < hi:
        raise ConfigError("grid needs t_lo < t_hi")
    return np.linspace(lo, hi, n)


def grid_for(family, text, spec):
    grid = parse_grid(text, spec)
    lo, hi = family.domain
    if grid[0] < lo or grid[-1] > hi:
        raise ConfigError(f"grid [{fmt(grid[0])}, {fmt(grid[-1])}] leaves the domain [{fmt(lo)}, {fmt(hi)}]")
    return grid


def parse_contour(text, spec=None):
    if text is not None:
        try:
            re_, im_, r = (float(p) for p in text.split(","))
        except ValueError:
            raise ConfigError(f"--contour: expected re,im,radius, got {text!r}") from None
        try:
            return rz.Contour.circle(complex(re_, im_), r)
        except ValueError as exc:
            raise ConfigError(f"--contour: {exc}") from None
    c = (spec or {}).get("contour")
    if c is None:
        return None
    if not isinstance(c, dict):
        raise ConfigError("family.contour: expected an object")
    _only(c, ("center", "radius", "vertices", "nodes"), "family.contour")
    nodes = _field(c, "nodes", "family.contour", int, 16)
    try:
        if "vertices" in c:
            verts = [_number(v, f"family.contour.vertices[{i}]") for i, v in enumerate(c["vertices"])]
            return rz.Contour.polygon(verts, nodes)
        return rz.Contour.circle(_number(_field(c, "center", "family.contour"), "family.contour.center"),
                                 float(_field(c, "radius", "family.contour", (int, float))), nodes)
    except ValueError as exc:
        raise ConfigError(f"family.contour: {exc}") from None


def parse_tolerances(items):
    tol = dict(TOLERANCES)
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--tol: expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        if k not in tol:
            raise ConfigError(f"--tol: unknown key {k!r} (known: {', '.join(sorted(tol))})")
        try:
            tol[k] = type(tol[k])(float(v)) if isinstance(tol[k], int) else float(v)
        except ValueError:
            raise ConfigError(f"--tol: bad value for {k}: {v!r}") from None
    return tol


def parse_alpha(text):
    try:
        vals = [float(a) for a in text.split(",")]
    except ValueError:
        raise ConfigError(f"--alpha: cannot parse {text!r}") from None
    if not vals or any(not a > 0 for a in vals):
        raise ConfigError("--alpha: values must be positive")
    return vals


# ---------------------------------------------------------------- writers


class Output:
    """Collects artifacts and writes them in one pass at the end of a run."""

    def __init__(self, directory):
        self.dir = Path(directory) if directory else None
        self.files = {}

    def table(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])
        self.files[name] = buf.getvalue()

    def events(self, events):
        self.files["events.log"] = "".join(json.dumps(_plain(e), sort_keys=True) + "\n" for e in events)

    def report(self, obj):
        self.files["report.json"] = json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"

    def flush(self):
        if self.dir is None:
            return
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
            for name in sorted(self.files):
                (self.dir / name).write_text(self.files[name])
        except OSError as exc:
            raise ConfigError(f"--out: {exc}") from None


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    return x


def curve_rows(bundle):
    rows = []
    for k, t in enumerate(bundle.grid):
        row = [float(t)]
        for v in bundle.curves[:, k]:
            row += [float(v.real), float(v.imag)]
        rows.append(row)
    header = ["t"] + [f"{p}_{i}" for i in range(bundle.count) for p in ("re", "im")]
    return header, rows


def frame_rows(bundle):
    rows = []
    for k, t in enumerate(bundle.grid):
        F = bundle.frames[k]
        for j in range(F.shape[1]):
            for i in range(F.shape[0]):
                rows.append([float(t), j, i, float(F[i, j].real), float(F[i, j].imag)])
    return ["t", "curve", "component", "re", "im"], rows


# --------------------------------------------------------------- commands


def _bundle_checks(family, bundle, tol):
    fidelity = 0.0
    for k, t in enumerate(bundle.grid):
        A = family(t)
        w = eigen(A if bundle.structure != "hermitian" else 0.5 * (A + A.conj().T), bundle.structure).eigenvalues
        fidelity = max(fidelity, matching_distance(w, bundle.curves[:, k]) / max(bundle.scales[k], 1e-300))
    checks = {
        "multiset_fidelity": {"value": fidelity, "limit": tol["multiset_tol"], "ok": fidelity <= tol["multiset_tol"]},
    }
    if bundle.structure == "hermitian":
        im = float(np.max(np.abs(bundle.curves.imag)))
        checks["real_curves"] = {"value": im, "limit": 1e-10, "ok": im <= 1e-10 * max(bundle.scales.max(), 1e-300)}
    if bundle.frames is not None:
        res = float(tr.frame_residuals(family, bundle).max())
        checks["frame_residual"] = {"value": res, "limit": tol["residual_tol"], "ok": res <= tol["residual_tol"]}
    return checks


def _crossing_dicts(reports):
    return [{
        "t_star": r.t_star, "interval": list(r.interval), "pair": list(r.pair),
        "gap_min": r.gap_min, "order_estimate": r.order_estimate,
        "infinite_order_suspect": r.infinite_order_suspect,
    } for r in reports]


def cmd_track(args, out):
    spec = load_spec(args.family)
    family = build_family(spec)
    grid = grid_for(family, args.grid, spec)
    tol = parse_tolerances(args.tol)
    depth = int(tol["refine_depth"])
    bundle = tr.track_eigenvalues(family, grid, refine=args.refine, depth_cap=depth)
    if args.frames:
        bundle = tr.track_eigenvectors(family, bundle, refine=args.refine, depth_cap=depth)
        out.table("frames.csv", *frame_rows(bundle))
    out.table("curves.csv", *curve_rows(bundle))
    crossings = tr.crossing_detect(bundle, tol["gap_tol"], int(tol["k_max"]), tol["order_tol"])
    events = bundle.events + [dict(kind="crossing", **c) for c in _crossing_dicts(crossings)]
    out.events(events)
    checks = _bundle_checks(family, bundle, tol)
    out.report({
        "command": "track", "family": family.name, "structure": bundle.structure,
        "grid": {"t_lo": grid[0], "t_hi": grid[-1], "points": grid.size},
        "refine": args.refine, "tolerances": tol, "curves": bundle.count,
        "crossings": _crossing_dicts(crossings), "checks": checks,
    })
    return checks


def cmd_riesz(args, out):
    spec = load_spec(args.family)
    family = build_family(spec)
    grid = grid_for(family, args.grid, spec)
    tol = parse_tolerances(args.tol)
    contour = parse_contour(args.contour, spec)
    if contour is None:
        contour = rz.default_contour(family, grid[0], args.index, tol["cluster_tol"])
    rows, worst = [], {"idempotency": 0.0, "hermitian": 0.0, "commutator": 0.0, "trace": 0.0, "compression": 0.0}
    frames = rz.local_frame(family, grid, contour)
    for k, t in enumerate(grid):
        P = frames.projectors[k]
        A = family(t)
        sa = max(frobenius_norm(A), 1e-300)
        comm = frobenius_norm(A @ P.matrix - P.matrix @ A) / sa
        tr_err = abs(P.trace - P.rank)
        herm = P.hermitian_defect if family.structure in ("hermitian", "normal") else 0.0
        lam = rz._spectrum(A, family.structure)
        inside = np.asarray(lam)[contour.encloses(lam)]
        C = rz.compressed_matrix(A, float(t), frames.frames[k], tol["projector_tol"])
        comp = matching_distance(np.linalg.eigvals(C), inside) / sa if inside.size == C.shape[0] else math.inf
        for key, v in (("idempotency", P.idempotency_defect), ("hermitian", herm),
                       ("commutator", comm), ("trace", tr_err), ("compression", comp)):
            worst[key] = max(worst[key], float(v))
        rows.append([float(t), P.rank, float(P.trace.real), float(P.trace.imag),
                     float(P.idempotency_defect), float(herm), float(comm), float(comp), P.nodes])
    out.table("projectors.csv", ["t", "rank", "trace_re", "trace_im", "idempotency", "hermitian",
                                 "commutator", "compression", "nodes"], rows)
    out.events(frames.restarts)
    lim = tol["projector_tol"]
    checks = {
        "idempotency": {"value": worst["idempotency"], "limit": lim, "ok": worst["idempotency"] <= lim},
        "hermitian": {"value": worst["hermitian"], "limit": lim, "ok": worst["hermitian"] <= lim},
        "commutator": {"value": worst["commutator"], "limit": lim, "ok": worst["commutator"] <= lim},
        "trace": {"value": worst["trace"], "limit": tol["trace_tol"], "ok": worst["trace"] <= tol["trace_tol"]},
        "compression": {"value": worst["compression"], "limit": lim, "ok": worst["compression"] <= lim},
    }
    desc = ({"kind": "circle", "center": contour.center, "radius": contour.radius} if contour.kind == "circle"
            else {"kind": "polygon", "vertices": list(contour.vertices)})
    out.report({"command": "riesz", "family": family.name, "contour": desc, "rank": frames.rank,
                "grid": {"t_lo": grid[0], "t_hi": grid[-1], "points": grid.size},
                "tolerances": tol, "checks": checks})
    return checks


def _read_csv_values(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    out = []
    for i, r in enumerate(rows, start=1):
        try:
            out.append([complex(c.strip().replace(" ", "")) for c in r])
        except ValueError:
            if i == 1:
                continue  # header
            raise ConfigError(f"{path}: line {i}: cannot parse {r!r}") from None
    return out


def read_spectrum(path):
    rows = _read_csv_values(path)
    vals = []
    for i, r in enumerate(rows):
        if len(r) == 1:
            vals.append(r[0])
        elif len(r) == 2 and r[0].imag == 0 and r[1].imag == 0:
            vals.append(complex(r[0].real, r[1].real))
        else:
            raise ConfigError(f"{path}: row {i + 1}: expected 'value' or 're,im'")
    return np.array(vals)


def read_matrix(path):
    rows = _read_csv_values(path)
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ConfigError(f"{path}: expected a square matrix")
    return np.array(rows)


def cmd_match(args, out):
    if args.matrices:
        A, B = read_matrix(args.a), read_matrix(args.b)
        if A.shape != B.shape:
            raise ConfigError("matrices have different shapes")
        res = check_normal_bound(A, B)
        d, norm, ratio = res["d"], res["norm"], res["ratio"]
    else:
        la, lb = read_spectrum(args.a), read_spectrum(args.b)
        if la.size != lb.size:
            raise ConfigError(f"spectra have lengths {la.size} and {lb.size}")
        d, norm, ratio = matching_distance(la, lb), None, None
    print(f"d = {fmt(d)}")
    if norm is not None:
        print(f"norm = {fmt(norm)}")
        print(f"ratio = {fmt(ratio)}")
    out.report({"command": "match", "d": d, "norm": norm, "ratio": ratio})
    return {}


def cmd_polyroots(args, out):
    spec = load_spec(args.family)
    P = build_polynomial(spec)
    report = {"command": "polyroots", "family": P.name}
    if args.estimate is not None:
        tol = parse_tolerances(args.tol)
        est = pr.estimate_substitution_order(P, args.estimate, int(tol["order_k_max"]))
        report["order_estimate"] = {"t0": est.t0, "N": est.N, "branches": {str(k): v for k, v in est.branches.items()},
                                    "exponents": est.exponents}
        print(f"N = {est.N}  (t0 = {fmt(est.t0)}, branches + {est.branches[0]}, - {est.branches[1]})")
    if args.substitute is not None:
        t0, N, eps = args.substitute
        try:
            sub = pr.PowerSubstitution(float(t0), int(N), int(eps))
        except ValueError as exc:
            raise ConfigError(f"--substitute: {exc}") from None
        P = pr.substitute_power(P, sub)
        report["substitution"] = {"t0": sub.t0, "N": sub.N, "eps": sub.eps, "domain": list(P.domain)}
    if args.grid is not None or "grid" in spec:
        grid = grid_for(P, args.grid, spec)
        bundle = pr.track_roots(P, grid, real=args.real, refine=args.refine)
        hyper = [bool(pr.hyperbolicity_check(P, t)) for t in grid]
        out.table("curves.csv", *curve_rows(bundle))
        out.events(bundle.events)
        report["grid"] = {"t_lo": grid[0], "t_hi": grid[-1], "points": grid.size}
        report["hyperbolic_everywhere"] = all(hyper)
        report["roots"] = bundle.count
    out.report(report)
    return {}


def example_tables(n_max, alphas, points=101):
    """Segment eigenvalues, Hoelder quotients and eigenvector angles of the glued example."""
    family = fam.paper_example_family(n_max)
    seg_rows, worst = [], 0.0
    for n in range(1, n_max + 1):
        a, r = fam.paper_anchor(n), 1.0 / n ** 2
        offsets = np.linspace(-r, r, points)
        bundle = tr.track_offsets(family, a, offsets).real
        for k, s in enumerate(offsets):
            exact = fam.paper_eigenvalue(n, s)
            err = max(abs(bundle[1, k] - exact), abs(bundle[0, k] + exact)) / exact
            worst = max(worst, err)
            seg_rows.append([n, float(a + s), float(s), float(bundle[0, k]), float(bundle[1, k]), exact, err])
    q_rows = []
    for n in range(1, n_max + 1):
        for al in alphas:
            q = tr.hoelder_quotient(family, 1, fam.paper_anchor(n), fam.paper_s(n), al)
            c = fam.paper_hoelder_quotient(n, al)
            q_rows.append([n, al, q, c, abs(q / c - 1.0)])
    a_rows = []
    for n in range(1, n_max + 1):
        v0 = hermitian_eigen(family.at(fam.paper_anchor(n))).eigenvectors[:, 1]
        v1 = hermitian_eigen(family.at(fam.paper_anchor(n), fam.paper_s(n))).eigenvectors[:, 1]
        ang = math.acos(min(1.0, abs(np.vdot(v0, v1))))
        a_rows.append([n, ang, abs(ang - math.pi / 8)])
    return seg_rows, worst, q_rows, a_rows


def cmd_example(args, out):
    alphas = parse_alpha(args.alpha)
    if not 1 <= args.n_max <= fam.MAX_PAPER_N:
        raise ConfigError(f"--n-max must be in [1, {fam.MAX_PAPER_N}]")
    seg_rows, worst, q_rows, a_rows = example_tables(args.n_max, alphas, args.points)
    out.table("segments.csv", ["n", "t", "s", "lam_minus", "lam_plus", "closed_form", "rel_err"], seg_rows)
    out.table("hoelder.csv", ["n", "alpha", "quotient", "closed_form", "rel_err"], q_rows)
    out.table("angles.csv", ["n", "angle", "deviation_from_pi_over_8"], a_rows)
    print(f"{'n':>3} {'alpha':>6} {'quotient':>24} {'closed form':>24} {'rel err':>10}")
    for n, al, q, c, e in q_rows:
        print(f"{n:>3} {al:>6g} {fmt(q):>24} {fmt(c):>24} {e:>10.2e}")
    qerr = max((r[4] for r in q_rows if r[0] >= 3), default=0.0)
    aerr = max(r[2] for r in a_rows)
    checks = {
        "segment_eigenvalues": {"value": worst, "limit": 1e-10, "ok": worst <= 1e-10},
        "hoelder_quotients": {"value": qerr, "limit": 1e-2, "ok": qerr <= 1e-2},
        "eigenvector_angle": {"value": aerr, "limit": 1e-8, "ok": aerr <= 1e-8},
    }
    out.report({"command": "example", "n_max": args.n_max, "alpha": alphas, "points": args.points,
                "checks": checks})
    return checks


def cmd_diagnose(args, out):
    spec = load_spec(args.family)
    family = build_family(spec)
    grid = grid_for(family, args.grid, spec)
    tol = parse_tolerances(args.tol)
    alphas = parse_alpha(args.alpha)
    bundle = tr.track_eigenvalues(family, grid, refine=args.refine, depth_cap=int(tol["refine_depth"]))
    crossings = tr.crossing_detect(bundle, tol["gap_tol"], int(tol["k_max"]), tol["order_tol"])
    q_rows = []
    anchors = family.metadata.get("anchors")
    if anchors:
        for n, (a, s) in enumerate(zip(anchors, family.metadata["s_n"]), start=1):
            for al in alphas:
                q_rows.append([n, float(a), float(s), al, tr.hoelder_quotient(family, 1, a, s, al)])
        header = ["n", "t", "s", "alpha", "quotient"]
    else:
        h = float(grid[1] - grid[0])
        for rep in crossings:
            k = int(np.argmin(np.abs(grid - rep.t_star)))
            if 0 < k < grid.size - 2:
                for al in alphas:
                    q = max(tr.hoelder_quotient(bundle, i, float(grid[k]), h, al) for i in rep.pair)
                    q_rows.append([k, float(grid[k]), h, al, q])
        header = ["index", "t", "s", "alpha", "quotient"]
    out.table("curves.csv", *curve_rows(bundle))
    out.table("crossings.csv", ["t_star", "t_lo", "t_hi", "i", "j", "gap_min", "order", "infinite_order_suspect"],
              [[r.t_star, r.interval[0], r.interval[1], r.pair[0], r.pair[1], r.gap_min,
                "" if r.order_estimate is None else r.order_estimate, int(r.infinite_order_suspect)]
               for r in crossings])
    out.table("hoelder.csv", header, q_rows)
    out.events(bundle.events + [dict(kind="crossing", **c) for c in _crossing_dicts(crossings)])
    for r in crossings:
        order = "infinite?" if r.infinite_order_suspect else r.order_estimate
        print(f"crossing {r.pair} near t={fmt(r.t_star)}: gap {r.gap_min:.3g}, order {order}")
    checks = _bundle_checks(family, bundle, tol)
    out.report({"command": "diagnose", "family": family.name, "tolerances": tol, "alpha": alphas,
                "crossings": _crossing_dicts(crossings), "checks": checks})
    return checks


# -------------------------------------------------------------------- main


def build_parser():
    p = argparse.ArgumentParser(prog="eigentrack", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, family=True, grid=True):
        if family:
            sp.add_argument("--family", required=True, help="JSON family spec")
        if grid:
            sp.add_argument("--grid", help="lo:hi:n (default: 'grid' in the family spec)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--tol", action="append", metavar="KEY=VALUE", help="tolerance override")
        sp.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True)

    sp = sub.add_parser("track", help="eigenvalue curves and frames")
    common(sp)
    sp.add_argument("--frames", action="store_true", help="also write gauge-fixed eigenvector frames")
    sp.set_defaults(run=cmd_track)

    sp = sub.add_parser("riesz", help="contour projectors along a grid")
    common(sp)
    sp.add_argument("--contour", help="center_re,center_im,radius")
    sp.add_argument("--index", type=int, default=0, help="eigenvalue whose cluster is enclosed when no contour is given")
    sp.set_defaults(run=cmd_riesz)

    sp = sub.add_parser("match", help="matching distance of two spectra")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--matrices", action="store_true", help="inputs are square matrices, not spectra")
    sp.add_argument("--out")
    sp.set_defaults(run=cmd_match)

    sp = sub.add_parser("polyroots", help="root curves of a polynomial family")
    common(sp)
    sp.add_argument("--substitute", nargs=3, metavar=("T0", "N", "EPS"))
    sp.add_argument("--estimate", type=float, metavar="T0", help="estimate the branching order at T0")
    sp.add_argument("--real", action="store_true", help="real roots by Sturm bisection")
    sp.set_defaults(run=cmd_polyroots)

    sp = sub.add_parser("example", help="the glued two-by-two example")
    sp.add_argument("--n-max", type=int, default=8)
    sp.add_argument("--alpha", default="0.25,0.5,1")
    sp.add_argument("--points", type=int, default=101)
    sp.add_argument("--out")
    sp.set_defaults(run=cmd_example)

    sp = sub.add_parser("diagnose", help="tracking, crossing orders and Hoelder sweep")
    common(sp)
    sp.add_argument("--alpha", default="0.25,0.5,1")
    sp.set_defaults(run=cmd_diagnose)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Output(getattr(args, "out", None))
    try:
        checks = args.run(args, out)
        out.flush()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BoundViolated, NotInvariant) as exc:
        print(f"invariant violation: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except EigentrackError as exc:
        print(f"numerical failure: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    failed = [k for k, v in (checks or {}).items() if not v["ok"]]
    if failed:
        print(f"invariant violation: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
