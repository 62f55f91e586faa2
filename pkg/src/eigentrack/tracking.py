"""Continuation of eigenvalue curves and eigenvector frames along the parameter.

Labels are carried from one parameter value to the next by matching each
new eigenvalue multiset against values extrapolated from the last (up to)
three accepted points.  A step is bisected when some curve moved further
than half its distance to the nearest other eigenvalue, since the labeling
is not trustworthy there.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .core_linalg import frobenius_norm, hermitian_eigen, normal_eigen, operator_norm
from .errors import ClusterMismatch, StructureViolation
from .family import STRUCTURE_TOL, structure_defect
from .matching import matching_distance, optimal_permutation

log = logging.getLogger(__name__)

REFINE_DEPTH = 12
REFINE_TRIGGER = 0.5
MERGE_TOL = 1e-9
NOISE_TOL = 1e-12
GAP_TOL = 1e-6
K_MAX = 8
ORDER_TOL = 1e-4
FLAT_TOL = 1e-12
MISMATCH_SIGMA = 0.5
DYNAMIC_RANGE = 1e-14


@dataclass
class CurveBundle:
    """Labeled curves ``curves[i, k] = lam_i(grid[k])``.

    ``vectors[k]`` holds eigenvectors whose columns follow the labels;
    ``frames[k]`` is the gauge-fixed version produced by
    :func:`track_eigenvectors`.
    """

    grid: np.ndarray
    curves: np.ndarray
    scales: np.ndarray
    structure: str = "normal"
    vectors: list | None = None
    frames: list | None = None
    events: list = field(default_factory=list)
    defect_angles: np.ndarray | None = None

    @property
    def count(self):
        return self.curves.shape[0]

    def values_at(self, k):
        return self.curves[:, k]

    def sorted_curves(self):
        """Curves re-ordered ascending (real part, then imaginary) at every point."""
        out = np.empty_like(self.curves)
        for k in range(self.grid.size):
            c = self.curves[:, k]
            out[:, k] = c[np.lexsort((c.imag, c.real))]
        return out


@dataclass(frozen=True)
class CrossingReport:
    t_star: float
    interval: tuple
    pair: tuple
    gap_min: float
    order_estimate: int | None
    infinite_order_suspect: bool = False


# ------------------------------------------------------------ continuation


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    return grid


def _predict(history, x):
    """Lagrange extrapolation through the stored points (constant, linear or quadratic)."""
    ts = [h[0] for h in history]
    out = np.zeros_like(history[-1][1])
    for i, (ti, vi) in enumerate(history):
        w = 1.0
        for j, tj in enumerate(ts):
            if j != i:
                w *= (x - tj) / (ti - tj)
        out = out + w * vi
    return out


def _assign(pred, values):
    """Permutation with ``values[perm[i]]`` assigned to label ``i``.

    When every label's nearest new value is distinct, that assignment already
    attains the bottleneck optimum (no permutation can beat the largest
    nearest-neighbour distance), so the matching search is skipped.
    """
    D = np.abs(pred[:, None] - values[None, :])
    nearest = np.argmin(D, axis=1)
    if np.unique(nearest).size == nearest.size:
        return nearest
    return np.asarray(optimal_permutation(pred, values))


def _isolation(values, tol):
    """Distance from each value to the nearest value farther than ``tol``."""
    D = np.abs(values[:, None] - values[None, :])
    D = np.where(D > tol, D, np.inf)
    return D.min(axis=1) if values.size > 1 else np.full(values.size, np.inf)


def _ranks(values):
    r = np.empty(values.size, dtype=int)
    r[np.argsort(values.real, kind="stable")] = np.arange(values.size)
    return r


def _may_meet(probe, x0, x1, gaps):
    """Whether adjacent sorted values ``k, k+1`` (``k`` in ``gaps``) can coincide on ``[x0, x1]``.

    The smallest such gap is minimized by golden section over offsets from
    ``x0``; it counts as closed when it is no larger than the search
    resolution times the gap slope, or than rounding noise at the minimizer.
    """
    L = x1 - x0
    ks = np.asarray(sorted(gaps), dtype=int)

    def gap(dx):
        w, sc = probe(x0, dx)
        return float(np.min(w[ks + 1] - w[ks])), sc

    g0, _ = gap(0.0)
    g1, _ = gap(L)
    slope = 2.0 * max(g0, g1) / L
    ratio = 0.5 * (math.sqrt(5.0) - 1.0)
    a, b = 0.0, L
    c, d = b - ratio * (b - a), a + ratio * (b - a)
    gc, gd = gap(c)[0], gap(d)[0]
    for _ in range(200):
        if b - a <= 4.0 * np.spacing(L):
            break
        if gc <= gd:
            b, d, gd = d, c, gc
            c = b - ratio * (b - a)
            gc = gap(c)[0]
        else:
            a, c, gc = c, d, gd
            d = a + ratio * (b - a)
            gd = gap(d)[0]
    best = min((g0, 0.0), (g1, L), (gc, c), (gd, d))
    gmin, at = best
    sc = probe(x0, at)[1]
    met = gmin <= max(4.0 * slope * (b - a), NOISE_TOL * sc)
    return met, x0 + at, gmin


def continue_values(evaluate, grid, refine=True, depth_cap=REFINE_DEPTH,
                    trigger=REFINE_TRIGGER, probe=None):
    """Label a sampled multiset-valued function into continuous curves.

    ``evaluate(x, hint)`` returns ``(values, vectors, scale)``; ``hint`` is
    the label-ordered ``vectors`` of the previously accepted point (or None).
    For real-valued curves ``probe(x0, dx)`` may return the ascending values
    at ``x0 + dx`` and a local scale; steps that would reorder curves, or
    that look ambiguous, are then settled by checking whether the curves can
    meet inside the step.
    Returns ``(curves, vectors, scales, events)`` on the original grid points.
    """
    grid = _check_grid(grid)
    events = []
    w0, V0, sc0 = evaluate(float(grid[0]), None)
    w0 = np.asarray(w0, dtype=complex)
    order = np.lexsort((w0.imag, w0.real))
    history = deque([(float(grid[0]), w0[order])], maxlen=3)
    state = {"vec": None if V0 is None else V0[:, order], "top": sc0}

    def settle(x0, x1, w, lab, bad):
        """Order-preserving permutation when no relevant gap can close, else None."""
        prev = history[-1][1]
        r0, r1 = _ranks(prev), _ranks(lab)
        n = lab.size
        gaps = set()
        for i in range(n):
            for j in range(i + 1, n):
                if (r0[i] - r0[j]) * (r1[i] - r1[j]) < 0 and prev[i].real != prev[j].real:
                    gaps.update(range(min(r0[i], r0[j], r1[i], r1[j]), max(r0[i], r0[j], r1[i], r1[j])))
        for i in np.flatnonzero(bad):
            for r in (r0[i], r1[i]):
                gaps.update(k for k in (r - 1, r) if 0 <= k < n - 1)
        if not gaps:
            return None
        met, where, gmin = _may_meet(probe, x0, x1, gaps)
        if met:
            return None
        events.append({"kind": "avoided_crossing", "interval": [x0, x1], "t": where, "gap": gmin})
        return np.argsort(w.real, kind="stable")[r0]

    def advance(x0, x1, depth, cached=None):
        if cached is None:
            w, V, sc = evaluate(x1, state["vec"])
            w = np.asarray(w, dtype=complex)
        else:
            w, V, sc = cached
        ref = max(sc, DYNAMIC_RANGE * state["top"])
        pred = _predict(history, x1)
        perm = _assign(pred, w)
        lab = w[perm]
        err = np.abs(pred - lab)
        gap = _isolation(lab, MERGE_TOL * ref)
        bad = (err > trigger * gap) & (err > NOISE_TOL * ref)
        if probe is not None and lab.size > 1:
            fixed = settle(x0, x1, w, lab, bad)
            if fixed is not None:
                perm = fixed
                lab, bad = w[perm], np.zeros(lab.size, dtype=bool)
        if bad.any():
            mid = 0.5 * (x0 + x1)
            if refine and depth < depth_cap and x0 < mid < x1:
                events.append({"kind": "refinement", "interval": [x0, x1], "depth": depth + 1})
                advance(x0, mid, depth + 1)
                return advance(mid, x1, depth + 1, (w, V, sc))
            events.append({
                "kind": "ambiguity",
                "interval": [x0, x1],
                "depth": depth,
                "labels": np.flatnonzero(bad).tolist(),
            })
            log.warning("labels ambiguous on [%r, %r] at depth %d", x0, x1, depth)
        history.append((x1, lab))
        vec = None if V is None else V[:, perm]
        state["vec"] = vec
        state["top"] = max(state["top"], sc)
        return lab, vec, sc

    curves = [history[0][1]]
    vectors = [state["vec"]]
    scales = [sc0]
    for x0, x1 in zip(grid[:-1], grid[1:]):
        lab, vec, sc = advance(float(x0), float(x1), 0)
        curves.append(lab)
        vectors.append(vec)
        scales.append(sc)
    return np.array(curves).T, vectors, np.array(scales, dtype=float), events


# ------------------------------------------------------------- eigenvalues


def _resolve_structure(family, t):
    """Declared structure, or 'normal' for general families that sample as normal."""
    if family.structure in ("hermitian", "normal"):
        return family.structure
    A = family(t)
    d = structure_defect(A, "normal")
    if d > STRUCTURE_TOL:
        raise StructureViolation(float(t), d, "normal")
    return "normal"


def _eigen_evaluator(family, structure, base=None):
    def evaluate(x, hint):
        A = family(x) if base is None else family.at(base, x)
        d = structure_defect(A, structure)
        if d > STRUCTURE_TOL:
            raise StructureViolation(x if base is None else (base, x), d, structure)
        if structure == "hermitian":
            dec = hermitian_eigen(0.5 * (A + A.conj().T), basis=hint, tol=np.inf)
        else:
            dec = normal_eigen(A, basis=hint, tol=np.inf)
        return np.asarray(dec.eigenvalues, dtype=complex), dec.eigenvectors, frobenius_norm(A)

    return evaluate


def _hermitian_probe(family, base=None):
    def probe(x0, dx):
        A = family.at(x0, dx) if base is None else family.at(base, x0 + dx)
        H = 0.5 * (A + A.conj().T)
        return np.asarray(hermitian_eigen(H, tol=np.inf).eigenvalues), frobenius_norm(A)

    return probe


def track_eigenvalues(family, grid, refine=True, depth_cap=REFINE_DEPTH):
    """Continuous labeling of the eigenvalues of a Hermitian or normal family.

    Raises
    ------
    StructureViolation
        If ``A(t)`` fails the Hermitian/normal check at some evaluated point.
    """
    grid = _check_grid(grid)
    if not (family.contains(grid[0]) and family.contains(grid[-1])):
        raise ValueError(f"grid [{grid[0]}, {grid[-1]}] leaves the domain {family.domain}")
    structure = _resolve_structure(family, grid[0])
    probe = _hermitian_probe(family) if structure == "hermitian" else None
    curves, vectors, scales, events = continue_values(
        _eigen_evaluator(family, structure), grid, refine=refine, depth_cap=depth_cap, probe=probe
    )
    if structure == "hermitian":
        curves = curves.real.astype(complex)
    return CurveBundle(grid, curves, scales, structure, vectors, None, events)


# ------------------------------------------------------------ eigenvectors


def _clusters(values, tol):
    """Connected components of labels whose values lie within ``tol``."""
    n = values.size
    parent = list(range(n))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    D = np.abs(values[:, None] - values[None, :])
    for i, j in zip(*np.nonzero(np.triu(D <= tol, 1))):
        parent[root(i)] = root(j)
    groups = {}
    for i in range(n):
        groups.setdefault(root(i), []).append(i)
    return sorted(groups.values())


def _procrustes(F_prev, V, values, tol):
    """Gauge ``V`` per cluster to be closest to ``F_prev``; also the smallest singular value."""
    F = np.empty_like(V)
    sigma = 1.0
    for C in _clusters(values, tol):
        M = V[:, C].conj().T @ F_prev[:, C]
        U, S, Wh = np.linalg.svd(M)
        F[:, C] = V[:, C] @ (U @ Wh)
        sigma = min(sigma, float(S.min()))
    return F, sigma


def track_eigenvectors(family, bundle, refine=True, depth_cap=REFINE_DEPTH):
    """Add gauge-fixed eigenvector frames to ``bundle``.

    Within every cluster of (numerically) equal eigenvalues the new frame is
    the unitary rotation of the fresh eigenvectors closest to the previous
    frame (orthogonal Procrustes).  ``defect_angles[k]`` is the largest
    principal angle between consecutive matched blocks.
    """
    if bundle.vectors is None or any(v is None for v in bundle.vectors):
        raise ValueError("bundle carries no eigenvectors")
    structure = bundle.structure
    evaluate = _eigen_evaluator(family, structure)
    events = list(bundle.events)

    def align(F_prev, x0, vals0, x1, vals1, V1, scale, depth):
        F, sigma = _procrustes(F_prev, V1, vals1, MERGE_TOL * scale)
        if sigma >= MISMATCH_SIGMA:
            return F, sigma
        mid = 0.5 * (x0 + x1)
        if not (refine and depth < depth_cap and x0 < mid < x1):
            raise ClusterMismatch(
                (x0, x1), f"eigenvector blocks rotate past {math.degrees(math.acos(sigma)):.1f} deg on [{x0!r}, {x1!r}]"
            )
        events.append({"kind": "frame_refinement", "interval": [x0, x1], "depth": depth + 1})
        w, V, sc = evaluate(mid, F_prev)
        perm = _assign(0.5 * (vals0 + vals1), w)
        vm, Vm = w[perm], V[:, perm]
        Fm, s1 = align(F_prev, x0, vals0, mid, vm, Vm, sc, depth + 1)
        F, s2 = align(Fm, mid, vm, x1, vals1, V1, scale, depth + 1)
        return F, min(s1, s2)

    g = bundle.grid
    frames = [_procrustes(bundle.vectors[0], bundle.vectors[0], bundle.curves[:, 0], 0.0)[0]]
    angles = [0.0]
    for k in range(1, g.size):
        F, sigma = align(
            frames[-1], float(g[k - 1]), bundle.curves[:, k - 1],
            float(g[k]), bundle.curves[:, k], bundle.vectors[k], bundle.scales[k], 0,
        )
        frames.append(F)
        angles.append(math.acos(min(1.0, sigma)))
        log.debug("t=%r frame defect angle %.3g", g[k], angles[-1])
    return replace(bundle, frames=frames, events=events, defect_angles=np.array(angles))


def frame_residuals(family, bundle):
    """Largest ``||A u - lam u|| / ||A||_F`` over frame columns, per grid point."""
    frames = bundle.frames if bundle.frames is not None else bundle.vectors
    out = []
    for k, t in enumerate(bundle.grid):
        A = family(t)
        F = frames[k]
        r = np.linalg.norm(A @ F - F * bundle.curves[:, k], axis=0)
        out.append(float(r.max() / (frobenius_norm(A) or 1.0)))
    return np.array(out)


# --------------------------------------------------------------- crossings


def _runs(mask):
    runs = []
    k = 0
    while k < mask.size:
        if mask[k]:
            j = k
            while j + 1 < mask.size and mask[j + 1]:
                j += 1
            runs.append((k, j))
            k = j + 1
        else:
            k += 1
    return runs


def _contact_order(t, g, m, k_max, order_tol, floor):
    """Vanishing order of ``g`` near ``t[m]`` from a polynomial fit on a centered stencil.

    ``None`` when no Taylor coefficient up to ``k_max`` is significant, or
    when ``g`` is below ``floor`` on the whole stencil.
    """
    K = t.size
    half = k_max // 2 + 1
    lo = max(0, min(m - half, K - (2 * half + 1)))
    hi = min(K, lo + 2 * half + 1)
    ts, gs = t[lo:hi], g[lo:hi]
    norm = float(np.max(np.abs(gs)))
    if norm <= floor or ts.size < 2:
        return None, float(t[m])
    radius = float(np.max(np.abs(ts - t[m])))
    u = (ts - t[m]) / radius
    deg = min(k_max, ts.size - 1)
    p = (
        np.polynomial.Polynomial.fit(u, gs.real, deg, domain=[-1, 1], window=[-1, 1])
        + 1j * np.polynomial.Polynomial.fit(u, gs.imag, deg, domain=[-1, 1], window=[-1, 1])
    )
    if abs(g[m]) <= FLAT_TOL * norm:
        u_star = 0.0
    else:
        probe = np.linspace(max(-1.0, u.min()), min(1.0, u.max()), 2001)
        u_star = float(probe[np.argmin(np.abs(p(probe)))])
    reach = float(np.max(np.abs(u - u_star)))
    q = p
    fact = 1.0
    for j in range(1, deg + 1):
        q = q.deriv()
        fact *= j
        if abs(q(u_star)) / fact * reach ** j / norm >= order_tol:
            return j, float(t[m] + u_star * radius)
    return None, float(t[m] + u_star * radius)


def crossing_detect(bundle, gap_tol=GAP_TOL, k_max=K_MAX, order_tol=ORDER_TOL):
    """Near-meetings of curve pairs with an estimate of their contact order."""
    t = bundle.grid
    C = bundle.curves
    scale = float(np.max(bundle.scales)) if bundle.scales.size else 1.0
    scale = scale if scale > 0 else 1.0
    reports = []
    N = C.shape[0]
    for i in range(N):
        for j in range(i + 1, N):
            g = C[i] - C[j]
            a = np.abs(g)
            mask = a < gap_tol * scale
            if mask.all():
                continue
            runs = _runs(mask)
            # real curves that swap order between samples cross in between
            re = g.real
            flips = np.flatnonzero((re[:-1] * re[1:] < 0) & ~mask[:-1] & ~mask[1:])
            runs += [(int(k), int(k) + 1) for k in flips]
            for r0, r1 in sorted(runs):
                seg = a[r0:r1 + 1]
                ties = np.flatnonzero(seg == seg.min())
                m = r0 + int(ties[len(ties) // 2])
                order, t_star = _contact_order(t, g, m, k_max, order_tol, FLAT_TOL * scale)
                gap_min = float(a[m])
                interval = (float(t[max(r0 - 1, 0)]), float(t[min(r1 + 1, t.size - 1)]))
                suspect = order is None and gap_min <= FLAT_TOL * scale
                reports.append(CrossingReport(t_star, interval, (i, j), gap_min, order, suspect))
    reports.sort(key=lambda r: (r.t_star, r.pair))
    return reports


# ------------------------------------------------------------- diagnostics


def track_offsets(family, t, offsets, refine=True):
    """Labeled eigenvalue curves of ``s -> A(t + s)`` on increasing ``offsets``.

    Offsets go through :meth:`MatrixFamily.at`, so steps far below the
    floating-point spacing at ``t`` are resolved when the family allows it.
    """
    structure = _resolve_structure(family, t)
    probe = _hermitian_probe(family, base=t) if structure == "hermitian" else None
    curves, _, _, _ = continue_values(_eigen_evaluator(family, structure, base=t), offsets,
                                      refine=refine, probe=probe)
    return curves


def hoelder_quotient(source, index, t, s, alpha, derivative=None, step=None):
    """``|lam'(t + s) - lam'(t)| / s**alpha`` for curve ``index``.

    ``source`` is a family (evaluated at offsets from ``t`` so that tiny
    ``s`` survive rounding), a scalar callable ``lam(x)``, or a
    :class:`CurveBundle` whose grid contains ``t`` and ``t + s``.  The
    derivative is a central difference with step ``step`` (default
    ``s / 100``) unless ``derivative`` supplies it in closed form.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    if derivative is not None:
        return abs(derivative(t + s) - derivative(t)) / s ** alpha
    d = 1e-2 * s if step is None else float(step)
    if isinstance(source, CurveBundle):
        g = source.grid
        ks = []
        for x in (t, t + s):
            k = int(np.argmin(np.abs(g - x)))
            if abs(g[k] - x) > 1e-12 * max(1.0, abs(x)) or k == 0 or k == g.size - 1:
                raise ValueError(f"{x!r} is not an interior grid point")
            ks.append(k)
        c = source.curves[index]
        der = [(c[k + 1] - c[k - 1]) / (g[k + 1] - g[k - 1]) for k in ks]
        return float(abs(der[1] - der[0]) / s ** alpha)
    if callable(source) and not hasattr(source, "at"):
        lam = source
        d0 = (lam(t + d) - lam(t - d)) / (2 * d)
        d1 = (lam(t + s + d) - lam(t + s - d)) / (2 * d)
        return float(abs(d1 - d0) / s ** alpha)
    inner = np.linspace(d, s - d, 17) if s > 2 * d else np.array([])
    offsets = np.unique(np.concatenate([[-d, 0.0, d], inner, [s - d, s, s + d]]))
    c = track_offsets(source, t, offsets)[index]
    at = {float(x): c[i] for i, x in enumerate(offsets)}
    d0 = (at[d] - at[-d]) / (2 * d)
    d1 = (at[s + d] - at[s - d]) / (2 * d)
    return float(abs(d1 - d0) / s ** alpha)


@dataclass
class SmoothnessComparison:
    grid: np.ndarray
    sorted_curves: np.ndarray
    tracked_curves: np.ndarray
    jumps: list
    identical: bool


def derivative_jumps(grid, curves):
    """``max_i |D+ lam_i - D- lam_i|`` at every interior grid point."""
    h = np.diff(grid)
    D = np.diff(curves, axis=1) / h
    return np.max(np.abs(D[:, 1:] - D[:, :-1]), axis=0)


def sorted_vs_smooth(bundle, crossings=None):
    """Compare ascending-sorted curves with tracked curves at the crossings.

    ``jumps`` lists, per crossing, the nearest grid point and the
    first-divided-difference jumps of both curve sets there.
    """
    S = bundle.sorted_curves()
    T = bundle.curves
    if crossings is None:
        crossings = crossing_detect(bundle)
    js = derivative_jumps(bundle.grid, S)
    jt = derivative_jumps(bundle.grid, T)
    jumps = []
    for rep in crossings:
        k = int(np.argmin(np.abs(bundle.grid - rep.t_star)))
        k = min(max(k, 1), bundle.grid.size - 2)
        jumps.append({
            "t": float(bundle.grid[k]),
            "pair": list(rep.pair),
            "sorted_jump": float(js[k - 1]),
            "tracked_jump": float(jt[k - 1]),
        })
    perm = np.lexsort((T[:, 0].imag, T[:, 0].real))
    identical = bool(np.array_equal(T[perm], S))
    return SmoothnessComparison(bundle.grid, S, T, jumps, identical)


def lipschitz_ratios(family, grid):
    """``d(spec A(t_k), spec A(t_k+1)) / ||A(t_k) - A(t_k+1)||`` on consecutive grid points."""
    grid = _check_grid(grid)
    structure = _resolve_structure(family, grid[0])
    ev = _eigen_evaluator(family, structure)
    mats = [family(t) for t in grid]
    spec = [ev(float(t), None)[0] for t in grid]
    out = []
    for k in range(grid.size - 1):
        norm = operator_norm(mats[k + 1] - mats[k])
        d = matching_distance(spec[k], spec[k + 1])
        out.append(0.0 if norm == 0.0 else d / norm)
    return np.array(out)
