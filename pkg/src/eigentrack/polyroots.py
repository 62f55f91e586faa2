"""Curves of monic polynomials, their roots, and power substitutions.

Coefficients follow the sign convention

    P(t)(x) = x^n - a_1(t) x^(n-1) + a_2(t) x^(n-2) - ... + (-1)^n a_n(t),

so ``a_1`` is the sum of the roots and ``a_n`` their product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ExponentUnresolved, NotHyperbolic
from .matching import matching_distance, optimal_permutation
from .tracking import CurveBundle, continue_values

NEWTON_STEPS = 3
STURM_TOL = 1e-10
CLUSTER_TOL = 1e-4
STEPS = (1e-2, 1e-3, 1e-4)
K_MAX = 12
FIT_TOL = 1e-2
DIAMETER_FLOOR = 1e-10


def _as_poly(c):
    if isinstance(c, Polynomial):
        return c
    return Polynomial(np.atleast_1d(np.asarray(c, dtype=complex if np.iscomplexobj(c) else float)))


@dataclass(frozen=True)
class PolynomialFamily:
    """``t -> P(t)`` with coefficient polynomials ``a_1(t), ..., a_n(t)``."""

    coefficients: tuple
    domain: tuple = (-1.0, 1.0)
    name: str = "polynomial"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        coeffs = tuple(_as_poly(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("need at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError(f"empty domain {self.domain!r}")

    @property
    def degree(self):
        return len(self.coefficients)

    def a(self, t):
        """Values ``a_1(t), ..., a_n(t)``."""
        return np.array([c(t) for c in self.coefficients])

    def at(self, t, dt=0.0):
        """Descending monic coefficients of ``P(t + dt)``; ``dt`` may be far below ``ulp(t)``."""
        if dt == 0.0:
            vals = self.a(float(t))
        else:
            shift = Polynomial([float(t), 1.0])
            vals = np.array([c(shift)(dt) for c in self.coefficients])
        signs = (-1.0) ** np.arange(1, self.degree + 1)
        return np.concatenate([[1.0], signs * vals])

    def __call__(self, t):
        return self.at(t)

    def contains(self, t):
        return self.domain[0] <= t <= self.domain[1]

    @classmethod
    def from_monic(cls, lower, **kw):
        """From the ordinary coefficients ``x^n + b_1 x^(n-1) + ... + b_n`` (``b_k`` polynomials in t)."""
        polys = [_as_poly(b) for b in lower]
        return cls(tuple(((-1) ** k) * p for k, p in enumerate(polys, start=1)), **kw)

    @classmethod
    def from_roots(cls, roots, **kw):
        """``prod (x - r_j(t))`` for root polynomials ``r_j``."""
        prod = [Polynomial([1.0])]  # descending in x
        for r in roots:
            r = _as_poly(r)
            nxt = prod + [Polynomial([0.0])]
            for k in range(1, len(nxt)):
                nxt[k] = nxt[k] - r * prod[k - 1]
            prod = nxt
        return cls.from_monic(prod[1:], **kw)


@dataclass(frozen=True)
class PowerSubstitution:
    """``s -> t0 + (-1)^eps s^N``."""

    t0: float
    N: int
    eps: int = 0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.eps not in (0, 1):
            raise ValueError("eps must be 0 or 1")

    def __call__(self, s):
        return self.t0 + (-1) ** self.eps * s ** self.N


@dataclass(frozen=True)
class OrderEstimate:
    """Branching order at ``t0``: ``N`` covers both sides, ``branches[eps]`` each side."""

    t0: float
    N: int
    branches: dict
    exponents: list

    def substitution(self, eps=0):
        return PowerSubstitution(self.t0, self.branches[eps], eps)


# ------------------------------------------------------------------ Sturm


def _trim(c, tol):
    """Drop leading (descending) coefficients that are negligible."""
    c = np.asarray(c, dtype=float)
    k = 0
    while k < c.size - 1 and abs(c[k]) <= tol:
        k += 1
    return c[k:]


def sturm_sequence(coeffs, tol=STURM_TOL):
    """Sturm chain of a real polynomial (descending coefficients)."""
    p0 = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    seq = [p0, np.polyder(p0)]
    while seq[-1].size > 1:
        a, b = seq[-2], seq[-1]
        q, r = np.polydiv(a, b)
        # size of the terms that cancelled; positive rescaling keeps sign counts
        ref = max(np.max(np.abs(a)), np.max(np.abs(q)) * np.max(np.abs(b)))
        r = _trim(-r, tol * ref)
        if r.size == 1 and abs(r[0]) <= tol * ref:
            break
        seq.append(r / np.max(np.abs(r)))
    return seq


def _variations(seq, x):
    vals = [np.polyval(p, x) for p in seq]
    signs = [v for v in vals if v != 0.0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a * b < 0)


def _root_bound(seq):
    bound = 0.0
    for p in seq:
        if p.size > 1:
            bound = max(bound, 1.0 + float(np.max(np.abs(p[1:] / p[0]))))
    return max(bound, 1.0)


def _counting_chain(seq):
    """Sturm chain of the square-free part ``p / gcd(p, p')``.

    The full chain vanishes identically at a multiple root, which breaks
    the variation count there; the square-free chain does not.
    """
    g = seq[-1]
    if g.size <= 1:
        return seq
    q, _ = np.polydiv(seq[0], g)
    return sturm_sequence(q / q[0])


def _squarefree_degree(seq):
    """Degree of the square-free part: ``n - deg gcd(p, p')``."""
    last = seq[-1]
    return seq[0].size - 1 - (last.size - 1)


def hyperbolicity_check(P, t, tol=STURM_TOL):
    """True iff every root of ``P(t)`` is real (Sturm count over a root bound)."""
    c = P.at(t) if isinstance(P, PolynomialFamily) else np.asarray(P)
    if np.iscomplexobj(c):
        if np.any(np.abs(np.imag(c)) > tol * np.max(np.abs(c))):
            return False
        c = np.real(c)
    if _hyperbolic_at(c, tol):
        return True
    c = np.trim_zeros(np.asarray(c, dtype=float), "f")
    return _loose_real_roots(c, tol) is not None


def _hyperbolic_at(c, tol):
    seq = sturm_sequence(c, tol)
    chain = _counting_chain(seq)
    B = _root_bound(seq)
    real_distinct = _variations(chain, -B) - _variations(chain, B)
    return real_distinct == _squarefree_degree(seq)


def _newton(coeffs, roots, steps=NEWTON_STEPS):
    d = np.polyder(coeffs)
    out = np.array(roots, dtype=complex)
    for _ in range(steps):
        f = np.polyval(coeffs, out)
        df = np.polyval(d, out)
        ok = df != 0
        trial = out.copy()
        trial[ok] = out[ok] - f[ok] / df[ok]
        better = np.abs(np.polyval(coeffs, trial)) < np.abs(f)
        out = np.where(better, trial, out)
    return out


def _shrink(seq, a, b, va):
    """Narrow an interval isolating one simple root of ``seq[0]`` to machine width."""
    q = seq[0]
    fa, fb = np.polyval(q, a), np.polyval(q, b)
    plain = fa * fb < 0  # a sign change of q brackets the root; else count on the chain
    for _ in range(200):
        m = 0.5 * (a + b)
        if not a < m < b:
            break
        if plain:
            fm = np.polyval(q, m)
            if fm == 0:
                return m, m
            if (fm < 0) == (fa < 0):
                a, fa = m, fm
            else:
                b = m
        else:
            vm = _variations(seq, m)
            if va - vm >= 1:
                b = m
            else:
                a, va = m, vm
    return a, b


def _distinct_real_roots(seq):
    B = _root_bound(seq)
    seq = _counting_chain(seq)
    roots = []
    stack = [(-B, B, _variations(seq, -B), _variations(seq, B))]
    while stack:
        a, b, va, vb = stack.pop()
        count = va - vb
        if count <= 0:
            continue
        mid = 0.5 * (a + b)
        if count == 1 or not a < mid < b or b - a <= 4 * np.spacing(max(abs(a), abs(b))):
            if count == 1:
                a, b = _shrink(seq, a, b, va)
            roots.extend([0.5 * (a + b)] * count)
            continue
        vm = _variations(seq, mid)
        stack.append((mid, b, vm, vb))
        stack.append((a, mid, va, vm))
    return sorted(roots)


def _multiplicities(coeffs, distinct, nodes=32):
    """Root counts in small circles about each distinct root (argument principle)."""
    if not distinct:
        return None
    r = np.asarray(distinct, dtype=float)
    d = np.polyder(coeffs)
    w = np.exp(2j * np.pi * (np.arange(nodes) + 0.5) / nodes)
    out = []
    for i, x in enumerate(r):
        others = np.abs(np.delete(r, i) - x)
        rho = 0.4 * (others.min() if others.size else 1.0 + abs(x))
        z = x + rho * w
        pz = np.polyval(coeffs, z)
        if np.any(pz == 0):
            return None
        m = np.mean((z - x) * np.polyval(d, z) / pz)
        k = int(round(m.real))
        if k < 1 or abs(m - k) > 0.25:
            return None
        out.append(k)
    return out


def _newton_multiple(coeffs, roots, mult, steps=NEWTON_STEPS):
    """Newton steps ``x - m p/p'``, kept only where they reduce ``|p|``."""
    d = np.polyder(coeffs)
    m = np.asarray(mult, dtype=float)
    out = roots.astype(float)
    for _ in range(steps):
        f, df = np.polyval(coeffs, out), np.polyval(d, out)
        ok = df != 0
        trial = out.copy()
        trial[ok] = out[ok] - m[ok] * f[ok] / df[ok]
        out = np.where(np.abs(np.polyval(coeffs, trial)) < np.abs(f), trial, out)
    return out


def real_roots(coeffs, tol=STURM_TOL):
    """All real roots, with multiplicity, by Sturm bisection (ascending).

    A multiple root leaves a Euclidean remainder that vanishes only up to
    amplified rounding.  When the cutoff ``tol`` misses some roots, looser
    cutoffs are tried; one is accepted only if its roots agree with the
    companion roots to the rounding sensitivity of their multiplicity.
    """
    coeffs = np.trim_zeros(np.real(np.asarray(coeffs)).astype(float), "f")
    if coeffs.size <= 1:
        return np.array([])
    out = _real_roots_at(coeffs, tol)
    if out.size < coeffs.size - 1:
        loose = _loose_real_roots(coeffs, tol)
        if loose is not None:
            return loose
    return out


def _loose_real_roots(coeffs, tol):
    for k in range(1, 5):
        out = _real_roots_at(coeffs, tol * 10.0 ** k)
        if out.size == coeffs.size - 1 and _near_companion(coeffs, out):
            return out
    return None


def _near_companion(coeffs, out):
    _, counts = np.unique(out, return_counts=True)
    m = int(counts.max())
    bound = 100.0 * np.finfo(float).eps ** (1.0 / m) * max(1.0, float(np.max(np.abs(out))))
    return matching_distance(out, companion_roots(coeffs)) <= bound


def _real_roots_at(coeffs, tol):
    seq = sturm_sequence(coeffs, tol)
    distinct = _distinct_real_roots(seq)
    g = seq[-1]
    if g.size <= 1:
        out = np.array(distinct)
    elif (mult := _multiplicities(coeffs, distinct)) is not None and sum(mult) - len(mult) == g.size - 1:
        out = np.repeat(_newton_multiple(coeffs, np.array(distinct), mult), mult)
    else:
        inner = _real_roots_at(g / g[0], tol)
        scale = max(1.0, float(np.max(np.abs(distinct))) if distinct else 1.0)
        out = []
        for r in distinct:
            extra = int(np.sum(np.abs(inner - r) <= CLUSTER_TOL * scale)) if inner.size else 0
            out.extend([r] * (1 + extra))
        out = np.array(out)
    if out.size and g.size <= 1:
        out = np.real(_newton(coeffs, out))
    return np.sort(out)


def companion_roots(coeffs):
    """Companion-matrix eigenvalues polished by guarded Newton steps."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "f")
    n = c.size - 1
    if n < 1:
        return np.array([], dtype=complex)
    c = c / c[0]
    C = np.zeros((n, n), dtype=complex)
    C[0, :] = -c[1:]
    C[np.arange(1, n), np.arange(n - 1)] = 1.0
    r = np.linalg.eigvals(C)
    r = _newton(c, r)
    if not np.iscomplexobj(coeffs) or not np.any(np.imag(coeffs)):
        # conjugate pairs stay exact pairs; tiny imaginary noise on real roots is dropped
        r = np.where(np.abs(r.imag) <= 1e-12 * max(1.0, float(np.max(np.abs(r)))), r.real, r)
    return r[np.lexsort((r.imag, r.real))]


def roots(P, t, real=False):
    c = P.at(t)
    if real:
        if not hyperbolicity_check(P, t):
            raise NotHyperbolic(t)
        return real_roots(c).astype(complex)
    return companion_roots(c)


def _scale(values):
    m = float(np.max(np.abs(values))) if values.size else 0.0
    return m if m > 0.0 else 1.0


def track_roots(P, grid, real=False, refine=True):
    """Continuous labeling of the roots of ``P(t)`` along ``grid``.

    ``real=True`` uses Sturm bisection and raises :class:`NotHyperbolic`
    where a root leaves the real line.
    """
    grid = np.asarray(grid, dtype=float)

    def evaluate(x, hint):
        r = roots(P, x, real)
        return r, None, _scale(r)

    probe = None
    if real:
        def probe(x0, dx):
            r = real_roots(P.at(x0, dx))
            return r, _scale(r)

    curves, _, scales, events = continue_values(evaluate, grid, refine=refine, probe=probe)
    if real:
        curves = curves.real.astype(complex)
    return CurveBundle(grid, curves, scales, "hermitian" if real else "normal", None, None, events)


# ----------------------------------------------------- power substitution


def substitute_power(P, sub):
    """The family ``s -> P(t0 + (-1)^eps s^N)``, recomposed exactly."""
    N, t0, sign = int(sub.N), float(sub.t0), (-1.0) ** sub.eps
    inner = Polynomial([t0] + [0.0] * (N - 1) + [sign])
    coeffs = tuple(c(inner) for c in P.coefficients)
    lo, hi = P.domain
    reach_pos = (hi - t0) if sign > 0 else (t0 - lo)
    reach_neg = (t0 - lo) if sign > 0 else (hi - t0)
    r_pos = max(reach_pos, 0.0) ** (1.0 / N)
    if N % 2 == 0:
        r_neg = r_pos
    else:
        r_neg = max(reach_neg, 0.0) ** (1.0 / N)
    if r_pos + r_neg <= 0.0:
        raise ValueError("substitution point leaves no domain")
    return PolynomialFamily(coeffs, domain=(-r_neg, r_pos), name=f"{P.name}[t={t0}{'+' if sign > 0 else '-'}s^{N}]",
                            metadata={"substitution": sub})


def _clusters_at(values, tol):
    """Single-linkage clusters of ``values`` as lists of indices."""
    n = values.size
    label = list(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol and label[j] != label[i]:
                old = label[j]
                label = [label[i] if x == old else x for x in label]
    groups = {}
    for i, g in enumerate(label):
        groups.setdefault(g, []).append(i)
    return sorted(groups.values())


def branching_order(values_at, t0, k_max=K_MAX, steps=STEPS):
    """Branching order of a multiset-valued function near ``t0``.

    ``values_at(dt)`` returns the multiset at ``t0 + dt``.  Around every
    cluster of coincident values at ``t0`` the cluster diameter is fitted as
    ``C h^(p/q)`` over the step sizes; the order for each side is the least
    common multiple of the denominators ``q``.
    """
    base = np.asarray(values_at(0.0), dtype=complex)
    scale = _scale(base)
    clusters = _clusters_at(base, CLUSTER_TOL * max(1.0, scale))
    groups = [g for g in clusters if len(g) > 1]
    # every value is tracked to its cluster center; members keep cluster order
    centers = np.array([base[g].mean() for g in clusters for _ in g])
    member = [i for g in clusters for i in g]
    branches, exponents = {}, []
    for eps in (0, 1):
        sign = (-1.0) ** eps
        diam = {tuple(g): [] for g in groups}
        for h in steps:
            vals = np.asarray(values_at(sign * h), dtype=complex)
            perm = optimal_permutation(centers, vals)
            owner = {member[i]: vals[perm[i]] for i in range(len(member))}
            for g in groups:
                v = np.array([owner[i] for i in g])
                diam[tuple(g)].append(float(np.max(np.abs(v[:, None] - v[None, :]))))
        N = 1
        for g in groups:
            d = np.array(diam[tuple(g)])
            keep = d > DIAMETER_FLOOR * max(1.0, scale)
            if keep.sum() < 2:
                continue
            x = np.log(np.asarray(steps)[keep])
            y = np.log(d[keep])
            slope, icpt = np.polyfit(x, y, 1)
            resid = float(np.max(np.abs(y - (slope * x + icpt))))
            frac = Fraction(float(slope)).limit_denominator(k_max)
            if resid > FIT_TOL or abs(float(frac) - slope) > FIT_TOL:
                raise ExponentUnresolved(
                    f"cluster {g} at t0={t0!r} side {'+-'[eps]}: exponent {slope:.4f}, "
                    f"log residual {resid:.2e}"
                )
            exponents.append({"eps": eps, "cluster": list(g), "exponent": float(slope),
                              "rational": f"{frac.numerator}/{frac.denominator}"})
            N = N * frac.denominator // math.gcd(N, frac.denominator)
        branches[eps] = N
    N = branches[0] * branches[1] // math.gcd(branches[0], branches[1])
    return OrderEstimate(float(t0), N, branches, exponents)


def estimate_substitution_order(P, t0, k_max=K_MAX, steps=STEPS):
    """Branching order ``N`` of the roots of ``P`` at ``t0`` (heuristic log-log fit)."""
    return branching_order(lambda dt: companion_roots(P.at(t0, dt)), t0, k_max, steps)


def eigenvalue_branching_order(family, t0, k_max=K_MAX, steps=STEPS):
    """Same estimate taken directly on the eigenvalues of ``family`` near ``t0``."""
    return branching_order(lambda dt: np.linalg.eigvals(family.at(t0, dt)), t0, k_max, steps)


# ------------------------------------------------------------ charpoly


def charpoly(A):
    """``(a_1, ..., a_n)`` of ``det(x - A)`` by the Faddeev-LeVerrier recurrence."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    c = np.zeros(n + 1, dtype=complex)
    c[n] = 1.0
    M = np.zeros_like(A)
    I = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + c[n - k + 1] * I
        c[n - k] = -np.trace(A @ M) / k
    a = np.array([(-1) ** k * c[n - k] for k in range(1, n + 1)])
    if not np.any(a.imag):
        return tuple(float(x) for x in a.real)
    return tuple(complex(x) for x in a)


def charpoly_family(family, degree):
    """Characteristic polynomials of a family whose entries are polynomials of degree ``<= degree``.

    The coefficient ``a_k`` has degree at most ``k * degree``; it is recovered
    exactly (up to rounding) by interpolation at Chebyshev points.
    """
    n = family.size
    m = n * degree + 1
    lo, hi = family.domain
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(np.pi * (np.arange(m) + 0.5) / m)
    vals = np.array([charpoly(family(t)) for t in nodes])
    coeffs = []
    for k in range(n):
        y = vals[:, k]
        if np.iscomplexobj(y) and np.any(np.abs(y.imag) > 0):
            p = Polynomial.fit(nodes, y.real, m - 1).convert() + 1j * Polynomial.fit(nodes, y.imag, m - 1).convert()
        else:
            p = Polynomial.fit(nodes, np.real(y), m - 1).convert()
        coeffs.append(p.trim(1e-12 * max(1.0, float(np.max(np.abs(p.coef))))))
    return PolynomialFamily(tuple(coeffs), domain=family.domain, name=f"charpoly({family.name})")
