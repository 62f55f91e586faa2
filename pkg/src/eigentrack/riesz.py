"""Resolvents, contour-quadrature spectral projectors and local frames.

The projector onto the eigenvalues enclosed by a closed curve ``gamma`` is

    P = -1/(2 pi i) * integral over gamma of (A - z)^-1 dz.

On a circle the integrand is periodic and analytic in the angle, so the
trapezoid rule converges geometrically; node counts are doubled (reusing
the previous nodes) until successive projectors agree.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core_linalg import (
    frobenius_norm,
    gram_schmidt,
    hermitian_eigen,
    lu_factor,
    lu_solve_factored,
    normal_eigen,
    operator_norm,
)
from .errors import (
    ContourBreach,
    EigenvalueOnContour,
    NotInvariant,
    QuadratureStall,
    RankDeficient,
    Singular,
    SpectrumHit,
)

log = logging.getLogger(__name__)

RESOLVENT_TOL = 1e-10
CONTOUR_CLEARANCE = 1e-8
QUAD_TOL = 1e-10
NODE_CAP = 4096
IDEMPOTENCY_TOL = 1e-8
RESTART_THRESHOLD = 1e-6
INVARIANCE_TOL = 1e-8

# 8-point Gauss-Legendre rule on [-1, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _segments_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b - a).real * (c - a).imag - (b - a).imag * (c - a).real)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 * o2 < 0 and o3 * o4 < 0


def _point_segment_distance(z, a, b):
    d = b - a
    u = np.clip(((z - a) * np.conj(d)).real / (abs(d) ** 2), 0.0, 1.0)
    return abs(z - (a + u * d))


@dataclass(frozen=True)
class Contour:
    """Closed curve: a circle (``center``, ``radius``) or a simple polygon (``vertices``)."""

    kind: str = "circle"
    center: complex = 0j
    radius: float = 1.0
    vertices: tuple = ()
    node_count: int = 16

    def __post_init__(self):
        n = self.node_count
        if n < 16 or n & (n - 1):
            raise ValueError("node_count must be a power of two >= 16")
        if self.kind == "circle":
            if not self.radius > 0:
                raise ValueError("radius must be positive")
        elif self.kind == "polygon":
            v = [complex(x) for x in self.vertices]
            if len(v) < 3:
                raise ValueError("polygon needs at least 3 vertices")
            object.__setattr__(self, "vertices", tuple(v))
            m = len(v)
            for i in range(m):
                for j in range(i + 1, m):
                    if j == i + 1 or (i == 0 and j == m - 1):
                        continue
                    if _segments_intersect(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m]):
                        raise ValueError("polygon is not simple")
            area = sum((v[i].conjugate() * v[(i + 1) % m]).imag for i in range(m))
            if area == 0:
                raise ValueError("degenerate polygon")
            if area < 0:
                object.__setattr__(self, "vertices", tuple(reversed(v)))
        else:
            raise ValueError(f"unknown contour kind {self.kind!r}")

    @classmethod
    def circle(cls, center, radius, node_count=16):
        return cls("circle", complex(center), float(radius), (), node_count)

    @classmethod
    def polygon(cls, vertices, node_count=16):
        return cls("polygon", 0j, 1.0, tuple(vertices), node_count)

    def distance(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "circle":
            return np.abs(np.abs(z - self.center) - self.radius)
        v = self.vertices
        return np.min(
            [_point_segment_distance(z, v[i], v[(i + 1) % len(v)]) for i in range(len(v))],
            axis=0,
        )

    def encloses(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "circle":
            return np.abs(z - self.center) < self.radius
        inside = np.zeros(z.shape, dtype=bool)
        v = self.vertices
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            crosses = (a.imag > z.imag) != (b.imag > z.imag)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = a.real + (z.imag - a.imag) * (b.real - a.real) / (b.imag - a.imag)
            inside ^= crosses & (z.real < xint)
        return inside

    def quadrature(self, level):
        """Nodes ``z`` and weights ``dz`` at refinement ``level`` (0 = base)."""
        if self.kind == "circle":
            N = self.node_count << level
            theta = 2.0 * np.pi * np.arange(N) / N
            e = np.exp(1j * theta)
            return self.center + self.radius * e, 1j * self.radius * e * (2.0 * np.pi / N)
        pieces = max(1, self.node_count // (8 * len(self.vertices))) << level
        zs, ws = [], []
        v = self.vertices
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            for k in range(pieces):
                p = a + (b - a) * k / pieces
                q = a + (b - a) * (k + 1) / pieces
                zs.append(0.5 * (p + q) + 0.5 * (q - p) * _GL_X)
                ws.append(0.5 * (q - p) * _GL_W)
        return np.concatenate(zs), np.concatenate(ws)


@dataclass
class Projector:
    matrix: np.ndarray
    rank: int
    idempotency_defect: float
    hermitian_defect: float
    trace: complex
    nodes: int
    convergence: list = field(default_factory=list)


def _scale(A):
    s = frobenius_norm(A)
    return s if s > 0.0 else 1.0


def _resolvents(A, z, tol):
    n = A.shape[0]
    M = A[None, :, :] - z[:, None, None] * np.eye(n)[None, :, :]
    try:
        LU, perm = lu_factor(M, pivot_tol=tol)
    except Singular:
        # locate the offending node for the report
        for zk in z:
            try:
                lu_factor(A - zk * np.eye(n), pivot_tol=tol)
            except Singular:
                raise SpectrumHit(complex(zk)) from None
        raise
    I = np.broadcast_to(np.eye(n, dtype=complex), (z.size, n, n))
    return lu_solve_factored(LU, perm, I)


def resolvent(A, z, tol=RESOLVENT_TOL):
    """``(A - z I)^-1`` by LU column solves; :class:`SpectrumHit` near the spectrum."""
    A = np.asarray(A, dtype=complex)
    return _resolvents(A, np.array([complex(z)]), tol * _scale(A))[0]


def _spectrum(A, structure):
    if structure in ("hermitian", "normal"):
        return normal_eigen(A).eigenvalues
    return np.linalg.eigvals(A)


def projector_rank(P):
    """Number of eigenvalues of ``P`` within 1/2 of 1."""
    P = np.asarray(P, dtype=complex)
    if frobenius_norm(P - P.conj().T) <= 1e-6:
        w = hermitian_eigen(0.5 * (P + P.conj().T), tol=np.inf).eigenvalues
    else:
        w = np.linalg.eigvals(P)
    return int(np.sum(np.abs(np.asarray(w) - 1.0) < 0.5))


def matrix_projector(A, contour, structure="normal", t=None, quad_tol=QUAD_TOL, node_cap=NODE_CAP):
    """Spectral projector of a fixed matrix for the eigenvalues inside ``contour``."""
    A = np.asarray(A, dtype=complex)
    scale = _scale(A)
    lam = np.asarray(_spectrum(A, structure))
    if lam.size:
        dist = contour.distance(lam)
        k = int(np.argmin(dist))
        if dist[k] < CONTOUR_CLEARANCE * scale:
            raise EigenvalueOnContour(t, complex(lam[k]), float(dist[k]))
    tol = RESOLVENT_TOL * scale
    level = 0
    P_prev = None
    history = []
    if contour.kind == "circle":
        N = contour.node_count
        z, dz = contour.quadrature(0)
        R = _resolvents(A, z, tol)
        acc = np.einsum("k,kij->ij", dz / (2j * np.pi), R)
        P = -acc
        while True:
            # nested trapezoid: the next level only adds the odd nodes
            theta = 2.0 * np.pi * (np.arange(N) + 0.5) / N
            e = np.exp(1j * theta)
            znew = contour.center + contour.radius * e
            Rn = _resolvents(A, znew, tol)
            new = np.einsum("k,kij->ij", 1j * contour.radius * e * (2.0 * np.pi / N) / (2j * np.pi), Rn)
            acc = 0.5 * (acc + new)
            N *= 2
            P_new = -acc
            delta = frobenius_norm(P_new - P)
            history.append(delta)
            P = P_new
            if delta < quad_tol:
                break
            if N >= node_cap:
                raise QuadratureStall(f"no quadrature convergence with {N} nodes (last change {delta:.3g})")
        nodes = N
    else:
        while True:
            z, dz = contour.quadrature(level)
            R = _resolvents(A, z, tol)
            P = -np.einsum("k,kij->ij", dz / (2j * np.pi), R)
            nodes = z.size
            if P_prev is not None:
                delta = frobenius_norm(P - P_prev)
                history.append(delta)
                if delta < quad_tol:
                    break
            if nodes >= node_cap:
                raise QuadratureStall(f"no quadrature convergence with {nodes} nodes")
            P_prev = P
            level += 1
    if len(history) >= 2 and history[-1] > 0:
        log.debug("quadrature change ratios %s", [a / b for a, b in zip(history, history[1:]) if b > 0])
    idem = frobenius_norm(P @ P - P)
    return Projector(
        matrix=P,
        rank=projector_rank(P),
        idempotency_defect=idem,
        hermitian_defect=frobenius_norm(P - P.conj().T),
        trace=complex(np.trace(P)),
        nodes=nodes,
        convergence=history,
    )


def riesz_projector(family, t, contour, **kw):
    """Projector ``P(t)`` of ``family`` for the eigenvalues enclosed by ``contour``.

    Raises :class:`EigenvalueOnContour` when an eigenvalue of ``A(t)`` lies
    within ``1e-8 * ||A(t)||_F`` of the curve and :class:`QuadratureStall`
    when node doubling reaches the cap without convergence.
    """
    return matrix_projector(family(t), contour, structure=family.structure, t=float(t), **kw)


def cluster_contour(eigenvalues, members, node_count=16):
    """Circle about the mean of ``eigenvalues[members]`` with radius half the external gap."""
    lam = np.asarray(eigenvalues, dtype=complex)
    members = sorted(set(int(i) for i in members))
    outside = [i for i in range(lam.size) if i not in members]
    center = complex(np.mean(lam[members]))
    if not outside:
        spread = float(np.max(np.abs(lam - center))) if lam.size else 0.0
        radius = 2.0 * spread if spread > 0 else max(abs(center), 1.0)
        return Contour.circle(center, radius, node_count)
    gap = float(np.min(np.abs(lam[outside] - center)))
    radius = 0.5 * gap
    spread = float(np.max(np.abs(lam[members] - center)))
    if spread >= 0.5 * radius:
        raise ValueError(
            f"cluster spread {spread:.3g} too wide for a circle of radius {radius:.3g}"
        )
    return Contour.circle(center, radius, node_count)


def cluster_members(eigenvalues, index, tol):
    """Single-linkage cluster of ``eigenvalues`` containing ``index`` at distance ``tol``."""
    lam = np.asarray(eigenvalues, dtype=complex)
    members = {int(index)}
    frontier = [int(index)]
    while frontier:
        i = frontier.pop()
        for j in np.flatnonzero(np.abs(lam - lam[i]) <= tol):
            if int(j) not in members:
                members.add(int(j))
                frontier.append(int(j))
    return sorted(members)


def default_contour(family, t0, index, cluster_tol=1e-8, node_count=16):
    """Contour around the cluster of the ``index``-th eigenvalue of ``A(t0)``."""
    A = family(t0)
    lam = _spectrum(A, family.structure)
    members = cluster_members(lam, index, cluster_tol * _scale(A))
    return cluster_contour(lam, members, node_count)


@dataclass
class RankProfile:
    grid: np.ndarray
    ranks: list
    projectors: list


def rank_constancy_scan(family, grid, contour, keep_projectors=False):
    """Projector ranks along ``grid``; :class:`ContourBreach` at the first change.

    An eigenvalue landing on the contour at a grid point is reported the same
    way, with the interval ending at that point.
    """
    grid = np.asarray(grid, dtype=float)
    ranks, projs = [], []
    for k, t in enumerate(grid):
        prev = float(grid[k - 1]) if k else float(t)
        try:
            P = riesz_projector(family, t, contour)
        except EigenvalueOnContour as exc:
            raise ContourBreach((prev, float(t)), f"eigenvalue on contour at t={t!r}") from exc
        if ranks and P.rank != ranks[-1]:
            raise ContourBreach(
                (prev, float(t)), f"rank changed {ranks[-1]} -> {P.rank} in [{prev!r}, {float(t)!r}]"
            )
        ranks.append(P.rank)
        if keep_projectors:
            projs.append(P)
    return RankProfile(grid, ranks, projs)


@dataclass
class FrameBundle:
    grid: np.ndarray
    frames: list
    rank: int
    restarts: list
    projectors: list


def _dominant_vectors(P, N):
    dec = hermitian_eigen(P.conj().T @ P, tol=np.inf)
    return dec.eigenvectors[:, ::-1][:, :N]


def _seed_ratio(W, V):
    """Smallest singular value of ``W = P V`` over the largest of ``V``.

    Also detects a single seed that ``P`` nearly annihilates, which the
    shape-only independence ratio cannot see.
    """
    G = W.conj().T @ W
    w = hermitian_eigen(0.5 * (G + G.conj().T), tol=np.inf).eigenvalues
    top = operator_norm(V) ** 2
    if top <= 0.0:
        return 0.0
    return float(np.sqrt(max(w[0], 0.0) / top))


def local_frame(family, grid, contour, seeds=None, restart_threshold=RESTART_THRESHOLD):
    """Orthonormal frames of ``range P(t_k)`` from fixed seed vectors.

    ``frame_k = gram_schmidt(P(t_k) v_1, ..., P(t_k) v_N)``.  When the
    projected seeds degenerate (smallest singular value of ``P V`` below
    ``restart_threshold`` times the largest of ``V``) the seeds are re-chosen as the
    dominant singular vectors of ``P(t_k)`` and a restart is recorded.
    """
    grid = np.asarray(grid, dtype=float)
    frames, restarts, projs = [], [], []
    rank = None
    V = None if seeds is None else np.column_stack([np.asarray(v, dtype=complex) for v in seeds])
    for k, t in enumerate(grid):
        P = riesz_projector(family, t, contour)
        if rank is None:
            rank = P.rank
        elif P.rank != rank:
            raise ContourBreach((float(grid[k - 1]), float(t)), "projector rank changed along the grid")
        if V is None:
            V = _dominant_vectors(P.matrix, rank)
        if V.shape[1] != rank:
            raise ValueError(f"need {rank} seed vectors, got {V.shape[1]}")
        W = P.matrix @ V
        ratio = _seed_ratio(W, V) if rank else 1.0
        if ratio < restart_threshold:
            V = _dominant_vectors(P.matrix, rank)
            W = P.matrix @ V
            restarts.append({"kind": "frame_restart", "t": float(t), "ratio": ratio})
            log.info("frame restart at t=%r (independence %.3g)", float(t), ratio)
        try:
            F = gram_schmidt(W) if rank else W
        except RankDeficient as exc:
            raise RankDeficient(exc.index, t=float(t)) from exc
        frames.append(F)
        projs.append(P)
    return FrameBundle(grid, frames, rank or 0, restarts, projs)


def compressed_matrix(family, t, frame, tol=INVARIANCE_TOL):
    """``F* A(t) F`` for an orthonormal frame ``F`` of an ``A(t)``-invariant subspace."""
    A = family(t) if callable(family) else np.asarray(family, dtype=complex)
    F = np.asarray(frame, dtype=complex)
    AF = A @ F
    leak = frobenius_norm(AF - F @ (F.conj().T @ AF))
    if leak > tol * _scale(A):
        raise NotInvariant(f"||(I - FF*) A F|| = {leak:.3g} at t={t!r}")
    return F.conj().T @ AF
