"""One-parameter matrix families ``t -> A(t)`` and their generators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core_linalg import frobenius_norm, hermitian_defect, normality_defect
from .errors import OverlappingSegments, StructureViolation

STRUCTURES = ("hermitian", "normal", "general")
CLAIMED_CLASSES = ("analytic", "quasianalytic", "denjoy_carleman", "smooth", "hoelder")
STRUCTURE_TOL = 1e-10


@dataclass(frozen=True)
class MatrixFamily:
    """Immutable evaluator ``t -> A(t)`` on ``domain`` with structural metadata.

    ``claimed_class`` is a descriptive tag only; nothing checks it.
    """

    size: int
    domain: tuple
    evaluator: Callable[[float], np.ndarray]
    structure: str = "general"
    claimed_class: str = "smooth"
    name: str = "family"
    metadata: dict = field(default_factory=dict, compare=False)
    offset_evaluator: Callable[[float, float], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError(f"empty domain {self.domain!r}")

    def __call__(self, t) -> np.ndarray:
        A = np.array(self.evaluator(float(t)), dtype=complex)
        if A.shape != (self.size, self.size):
            raise ValueError(f"evaluator returned shape {A.shape} at t={t!r}")
        return A

    def at(self, t, dt=0.0) -> np.ndarray:
        """``A(t + dt)`` without forming ``t + dt`` when the family supports it.

        Offsets far below the floating-point spacing at ``t`` stay resolvable.
        """
        if dt == 0.0:
            return self(t)
        if self.offset_evaluator is None:
            return self(float(t) + float(dt))
        A = np.array(self.offset_evaluator(float(t), float(dt)), dtype=complex)
        if A.shape != (self.size, self.size):
            raise ValueError(f"offset evaluator returned shape {A.shape}")
        return A

    def contains(self, t) -> bool:
        return self.domain[0] <= t <= self.domain[1]


def structure_defect(A, structure):
    """Relative defect of ``A`` w.r.t. ``structure`` (0 for 'general')."""
    scale = frobenius_norm(A)
    if scale == 0.0 or structure == "general":
        return 0.0
    if structure == "hermitian":
        return hermitian_defect(A) / scale
    return normality_defect(A) / scale ** 2


def check_structure(A, structure, t, tol=STRUCTURE_TOL):
    d = structure_defect(A, structure)
    if d > tol:
        raise StructureViolation(t, d, structure)


def sample(family, grid, tol=STRUCTURE_TOL):
    """Evaluate ``family`` on a strictly increasing grid, checking its structure."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    out = []
    for t in grid:
        A = family(t)
        check_structure(A, family.structure, float(t), tol)
        out.append(A)
    return out


# ---------------------------------------------------------------- glued


@dataclass(frozen=True)
class SegmentSpec:
    """``A(anchor + s) = A + s B`` for ``|s| <= s_range``."""

    index: int
    anchor: float
    s_range: float
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("segment index must be >= 1")
        if not 0.0 < self.s_range <= 1.0 / self.index ** 2:
            raise ValueError(
                f"segment {self.index}: half-width {self.s_range} not in (0, 1/n^2]"
            )

    def value(self, s):
        return self.A + s * self.B


def _quintic_weights(u):
    u2 = u * u
    u3 = u2 * u
    u4 = u3 * u
    u5 = u4 * u
    return (
        1 - 10 * u3 + 15 * u4 - 6 * u5,        # value at 0
        u - 6 * u3 + 8 * u4 - 3 * u5,          # slope at 0
        0.5 * (u2 - 3 * u3 + 3 * u4 - u5),     # curvature at 0
        0.5 * (u3 - 2 * u4 + u5),              # curvature at 1
        -4 * u3 + 7 * u4 - 3 * u5,             # slope at 1
        10 * u3 - 15 * u4 + 6 * u5,            # value at 1
    )


def quintic_blend(x0, x1, p0, d0, p1, d1, t):
    """C^2 quintic Hermite interpolant with zero second derivatives at both ends."""
    L = x1 - x0
    w = _quintic_weights((t - x0) / L)
    return w[0] * p0 + L * w[1] * d0 + L * w[4] * d1 + w[5] * p1


def glued_family(segments, blend_margin=0.0, structure=None, name="glued"):
    """Glue affine segments ``A_n + s B_n`` into one C^2 family.

    Exact on every segment, quintic Hermite blends in the gaps (value and
    first two derivatives matched), constant outside the outermost segments.
    """
    segs = sorted(segments, key=lambda sg: sg.anchor)
    if not segs:
        raise ValueError("need at least one segment")
    anchors = [sg.anchor for sg in segs]
    if len(set(anchors)) != len(anchors) or list(anchors) != [sg.anchor for sg in segments]:
        raise OverlappingSegments("segment anchors must be strictly increasing")
    n = np.asarray(segs[0].A).shape[0]
    mats = [(np.asarray(sg.A, dtype=complex), np.asarray(sg.B, dtype=complex)) for sg in segs]
    for (A, B), sg in zip(mats, segs):
        if A.shape != (n, n) or B.shape != (n, n):
            raise ValueError(f"segment {sg.index} has inconsistent matrix shapes")
    for left, right in zip(segs, segs[1:]):
        if left.anchor + left.s_range + blend_margin > right.anchor - right.s_range - blend_margin:
            raise OverlappingSegments(
                f"segments {left.index} and {right.index} overlap after margin {blend_margin}"
            )
    lo = segs[0].anchor - segs[0].s_range
    hi = segs[-1].anchor + segs[-1].s_range
    starts = np.array([sg.anchor - sg.s_range for sg in segs])

    def evaluate(t, dt=0.0):
        k = int(np.searchsorted(starts, t + dt, side="right")) - 1
        if k < 0:
            A, B = mats[0]
            return A - segs[0].s_range * B
        sg = segs[k]
        A, B = mats[k]
        s = (t - sg.anchor) + dt
        if s <= sg.s_range:
            return A + s * B
        if k + 1 == len(segs):
            return A + sg.s_range * B
        nxt = segs[k + 1]
        A1, B1 = mats[k + 1]
        x0 = sg.anchor + sg.s_range
        x1 = nxt.anchor - nxt.s_range
        return quintic_blend(x0, x1, A + sg.s_range * B, B, A1 - nxt.s_range * B1, B1, t + dt)

    if structure is None:
        herm = all(hermitian_defect(A) == 0 and hermitian_defect(B) == 0 for A, B in mats)
        structure = "hermitian" if herm else "general"
    return MatrixFamily(
        size=n,
        domain=(lo, hi),
        evaluator=evaluate,
        structure=structure,
        claimed_class="smooth",
        name=name,
        offset_evaluator=evaluate,
        metadata={
            "segments": [(sg.index, sg.anchor, sg.s_range) for sg in segs],
            "blend": "quintic C2",
        },
    )


# ------------------------------------------------------ glued 2 x 2 example

MAX_PAPER_N = 30
_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def paper_anchor(n):
    """Anchor ``t_n = 3 - 3/n``; gaps ``3/(n(n+1))`` exceed ``1/n^2 + 1/(n+1)^2``."""
    return 3.0 - 3.0 / n


def paper_s(n):
    """``s_n = 2^(n - n^2)``."""
    return math.ldexp(1.0, n - n * n)


def paper_segment(n):
    scale = math.ldexp(1.0, -n * n)
    A = scale * _SIGMA_Z
    B = (scale / paper_s(n)) * _SIGMA_X
    return SegmentSpec(index=n, anchor=paper_anchor(n), s_range=1.0 / n ** 2, A=A, B=B)


def paper_eigenvalue(n, s):
    """Positive eigenvalue of ``A_n + s B_n``: ``2^(-n^2) sqrt(1 + (s/s_n)^2)``."""
    return math.ldexp(1.0, -n * n) * math.hypot(1.0, s / paper_s(n))


def paper_eigenvalue_derivative(n, s):
    """Derivative of :func:`paper_eigenvalue` in ``s``: ``2^(n^2-2n) s / sqrt(1 + (s/s_n)^2)``."""
    return math.ldexp(1.0, n * n - 2 * n) * s / math.hypot(1.0, s / paper_s(n))


def paper_hoelder_quotient(n, alpha):
    """Closed form of ``(lam'(t_n + s_n) - lam'(t_n)) / s_n^alpha`` for the positive branch."""
    return 2.0 ** (n * (alpha * (n - 1) - 1)) / math.sqrt(2.0)


def paper_example_family(n_max):
    """2 x 2 real-symmetric family that is ``A_n + s B_n`` near each anchor ``t_n``."""
    if not 1 <= n_max <= MAX_PAPER_N:
        raise ValueError(f"n_max must be in [1, {MAX_PAPER_N}]")
    segs = [paper_segment(n) for n in range(1, n_max + 1)]
    fam = glued_family(segs, structure="hermitian", name=f"paper_example(n_max={n_max})")
    fam.metadata.update(
        anchors=[sg.anchor for sg in segs],
        s_n=[paper_s(n) for n in range(1, n_max + 1)],
        n_max=n_max,
    )
    return fam


# ------------------------------------------------------------ Schrodinger


def dirichlet_laplacian_eigenvalues(grid_points, length):
    """Exact spectrum of the 3-point Dirichlet ``-d^2/dx^2`` matrix, ascending."""
    m = grid_points
    h = length / (m + 1)
    k = np.arange(1, m + 1)
    return (4.0 / h ** 2) * np.sin(k * np.pi / (2 * (m + 1))) ** 2


def schrodinger_family(potential, grid_points, interval, domain=(0.0, 1.0), name="schrodinger"):
    """Finite-difference ``-d^2/dx^2 + V(t, x)`` with Dirichlet ends.

    ``potential(t, x)`` receives the interior nodes as an array.
    """
    if grid_points < 3:
        raise ValueError("grid_points must be >= 3")
    a, b = map(float, interval)
    m = int(grid_points)
    h = (b - a) / (m + 1)
    x = a + h * np.arange(1, m + 1)
    off = -1.0 / h ** 2
    T = np.diag(np.full(m, 2.0 / h ** 2)) + np.diag(np.full(m - 1, off), 1) + np.diag(np.full(m - 1, off), -1)

    def evaluate(t):
        v = np.broadcast_to(np.asarray(potential(t, x), dtype=float), (m,))
        return T + np.diag(v)

    return MatrixFamily(
        size=m,
        domain=tuple(map(float, domain)),
        evaluator=evaluate,
        structure="hermitian",
        claimed_class="smooth",
        name=name,
        metadata={"x": x, "h": h, "interval": (a, b)},
    )


# ----------------------------------------------------- polynomial entries


def horner(coefficients, t):
    """Evaluate ``sum c_k t^k`` (ascending coefficients) by Horner's rule."""
    acc = 0j
    for c in reversed(coefficients):
        acc = acc * t + c
    return acc


def polynomial_entry_family(entry_polynomials, structure="general", domain=(-1.0, 1.0), name="polynomial_entries"):
    """Family whose ``(i, j)`` entry is the polynomial with ascending coefficients ``entry_polynomials[i][j]``."""
    entries = [[[complex(c) for c in np.atleast_1d(e)] for e in row] for row in entry_polynomials]
    n = len(entries)
    if any(len(row) != n for row in entries):
        raise ValueError("entry table must be square")

    def evaluate(t):
        return np.array([[horner(e, t) for e in row] for row in entries], dtype=complex)

    return MatrixFamily(
        size=n,
        domain=tuple(map(float, domain)),
        evaluator=evaluate,
        structure=structure,
        claimed_class="analytic",
        name=name,
        metadata={"entries": entries},
    )


def constant_family(A, structure="general", domain=(-1.0, 1.0)):
    A = np.array(A, dtype=complex)
    return MatrixFamily(
        size=A.shape[0],
        domain=tuple(domain),
        evaluator=lambda t: A,
        structure=structure,
        claimed_class="analytic",
        name="constant",
    )


def callable_family(fn, size, structure="general", domain=(-1.0, 1.0), name="callable", claimed_class="smooth"):
    return MatrixFamily(size=size, domain=tuple(domain), evaluator=fn, structure=structure,
                        claimed_class=claimed_class, name=name)
