"""Bottleneck matching distance between unordered eigenvalue tuples.

``d(lam, mu) = min over permutations s of max_i |lam_i - mu_s(i)|``.  The
optimum is always one of the pairwise distances, so it is found exactly by
binary search over the sorted distances with a bipartite perfect-matching
feasibility test on the threshold graph.
"""
from __future__ import annotations

import numpy as np

from .core_linalg import normal_eigen, is_normal, normality_defect, operator_norm
from .errors import BoundViolated, LengthMismatch, NotNormal

MAX_TUPLE = 64
NORMAL_BOUND = 3.0


def _tuples(lam, mu):
    a = np.atleast_1d(np.asarray(lam, dtype=complex)).ravel()
    b = np.atleast_1d(np.asarray(mu, dtype=complex)).ravel()
    if a.size != b.size:
        raise LengthMismatch(f"tuples have lengths {a.size} and {b.size}")
    if a.size > MAX_TUPLE:
        raise ValueError(f"tuple length {a.size} exceeds {MAX_TUPLE}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("tuples must be finite")
    return a, b


def distance_matrix(lam, mu):
    a, b = _tuples(lam, mu)
    return np.abs(a[:, None] - b[None, :])


def _perfect_matching(allowed):
    """Kuhn's augmenting paths; returns row->col list or None."""
    n = allowed.shape[0]
    adj = [np.flatnonzero(allowed[i]).tolist() for i in range(n)]
    match_col = [-1] * n

    def augment(i, seen):
        for j in adj[i]:
            if not seen[j]:
                seen[j] = True
                if match_col[j] < 0 or augment(match_col[j], seen):
                    match_col[j] = i
                    return True
        return False

    for i in range(n):
        if not augment(i, [False] * n):
            return None
    row = [0] * n
    for j, i in enumerate(match_col):
        row[i] = j
    return row


def _bottleneck(D):
    n = D.shape[0]
    if n == 0:
        return 0.0, []
    levels = np.unique(D)
    lo, hi = 0, levels.size - 1
    best = _perfect_matching(D <= levels[hi])
    while lo < hi:
        mid = (lo + hi) // 2
        m = _perfect_matching(D <= levels[mid])
        if m is None:
            lo = mid + 1
        else:
            hi = mid
            best = m
    if best is None or any(D[i, j] > levels[lo] for i, j in enumerate(best)):
        best = _perfect_matching(D <= levels[lo])
    return float(levels[lo]), best


def matching_distance(lam, mu) -> float:
    """Exact bottleneck distance between two tuples treated as multisets."""
    D = distance_matrix(lam, mu)
    return _bottleneck(D)[0]


def _lexicographic_min(allowed, start):
    """Lexicographically smallest perfect matching, given one perfect matching."""
    n = allowed.shape[0]
    row = list(start)
    col_owner = [0] * n
    for i, j in enumerate(row):
        col_owner[j] = i
    for i in range(n):
        for j in range(row[i]):
            if not allowed[i, j] or col_owner[j] < i:
                continue
            # need an alternating path from col_owner[j] back to the column row[i],
            # through rows > i only
            target = row[i]
            parent = {}
            stack = [col_owner[j]]
            seen_rows = {col_owner[j]}
            found = None
            while stack and found is None:
                r = stack.pop()
                for c in np.flatnonzero(allowed[r]):
                    c = int(c)
                    if c == row[r]:
                        continue
                    if c == target:
                        found = r
                        break
                    r2 = col_owner[c]
                    if r2 > i and r2 not in seen_rows:
                        seen_rows.add(r2)
                        parent[r2] = (r, c)
                        stack.append(r2)
            if found is None:
                continue
            # rotate along the path: r takes target, predecessors shift
            r = found
            new_col = target
            while True:
                old = row[r]
                row[r] = new_col
                col_owner[new_col] = r
                if r not in parent:
                    break
                r, new_col = parent[r][0], old
            row[i] = j
            col_owner[j] = i
            break
    return row


def optimal_permutation(lam, mu):
    """Permutation ``s`` (list, ``lam[i] -> mu[s[i]]``) attaining the matching distance.

    Among all optimal permutations the lexicographically smallest is returned.
    """
    D = distance_matrix(lam, mu)
    d, start = _bottleneck(D)
    if D.shape[0] == 0:
        return []
    return _lexicographic_min(D <= d, start)


def check_normal_bound(A, B, bound=NORMAL_BOUND):
    """Compare the spectral matching distance of two normal matrices with ``||A - B||``.

    Returns a dict with ``d``, ``norm`` (operator norm of ``A - B``) and
    ``ratio = d / norm`` (0 when ``A == B``).  :class:`BoundViolated` is raised
    when the ratio exceeds ``bound``; for normal matrices that cannot happen
    with a correct eigensolver.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        raise LengthMismatch(f"shapes {A.shape} and {B.shape} differ")
    for name, M in (("A", A), ("B", B)):
        if not is_normal(M):
            raise NotNormal(f"{name} has normality defect {normality_defect(M):.3g}")
    d = matching_distance(normal_eigen(A).eigenvalues, normal_eigen(B).eigenvalues)
    norm = operator_norm(A - B)
    ratio = 0.0 if norm == 0.0 else d / norm
    if ratio > bound:
        raise BoundViolated(f"d/||A-B|| = {ratio:.6g} exceeds {bound}")
    return {"d": d, "norm": norm, "ratio": ratio}
