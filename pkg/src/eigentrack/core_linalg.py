"""Dense complex kernels: Jacobi eigensolvers, LU, norms, Gram-Schmidt.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
The Hermitian eigensolver is a cyclic Jacobi method using the round-robin
(parallel) ordering, so that all rotations of one round act on disjoint
index pairs and can be applied as a handful of vectorized array updates.
The normal eigensolver reduces to the Hermitian one through the commuting
pair ``H = (A + A*)/2``, ``K = (A - A*)/(2i)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    NoConvergence,
    NotHermitian,
    NotNormal,
    RankDeficient,
    Singular,
)

HERMITIAN_TOL = 1e-12
NORMAL_TOL = 1e-10
RESIDUAL_TOL = 1e-10
ORTHO_TOL = 1e-10
CLUSTER_TOL = 1e-8
MAX_SWEEPS = 30
GS_INDEPENDENCE = 1e-8
LU_PIVOT_TOL = 1e-14

# rotation skip thresholds: relative to sqrt(|a_pp a_qq|) and to ||A||_F
_JACOBI_REL = 4.0 * np.finfo(float).eps
_JACOBI_ABS = 1e-18


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual: float
    sweeps: int = 0

    def __iter__(self):
        # allows ``w, V = hermitian_eigen(A)``
        yield self.eigenvalues
        yield self.eigenvectors


def as_matrix(A) -> np.ndarray:
    """Return ``A`` as a finite square complex128 array."""
    M = np.array(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def frobenius_norm(A) -> float:
    return float(np.linalg.norm(np.asarray(A, dtype=complex), "fro"))


def hermitian_defect(A) -> float:
    A = np.asarray(A, dtype=complex)
    return float(np.linalg.norm(A - A.conj().T, "fro"))


def normality_defect(A) -> float:
    """Frobenius norm of the commutator ``A A* - A* A``."""
    A = np.asarray(A, dtype=complex)
    Ah = A.conj().T
    return float(np.linalg.norm(A @ Ah - Ah @ A, "fro"))


def is_hermitian(A, tol=HERMITIAN_TOL) -> bool:
    return hermitian_defect(A) <= tol * frobenius_norm(A)


def is_normal(A, tol=NORMAL_TOL) -> bool:
    return normality_defect(A) <= tol * frobenius_norm(A) ** 2


def operator_norm(A, rtol=1e-10, max_iter=None) -> float:
    """Largest singular value by power iteration on ``B = A* A``.

    The iterates ``x, Bx, B^2 x, ...`` are kept orthonormalized and the
    estimate is the top Rayleigh-Ritz value of ``B`` on their span (the
    Lanczos form of power iteration).  This keeps the relative tolerance
    when the top singular values are clustered, where the plain Rayleigh
    quotient stalls.  Stops once the Ritz residual is below ``rtol`` times
    the estimate or the span becomes invariant.
    """
    A = np.asarray(A, dtype=complex)
    B = A.conj().T @ A
    n = B.shape[0]
    if n == 0 or not B.any():
        return 0.0
    steps = n if max_iter is None else min(n, int(max_iter))
    # fixed generic start: deterministic, and almost surely not orthogonal
    # to the top singular vector (a column of B can be)
    rng = np.random.default_rng(0)
    x = B @ (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    if not x.any():
        x = np.ones(n, dtype=complex)
    Q = np.zeros((n, steps), dtype=complex)
    Q[:, 0] = x / np.linalg.norm(x)
    alpha, beta = [], []
    rho = 0.0
    check = 4
    for k in range(steps):
        w = B @ Q[:, k]
        alpha.append(float(np.real(np.vdot(Q[:, k], w))))
        for _ in range(2):
            w -= Q[:, :k + 1] @ (Q[:, :k + 1].conj().T @ w)
        b = float(np.linalg.norm(w))
        last = k + 1 == steps or b <= 1e-14 * max(alpha[0], rho, 1e-300)
        if k + 1 < check and not last:
            beta.append(b)
            Q[:, k + 1] = w / b
            continue
        check *= 2
        T = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
        dec = hermitian_eigen(T, tol=np.inf)
        rho = float(dec.eigenvalues[-1])
        if last or b * abs(dec.eigenvectors[-1, -1]) <= rtol * rho:
            x = Q[:, :k + 1] @ dec.eigenvectors[:, -1]
            return float(np.linalg.norm(A @ (x / np.linalg.norm(x))))
        beta.append(b)
        Q[:, k + 1] = w / b


# --------------------------------------------------------------------- LU


def lu_factor(A, pivot_tol=None):
    """LU with partial pivoting, vectorized over leading batch dimensions.

    Returns ``(LU, perm)`` with ``A[..., perm, :] = L @ U``; ``L`` is unit
    lower triangular and stored below the diagonal of ``LU``.  Raises
    :class:`Singular` if a pivot falls below ``pivot_tol`` (default
    ``1e-14 * ||A||_F`` per matrix).
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[-1]
    batch = A.shape[:-2]
    LU = A.reshape((-1, n, n)).copy()
    nb = LU.shape[0]
    perm = np.tile(np.arange(n), (nb, 1))
    if pivot_tol is None:
        pivot_tol = LU_PIVOT_TOL * np.linalg.norm(LU, axis=(1, 2))
    pivot_tol = np.broadcast_to(np.asarray(pivot_tol, dtype=float).reshape(-1), (nb,))
    rows = np.arange(nb)
    for k in range(n):
        piv = k + np.argmax(np.abs(LU[:, k:, k]), axis=1)
        swap = piv != k
        if swap.any():
            r = rows[swap]
            pk = piv[swap]
            tmp = LU[r, k].copy()
            LU[r, k] = LU[r, pk]
            LU[r, pk] = tmp
            tmp = perm[r, k].copy()
            perm[r, k] = perm[r, pk]
            perm[r, pk] = tmp
        d = LU[:, k, k]
        bad = np.abs(d) <= pivot_tol
        if bad.any():
            raise Singular(
                f"pivot {k} below tolerance in batch item {int(np.argmax(bad))}",
                pivot_index=k,
            )
        if k + 1 < n:
            LU[:, k + 1:, k] /= d[:, None]
            LU[:, k + 1:, k + 1:] -= LU[:, k + 1:, k, None] * LU[:, k, None, k + 1:]
    return LU.reshape(batch + (n, n)), perm.reshape(batch + (n,))


def lu_solve_factored(LU, perm, B):
    """Solve with factors from :func:`lu_factor`; ``B`` is ``(..., n)`` or ``(..., n, m)``."""
    n = LU.shape[-1]
    batch = LU.shape[:-2]
    LUf = LU.reshape((-1, n, n))
    nb = LUf.shape[0]
    Bv = np.asarray(B, dtype=complex)
    vector = Bv.ndim == 1 or (Bv.ndim == len(batch) + 1 and Bv.shape[:-1] == batch)
    if vector:
        Bv = Bv[..., None]
    Bv = np.broadcast_to(Bv, batch + Bv.shape[-2:]).reshape((nb, n, -1))
    P = perm.reshape((nb, n))
    X = np.take_along_axis(Bv, P[:, :, None], axis=1).copy()
    for i in range(1, n):
        X[:, i] -= np.einsum("bj,bjm->bm", LUf[:, i, :i], X[:, :i])
    for i in range(n - 1, -1, -1):
        if i + 1 < n:
            X[:, i] -= np.einsum("bj,bjm->bm", LUf[:, i, i + 1:], X[:, i + 1:])
        X[:, i] /= LUf[:, i, i][:, None]
    X = X.reshape(batch + (n, X.shape[-1]))
    return X[..., 0] if vector else X


def lu_solve(A, b):
    """Solve ``A x = b`` by partial-pivoting LU; :class:`Singular` on tiny pivots."""
    LU, perm = lu_factor(as_matrix(A))
    return lu_solve_factored(LU, perm, b)


# ----------------------------------------------------------------- Jacobi


@lru_cache(maxsize=64)
def _round_robin(n):
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < n and b < n]
        pairs.sort()
        rounds.append((np.array([a for a, _ in pairs], dtype=int),
                       np.array([b for _, b in pairs], dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return tuple(rounds)


def _jacobi_round(A, V, p, q, abs_floor):
    apq = A[p, q]
    mag = np.abs(apq)
    app = A[p, p].real
    aqq = A[q, q].real
    need = mag > np.maximum(_JACOBI_REL * np.sqrt(np.abs(app * aqq)), abs_floor)
    if not need.any():
        return 0
    p, q, apq, mag, app, aqq = p[need], q[need], apq[need], mag[need], app[need], aqq[need]
    phase = apq / mag
    tau = (aqq - app) / (2.0 * mag)
    t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    sp = t * c * phase
    Ap = A[:, p].copy()
    Aq = A[:, q]
    A[:, p] = c * Ap - np.conj(sp) * Aq
    A[:, q] = sp * Ap + c * Aq
    Bp = A[p, :].copy()
    Bq = A[q, :]
    A[p, :] = c[:, None] * Bp - sp[:, None] * Bq
    A[q, :] = np.conj(sp)[:, None] * Bp + c[:, None] * Bq
    A[p, q] = 0.0
    A[q, p] = 0.0
    A[p, p] = app - t * mag
    A[q, q] = aqq + t * mag
    Vp = V[:, p].copy()
    Vq = V[:, q]
    V[:, p] = c * Vp - np.conj(sp) * Vq
    V[:, q] = sp * Vp + c * Vq
    return int(need.sum())


def _fix_phases(V):
    idx = np.argmax(np.abs(V), axis=0)
    cols = np.arange(V.shape[1])
    lead = V[idx, cols]
    mod = np.abs(lead)
    ph = np.where(mod > 0, np.conj(lead) / np.where(mod > 0, mod, 1.0), 1.0)
    V = V * ph
    V[idx, cols] = np.abs(V[idx, cols])
    return V


def _jacobi(W, V, max_sweeps):
    n = W.shape[0]
    abs_floor = _JACOBI_ABS * np.linalg.norm(W, "fro")
    if abs_floor == 0.0:
        return 0, True
    rounds = _round_robin(n)
    iu = np.triu_indices(n, 1)
    for sweep in range(1, max_sweeps + 1):
        d = np.abs(np.diagonal(W).real)
        off = np.abs(W[iu])
        if not np.any(off > np.maximum(_JACOBI_REL * np.sqrt(d[iu[0]] * d[iu[1]]), abs_floor)):
            return sweep - 1, True
        rotated = 0
        for p, q in rounds:
            if p.size:
                rotated += _jacobi_round(W, V, p, q, abs_floor)
        if rotated == 0:
            return sweep, True
    return max_sweeps, False


def _check_basis(basis, n):
    if basis is None:
        return np.eye(n, dtype=complex)
    B = np.array(basis, dtype=complex)
    if B.shape != (n, n) or np.linalg.norm(B.conj().T @ B - np.eye(n)) > 1e-8:
        return np.eye(n, dtype=complex)
    return B


def _accept(A, w, V, sweeps, converged):
    n = A.shape[0]
    scale = frobenius_norm(A)
    residual = float(np.linalg.norm(A @ V - V * w, "fro"))
    ortho = float(np.linalg.norm(V.conj().T @ V - np.eye(n), "fro"))
    if residual > RESIDUAL_TOL * scale or ortho > ORTHO_TOL * n:
        raise NoConvergence(
            f"residual {residual:.3g} (scale {scale:.3g}), orthogonality {ortho:.3g} "
            f"after {sweeps} sweeps{'' if converged else ' (sweep cap hit)'}"
        )
    return SpectralDecomposition(w, V, residual, sweeps)


def hermitian_eigen(A, basis=None, max_sweeps=MAX_SWEEPS, tol=HERMITIAN_TOL):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Parameters
    ----------
    A : (n, n) array_like
        Hermitian matrix; ``||A - A*||_F <= tol * ||A||_F`` is enforced.
    basis : (n, n) array_like, optional
        Unitary warm start (e.g. eigenvectors at a nearby parameter).  The
        sweeps then run on ``basis* A basis``, which is nearly diagonal.
    max_sweeps : int
        Sweep cap; :class:`NoConvergence` if the residual target is unmet.

    Returns
    -------
    SpectralDecomposition
        Real eigenvalues in ascending order, unitary eigenvectors with the
        largest-modulus entry of each column real and positive.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if hermitian_defect(A) > tol * frobenius_norm(A):
        raise NotHermitian(f"||A - A*||_F = {hermitian_defect(A):.3g}")
    H = 0.5 * (A + A.conj().T)
    V = _check_basis(basis, n)
    W = V.conj().T @ H @ V
    W = 0.5 * (W + W.conj().T)
    if not (W.imag.any() or V.imag.any()):
        # real symmetric input: same sweeps in real arithmetic
        W, V = W.real.copy(), V.real.copy()
    sweeps, converged = _jacobi(W, V, max_sweeps)
    w = np.real(np.diag(W)).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    V = _fix_phases(V[:, order].astype(complex))
    return _accept(A, w, V, sweeps, converged)


def _clusters(sorted_values, tol):
    groups = [[0]] if len(sorted_values) else []
    for i in range(1, len(sorted_values)):
        if sorted_values[i] - sorted_values[i - 1] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def normal_eigen(A, basis=None, cluster_tol=CLUSTER_TOL, max_sweeps=MAX_SWEEPS, tol=NORMAL_TOL):
    """Eigen-decomposition of a normal matrix through its commuting Hermitian parts.

    ``H = (A + A*)/2`` is diagonalized first; ``K = (A - A*)/(2i)`` is then
    diagonalized inside every cluster of ``H``-eigenvalues whose consecutive
    gaps are at most ``cluster_tol * ||A||_F``.  Eigenvalues are the Rayleigh
    quotients ``v* A v``, sorted by real part then imaginary part.
    """
    A = as_matrix(A)
    n = A.shape[0]
    scale = frobenius_norm(A)
    if normality_defect(A) > tol * scale ** 2:
        raise NotNormal(f"||AA* - A*A||_F = {normality_defect(A):.3g}")
    H = 0.5 * (A + A.conj().T)
    K = (A - A.conj().T) / 2j
    dec = hermitian_eigen(H, basis=basis, max_sweeps=max_sweeps, tol=np.inf)
    V = dec.eigenvectors.copy()
    for group in _clusters(np.asarray(dec.eigenvalues), cluster_tol * scale):
        if len(group) < 2:
            continue
        Vc = V[:, group]
        Kc = Vc.conj().T @ K @ Vc
        sub = hermitian_eigen(0.5 * (Kc + Kc.conj().T), max_sweeps=max_sweeps, tol=np.inf)
        V[:, group] = Vc @ sub.eigenvectors
    w = np.einsum("ij,ij->j", V.conj(), A @ V)
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    V = _fix_phases(V[:, order])
    return _accept(A, w, V, dec.sweeps, True)


def eigen(A, structure="normal", basis=None):
    """Dispatch to the solver matching ``structure`` ('hermitian' or 'normal')."""
    if structure == "hermitian":
        return hermitian_eigen(A, basis=basis)
    if structure == "normal":
        return normal_eigen(A, basis=basis)
    raise ValueError(f"no eigensolver for structure {structure!r}")


# ---------------------------------------------------------- Gram-Schmidt


def _independence_ratio(X):
    G = X.conj().T @ X
    w = np.asarray(hermitian_eigen(0.5 * (G + G.conj().T), tol=np.inf).eigenvalues)
    top = w[-1]
    if top <= 0.0:
        return 0.0
    return float(np.sqrt(max(w[0], 0.0) / top))


def gram_schmidt(vectors, threshold=GS_INDEPENDENCE):
    """Orthonormalize ``vectors`` (a list of n-vectors or an n x m array of columns).

    Modified Gram-Schmidt followed by one re-orthogonalization pass.  Raises
    :class:`RankDeficient` when the smallest singular value of the input,
    estimated from its Gram matrix, is below ``threshold`` times the
    largest; ``index`` is the first vector whose prefix fails that test.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        X = np.array(vectors, dtype=complex)
    else:
        X = np.column_stack([np.asarray(v, dtype=complex) for v in vectors])
    m = X.shape[1]
    if m == 0:
        return X
    if _independence_ratio(X) < threshold:
        norms = np.linalg.norm(X, axis=0)
        if norms[0] == 0.0:
            raise RankDeficient(0)
        for k in range(2, m + 1):
            if _independence_ratio(X[:, :k]) < threshold:
                raise RankDeficient(k - 1)
        raise RankDeficient(m - 1)
    Q = X.copy()
    for k in range(m):
        w = Q[:, k]
        for _ in range(2):
            for j in range(k):
                w = w - Q[:, j] * (Q[:, j].conj() @ w)
        Q[:, k] = w / np.linalg.norm(w)
    return Q
