import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eigentrack.core_linalg import (
    eigen,
    gram_schmidt,
    hermitian_eigen,
    lu_factor,
    lu_solve,
    lu_solve_factored,
    normal_eigen,
    normality_defect,
    operator_norm,
)
from eigentrack.errors import NotHermitian, NotNormal, RankDeficient, Singular


def rand_herm(rng, n):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (Z + Z.conj().T)


def rand_unitary(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


seeds = st.integers(0, 2 ** 32 - 1)
sizes = st.integers(1, 12)


@settings(max_examples=60, deadline=None)
@given(seeds, sizes)
def test_hermitian_eigen_matches_lapack(seed, n):
    rng = np.random.default_rng(seed)
    A = rand_herm(rng, n)
    dec = hermitian_eigen(A)
    assert np.allclose(dec.eigenvalues, np.linalg.eigvalsh(A), atol=1e-12 * max(1, np.linalg.norm(A)))
    V = dec.eigenvectors
    assert np.linalg.norm(V.conj().T @ V - np.eye(n)) < 1e-12 * n
    assert np.linalg.norm(A @ V - V * dec.eigenvalues) < 1e-10 * np.linalg.norm(A)
    assert np.all(np.diff(dec.eigenvalues) >= 0)


def test_hermitian_phase_convention():
    rng = np.random.default_rng(1)
    V = hermitian_eigen(rand_herm(rng, 6)).eigenvectors
    for col in V.T:
        k = np.argmax(np.abs(col))
        assert col[k].imag == 0 and col[k].real > 0


def test_real_symmetric_gives_real_vectors():
    rng = np.random.default_rng(2)
    S = rng.standard_normal((7, 7))
    dec = hermitian_eigen(S + S.T)
    assert np.all(dec.eigenvectors.imag == 0)


def test_warm_start_takes_fewer_sweeps():
    rng = np.random.default_rng(3)
    A = rand_herm(rng, 10)
    cold = hermitian_eigen(A)
    warm = hermitian_eigen(A + 1e-6 * rand_herm(rng, 10), basis=cold.eigenvectors)
    assert warm.sweeps < cold.sweeps


def test_diagonal_input_needs_no_rotation():
    assert hermitian_eigen(np.diag([3.0, 1.0, 2.0])).sweeps == 0


def test_not_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigen([[0, 1], [0, 0]])


@settings(max_examples=40, deadline=None)
@given(seeds, sizes, st.booleans())
def test_normal_eigen_matches_diagonal(seed, n, degenerate):
    rng = np.random.default_rng(seed)
    lam = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if degenerate and n > 2:
        lam[1] = lam[0].real + 1j * rng.standard_normal()  # equal Hermitian parts
        lam[2] = lam[0]
    U = rand_unitary(rng, n)
    A = (U * lam) @ U.conj().T
    dec = normal_eigen(A)

    def canon(z):
        z = np.round(z, 8)
        return z[np.lexsort((z.imag, z.real))]

    assert np.allclose(canon(dec.eigenvalues), canon(lam), atol=1e-7)
    assert np.linalg.norm(A @ dec.eigenvectors - dec.eigenvectors * dec.eigenvalues) < 1e-10 * np.linalg.norm(A)


def test_rotation_matrix_spectrum():
    th = 0.3
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    w = normal_eigen(R).eigenvalues
    assert np.allclose(sorted(w, key=lambda z: z.imag), [np.exp(-1j * th), np.exp(1j * th)])


def test_not_normal():
    with pytest.raises(NotNormal):
        normal_eigen([[1, 1], [0, 1]])
    assert normality_defect(np.eye(3)) == 0.0


def test_eigen_dispatch():
    A = np.diag([2.0, 1.0])
    assert np.allclose(eigen(A, "hermitian").eigenvalues, [1, 2])
    assert np.allclose(eigen(A, "normal").eigenvalues, [1, 2])
    with pytest.raises(ValueError):
        eigen(A, "general")


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 9))
def test_operator_norm_matches_svd(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert operator_norm(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-9)


def test_operator_norm_close_singular_values():
    U, V = rand_unitary(np.random.default_rng(4), 5), rand_unitary(np.random.default_rng(5), 5)
    A = (U * [1.0, 1 - 1e-6, 0.5, 0.1, 0.0]) @ V
    assert operator_norm(A) == pytest.approx(1.0, rel=1e-9)
    assert operator_norm(np.zeros((3, 3))) == 0.0


@settings(max_examples=60, deadline=None)
@given(seeds, sizes)
def test_lu_solve_matches_numpy(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 3 * np.eye(n)
    b = rng.standard_normal(n)
    assert np.allclose(lu_solve(A, b), np.linalg.solve(A, b))


def test_lu_factor_reconstructs_and_batches():
    rng = np.random.default_rng(6)
    A = rng.standard_normal((4, 5, 5)) + 1j * rng.standard_normal((4, 5, 5))
    LU, perm = lu_factor(A)
    for k in range(4):
        L = np.tril(LU[k], -1) + np.eye(5)
        U = np.triu(LU[k])
        assert np.allclose(A[k][perm[k]], L @ U)
    B = rng.standard_normal((4, 5, 2))
    X = lu_solve_factored(LU, perm, B)
    assert np.allclose(A @ X, B)


def test_lu_singular():
    with pytest.raises(Singular) as exc:
        lu_solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 0.0])
    assert exc.value.pivot_index == 1


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 8), st.integers(0, 3))
def test_gram_schmidt_orthonormal_same_span(seed, n, extra):
    rng = np.random.default_rng(seed)
    m = max(1, n - extra)
    X = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    Q = gram_schmidt(X)
    assert np.linalg.norm(Q.conj().T @ Q - np.eye(m)) < 1e-12 * m
    assert np.linalg.norm(X - Q @ (Q.conj().T @ X)) < 1e-10 * np.linalg.norm(X)
    # triangular: the first k columns span the same space as those of X
    R = Q.conj().T @ X
    assert np.allclose(np.tril(R, -1), 0, atol=1e-10)


def test_gram_schmidt_rank_deficient_index():
    v = np.array([1.0, 0.0, 0.0])
    with pytest.raises(RankDeficient) as exc:
        gram_schmidt([v, [0.0, 1.0, 0.0], 2 * v])
    assert exc.value.index == 2
    with pytest.raises(RankDeficient) as exc:
        gram_schmidt([np.zeros(3), v])
    assert exc.value.index == 0


# worked examples


def test_examples_hermitian():
    dec = hermitian_eigen(np.diag([1.0, -1.0]))
    assert np.array_equal(dec.eigenvalues, [-1.0, 1.0])
    assert np.array_equal(np.abs(dec.eigenvectors), [[0, 1], [1, 0]])
    w = hermitian_eigen(2.0 ** -4 * np.array([[1.0, 1.0], [1.0, -1.0]])).eigenvalues
    assert np.allclose(w, [-np.sqrt(2) / 16, np.sqrt(2) / 16], rtol=1e-14)


def test_hermitian_against_sturm_bisection():
    from eigentrack.polyroots import charpoly, real_roots

    rng = np.random.default_rng(11)
    A = rand_herm(rng, 6)
    a = charpoly(A)
    coeffs = [1.0] + [(-1) ** (k + 1) * complex(c).real for k, c in enumerate(a)]
    oracle = np.sort(real_roots(coeffs))
    assert np.allclose(hermitian_eigen(A).eigenvalues, oracle, atol=1e-8)


def test_examples_normal():
    assert np.allclose(normal_eigen(np.diag([1j, -1j])).eigenvalues, [-1j, 1j])
    c = 1 + 2j
    w = normal_eigen([[0, c], [c, 0]]).eigenvalues
    assert np.allclose(w, [-c, c])
    G = np.eye(4, dtype=complex)
    for (p, q), th in zip([(0, 1), (1, 2), (2, 3), (0, 3)], [0.3, 1.1, -0.7, 2.0]):
        R = np.eye(4, dtype=complex)
        R[p, p] = R[q, q] = np.cos(th)
        R[p, q], R[q, p] = -np.sin(th), np.sin(th)
        G = G @ R
    assert np.allclose(np.abs(normal_eigen(G).eigenvalues), 1.0, atol=1e-10)


def test_examples_normality_defect():
    assert normality_defect(rand_herm(np.random.default_rng(0), 5)) <= 1e-14 * 25
    assert normality_defect([[0, 1], [2, 0]]) == pytest.approx(3 * np.sqrt(2))
    assert normality_defect(rand_unitary(np.random.default_rng(1), 4)) < 1e-14


def test_examples_gram_schmidt_and_norms():
    assert np.array_equal(gram_schmidt(np.eye(3)), np.eye(3))
    assert np.allclose(gram_schmidt([[1.0, 0.0], [1.0, 1.0]]), np.eye(2))
    with pytest.raises(RankDeficient):
        gram_schmidt([[1.0, 0.0], [1.0, 1e-9]])
    assert operator_norm(np.diag([3.0, -4.0])) == 4.0
    assert operator_norm(0.5 * np.array([[0, -1], [-1, 0]])) == 0.5
    b = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(lu_solve(np.eye(3), b), b)


def test_gram_schmidt_deterministic():
    X = np.random.default_rng(3).standard_normal((5, 3))
    assert np.array_equal(gram_schmidt(X), gram_schmidt(X.copy()))
