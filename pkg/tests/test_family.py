import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eigentrack import family as fam
from eigentrack.errors import OverlappingSegments, StructureViolation


def test_matrix_family_validation():
    with pytest.raises(ValueError):
        fam.callable_family(lambda t: np.eye(2), 2, structure="symmetric")
    with pytest.raises(ValueError):
        fam.callable_family(lambda t: np.eye(2), 2, domain=(1.0, 1.0))
    bad = fam.callable_family(lambda t: np.eye(3), 2)
    with pytest.raises(ValueError):
        bad(0.0)
    f = fam.constant_family(np.eye(2), domain=(0.0, 1.0))
    assert f.contains(0.5) and not f.contains(1.5)
    assert f(0.3).dtype == complex


def test_sample_examples():
    f = fam.polynomial_entry_family([[[0, 1], 0], [0, [0, -1]]], structure="hermitian")
    mats = fam.sample(f, [-1.0, 0.0, 1.0])
    assert [np.array_equal(M, np.diag([t, -t])) for M, t in zip(mats, [-1, 0, 1])] == [True] * 3
    g = fam.polynomial_entry_family([[[0, 1], 1], [1, [0, -1]]], structure="hermitian")
    fam.sample(g, np.linspace(-1, 1, 5))
    h = fam.polynomial_entry_family([[0, 1], [[0, 1], 0]], structure="normal", domain=(0.0, 3.0))
    with pytest.raises(StructureViolation) as exc:
        fam.sample(h, [1.0, 2.0])
    assert exc.value.t == 2.0
    with pytest.raises(ValueError):
        fam.sample(f, [0.0, 0.0])


def test_horner_matches_polyval():
    c = [1 + 2j, -3.0, 0.5, 2j]
    for t in (-1.3, 0.0, 0.7, 2.0):
        assert fam.horner(c, t) == pytest.approx(np.polynomial.polynomial.polyval(t, c))


def test_glued_example_examples():
    f = fam.paper_example_family(8)
    assert np.array_equal(f(fam.paper_anchor(2)), np.diag([1.0, -1.0]) / 16)
    assert np.allclose(f.at(fam.paper_anchor(1), fam.paper_s(1)), 0.5 * np.array([[1, 1], [1, -1]]))
    A = f.at(fam.paper_anchor(2), 0.25)
    assert np.allclose(np.linalg.eigvalsh(A), [-math.sqrt(2) / 16, math.sqrt(2) / 16])
    assert fam.paper_s(3) == 1 / 64 <= 1 / 9
    for n in range(1, fam.MAX_PAPER_N + 1):
        assert fam.paper_s(n) <= 1 / n ** 2
    with pytest.raises(ValueError):
        fam.paper_example_family(31)


def test_glued_example_anchors_increase_and_segments_disjoint():
    anchors = [fam.paper_anchor(n) for n in range(1, 31)]
    assert all(b > a for a, b in zip(anchors, anchors[1:]))
    for n in range(1, 30):
        assert fam.paper_anchor(n) + 1 / n ** 2 < fam.paper_anchor(n + 1) - 1 / (n + 1) ** 2


def test_glued_example_offset_evaluation_resolves_tiny_s():
    f = fam.paper_example_family(8)
    n = 8
    t = fam.paper_anchor(n)
    s = fam.paper_s(n)
    assert t + s == t  # below the spacing at t_n
    A = f.at(t, s)
    assert A[0, 1] == pytest.approx(2.0 ** -64)
    assert np.max(np.linalg.eigvalsh(A)) == pytest.approx(fam.paper_eigenvalue(n, s), rel=1e-14)


def test_glued_example_closed_forms_consistent():
    for n in range(1, 6):
        s = 0.3 * fam.paper_s(n)
        h = 1e-6 * fam.paper_s(n)
        fd = (fam.paper_eigenvalue(n, s + h) - fam.paper_eigenvalue(n, s - h)) / (2 * h)
        assert fd == pytest.approx(fam.paper_eigenvalue_derivative(n, s), rel=1e-6)
        for alpha in (0.25, 1.0):
            sn = fam.paper_s(n)
            q = (fam.paper_eigenvalue_derivative(n, sn) - fam.paper_eigenvalue_derivative(n, 0.0)) / sn ** alpha
            assert q == pytest.approx(fam.paper_hoelder_quotient(n, alpha), rel=1e-12)


def test_glued_single_segment_exact():
    A, B = np.diag([1.0, 2.0]), np.array([[0, 1], [1, 0.0]])
    seg = fam.SegmentSpec(1, 0.0, 0.5, A, B)
    f = fam.glued_family([seg])
    assert np.array_equal(f(0.25), A + 0.25 * B)
    assert np.array_equal(f(5.0), A + 0.5 * B)
    assert np.array_equal(f(-5.0), A - 0.5 * B)
    assert f.structure == "hermitian"


def test_glued_overlap_and_spec_errors():
    A = np.eye(2)
    s1 = fam.SegmentSpec(1, 0.0, 0.5, A, A)
    s2 = fam.SegmentSpec(2, 0.6, 0.25, A, A)
    with pytest.raises(OverlappingSegments):
        fam.glued_family([s1, s2])
    with pytest.raises(OverlappingSegments):
        fam.glued_family([fam.SegmentSpec(2, 2.0, 0.25, A, A), s1])
    with pytest.raises(ValueError):
        fam.SegmentSpec(2, 0.0, 0.3, A, A)


def _example_blends(n_max=8):
    f = fam.paper_example_family(n_max)
    for n in range(1, n_max):
        yield f, fam.paper_anchor(n) + 1 / n ** 2, fam.paper_anchor(n + 1) - 1 / (n + 1) ** 2


def test_blend_within_hull_allowance():
    for f, x0, x1 in _example_blends():
        P0, P1 = f(x0).real, f(x1).real
        lo, hi = np.minimum(P0, P1), np.maximum(P0, P1)
        allow = 0.2 * (hi - lo)
        M = np.array([f(t).real for t in np.linspace(x0, x1, 2001)])
        assert np.all(M >= lo - allow) and np.all(M <= hi + allow)


def test_blend_first_derivative_continuous_at_joints():
    h = 1e-6
    for f, x0, x1 in _example_blends(4):
        for x in (x0, x1):
            d_left = (f(x) - f(x - h)) / h
            d_right = (f(x + h) - f(x)) / h
            assert np.allclose(d_left, d_right, atol=1e-3 * np.max(np.abs(d_left)) + 1e-9)


def test_quintic_weights_hermite_conditions():
    from numpy.polynomial import Polynomial

    u = np.linspace(0, 1, 11)
    W = np.array(fam._quintic_weights(u))
    # order: value0, slope0, curv0, curv1, slope1, value1
    want0 = {0: (1, 0, 0), 1: (0, 1, 0), 2: (0, 0, 1)}
    want1 = {5: (1, 0, 0), 4: (0, 1, 0), 3: (0, 0, 1)}
    for i in range(6):
        p = Polynomial.fit(u, W[i], 5).convert()
        at0 = [p(0.0), p.deriv(1)(0.0), p.deriv(2)(0.0)]
        at1 = [p(1.0), p.deriv(1)(1.0), p.deriv(2)(1.0)]
        assert np.allclose(at0, want0.get(i, (0, 0, 0)), atol=1e-9)
        assert np.allclose(at1, want1.get(i, (0, 0, 0)), atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_quintic_blend_endpoint_data(u, p0, d0, p1, d1):
    x0, x1 = 0.5, 2.0
    assert fam.quintic_blend(x0, x1, p0, d0, p1, d1, x0) == pytest.approx(p0, abs=1e-12)
    assert fam.quintic_blend(x0, x1, p0, d0, p1, d1, x1) == pytest.approx(p1, abs=1e-12)
    w = fam._quintic_weights(u)
    assert w[0] + w[5] == pytest.approx(1.0)  # constants reproduced


def test_schrodinger_examples():
    f = fam.schrodinger_family(lambda t, x: np.zeros_like(x), 200, (0.0, math.pi))
    w = np.linalg.eigvalsh(f(0.0).real)
    assert abs(w[0] - 1.0) <= 1e-3
    assert np.allclose(w, fam.dirichlet_laplacian_eigenvalues(200, math.pi), rtol=1e-10)
    g = fam.schrodinger_family(lambda t, x: t + 0 * x, 50, (0.0, 1.0))
    assert np.allclose(np.linalg.eigvalsh(g(0.7).real) - np.linalg.eigvalsh(g(0.0).real), 0.7)
    k = fam.schrodinger_family(lambda t, x: t * x, 60, (0.0, math.pi), domain=(-2.0, 2.0))
    ts = np.linspace(-2, 2, 41)
    low = np.array([np.linalg.eigvalsh(k(t).real)[0] for t in ts])
    assert np.all(np.diff(low, 2) <= 1e-9)
    with pytest.raises(ValueError):
        fam.schrodinger_family(lambda t, x: x, 2, (0, 1))
    assert f.structure == "hermitian" and f.metadata["h"] == pytest.approx(math.pi / 201)
