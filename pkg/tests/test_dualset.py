import math

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from macrotab import complex as cx
from macrotab import dualset as ds
from macrotab import polyset as ps
from macrotab.elements import get_element
from macrotab.exceptions import NotUnisolventError


def fset(fn, ncomp=1):
    return ds.FunctionSet(fn, ncomp)


def poly(coefs):
    """fn(points, alpha) for p = sum c_ij x^i y^j, any derivative."""
    def fn(x, alpha):
        out = np.zeros(len(x))
        for (i, j), c in coefs.items():
            if i < alpha[0] or j < alpha[1]:
                continue
            k = math.perm(i, alpha[0]) * math.perm(j, alpha[1])
            out += c * k * x[:, 0] ** (i - alpha[0]) * x[:, 1] ** (j - alpha[1])
        return out
    return fn


def ev(f, p):
    return ds.evaluate([f], fset(p))[0, 0]


@pytest.fixture(scope="module")
def T():
    return cx.reference_simplex(2)


def test_point_eval_examples():
    assert ev(ds.point_eval((0.0, 0.0)), poly({(0, 0): 1, (1, 0): 1, (0, 1): 1})) == 1.0
    assert ev(ds.point_eval((1.0, 0.0)), poly({(2, 0): 1})) == 1.0
    dub = lambda x, a: ps.dubiner_tabulate(2, 0, x, sum(a))[a][0, :, 0]
    assert math.isclose(ev(ds.point_eval((1 / 3, 1 / 3)), dub), math.sqrt(2))


def test_directional_derivative_examples():
    assert math.isclose(ev(ds.point_directional_deriv((1.0, 0.0), (1.0, 0.0)), poly({(2, 0): 1})), 2.0)
    assert ev(ds.point_directional_deriv((0.3, 0.2), (0.0, 1.0)), poly({(1, 0): 1})) == 0.0
    s = np.array([1.0, 1.0]) / math.sqrt(2)
    assert math.isclose(ev(ds.point_directional_deriv((1.0, 1.0), s), poly({(1, 1): 1})), math.sqrt(2))
    with pytest.raises(ValueError):
        ds.point_directional_deriv((0.0, 0.0), (0.0, 0.0))


def test_moment_examples(T):
    bottom = T.entity_id((0, 1))
    f = ds.moment(T, bottom, kind=ds.TRACE, degree=1)
    assert math.isclose(ev(f, poly({(1, 0): 1})), 0.5, rel_tol=1e-14)
    hyp = T.entity_id((1, 2))
    f = ds.moment(T, hyp, kind=ds.NORMAL_DERIV, normalization=ds.AVERAGE, degree=1)
    assert math.isclose(ev(f, poly({(1, 0): 1, (0, 1): 1})), math.sqrt(2), rel_tol=1e-14)


def test_tangential_moment_is_endpoint_difference(T):
    p = poly({(3, 0): 1, (1, 2): -2.0, (0, 1): 0.5})
    for verts in [(0, 1), (0, 2), (1, 2)]:
        e = T.entity_id(verts)
        f = ds.moment(T, e, ds.jacobi_weight(0), ds.TANGENTIAL_DERIV, degree=3)
        va, vb = T.vertices[list(verts)]
        diff = ev(ds.point_eval(vb), p) - ev(ds.point_eval(va), p)
        assert math.isclose(ev(f, p), diff, rel_tol=1e-13, abs_tol=1e-14)


def test_trace_moment_exact_against_high_order_quadrature(T):
    p = poly({(5, 0): 1.0, (2, 3): -0.7, (1, 1): 2.0, (0, 4): 0.3})
    hyp = T.entity_id((1, 2))
    f = ds.moment(T, hyp, ds.jacobi_weight(2), ds.TRACE, degree=5, q_degree=2)
    # independent reference: 20-point Gauss-Legendre along the edge
    g, w = leggauss(20)
    a, b = T.vertices[1], T.vertices[2]
    x = a + 0.5 * (g[:, None] + 1) * (b - a)
    L = math.sqrt(2)
    ref = 0.5 * L * (w * ps.jacobi(2, 1, 1, g) * p(x, (0, 0))).sum()
    assert math.isclose(ev(f, p), ref, rel_tol=1e-12)


def test_average_normal_of_constant_normal_derivative(T):
    c = 2.5
    for verts in [(0, 1), (0, 2), (1, 2)]:
        e = T.entity_id(verts)
        n = cx.facet_frame(T, e[1]).normal
        p = poly({(1, 0): c * n[0], (0, 1): c * n[1], (0, 0): 3.0})
        f = ds.moment(T, e, kind=ds.NORMAL_DERIV, normalization=ds.AVERAGE, degree=1)
        assert abs(ev(f, p) - c) <= 1e-13


def test_moment_errors(T):
    with pytest.raises(ValueError):
        ds.moment(T, (1, 9))
    with pytest.raises(ValueError):
        ds.moment(T, (1, 0), kind="BOGUS")


def test_jump_functionals(T):
    A = cx.alfeld_split(T)
    f = A.interior_facets()[0]
    base = ds.moment(A, (1, f), kind=ds.TRACE, degree=2, on_child=True)
    C0 = ps.macro_expansion(A, 2, ps.C0)
    J = ds.jump_functional(A, f, base)
    assert np.abs(ds.evaluate([J], C0)).max() <= 1e-13
    # a DG member living on one subcell: jump = +/- its one-sided normal moment
    DG = ps.macro_expansion(A, 1, ps.DG)
    nb = ds.moment(A, (1, f), kind=ds.NORMAL_DERIV, degree=1, on_child=True)
    Jn = ds.evaluate([ds.jump_functional(A, f, nb)], DG)[0]
    plus, minus = A.cells_of_facet(f)
    one_sided = ds.evaluate([nb.with_cells(plus)], DG)[0]
    m = 3
    assert np.allclose(Jn[plus * m:(plus + 1) * m], one_sided[plus * m:(plus + 1) * m])
    one_sided_minus = ds.evaluate([nb.with_cells(minus)], DG)[0]
    assert np.allclose(Jn[minus * m:(minus + 1) * m], -one_sided_minus[minus * m:(minus + 1) * m])
    assert np.abs(Jn).max() > 0.1
    with pytest.raises(ValueError):
        ds.jump_functional(A, A.boundary_facets()[0], base)


def test_vandermonde_identity_for_nodal_p1(T):
    K = cx.no_split(T)
    E = ps.macro_expansion(K, 1, ps.C0)
    pts, _ = ps.c0_lattice(K, 1)
    nodes = [ds.point_eval(x, entity=(0, i)) for i, x in enumerate(pts)]
    V, cond = ds.vandermonde(ds.DualSet(nodes, K), E)
    assert np.allclose(V, np.eye(3), atol=1e-14)
    assert math.isclose(cond, 1.0, rel_tol=1e-12)


def test_hct3_vandermonde_conditioning():
    assert get_element("hct3").cond < 1e6


def test_duplicated_node_is_not_unisolvent(T):
    K = cx.no_split(T)
    E = ps.macro_expansion(K, 1, ps.C0)
    nodes = [ds.point_eval(T.vertices[0]), ds.point_eval(T.vertices[0]), ds.point_eval(T.vertices[1])]
    V, cond = ds.vandermonde(nodes, E)
    with pytest.raises(NotUnisolventError) as info:
        ds.coefficients(V, cond)
    nv = info.value.null_vector
    assert np.abs(V @ nv).max() <= 1e-10 * np.abs(V).max()
    with pytest.raises(ValueError):
        ds.vandermonde(nodes[:2], E)


def test_functional_algebra():
    f = ds.point_eval((0.2, 0.1))
    g = ds.point_directional_deriv((0.2, 0.1), (1.0, 0.0))
    p = poly({(2, 0): 1.0})
    assert math.isclose(ev(f + g, p), 0.04 + 0.4)
    assert math.isclose(ev(f - g, p), 0.04 - 0.4)
    assert math.isclose(ev(f.scaled(3.0), p), 0.12)
    assert g.order == 1 and f.order == 0


def test_dualset_entity_dofs():
    el = get_element("hct3")
    ed = el.dual.entity_dofs
    assert sum(len(v) for ents in ed.values() for v in ents.values()) == 12
    assert [len(ed[0][v]) for v in range(3)] == [3, 3, 3]
    assert [len(ed[1][e]) for e in range(3)] == [1, 1, 1]
