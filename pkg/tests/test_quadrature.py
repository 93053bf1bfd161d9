import math
from fractions import Fraction

import numpy as np
import pytest

from macrotab import complex as cx
from macrotab.exceptions import IncompatibleComplexesError
from macrotab.quadrature import common_rule, facet_rule, macro_rule, simplex_rule


def exact_monomial(a, b):
    """int_T x^a y^b over the unit triangle = a! b! / (a + b + 2)!."""
    return Fraction(math.factorial(a) * math.factorial(b), math.factorial(a + b + 2))


@pytest.fixture(scope="module")
def T():
    return cx.reference_simplex(2)


def test_simplex_rule_examples():
    r = simplex_rule(2, 1)
    assert math.isclose(r.weights.sum(), 0.5, rel_tol=1e-14)
    r = simplex_rule(2, 4)
    x, y = r.points.T
    assert math.isclose(r.integrate(x ** 2 * y ** 2), 1.0 / 180.0, rel_tol=1e-13)
    r = simplex_rule(1, 3)
    assert math.isclose(r.integrate(r.points[:, 0] ** 3), 0.25, rel_tol=1e-14)
    with pytest.raises(ValueError):
        simplex_rule(4, 2)
    with pytest.raises(ValueError):
        simplex_rule(2, -1)


def test_tetrahedron_rule():
    r = simplex_rule(3, 5)
    x, y, z = r.points.T
    # a! b! c! / (a + b + c + 3)!
    assert math.isclose(r.integrate(x ** 2 * y * z ** 2), 4 / math.factorial(8), rel_tol=1e-12)


def test_mapped_rule():
    verts = np.array([[1.0, 1.0], [3.0, 1.0], [1.0, 2.0]])
    r = simplex_rule(2, 2, verts)
    assert math.isclose(r.weights.sum(), 1.0, rel_tol=1e-14)
    assert np.allclose(r.integrate(r.points.T), [5.0 / 3.0, 4.0 / 3.0])


@pytest.mark.parametrize("split", ["alfeld", "ps6", "ps12", "iso2", "iso3"])
def test_macro_rules_exact_up_to_degree_8(T, split):
    C = cx.split(T, split)
    for k in range(9):
        r = macro_rule(C, k)
        assert len(r) == len(simplex_rule(2, k)) * C.num_cells
        x, y = r.points.T
        for a in range(k + 1):
            for b in range(k + 1 - a):
                ex = float(exact_monomial(a, b))
                assert abs(r.integrate(x ** a * y ** b) - ex) <= 1e-12 * ex


def test_macro_rule_point_counts(T):
    A = cx.alfeld_split(T)
    assert len(macro_rule(A, 6)) == 3 * len(simplex_rule(2, 6))
    assert math.isclose(macro_rule(A, 3).weights.sum(), 0.5, rel_tol=1e-14)
    P12 = cx.powell_sabin_split(T, "PS12")
    assert len(macro_rule(P12, 2)) == 12 * len(simplex_rule(2, 2))


def test_facet_rules(T):
    hyp = T.entity_id((1, 2))
    assert math.isclose(facet_rule(T, hyp, 0).weights.sum(), math.sqrt(2), rel_tol=1e-14)
    bottom = T.entity_id((0, 1))
    r = facet_rule(T, bottom, 2)
    assert math.isclose(r.integrate(r.points[:, 0] ** 2), 1.0 / 3.0, rel_tol=1e-14)
    A = cx.alfeld_split(T)
    inner = A.entity_id((0, 3))
    assert math.isclose(facet_rule(A, inner, 1).weights.sum(), math.sqrt(2) / 3, rel_tol=1e-14)
    with pytest.raises(ValueError):
        facet_rule(T, (1, 7), 1)


def test_common_rule(T):
    A = cx.alfeld_split(T)
    K = cx.no_split(T)
    assert len(common_rule(A, K, 3)) == len(macro_rule(A, 3))
    P12 = cx.powell_sabin_split(T, "PS12")
    assert len(common_rule(P12, A, 3)) == len(macro_rule(P12, 3))
    assert len(common_rule(A, P12, 3)) == len(macro_rule(P12, 3))
    with pytest.raises(IncompatibleComplexesError):
        common_rule(A, cx.iso_split(T, 2), 3)
