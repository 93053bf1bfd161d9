import numpy as np
import pytest

from macrotab import dualset as ds
from macrotab import elements as els
from macrotab.polyset import DG
from util import (c1_jump, div_jump, monomial, random_points, reproduction_error,
                  tau_n_jump)

REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

CATALOGUE = [
    ("lagrange", 1, None), ("lagrange", 2, "alfeld"), ("lagrange", 1, "iso"),
    ("lagrange", 3, "alfeld"), ("lagrange", 1, "iso3"), ("dg", 1, "alfeld"),
    ("ps6", None, None), ("ps12", None, None), ("hct3", None, None), ("hct-red", None, None),
    ("hct4", None, None), ("jm", None, None), ("as", None, None),
]


def el(name, degree=None, variant=None):
    return els.get_element(name, degree, variant)


def test_dimension_table():
    dims = {"ps6": 9, "ps12": 12, "hct3": 12, "hct-red": 9, "hct4": 19, "jm": 15, "as": 15}
    for name, d in dims.items():
        assert el(name).dim == d
    assert el("lagrange", 1, "iso").dim == 6
    assert el("lagrange", 2, "alfeld").dim == 10
    assert el("dg", 1, "alfeld").dim == 9


def test_lagrange_moment_variant_same_space():
    a = els.make_lagrange_macro("alfeld", 3, variant="moment")
    b = el("lagrange", 3, "alfeld")
    assert a.dim == b.dim == 19
    assert a.duality_error() <= 1e-8


def test_invalid_parameters():
    with pytest.raises(ValueError):
        els.make_lagrange_macro("alfeld", 0)
    with pytest.raises(ValueError):
        els.make_lagrange_macro("alfeld", 2, variant="bogus")
    with pytest.raises(ValueError):
        els.make_hct(2)
    with pytest.raises(ValueError):
        els.make_hct(4, reduced=True)
    with pytest.raises(ValueError):
        els.make_powell_sabin("PS7")
    with pytest.raises(KeyError):
        els.get_element("bogus")


@pytest.mark.parametrize("name,degree,variant", CATALOGUE)
def test_duality(name, degree, variant):
    assert el(name, degree, variant).duality_error() <= 1e-8


def test_hct_node_layout():
    h = el("hct3")
    ed = h.dual.entity_dofs
    assert all(len(ed[0][v]) == 3 for v in range(3))
    assert all(len(ed[1][e]) == 1 for e in range(3))
    h4 = el("hct4")
    ed = h4.dual.entity_dofs
    assert all(len(ed[1][e]) == 3 for e in range(3))
    assert len(ed[2][0]) == 1


def test_powell_sabin_nodes():
    p6, p12 = el("ps6"), el("ps12")
    assert all(n.entity[0] == 0 for n in p6.nodes)
    assert sum(n.entity[0] == 1 for n in p12.nodes) == 3


def test_ps6_partition_of_unity():
    p6 = el("ps6")
    coef = p6.interpolate(lambda x, a: np.ones(len(x)) if a == (0, 0) else np.zeros(len(x)))
    is_value = np.array([n.label == ds.POINT_EVAL for n in p6.nodes])
    assert np.allclose(coef[~is_value], 0.0, atol=1e-14)
    pts = random_points(REF, 20)
    vals = np.einsum("j,jq->q", coef, p6.tabulate(pts)[(0, 0)][..., 0])
    assert np.abs(vals - 1).max() <= 1e-12


@pytest.mark.parametrize("name", ["ps6", "ps12", "hct3", "hct-red", "hct4"])
def test_c1_jumps(name):
    assert c1_jump(el(name)) <= 1e-8


def test_johnson_mercier():
    jm = el("jm")
    assert jm.dim == 15 and jm.value_shape == els.SYMTENSOR
    assert tau_n_jump(jm) <= 1e-9
    ident = lambda x, a: np.tile([1.0, 0.0, 1.0], (len(x), 1)) if a == (0, 0) else np.zeros((len(x), 3))
    assert reproduction_error(jm, ident, random_points(REF, 20)) <= 1e-10
    # basis functions with vanishing edge nodes have zero traction on the boundary
    interior = [i for i, n in enumerate(jm.nodes) if n.meta["kind"] == "interior"]
    assert len(interior) == 3


def test_alfeld_sorokina():
    a = el("as")
    assert a.dim == 15 and a.value_shape == els.VECTOR
    assert div_jump(a) <= 1e-9
    assert a.cond < 1e6

    def u(x, alpha):
        out = np.zeros((len(x), 2))
        if alpha == (0, 0):
            out[:, 0], out[:, 1] = x[:, 0], -x[:, 1]
        elif alpha == (1, 0):
            out[:, 0] = 1.0
        elif alpha == (0, 1):
            out[:, 1] = -1.0
        return out

    coef = a.interpolate(u)
    div_nodes = [i for i, n in enumerate(a.nodes) if n.meta["kind"] == "div"]
    assert np.allclose(coef[div_nodes], 0.0, atol=1e-13)
    assert reproduction_error(a, u, random_points(REF, 20)) <= 1e-10


REPRODUCTION = [("ps6", 2), ("ps12", 2), ("hct3", 3), ("hct-red", 2), ("hct4", 4),
                ("lagrange-alfeld-2", 2), ("as", 2), ("jm", 1)]


@pytest.mark.parametrize("name,m", REPRODUCTION)
def test_polynomial_reproduction(name, m):
    if name == "lagrange-alfeld-2":
        e = el("lagrange", 2, "alfeld")
    else:
        e = el(name)
    pts = random_points(REF, 20, seed=3)
    for i in range(m + 1):
        for j in range(m + 1 - i):
            if e.ncomp == 1:
                assert reproduction_error(e, monomial(i, j), pts) <= 1e-9
            else:
                for c in range(e.ncomp):
                    assert reproduction_error(e, monomial(i, j, c, e.ncomp), pts) <= 1e-9


def test_reduced_hct_does_not_contain_all_cubics():
    # its normal derivatives are linear on every edge, which x^2 y violates
    assert reproduction_error(el("hct-red"), monomial(2, 1), random_points(REF, 20)) > 1e-3


def test_tabulate_examples():
    p1 = el("lagrange", 1)
    tab = els.tabulate(p1, np.array([[1 / 3, 1 / 3]]))
    assert np.allclose(tab[(0, 0)], 1 / 3)
    h = el("hct3")
    for v in range(3):
        t = h.tabulate(REF[v:v + 1])[(0, 0)][:, 0, 0]
        value_node = [i for i, n in enumerate(h.nodes)
                      if n.meta.get("kind") == "value" and n.meta["vertex"] == v][0]
        expect = np.zeros(h.dim)
        expect[value_node] = 1.0
        assert np.abs(t - expect).max() <= 1e-12
    iso = el("lagrange", 1, "iso")
    pts = random_points(REF, 10, seed=5)
    assert np.allclose(iso.tabulate(pts)[(0, 0)].sum(axis=0), 1.0, atol=1e-13)


def test_tabulated_values_wrapper():
    tv = els.tabulate(el("ps6"), np.array([[0.2, 0.3]]), 2)
    assert tv.shape == (9, 1, 1)
    assert tv.max_derivative_order == 2
    assert set(tv.values) == {(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)}


@pytest.mark.parametrize("name", ["ps6", "ps12", "hct3", "hct4"])
def test_owner_tie_break_immaterial_for_c1(name):
    e = el(name)
    C = e.complex
    for f in C.interior_facets():
        a, b = C.entity_vertices(1, f)
        x = (0.3 * a + 0.7 * b)[None, :]
        c0, c1 = C.cells_of_facet(f)
        default = e.tabulate(x, 1)
        assert np.allclose(default[(0, 0)], e.tabulate(x, 1, [min(c0, c1)])[(0, 0)])
        other = e.tabulate(x, 1, [max(c0, c1)])
        for k in default:
            assert np.abs(default[k] - other[k]).max() <= 1e-9


def test_dg_lagrange_is_affine_mapped():
    d = els.make_lagrange_macro("alfeld", 1, continuity=DG)
    assert d.mapping_kind == els.AFFINE and d.dim == 9


def test_cost_model():
    assert els.cost(el("ps6"), 6).C == 2916
    assert els.cost(el("ps12"), 6).C == 10368
    assert els.cost(el("hct4"), 16).C == 17328
    assert els.cost(el("hct3"), 12).N_q == 36
    with pytest.raises(ValueError):
        els.cost(el("ps6"), 0)
    table = {r["element"]: r for r in els.cost_table()}
    assert [table[k]["C"] for k in ("PS6", "PS12", "HCT3", "HCT4", "A5")] == [2916, 10368, 5184, 17328, 11025]
    assert (table["A5"]["N_dof"], table["A5"]["subcells"], table["A5"]["N_q"]) == (21, 1, 25)
    assert all(isinstance(r["C"], int) for r in table.values())


def test_rebuild_on_reference_is_catalogue():
    for name in ("hct3", "ps12", "jm"):
        e = el(name)
        r = e.rebuild(REF, ds.AVERAGE)
        assert np.allclose(r.coeffs, e.coeffs, atol=1e-10)
