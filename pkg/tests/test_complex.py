import itertools
import json
import math

import numpy as np
import pytest

from macrotab import complex as cx


def counts(C):
    return tuple(len(C.topology[k]) for k in sorted(C.topology))


@pytest.fixture(scope="module")
def T():
    return cx.reference_simplex(2)


def all_splits(T):
    return {
        "none": cx.no_split(T),
        "alfeld": cx.alfeld_split(T),
        "iso2": cx.iso_split(T, 2),
        "iso3": cx.iso_split(T, 3),
        "ps6": cx.powell_sabin_split(T, "PS6"),
        "ps12": cx.powell_sabin_split(T, "PS12"),
    }


def test_reference_simplices():
    assert counts(cx.reference_simplex(1)) == (2, 1)
    T = cx.reference_simplex(2)
    assert counts(T) == (3, 3, 1)
    assert np.allclose(T.vertices, [[0, 0], [1, 0], [0, 1]])
    assert counts(cx.reference_simplex(3)) == (4, 6, 4, 1)
    with pytest.raises(ValueError):
        cx.reference_simplex(4)


def test_alfeld_counts(T):
    A = cx.alfeld_split(T)
    assert counts(A) == (4, 6, 3)
    assert np.allclose(A.cell_volumes(), 1.0 / 6.0)
    assert np.allclose(A.vertices[3], T.vertices.mean(axis=0))
    # every subcell contains the barycenter and one parent edge
    for verts in A.topology[2].values():
        assert 3 in verts
        assert len([v for v in verts if v < 3]) == 2


def test_alfeld_tetrahedron_counts_match_enumeration():
    K = cx.reference_simplex(3)
    A = cx.alfeld_split(K)
    # independent count: 4 parent faces coned to b, plus b joined to the parent skeleton
    V = 4 + 1
    E = 6 + 4
    F = 4 + 6
    assert counts(A) == (V, E, F, 4)
    assert math.isclose(A.cell_volumes().sum(), 1.0 / 6.0, rel_tol=1e-13)


def test_iso_split(T):
    I2 = cx.iso_split(T, 2)
    assert counts(I2)[0] == 6 and I2.num_cells == 4
    assert np.allclose(I2.cell_volumes(), 1.0 / 8.0)
    I3 = cx.iso_split(T, 3)
    assert counts(I3)[0] == 10 and I3.num_cells == 9
    with pytest.raises(ValueError):
        cx.iso_split(T, 1)
    with pytest.raises(ValueError):
        cx.iso_split(cx.reference_simplex(3), 2)


def test_powell_sabin(T):
    P6 = cx.powell_sabin_split(T, "PS6")
    assert counts(P6)[0] == 7 and P6.num_cells == 6
    assert math.isclose(P6.cell_volumes().sum(), 0.5, rel_tol=1e-13)
    P12 = cx.powell_sabin_split(T, "PS12")
    assert P12.num_cells == 12
    # the midpoint segments cross the medians, adding three vertices
    assert counts(P12)[0] == 10
    with pytest.raises(ValueError):
        cx.powell_sabin_split(cx.reference_simplex(3))


def test_split_of_split_rejected(T):
    with pytest.raises(ValueError):
        cx.alfeld_split(cx.alfeld_split(T))


@pytest.mark.parametrize("name", ["none", "alfeld", "iso2", "iso3", "ps6", "ps12"])
def test_split_invariants(T, name):
    C = all_splits(T)[name]
    assert math.isclose(C.cell_volumes().sum(), 0.5, rel_tol=1e-13)
    assert counts(C)[0] - counts(C)[1] + counts(C)[2] == 1
    for f in sorted(C.topology[1]):
        n = len(C.cells_of_facet(f))
        assert n == (2 if C.is_interior_facet(f) else 1)
    # child vertices lie in the closure of their parent entity
    for v in range(len(C.vertices)):
        dim, pid = C.parent_entity_of[(0, v)]
        pverts = set(T.topology[dim][pid])
        lam = T.barycentric(C.vertices[v:v + 1])[0]
        outside = [i for i in range(3) if i not in pverts]
        assert np.all(np.abs(lam[outside]) <= 1e-12)
        assert np.all(lam[list(pverts)] > 1e-12)


def test_parent_entity_lowest_dimension(T):
    P6 = cx.powell_sabin_split(T, "PS6")
    for v in range(3):
        assert P6.parent_entity_of[(0, v)] == (0, v)
    dims = sorted(P6.parent_entity_of[(0, v)][0] for v in range(7))
    assert dims == [0, 0, 0, 1, 1, 1, 2]


def test_refinement(T):
    S = all_splits(T)
    assert cx.is_refinement_of(S["ps12"], S["alfeld"])
    assert cx.is_refinement_of(S["ps12"], S["ps6"])
    assert cx.is_refinement_of(S["ps6"], S["alfeld"])
    assert cx.is_refinement_of(T, T)
    assert not cx.is_refinement_of(S["alfeld"], S["iso2"])
    assert not cx.is_refinement_of(S["iso2"], S["alfeld"])
    names = list(S)
    for a, b, c in itertools.product(names, repeat=3):
        if cx.is_refinement_of(S[a], S[b]) and cx.is_refinement_of(S[b], S[c]):
            assert cx.is_refinement_of(S[a], S[c])
    for a in names:
        assert cx.is_refinement_of(S[a], S[a])


def test_facet_frames(T):
    frames = cx.facet_frames(T)
    for fr in frames:
        assert abs(fr.normal @ fr.tangents[0]) < 1e-14
        assert math.isclose(np.linalg.norm(fr.normal), 1.0, abs_tol=1e-14)
    hyp = frames[T.entity_id((1, 2))[1]]
    assert np.allclose(hyp.normal, [1 / math.sqrt(2), 1 / math.sqrt(2)])
    assert math.isclose(hyp.measure, math.sqrt(2))
    bottom = frames[T.entity_id((0, 1))[1]]
    assert np.allclose(bottom.tangents[0], [1, 0]) and math.isclose(bottom.measure, 1.0)
    A = cx.alfeld_split(T)
    fid = A.entity_id((0, 3))[1]
    assert math.isclose(cx.facet_frame(A, fid).measure, math.sqrt(2) / 3)


def test_boundary_normals_point_outward(T):
    for C in all_splits(T).values():
        for f in C.boundary_facets():
            fr = cx.facet_frame(C, f)
            mid = C.entity_vertices(1, f).mean(axis=0)
            assert fr.normal @ (mid - T.vertices.mean(axis=0)) > 0


def test_locate_tie_break(T):
    A = cx.alfeld_split(T)
    b = A.vertices[3]
    assert A.locate(b[None])[0] == min(A.topology[2])
    with pytest.raises(ValueError):
        A.locate(np.array([[2.0, 2.0]]))


def test_json_roundtrip(T):
    A = cx.alfeld_split(T)
    doc = json.loads(A.to_json())
    assert doc["dim"] == 2
    assert len(doc["vertices"]) == 4
    assert len(doc["topology"]["2"]) == 3
    assert sorted(doc) == ["dim", "topology", "vertices"]
