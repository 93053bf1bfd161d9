"""Reference simplices, their splits, topology and facet geometry.

Entity numbering: vertices keep their given ids; entities of dimension
>= 1 are sorted reverse-lexicographically by their sorted vertex tuple.
On a single simplex this is the usual "facet i is opposite vertex i"
convention, and on an Alfeld split subcell i is the cone over parent
facet i.
"""
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

BARY_TOL = 1e-12


def _measure(pts):
    """k-dimensional volume of the simplex spanned by the rows of pts."""
    pts = np.asarray(pts, dtype=float)
    k = len(pts) - 1
    if k == 0:
        return 1.0
    A = (pts[1:] - pts[0]).T
    gram = A.T @ A
    return math.sqrt(max(np.linalg.det(gram), 0.0)) / math.factorial(k)


class SimplicialComplex:
    """A conforming collection of simplices sharing a vertex list."""

    def __init__(self, vertices, cells):
        self.vertices = np.array(vertices, dtype=float)
        self.vertices.setflags(write=False)
        self.dim = self.vertices.shape[1]
        d = self.dim
        cells = [tuple(sorted(int(v) for v in c)) for c in cells]
        for c in cells:
            if len(c) != d + 1:
                raise ValueError("cells must have d+1 vertices")
            if min(c) < 0 or max(c) >= len(self.vertices):
                raise ValueError("cell refers to a missing vertex")

        topology = {0: {i: (i,) for i in range(len(self.vertices))}}
        for k in range(1, d + 1):
            ents = set()
            for c in cells:
                ents.update(itertools.combinations(c, k + 1))
            topology[k] = dict(enumerate(sorted(ents, reverse=True)))
        self.topology = topology
        self._lookup = {k: {v: i for i, v in topology[k].items()} for k in topology}

        # connectivity[(k, j)][i] -> ids of dim-j entities in entity (k, i), j < k
        conn = {}
        for k in range(1, d + 1):
            for j in range(k):
                conn[(k, j)] = {
                    i: tuple(sorted((self._lookup[j][s] for s in itertools.combinations(verts, j + 1)),
                                    key=lambda e: self._local_order(j, e, verts)))
                    for i, verts in topology[k].items()
                }
        self.connectivity = conn

        # cofacets: cells containing each codim-1 entity
        cof = {i: [] for i in topology[d - 1]} if d >= 1 else {}
        for c, facets in conn.get((d, d - 1), {}).items():
            for f in facets:
                cof[f].append(c)
        self._cells_of_facet = {f: tuple(sorted(cs)) for f, cs in cof.items()}

    def _local_order(self, j, e, verts):
        # order sub-entities as "opposite local vertex" when j == k - 1
        ev = self.topology[j][e]
        missing = [v for v in verts if v not in ev]
        return tuple(verts.index(m) for m in missing)

    # -- queries -----------------------------------------------------------
    @property
    def num_cells(self):
        return len(self.topology[self.dim])

    def entity_id(self, verts):
        verts = tuple(sorted(verts))
        return len(verts) - 1, self._lookup[len(verts) - 1][verts]

    def entity_vertices(self, dim, eid):
        return self.vertices[list(self.topology[dim][eid])]

    def volume(self, dim=None, eid=0):
        if dim is None:
            dim = self.dim
        return _measure(self.entity_vertices(dim, eid))

    def cell_volumes(self):
        return np.array([self.volume(self.dim, c) for c in sorted(self.topology[self.dim])])

    def cells_of_facet(self, fid):
        return self._cells_of_facet[fid]

    def interior_facets(self):
        return [f for f, cs in sorted(self._cells_of_facet.items()) if len(cs) == 2]

    def boundary_facets(self):
        return [f for f, cs in sorted(self._cells_of_facet.items()) if len(cs) == 1]

    def barycentric(self, points, cell=0):
        """Barycentric coordinates of points w.r.t. cell; shape (npts, d+1)."""
        verts = self.entity_vertices(self.dim, cell)
        A = (verts[1:] - verts[0]).T
        x = np.atleast_2d(np.asarray(points, dtype=float)) - verts[0]
        lam = np.linalg.solve(A, x.T).T
        return np.column_stack([1.0 - lam.sum(axis=1), lam])

    def locate(self, points, tol=1e-10):
        """Owner subcell of each point: smallest cell id containing it."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        owner = np.full(len(pts), -1, dtype=int)
        best = np.full(len(pts), -np.inf)
        bestc = np.zeros(len(pts), dtype=int)
        for c in sorted(self.topology[self.dim]):
            mins = self.barycentric(pts, c).min(axis=1)
            hit = (owner < 0) & (mins >= -tol)
            owner[hit] = c
            better = mins > best
            best[better] = mins[better]
            bestc[better] = c
        miss = owner < 0
        if np.any(best[miss] < -1e-8):
            raise ValueError("point lies outside the complex")
        owner[miss] = bestc[miss]
        return owner

    def to_json(self):
        return json.dumps(self.as_dict())

    def as_dict(self):
        return {
            "dim": self.dim,
            "vertices": self.vertices.tolist(),
            "topology": {str(k): {str(i): list(v) for i, v in ents.items()}
                         for k, ents in self.topology.items()},
        }

    def __repr__(self):
        counts = ", ".join(str(len(self.topology[k])) for k in sorted(self.topology))
        return f"{type(self).__name__}(dim={self.dim}, entities=[{counts}])"


class SplitSimplicialComplex(SimplicialComplex):
    """A complex subdividing a single parent simplex.

    ``parent_entity_of[(dim, id)]`` is the lowest-dimensional parent entity
    whose closure contains the child entity; ``(d, 0)`` means interior.
    """

    def __init__(self, parent, vertices, cells):
        if parent.num_cells != 1:
            raise ValueError("parent must be a single simplex")
        super().__init__(vertices, cells)
        self.parent = parent
        lam = parent.barycentric(self.vertices, 0)
        if lam.min() < -BARY_TOL:
            raise ValueError("split vertex outside parent")
        support = [frozenset(np.flatnonzero(row > BARY_TOL)) for row in lam]
        pmap = {}
        for k, ents in self.topology.items():
            for i, verts in ents.items():
                s = frozenset().union(*(support[v] for v in verts))
                pmap[(k, i)] = parent.entity_id(tuple(sorted(s)))
        self.parent_entity_of = pmap

    @property
    def child(self):
        return self

    def children_of(self, dim, pid, child_dim=None):
        """Child entities of dimension child_dim (default dim) inside parent (dim, pid)."""
        if child_dim is None:
            child_dim = dim
        return [i for i in sorted(self.topology[child_dim])
                if self.parent_entity_of[(child_dim, i)] == (dim, pid)]

    def is_interior_facet(self, fid):
        return len(self.cells_of_facet(fid)) == 2


@dataclass(frozen=True)
class FacetFrame:
    entity: tuple
    normal: np.ndarray
    tangents: list = field(default_factory=list)
    measure: float = 1.0


def reference_simplex(d):
    if d not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {d}")
    verts = np.vstack([np.zeros(d), np.eye(d)])
    return SimplicialComplex(verts, [tuple(range(d + 1))])


def simplex(vertices):
    """Single simplex with the given vertex coordinates."""
    verts = np.asarray(vertices, dtype=float)
    return SimplicialComplex(verts, [tuple(range(len(verts)))])


def _check_single(K):
    if isinstance(K, SplitSimplicialComplex) or K.num_cells != 1:
        raise ValueError("input must be a single simplex")


def no_split(K):
    _check_single(K)
    return SplitSimplicialComplex(K, K.vertices, [tuple(range(K.dim + 1))])


def alfeld_split(K):
    _check_single(K)
    d = K.dim
    verts = np.vstack([K.vertices, K.vertices.mean(axis=0)])
    b = d + 1
    cells = [tuple(v for v in range(d + 1) if v != i) + (b,) for i in range(d + 1)]
    return SplitSimplicialComplex(K, verts, cells)


def iso_split(K, ell=2):
    _check_single(K)
    if K.dim != 2:
        raise ValueError("iso split is only defined on triangles")
    if ell < 2:
        raise ValueError("ell must be >= 2")
    v0, v1, v2 = K.vertices
    corner = {(0, 0): 0, (ell, 0): 1, (0, ell): 2}
    ids = dict(corner)
    pts = [v0, v1, v2]
    for j in range(ell + 1):
        for i in range(ell + 1 - j):
            if (i, j) not in ids:
                ids[(i, j)] = len(pts)
                pts.append(v0 + (i / ell) * (v1 - v0) + (j / ell) * (v2 - v0))
    cells = []
    for j in range(ell):
        for i in range(ell - j):
            cells.append((ids[(i, j)], ids[(i + 1, j)], ids[(i, j + 1)]))
            if i + j + 2 <= ell:
                cells.append((ids[(i + 1, j)], ids[(i, j + 1)], ids[(i + 1, j + 1)]))
    return SplitSimplicialComplex(K, np.array(pts), cells)


def powell_sabin_split(K, variant="PS6"):
    """PS6: cone from the barycenter over the 6 half-edges.

    PS12 additionally joins the edge midpoints; those segments cross the
    medians at three extra vertices, giving 10 vertices and 12 cells.
    """
    _check_single(K)
    if K.dim != 2:
        raise ValueError("Powell-Sabin splits are only defined on triangles")
    variant = variant.upper()
    v = K.vertices
    b = v.mean(axis=0)
    # edge i is opposite vertex i
    mids = [(v[1] + v[2]) / 2, (v[0] + v[2]) / 2, (v[0] + v[1]) / 2]
    verts = [v[0], v[1], v[2], b] + mids
    B = 3
    M = [4, 5, 6]
    if variant == "PS6":
        cells = []
        for i in range(3):
            for j in range(3):
                if j != i:
                    cells.append((i, M[j], B))
        return SplitSimplicialComplex(K, np.array(verts), cells)
    if variant != "PS12":
        raise ValueError(f"unknown Powell-Sabin variant {variant!r}")
    # p_i: midpoint of the midpoint-edge opposite vertex i, on the median from v_i
    P = [7, 8, 9]
    for i in range(3):
        a, c = [M[j] for j in range(3) if j != i]
        verts.append((verts[a] + verts[c]) / 2)
    cells = []
    for i in range(3):
        others = [j for j in range(3) if j != i]
        for j in others:
            cells.append((i, M[j], P[i]))        # corner triangle halves
            cells.append((M[j], P[i], B))        # inner pieces along the median
    return SplitSimplicialComplex(K, np.array(verts), cells)


def split(K, name, ell=None):
    name = name.lower()
    if name in ("none", "", "unsplit"):
        return no_split(K)
    if name == "alfeld":
        return alfeld_split(K)
    if name.startswith("iso"):
        n = name[3:]
        return iso_split(K, ell or (int(n) if n else 2))
    if name in ("ps6", "ps12"):
        return powell_sabin_split(K, name.upper())
    raise ValueError(f"unknown split {name!r}")


def _parent_of(C):
    return C.parent if isinstance(C, SplitSimplicialComplex) else C


def is_refinement_of(fine, coarse, tol=BARY_TOL):
    pf, pc = _parent_of(fine), _parent_of(coarse)
    if pf.num_cells != 1 or pc.num_cells != 1:
        return False
    if pf.vertices.shape != pc.vertices.shape or not np.allclose(pf.vertices, pc.vertices):
        return False
    d = fine.dim
    for c in sorted(fine.topology[d]):
        pts = fine.entity_vertices(d, c)
        if not any(coarse.barycentric(pts, cc).min() >= -tol for cc in sorted(coarse.topology[d])):
            return False
    return True


def _on_parent_boundary(C, fid):
    d = C.dim
    if isinstance(C, SplitSimplicialComplex):
        return C.parent_entity_of[(d - 1, fid)][0] == d - 1
    return len(C.cells_of_facet(fid)) == 1


def facet_frame(C, fid):
    d = C.dim
    verts = C.entity_vertices(d - 1, fid)
    measure = _measure(verts)
    if d == 1:
        normal = np.array([1.0])
        tangents = []
    elif d == 2:
        t = verts[1] - verts[0]
        t = t / np.linalg.norm(t)
        normal = np.array([t[1], -t[0]])
        tangents = [t]
    else:
        t1 = verts[1] - verts[0]
        t1 = t1 / np.linalg.norm(t1)
        t2 = verts[2] - verts[0]
        t2 = t2 - (t2 @ t1) * t1
        t2 = t2 / np.linalg.norm(t2)
        normal = np.cross(t1, t2)
        tangents = [t1, t2]
    if _on_parent_boundary(C, fid):
        P = _parent_of(C)
        if normal @ (verts.mean(axis=0) - P.vertices.mean(axis=0)) < 0:
            normal = -normal
    return FacetFrame((d - 1, fid), normal, tangents, measure)


def facet_frames(C):
    return [facet_frame(C, f) for f in sorted(C.topology[C.dim - 1])]
