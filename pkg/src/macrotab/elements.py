"""The macroelement catalogue.

Every constructor takes optional simplex vertices so the same recipe can
build the element directly on a physical cell.  On the reference cell the
edge normal-derivative nodes are integral averages; on other cells they
default to plain moments.  Node order is vertex-major (value, then the
Cartesian gradient), followed by edge nodes and interior nodes.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from macrotab import dualset as ds
from macrotab.complex import alfeld_split, reference_simplex, simplex, split
from macrotab.polyset import (
    C0, DG, TabulatedValues, c0_lattice, constrained_expansion, dubiner_tabulate,
    macro_expansion, polynomial_dimension,
)

SCALAR, VECTOR, SYMTENSOR = "scalar", "vector", "symmetric-tensor"
AFFINE, HERMITE_TYPE, HCT_TYPE, PIOLA_DOUBLE, ORACLE_REBUILD = (
    "AFFINE", "HERMITE_TYPE", "HCT_TYPE", "PIOLA_DOUBLE", "ORACLE_REBUILD")


class CiarletElement:
    """Expansion set + dual set + coefficients of the nodal basis."""

    def __init__(self, name, complex, degree, value_shape, expansion, dual, mapping_kind,
                 params=None, extended=None):
        self.name = name
        self.complex = complex
        self.degree = degree
        self.value_shape = value_shape
        self.expansion = expansion
        self.dual = dual
        self.mapping_kind = mapping_kind
        self.params = dict(params or {})
        self.extended = extended
        self.vandermonde, self.cond = ds.vandermonde(dual, expansion)
        self.coeffs = ds.coefficients(self.vandermonde, self.cond)
        self.basis = expansion.take(self.coeffs)

    @property
    def dim(self):
        return len(self.dual.nodes)

    @property
    def space_dimension(self):
        return self.dim

    @property
    def nodes(self):
        return self.dual.nodes

    @property
    def ncomp(self):
        return self.expansion.ncomp

    @property
    def vertices(self):
        return self.complex.parent.vertices

    @property
    def num_subcells(self):
        return self.complex.num_cells

    def tabulate(self, points, max_deriv=0, cells=None):
        """{alpha: (dim, npts, ncomp)} for every derivative of order <= max_deriv."""
        return self.basis.tabulate(points, max_deriv, cells)

    def duality_error(self):
        L = ds.evaluate(self.dual.nodes, self.basis)
        return np.abs(L - np.eye(self.dim)).max()

    def interpolate(self, fn):
        """Node values of fn(points, alpha) -> (npts,) or (npts, ncomp)."""
        return ds.evaluate(self.dual.nodes, ds.FunctionSet(fn, self.ncomp))[:, 0]

    def rebuild(self, vertices, normalization=ds.RAW):
        """The same element recipe on another simplex."""
        return build(self.name, vertices=vertices, normalization=normalization, **self.params)

    def physical_dual(self, vertices, normalization=ds.RAW):
        """Only the nodes of the same recipe on another simplex."""
        return build(self.name, vertices=vertices, normalization=normalization, nodes_only=True,
                     **self.params)

    def __repr__(self):
        return f"CiarletElement({self.name!r}, dim={self.dim}, subcells={self.num_subcells})"


def tabulate(el, points, max_deriv=0, cells=None):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return TabulatedValues(el.tabulate(pts, max_deriv, cells), pts, max_deriv)


# -- helpers -----------------------------------------------------------------

def _cell(vertices, d=2):
    return reference_simplex(d) if vertices is None else simplex(vertices)


def _normalization(vertices, normalization):
    if normalization is not None:
        return normalization
    return ds.AVERAGE if vertices is None else ds.RAW


def _point_entity(P, x, tol=1e-12):
    """Lowest-dimensional entity of the single simplex P whose closure holds x."""
    lam = P.barycentric(x, 0)[0]
    support = tuple(int(i) for i in np.flatnonzero(lam > tol))
    return P.entity_id(support)


def hermite_vertex_nodes(P, ncomp=1):
    nodes = []
    for v in range(P.dim + 1):
        x = P.vertices[v]
        nodes.append(ds.point_eval(x, entity=(0, v), meta={"kind": "value", "vertex": v}))
        for i in range(P.dim):
            nodes.append(ds.gradient_component(x, i, entity=(0, v),
                                               meta={"kind": "grad", "vertex": v}))
    return nodes


def edge_normal_nodes(C, k_edge, degree, normalization, weight=ds.jacobi_weight, kind_name="normal"):
    """Normal-derivative moments against weight(i), i < k_edge, per parent edge."""
    out = []
    for e in sorted(C.parent.topology[1]):
        for i in range(k_edge):
            out.append(ds.moment(C, (1, e), weight(i), ds.NORMAL_DERIV, normalization,
                                 degree=degree, q_degree=i + 2,
                                 meta={"kind": kind_name, "edge": e, "index": i}))
    return out


def edge_trace_nodes(C, imax, degree):
    """Trace moments against d/ds P_i^{(1,1)}, i = 1..imax, per parent edge.

    The d/ds weight already carries the 1/|e| scaling, so these nodes take
    the same value on any affine image of the edge.
    """
    out = []
    for e in sorted(C.parent.topology[1]):
        L = C.parent.volume(1, e)
        for i in range(1, imax + 1):
            dq = ds.djacobi_weight(i)
            out.append(ds.moment(C, (1, e), lambda s, dq=dq, L=L: dq(s) * (2.0 / L), ds.TRACE,
                                 ds.RAW, degree=degree, q_degree=i,
                                 meta={"kind": "trace", "edge": e, "index": i}))
    return out


def interior_dubiner_nodes(C, qdeg, degree, ncomp=1, comp=0):
    """Cell moments against reference Dubiner polynomials of degree <= qdeg."""
    out = []
    m = polynomial_dimension(C.dim, qdeg)
    for j in range(m):
        q = lambda xh, j=j: dubiner_tabulate(C.dim, qdeg, xh)[(0,) * C.dim][j, :, 0]
        out.append(ds.moment(C, (C.dim, 0), q, ds.TRACE, ds.RAW, degree=degree, q_degree=qdeg,
                             comp=comp, meta={"kind": "interior", "index": j}))
    return out


# -- Lagrange ----------------------------------------------------------------

def make_lagrange_macro(split_name="none", k=1, continuity=C0, variant="point", vertices=None,
                        ncomp=1, normalization=None, nodes_only=False):
    """Continuous or discontinuous piecewise P_k on a split (vector if ncomp > 1)."""
    K = _cell(vertices)
    C = split(K, split_name)
    P = C.parent
    shape = SCALAR if ncomp == 1 else VECTOR
    params = dict(split_name=split_name, k=k, continuity=continuity, variant=variant, ncomp=ncomp)
    if continuity == DG:
        if k < 0:
            raise ValueError("degree must be >= 0")
        nodes = []
        for c in range(ncomp):
            for t in range(C.num_cells):
                for j in range(polynomial_dimension(C.dim, k)):
                    q = lambda xh, j=j: dubiner_tabulate(C.dim, k, xh)[(0,) * C.dim][j, :, 0]
                    f = ds.moment(C, (C.dim, t), q, ds.TRACE, ds.RAW, degree=k, q_degree=k,
                                  comp=c, on_child=True,
                                  meta={"kind": "interior", "cell": t, "index": j, "comp": c})
                    nodes.append(ds._replace(f, entity=(C.dim, 0)))
        if nodes_only:
            return ds.DualSet(nodes, C)
        exp = macro_expansion(C, k, DG, ncomp)
        return CiarletElement("lagrange", C, k, shape, exp, ds.DualSet(nodes, C), AFFINE, params)
    if continuity != C0:
        raise ValueError(f"unknown continuity {continuity!r}")
    if k < 1:
        raise ValueError("C0 Lagrange needs k >= 1")
    nodes = []
    if variant == "point":
        pts, _ = c0_lattice(C, k)
        for c in range(ncomp):
            for x in pts:
                nodes.append(ds.point_eval(x, comp=c, entity=_point_entity(P, x[None, :]),
                                           meta={"kind": "point", "comp": c}))
    elif variant == "moment":
        for c in range(ncomp):
            for v in range(len(C.vertices)):
                x = C.vertices[v]
                nodes.append(ds.point_eval(x, comp=c, entity=C.parent_entity_of[(0, v)],
                                           meta={"kind": "point", "comp": c}))
            for e in sorted(C.topology[1]):
                for j in range(k - 1):
                    f = ds.moment(C, (1, e), ds.legendre_weight(j), ds.TRACE, ds.RAW, degree=k,
                                  q_degree=j, comp=c, on_child=True,
                                  meta={"kind": "child_edge", "edge": e, "index": j, "comp": c})
                    nodes.append(ds._replace(f, entity=C.parent_entity_of[(1, e)]))
            if k > 2:
                for t in range(C.num_cells):
                    for j in range(polynomial_dimension(C.dim, k - 3)):
                        q = lambda xh, j=j: dubiner_tabulate(C.dim, k - 3, xh)[(0,) * C.dim][j, :, 0]
                        f = ds.moment(C, (C.dim, t), q, ds.TRACE, ds.RAW, degree=k, q_degree=k - 3,
                                      comp=c, on_child=True,
                                      meta={"kind": "interior", "cell": t, "index": j, "comp": c})
                        nodes.append(ds._replace(f, entity=(C.dim, 0)))
    else:
        raise ValueError(f"unknown Lagrange variant {variant!r}")
    if nodes_only:
        return ds.DualSet(nodes, C)
    exp = macro_expansion(C, k, C0, ncomp)
    return CiarletElement("lagrange", C, k, shape, exp, ds.DualSet(nodes, C), AFFINE, params)


# -- C1 family ---------------------------------------------------------------

def c1_expansion(C, k, supersmooth=False):
    cons = ds.c1_constraints(C, k)
    if supersmooth:
        b = C.parent.vertices.mean(axis=0)
        cons += ds.supersmooth_constraints(C, b, k - 1)
    return constrained_expansion(macro_expansion(C, k, C0), cons)


def make_hct(k=3, reduced=False, vertices=None, normalization=None, nodes_only=False):
    """Hsieh-Clough-Tocher of degree k on the Alfeld split, or its 9-dof reduction."""
    if k < 3 or (reduced and k != 3):
        raise ValueError(f"unsupported HCT combination k={k}, reduced={reduced}")
    norm = _normalization(vertices, normalization)
    C = alfeld_split(_cell(vertices))
    P = C.parent
    params = dict(k=k, reduced=reduced)
    vnodes = hermite_vertex_nodes(P)
    if nodes_only and reduced:
        return ds.DualSet(vnodes, C)
    exp = None if nodes_only else c1_expansion(C, k, supersmooth=k > 3)
    if reduced:
        # extended element: vertex data plus "normal derivative is linear" constraints
        cons = edge_normal_nodes(C, 1, 3, norm, weight=lambda i: ds.legendre_weight(2),
                                 kind_name="constraint")
        ext = CiarletElement("hct-extended", C, 3, SCALAR, exp, ds.DualSet(vnodes + cons, C),
                             HCT_TYPE, params)
        kept = ext.basis.take(np.eye(ext.dim)[:len(vnodes)])
        return CiarletElement("hct", C, 3, SCALAR, kept, ds.DualSet(vnodes, C), HCT_TYPE,
                              params, extended=ext)
    nodes = list(vnodes)
    nodes += edge_normal_nodes(C, k - 2, k, norm)
    if k > 3:
        nodes += edge_trace_nodes(C, k - 3, k)
        nodes += interior_dubiner_nodes(C, k - 4, k)
    nodes = _order_by_entity(nodes)
    if nodes_only:
        return ds.DualSet(nodes, C)
    return CiarletElement("hct", C, k, SCALAR, exp, ds.DualSet(nodes, C), HCT_TYPE, params)


def _order_by_entity(nodes):
    """Vertices, then per edge its normal then trace moments, then the interior."""
    rank = {"value": 0, "grad": 0, "normal": 1, "constraint": 1, "trace": 2, "interior": 3}

    def key(item):
        i, n = item
        dim, eid = n.entity
        return (dim, eid, rank.get(n.meta.get("kind"), 0), i)

    return [n for _, n in sorted(enumerate(nodes), key=key)]


def make_powell_sabin(variant="PS6", vertices=None, normalization=None, nodes_only=False):
    variant = variant.upper()
    if variant not in ("PS6", "PS12"):
        raise ValueError(f"unknown Powell-Sabin variant {variant!r}")
    norm = _normalization(vertices, normalization)
    C = split(_cell(vertices), variant)
    nodes = hermite_vertex_nodes(C.parent)
    kind = HERMITE_TYPE
    if variant == "PS12":
        nodes += edge_normal_nodes(C, 1, 2, norm)
        kind = HCT_TYPE
    if nodes_only:
        return ds.DualSet(nodes, C)
    exp = c1_expansion(C, 2)
    return CiarletElement(variant.lower(), C, 2, SCALAR, exp, ds.DualSet(nodes, C), kind,
                          dict(variant=variant))


# -- H(div) and divergence-conforming ---------------------------------------

TAU_N = [("TAU_N", 0), ("TAU_N", 1)]


def make_johnson_mercier(vertices=None, normalization=None):
    """Symmetric-tensor piecewise linears on the Alfeld split with continuous normal traction."""
    C = alfeld_split(_cell(vertices))
    base = macro_expansion(C, 1, DG, ncomp=3)
    exp = constrained_expansion(base, ds.component_jump_constraints(C, TAU_N, 1, 1))
    nodes = []
    for e in sorted(C.parent.topology[1]):
        for c in range(2):
            for j in range(2):
                nodes.append(ds.moment(C, (1, e), ds.legendre_weight(j), TAU_N[c], ds.RAW,
                                       degree=1, q_degree=j,
                                       meta={"kind": "traction", "edge": e, "comp": c, "index": j}))
    for c in range(3):
        nodes.append(ds.moment(C, (2, 0), None, ("COMPONENT", c), ds.AVERAGE, degree=1,
                               label=ds.COMPONENT_MOMENT, meta={"kind": "interior", "comp": c}))
    return CiarletElement("johnson-mercier", C, 1, SYMTENSOR, exp, ds.DualSet(nodes, C),
                          PIOLA_DOUBLE)


def make_alfeld_sorokina(vertices=None, normalization=None):
    """Piecewise quadratic vectors on the Alfeld split with continuous divergence."""
    C = alfeld_split(_cell(vertices))
    P = C.parent
    base = macro_expansion(C, 2, C0, ncomp=2)
    exp = constrained_expansion(base, ds.component_jump_constraints(C, [("DIV",)], 2, 1))
    nodes = []
    for v in range(3):
        for c in range(2):
            nodes.append(ds.point_eval(P.vertices[v], comp=c, entity=(0, v),
                                       meta={"kind": "point", "comp": c}))
    for e in sorted(P.topology[1]):
        x = P.entity_vertices(1, e).mean(axis=0)
        for c in range(2):
            nodes.append(ds.point_eval(x, comp=c, entity=(1, e), meta={"kind": "point", "comp": c}))
    for v in range(3):
        x = P.vertices[v]
        cells = [t for t in range(C.num_cells) if v in C.topology[2][t]]
        parts = []
        for t in cells:
            parts.append(ds.make_functional(np.array([x, x]), [(1, 0), (0, 1)], [0, 1], 1.0,
                                            ds.POINT_DERIV, (0, v), t))
        nodes.append(ds.combine(parts, [1.0 / len(cells)] * len(cells), ds.POINT_DERIV, (0, v),
                                {"kind": "div", "vertex": v}))
    return CiarletElement("alfeld-sorokina", C, 2, VECTOR, exp, ds.DualSet(nodes, C),
                          ORACLE_REBUILD)


# -- catalogue ---------------------------------------------------------------

_ALIASES = {
    "lagrange": "lagrange", "p": "lagrange", "cg": "lagrange", "dg": "dg",
    "hct": "hct", "hct3": "hct", "hct4": "hct", "hct-red": "hct", "hctred": "hct",
    "hct-reduced": "hct",
    "ps6": "ps6", "ps12": "ps12", "powell-sabin": "ps6",
    "jm": "johnson-mercier", "johnson-mercier": "johnson-mercier",
    "as": "alfeld-sorokina", "alfeld-sorokina": "alfeld-sorokina",
}

CATALOGUE = ("lagrange", "dg", "hct", "hct3", "hct4", "hct-red", "ps6", "ps12",
             "johnson-mercier", "jm", "alfeld-sorokina", "as")


def build(name, vertices=None, normalization=None, nodes_only=False, **params):
    """Construct a catalogue element by canonical name and keyword parameters."""
    name = name.lower()
    if name in ("lagrange", "dg"):
        p = dict(params)
        if name == "dg":
            p.setdefault("continuity", DG)
        return make_lagrange_macro(vertices=vertices, normalization=normalization,
                                   nodes_only=nodes_only, **p)
    if name in ("hct", "hct-extended"):
        return make_hct(vertices=vertices, normalization=normalization, nodes_only=nodes_only,
                        **params)
    if name in ("ps6", "ps12"):
        return make_powell_sabin(params.get("variant", name), vertices, normalization, nodes_only)
    if nodes_only:
        el = build(name, vertices, normalization, **params)
        return el.dual
    if name == "johnson-mercier":
        return make_johnson_mercier(vertices, normalization)
    if name == "alfeld-sorokina":
        return make_alfeld_sorokina(vertices, normalization)
    raise KeyError(f"unknown element {name!r}")


def _resolve(name, degree=None, variant=None):
    key = name.lower()
    if key not in _ALIASES:
        raise KeyError(f"unknown element {name!r}")
    canon = _ALIASES[key]
    if canon in ("lagrange", "dg"):
        split_name = variant or "none"
        k = 1 if degree is None else degree
        cont = DG if canon == "dg" else C0
        return "lagrange", (("split_name", split_name), ("k", k), ("continuity", cont))
    if canon == "hct":
        reduced = key in ("hct-red", "hctred", "hct-reduced") or (variant or "").lower() in ("reduced", "red")
        k = degree or (4 if key == "hct4" else 3)
        return "hct", (("k", k), ("reduced", reduced))
    if canon in ("ps6", "ps12"):
        v = (variant or canon).upper() if key == "powell-sabin" else canon.upper()
        return v.lower(), (("variant", v),)
    return canon, ()


@lru_cache(maxsize=None)
def _cached(canon, params):
    return build(canon, **dict(params))


def get_element(name, degree=None, variant=None):
    """Reference element from the catalogue (cached)."""
    canon, params = _resolve(name, degree, variant)
    return _cached(canon, params)


# -- cost model --------------------------------------------------------------

@dataclass(frozen=True)
class CostModel:
    N_dof: int
    N_q_ref: int
    subcells: int

    @property
    def C(self):
        return self.N_dof ** 2 * self.N_q_ref * self.subcells

    @property
    def N_q(self):
        return self.N_q_ref * self.subcells


def cost(el, N_q_ref):
    if N_q_ref < 1:
        raise ValueError("N_q_ref must be >= 1")
    return CostModel(int(el.dim), int(N_q_ref), int(el.num_subcells))


# (label, degree, element name or fixed N_dof, N_q_ref); A5 is a single-cell
# degree-5 element outside the macro catalogue, entered by its dimension.
COST_ROWS = (
    ("PS6", 2, "ps6", 6),
    ("PS12", 2, "ps12", 6),
    ("HCT3", 3, "hct3", 12),
    ("HCT4", 4, "hct4", 16),
    ("A5", 5, 21, 25),
)


def cost_table():
    rows = []
    for label, degree, src, nq in COST_ROWS:
        if isinstance(src, int):
            model = CostModel(src, nq, 1)
        else:
            model = cost(get_element(src), nq)
        rows.append(dict(element=label, degree=degree, N_dof=model.N_dof, subcells=model.subcells,
                         N_q_ref=model.N_q_ref, N_q=model.N_q, C=model.C))
    return rows
