"""Degrees of freedom as discretized functionals.

A functional is a weighted sum of point evaluations of partial
derivatives of one component,

    l(p) = sum_t w_t * D^{alpha_t} p_{c_t}(x_t),

where each term may pin the subcell it is evaluated from (needed for
one-sided traces and jumps on a split); cell -1 lets the owner rule
decide.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from macrotab.complex import SplitSimplicialComplex, facet_frame
from macrotab.exceptions import NotUnisolventError
from macrotab.polyset import jacobi, multi_indices
from macrotab.quadrature import facet_rule, macro_rule_cells

POINT_EVAL = "POINT_EVAL"
POINT_DERIV = "POINT_DERIV"
GRADIENT_COMPONENT = "GRADIENT_COMPONENT"
TRACE_MOMENT = "TRACE_MOMENT"
NORMAL_DERIV_MOMENT = "NORMAL_DERIV_MOMENT"
TANGENTIAL_DERIV_MOMENT = "TANGENTIAL_DERIV_MOMENT"
COMPONENT_MOMENT = "COMPONENT_MOMENT"
INTERIOR_MOMENT = "INTERIOR_MOMENT"
JUMP = "JUMP"

TRACE, NORMAL_DERIV, TANGENTIAL_DERIV = "TRACE", "NORMAL_DERIV", "TANGENTIAL_DERIV"
RAW, AVERAGE = "RAW", "AVERAGE"

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class Functional:
    points: np.ndarray
    alphas: tuple
    comps: np.ndarray
    weights: np.ndarray
    cells: np.ndarray
    label: str
    entity: tuple = None
    meta: dict = field(default_factory=dict)

    @property
    def terms(self):
        return [(tuple(x), a, int(c), float(w), int(t)) for x, a, c, w, t in
                zip(self.points, self.alphas, self.comps, self.weights, self.cells)]

    @property
    def order(self):
        return max((sum(a) for a in self.alphas), default=0)

    def __len__(self):
        return len(self.weights)

    def __call__(self, fset):
        return evaluate([self], fset)[0]

    def scaled(self, c, **changes):
        return _replace(self, weights=self.weights * c, **changes)

    def with_cells(self, cells, **changes):
        cells = np.broadcast_to(np.asarray(cells, dtype=int), self.weights.shape).copy()
        return _replace(self, cells=cells, **changes)

    def __add__(self, other):
        return combine([self, other], [1.0, 1.0], self.label, self.entity, dict(self.meta))

    def __sub__(self, other):
        return combine([self, other], [1.0, -1.0], self.label, self.entity, dict(self.meta))

    def __neg__(self):
        return self.scaled(-1.0)


def _replace(f, **changes):
    kw = dict(points=f.points, alphas=f.alphas, comps=f.comps, weights=f.weights,
              cells=f.cells, label=f.label, entity=f.entity, meta=f.meta)
    kw.update(changes)
    return Functional(**kw)


def make_functional(points, alphas, comps, weights, label, entity=None, cells=None, meta=None):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), (n,)).copy()
    comps = np.broadcast_to(np.asarray(comps, dtype=int), (n,)).copy()
    if cells is None:
        cells = -1
    cells = np.broadcast_to(np.asarray(cells, dtype=int), (n,)).copy()
    if isinstance(alphas[0], int):
        alphas = (tuple(alphas),) * n
    return Functional(points, tuple(tuple(a) for a in alphas), comps, weights, cells,
                      label, entity, dict(meta or {}))


def combine(functionals, coefs, label, entity=None, meta=None):
    fs = [f for f in functionals]
    return Functional(
        np.vstack([f.points for f in fs]),
        sum((f.alphas for f in fs), ()),
        np.concatenate([f.comps for f in fs]),
        np.concatenate([c * f.weights for f, c in zip(fs, coefs)]),
        np.concatenate([f.cells for f in fs]),
        label, entity, dict(meta or {}),
    )


# -- evaluation --------------------------------------------------------------

class FunctionSet:
    """Wrap fn(points, alpha) -> (npts,) or (npts, ncomp) as a one-member set."""

    def __init__(self, fn, ncomp=1):
        self.fn = fn
        self.ncomp = ncomp
        self.size = 1

    def tabulate(self, points, order=0, cells=None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = {}
        for a in multi_indices(pts.shape[1], order):
            v = np.asarray(self.fn(pts, a), dtype=float).reshape(len(pts), -1)
            out[a] = np.broadcast_to(v, (len(pts), self.ncomp))[None, :, :]
        return out


def evaluate(functionals, fset):
    """Matrix L[i, j] = functionals[i](member j of fset)."""
    if len(functionals) == 0:
        return np.zeros((0, fset.size))
    pts = np.vstack([f.points for f in functionals])
    alphas = sum((f.alphas for f in functionals), ())
    comps = np.concatenate([f.comps for f in functionals])
    weights = np.concatenate([f.weights for f in functionals])
    cells = np.concatenate([f.cells for f in functionals])
    owner = np.repeat(np.arange(len(functionals)), [len(f) for f in functionals])
    order = max(sum(a) for a in alphas)
    tab = fset.tabulate(pts, order, cells)
    T = np.zeros((fset.size, len(weights)))
    alpha_ids = {}
    for t, a in enumerate(alphas):
        alpha_ids.setdefault(a, []).append(t)
    for a, idx in alpha_ids.items():
        idx = np.array(idx)
        T[:, idx] = tab[a][:, idx, comps[idx]]
    S = sparse.csr_matrix((weights, (np.arange(len(weights)), owner)),
                          shape=(len(weights), len(functionals)))
    return np.asarray((S.T @ T.T))


# -- point functionals -------------------------------------------------------

def point_eval(v, comp=0, entity=None, cell=-1, meta=None):
    v = np.asarray(v, dtype=float)
    zero = (0,) * len(v)
    return make_functional(v, zero, comp, 1.0, POINT_EVAL, entity, cell, meta)


def point_deriv(v, alpha, comp=0, entity=None, cell=-1, meta=None):
    return make_functional(v, tuple(alpha), comp, 1.0, POINT_DERIV, entity, cell, meta)


def point_directional_deriv(v, s, comp=0, entity=None, cell=-1, label=POINT_DERIV, meta=None):
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.linalg.norm(s) == 0.0:
        raise ValueError("zero direction vector")
    d = len(v)
    nz = [i for i in range(d) if s[i] != 0.0]
    alphas = [tuple(int(i == j) for j in range(d)) for i in nz]
    return make_functional(np.tile(v, (len(nz), 1)), alphas, comp, s[nz], label, entity, cell, meta)


def gradient_component(v, i, comp=0, entity=None, cell=-1, meta=None):
    s = np.zeros(len(v))
    s[i] = 1.0
    m = {"component": i}
    m.update(meta or {})
    return point_directional_deriv(v, s, comp, entity, cell, GRADIENT_COMPONENT, m)


# -- moments -----------------------------------------------------------------

def legendre_weight(i):
    return lambda s: jacobi(i, 0, 0, s)


def jacobi_weight(i, a=1, b=1):
    return lambda s: jacobi(i, a, b, s)


def djacobi_weight(i, a=1, b=1):
    """d/dshat of P_i^{(a,b)}."""
    return lambda s: jacobi(i, a, b, s, deriv=1)


def _quad_degree(q_degree, degree):
    n = q_degree + degree
    return n + (n % 2)


def _parent(C):
    return C.parent if isinstance(C, SplitSimplicialComplex) else C


def _child_facets(C, entity, on_child):
    dim, eid = entity
    if on_child or not isinstance(C, SplitSimplicialComplex):
        return [eid]
    return C.children_of(dim, eid)


def edge_parameter(x, va, vb):
    """shat in [-1, 1] along the oriented segment va -> vb."""
    t = vb - va
    L2 = t @ t
    return 2.0 * ((np.atleast_2d(x) - va) @ t) / L2 - 1.0


def moment(C, entity, q=None, kind=TRACE, normalization=RAW, degree=2, q_degree=0,
           comp=0, on_child=False, label=None, meta=None):
    """Discretized facet or cell moment on C.

    entity refers to the parent simplex of a split unless on_child is set.
    On facets q is a function of the oriented edge parameter shat; on the
    cell it is a function of reference coordinates of the parent simplex.
    kind is TRACE, NORMAL_DERIV, TANGENTIAL_DERIV, ("COMPONENT", c) for a
    component of a vector field, or ("TAU_N", c) for component c of the
    normal traction of a symmetric tensor stored as (xx, xy, yy).
    """
    d = C.dim
    dim, eid = entity
    host = C if on_child else _parent(C)
    if dim not in host.topology or eid not in host.topology[dim]:
        raise ValueError(f"invalid entity {entity}")
    if q is None:
        q = lambda s: np.ones(len(s))
    qd = _quad_degree(q_degree, degree)
    meta = dict(meta or {})
    zero = (0,) * d
    units = [tuple(int(i == j) for j in range(d)) for i in range(d)]

    if dim == d:
        rule, cells = macro_rule_cells(C, qd) if not on_child else (None, None)
        if on_child:
            rule = facet_rule(C, entity, qd)
            cells = np.full(len(rule), eid)
        if on_child:
            xhat = C.barycentric(rule.points, eid)[:, 1:]
        else:
            xhat = _parent(C).barycentric(rule.points, 0)[:, 1:]
        w = rule.weights * np.asarray(q(xhat), dtype=float)
        if normalization == AVERAGE:
            w = w / host.volume(dim, eid)
        c = kind[1] if isinstance(kind, tuple) else comp
        return make_functional(rule.points, zero, c, w, label or INTERIOR_MOMENT,
                               entity, cells, meta)

    if dim != d - 1:
        raise ValueError("moments are supported on facets and cells")
    verts = host.entity_vertices(dim, eid)
    frame = facet_frame(host, eid)
    measure = frame.measure
    pts, wts, cells = [], [], []
    for ce in _child_facets(C, entity, on_child):
        rule = facet_rule(C, (dim, ce), qd)
        pts.append(rule.points)
        wts.append(rule.weights)
        cells.append(np.full(len(rule), C.cells_of_facet(ce)[0]))
    pts = np.vstack(pts)
    wts = np.concatenate(wts)
    cells = np.concatenate(cells)
    if d == 2:
        shat = edge_parameter(pts, verts[0], verts[1])
        w = wts * np.asarray(q(shat), dtype=float)
    else:
        w = wts * np.asarray(q(_parent(C).barycentric(pts, 0)[:, 1:]), dtype=float)
    if normalization == AVERAGE:
        w = w / measure
    meta.setdefault("normal", frame.normal)
    if frame.tangents:
        meta.setdefault("tangent", frame.tangents[0])

    if kind == TRACE:
        return make_functional(pts, zero, comp, w, label or TRACE_MOMENT, entity, cells, meta)
    if kind in (NORMAL_DERIV, TANGENTIAL_DERIV):
        s = frame.normal if kind == NORMAL_DERIV else frame.tangents[0]
        lab = NORMAL_DERIV_MOMENT if kind == NORMAL_DERIV else TANGENTIAL_DERIV_MOMENT
        parts = [make_functional(pts, units[i], comp, w * s[i], lab, entity, cells)
                 for i in range(d) if s[i] != 0.0]
        return combine(parts, [1.0] * len(parts), label or lab, entity, meta)
    if isinstance(kind, tuple) and kind[0] == "COMPONENT":
        return make_functional(pts, zero, kind[1], w, label or COMPONENT_MOMENT, entity, cells, meta)
    if isinstance(kind, tuple) and kind[0] == "TAU_N":
        n = frame.normal
        if d != 2:
            raise ValueError("tensor traction moments are implemented in 2D")
        comps = (0, 1) if kind[1] == 0 else (1, 2)
        parts = [make_functional(pts, zero, comps[i], w * n[i], COMPONENT_MOMENT, entity, cells)
                 for i in range(2)]
        return combine(parts, [1.0, 1.0], label or COMPONENT_MOMENT, entity, meta)
    if isinstance(kind, tuple) and kind[0] == "DIV":
        parts = [make_functional(pts, units[i], i, w, COMPONENT_MOMENT, entity, cells)
                 for i in range(d)]
        return combine(parts, [1.0] * d, label or COMPONENT_MOMENT, entity, meta)
    raise ValueError(f"unknown moment kind {kind!r}")


def jump_functional(C, facet, base):
    """base(p on the smaller-id neighbour) - base(p on the larger-id neighbour)."""
    cells = C.cells_of_facet(facet)
    if len(cells) != 2:
        raise ValueError(f"facet {facet} is not interior")
    plus, minus = cells
    return combine([base.with_cells(plus), base.with_cells(minus)], [1.0, -1.0], JUMP,
                   (C.dim - 1, facet), {"base": base.label})


# -- smoothness constraints on splits -----------------------------------------

def c1_constraints(C, degree):
    """Value and normal-derivative jump moments on every interior facet."""
    out = []
    for f in C.interior_facets():
        for j in range(degree + 1):
            base = moment(C, (C.dim - 1, f), legendre_weight(j), TRACE, degree=degree,
                          q_degree=j, on_child=True)
            out.append(jump_functional(C, f, base))
        for j in range(degree):
            base = moment(C, (C.dim - 1, f), legendre_weight(j), NORMAL_DERIV, degree=degree,
                          q_degree=j, on_child=True)
            out.append(jump_functional(C, f, base))
    return out


def supersmooth_constraints(C, point, order):
    """Jumps of every partial derivative of order 1..order at a point shared by interior facets."""
    out = []
    point = np.asarray(point, dtype=float)
    for f in C.interior_facets():
        verts = C.entity_vertices(C.dim - 1, f)
        if not np.any(np.all(np.isclose(verts, point), axis=1)):
            continue
        for a in multi_indices(C.dim, order):
            out.append(jump_functional(C, f, point_deriv(point, a)))
    return out


def component_jump_constraints(C, kinds, degree, q_max):
    """Jump moments of the given vector/tensor traces against P_0..P_q_max."""
    out = []
    for f in C.interior_facets():
        for kind in kinds:
            for j in range(q_max + 1):
                base = moment(C, (C.dim - 1, f), legendre_weight(j), kind, degree=degree,
                              q_degree=j, on_child=True)
                out.append(jump_functional(C, f, base))
    return out


# -- dual sets and Vandermonde -----------------------------------------------

class DualSet:
    """Ordered nodes with their parent-entity association."""

    def __init__(self, nodes, complex=None):
        self.nodes = list(nodes)
        ed = {}
        if complex is not None:
            P = _parent(complex)
            for k, ents in P.topology.items():
                ed[k] = {i: [] for i in ents}
        for i, n in enumerate(self.nodes):
            k, e = n.entity
            ed.setdefault(k, {}).setdefault(e, []).append(i)
        self.entity_dofs = ed

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, i):
        return self.nodes[i]


def vandermonde(dual, exp):
    """V[i, j] = n_i(p_j) and its 2-norm condition number."""
    nodes = dual.nodes if isinstance(dual, DualSet) else dual
    if len(nodes) != exp.size:
        raise ValueError(f"{len(nodes)} nodes for a space of dimension {exp.size}")
    V = evaluate(nodes, exp)
    s = np.linalg.svd(V, compute_uv=False)
    cond = math.inf if s[-1] == 0.0 else s[0] / s[-1]
    return V, cond


def coefficients(V, cond=None):
    """A = V^{-T}, refusing numerically singular systems."""
    if cond is None:
        s = np.linalg.svd(V, compute_uv=False)
        cond = math.inf if s[-1] == 0.0 else s[0] / s[-1]
    if not cond < COND_LIMIT:
        _, _, Vt = np.linalg.svd(V)
        raise NotUnisolventError(
            f"generalized Vandermonde matrix is singular (cond = {cond:.3e})",
            null_vector=Vt[-1], condition=cond)
    return np.linalg.inv(V).T
