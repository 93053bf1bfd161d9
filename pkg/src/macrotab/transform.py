"""Mapping reference nodal bases to physical cells.

F maps the physical cell onto the reference cell with constant Jacobian J.
Reference functions are pulled back by composition with F and push-forwards
of physical nodes act on reference functions.  If the reference nodes are
written as N_hat = V F_*(N), the physical nodal basis is M = V^T applied to
the pulled-back reference basis.

For the C1 family V = E Vc D, where D completes the physical nodes with
tangential-derivative partners (expressed back through vertex and trace
nodes), Vc maps push-forwards of the completed physical nodes onto the
completed reference nodes block by block, and E drops the reference
tangential partners again.
"""
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from macrotab import dualset as ds
from macrotab import elements as els
from macrotab.complex import facet_frame, reference_simplex, simplex
from macrotab.exceptions import DegenerateCellError
from macrotab.polyset import jacobi, multi_indices

DEGENERATE_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class CellGeometry:
    physical_vertices: np.ndarray
    J: np.ndarray
    detJ: float
    edge_lengths: np.ndarray
    G: tuple
    Ghat: tuple
    ref_edge_lengths: np.ndarray

    @property
    def Jinv(self):
        return np.linalg.inv(self.J)

    def to_reference(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (x - self.physical_vertices[0]) @ self.J.T

    def to_physical(self, xhat):
        xhat = np.atleast_2d(np.asarray(xhat, dtype=float))
        return self.physical_vertices[0] + xhat @ self.Jinv.T


def _frames(K):
    G, L = [], []
    for e in sorted(K.topology[1]):
        fr = facet_frame(K, e)
        G.append(np.vstack([fr.normal, fr.tangents[0]]))
        L.append(fr.measure)
    return tuple(G), np.array(L)


_REF_FRAMES = None


def geometry(physical_vertices):
    """Affine data of a physical triangle; vertex i maps to reference vertex i."""
    global _REF_FRAMES
    P = np.asarray(physical_vertices, dtype=float)
    if P.shape != (3, 2):
        raise ValueError("expected three 2D vertices")
    A = (P[1:] - P[0]).T
    scale = max(np.linalg.norm(P[i] - P[j]) for i in range(3) for j in range(i))
    if abs(np.linalg.det(A)) < DEGENERATE_TOL * scale ** 2 or scale == 0.0:
        raise DegenerateCellError("degenerate cell")
    J = np.linalg.inv(A)
    G, L = _frames(simplex(P))
    if _REF_FRAMES is None:
        _REF_FRAMES = _frames(reference_simplex(2))
    Ghat, Lhat = _REF_FRAMES
    return CellGeometry(P, J, float(np.linalg.det(J)), L, G, Ghat, Lhat)


# -- pulled-back tabulation -------------------------------------------------

def _map_derivatives(tab, J, order):
    """Chain rule for affine maps: reference derivatives -> physical derivatives."""
    d = J.shape[0]
    out = {}
    for a in multi_indices(d, order):
        n = sum(a)
        if n == 0:
            out[a] = tab[a]
            continue
        # physical direction list, e.g. (1,1) -> [0, 1]
        dirs = [i for i in range(d) for _ in range(a[i])]
        acc = 0.0
        for combo in np.ndindex(*(d,) * n):
            coef = 1.0
            for i, k in zip(dirs, combo):
                coef *= J[k, i]
            if coef == 0.0:
                continue
            b = tuple(combo.count(j) for j in range(d))
            acc = acc + coef * tab[b]
        out[a] = acc
    return out


def _piola_double(tab, B):
    """sigma = B sigma_hat B^T / det(B)^2 on (xx, xy, yy) components."""
    det2 = np.linalg.det(B) ** 2
    out = {}
    for a, v in tab.items():
        S = np.empty(v.shape[:2] + (2, 2))
        S[..., 0, 0] = v[..., 0]
        S[..., 0, 1] = S[..., 1, 0] = v[..., 1]
        S[..., 1, 1] = v[..., 2]
        R = np.einsum("ik,...kl,jl->...ij", B, S, B) / det2
        out[a] = np.stack([R[..., 0, 0], R[..., 0, 1], R[..., 1, 1]], axis=-1)
    return out


class PulledBackSet:
    """Reference basis composed with F (and a Piola map where applicable)."""

    def __init__(self, ref_basis, geom, piola=None):
        self.ref = ref_basis
        self.geom = geom
        self.piola = piola
        self.size = ref_basis.size
        self.ncomp = ref_basis.ncomp

    def tabulate(self, points, order=0, cells=None):
        xhat = self.geom.to_reference(points)
        tab = self.ref.tabulate(xhat, order, cells)
        tab = _map_derivatives(tab, self.geom.J, order)
        if self.piola == "double":
            tab = _piola_double(tab, self.geom.Jinv)
        return tab


def physical_tabulation(ref_tab, geom, M, piola=None, order=None):
    """Physical basis derivatives from a reference tabulation at mapped points."""
    if order is None:
        order = max(sum(a) for a in ref_tab)
    tab = _map_derivatives(ref_tab, geom.J, order)
    if piola == "double":
        tab = _piola_double(tab, geom.Jinv)
    M = M.toarray() if sparse.issparse(M) else M
    return {a: np.tensordot(M, v, axes=(1, 0)) for a, v in tab.items()}


# -- HCT-family factored plan ------------------------------------------------

def _edge_scale(normalization, length):
    return 1.0 / length if normalization == ds.AVERAGE else 1.0


def _hermite_tangent_coefficients(weight):
    """c_m = int_{-1}^{1} w(s) H_m'(s) ds for the cubic Hermite basis on [-1, 1].

    H_0, H_1 interpolate the values at -1 and 1; H_2, H_3 the s-derivatives.
    """
    x, w = np.polynomial.legendre.leggauss(8)
    dH = np.array([
        0.75 * (x * x - 1.0),
        -0.75 * (x * x - 1.0),
        0.25 * (3 * x * x - 2 * x - 1.0),
        0.25 * (3 * x * x + 2 * x - 1.0),
    ])
    return dH @ (w * weight(x))


def _node_species(el):
    out = []
    for n in el.dual.nodes:
        m = n.meta
        out.append((m.get("kind"), m.get("vertex", m.get("edge")), m.get("index", m.get("component"))))
    return out


def hct_factors(geom, el, physical_normalization=ds.RAW, reference_normalization=ds.AVERAGE):
    """Sparse factors (E, Vc, D) with V = E Vc D for an element of the C1 family."""
    ref = el.extended if el.extended is not None else el
    nodes = ref.dual.nodes
    n = len(nodes)
    species = _node_species(ref)
    K = reference_simplex(2)
    edges = [K.topology[1][e] for e in sorted(K.topology[1])]

    ext_of = []            # position of reference node j in the extended list
    tangent_of = {}        # extended position of the tangential partner of node j
    pos = 0
    for j, (kind, ent, idx) in enumerate(species):
        ext_of.append(pos)
        pos += 1
        if kind in ("normal", "constraint"):
            tangent_of[j] = pos
            pos += 1
    n_ext = pos

    # index of physical vertex-value / gradient / trace nodes
    vindex, gindex, tindex = {}, {}, {}
    for j, (kind, ent, idx) in enumerate(species):
        if kind == "value":
            vindex[ent] = j
        elif kind == "grad":
            gindex[(ent, nodes[j].meta["component"])] = j
        elif kind == "trace":
            tindex[(ent, idx)] = j

    # D: completed physical nodes in terms of physical nodes
    D = sparse.lil_matrix((n_ext, n))
    for j, (kind, ent, idx) in enumerate(species):
        D[ext_of[j], j] = 1.0
        if j not in tangent_of:
            continue
        r = tangent_of[j]
        a, b = edges[ent]
        scale = _edge_scale(physical_normalization, geom.edge_lengths[ent])
        if kind == "normal":
            # int_e P_i dt f ds = P_i(1) f(v_b) - P_i(-1) f(v_a) - int_e (d/ds P_i) f ds
            D[r, vindex[b]] += scale * jacobi(idx, 1, 1, 1.0)
            D[r, vindex[a]] -= scale * jacobi(idx, 1, 1, -1.0)
            if idx >= 1:
                D[r, tindex[(ent, idx)]] -= scale
        else:
            # cubic traces: Hermite data at both ends determines the moment
            c = scale * _hermite_tangent_coefficients(lambda s: jacobi(2, 0, 0, s))
            t = geom.G[ent][1]
            half = geom.edge_lengths[ent] / 2.0
            D[r, vindex[a]] += c[0]
            D[r, vindex[b]] += c[1]
            for comp in range(2):
                D[r, gindex[(a, comp)]] += c[2] * half * t[comp]
                D[r, gindex[(b, comp)]] += c[3] * half * t[comp]

    # Vc: completed reference nodes from push-forwards of completed physical nodes
    Vc = sparse.lil_matrix((n_ext, n_ext))
    JinvT = np.linalg.inv(geom.J).T
    absdet = abs(geom.detJ)
    done = set()
    for j, (kind, ent, idx) in enumerate(species):
        r = ext_of[j]
        if kind == "value":
            Vc[r, r] = 1.0
        elif kind == "grad":
            if ent in done:
                continue
            done.add(ent)
            g = [gindex[(ent, 0)], gindex[(ent, 1)]]
            rows = [ext_of[g[0]], ext_of[g[1]]]
            for p in range(2):
                for q in range(2):
                    Vc[rows[p], rows[q]] = JinvT[p, q]
        elif kind in ("normal", "constraint"):
            L, Lhat = geom.edge_lengths[ent], geom.ref_edge_lengths[ent]
            ratio = (Lhat * _edge_scale(reference_normalization, Lhat)) / (
                L * _edge_scale(physical_normalization, L))
            B = ratio * geom.Ghat[ent] @ JinvT @ geom.G[ent].T
            rows = [r, tangent_of[j]]
            for p in range(2):
                for q in range(2):
                    Vc[rows[p], rows[q]] = B[p, q]
        elif kind == "trace":
            Vc[r, r] = 1.0
        elif kind == "interior":
            Vc[r, r] = absdet
        else:
            raise ValueError(f"node kind {kind!r} has no HCT-family rule")

    E = sparse.lil_matrix((n, n_ext))
    for j in range(n):
        E[j, ext_of[j]] = 1.0
    return E.tocsr(), Vc.tocsr(), D.tocsr()


def hct_family_matrix(geom, el, physical_normalization=ds.RAW):
    """M = (E Vc D)^T; rows beyond el.dim (constraint partners) are dropped."""
    E, Vc, D = hct_factors(geom, el, physical_normalization)
    M = (E @ Vc @ D).T.tocsr()
    M.eliminate_zeros()
    return M[:el.dim]


def hct_transform(geom, physical_normalization=ds.RAW):
    return hct_family_matrix(geom, els.get_element("hct3"), physical_normalization)


def highorder_hct_transform(geom, k, physical_normalization=ds.RAW):
    if k < 4:
        raise ValueError("high-order HCT needs k >= 4")
    return hct_family_matrix(geom, els.get_element("hct", k), physical_normalization)


def hermite_transform(geom, el):
    """blockdiag(1, J^{-1}) per vertex for elements with vertex values and gradients only."""
    kinds = {n.meta.get("kind") for n in el.dual.nodes}
    if not kinds <= {"value", "grad"}:
        raise ValueError("Hermite transform needs vertex value and gradient nodes only")
    return hct_family_matrix(geom, el)


# -- numerical plans ---------------------------------------------------------

def numeric_transform(geom, el, piola=None, physical_normalization=ds.RAW):
    """M = (N psi)^{-T} with (N psi)_ij = n_i(psi_j), psi the pulled-back reference basis."""
    ref = el.extended if el.extended is not None else el
    phys = el.rebuild(geom.physical_vertices, physical_normalization)
    nodes = (phys.extended if phys.extended is not None else phys).dual.nodes
    W = ds.evaluate(nodes, PulledBackSet(ref.basis, geom, piola))
    M = np.linalg.inv(W).T
    return M[:el.dim]


def piola_double_transform(geom, el=None):
    if el is None:
        el = els.get_element("johnson-mercier")
    return numeric_transform(geom, el, piola="double")


def affine_transform(geom, el):
    """Lagrange-type nodes: point values are invariant, moments scale with the measure."""
    d = np.ones(el.dim)
    for j, n in enumerate(el.dual.nodes):
        kind = n.meta.get("kind")
        if kind == "interior":
            d[j] = abs(geom.detJ)
        elif kind == "child_edge":
            C = el.complex
            e = n.meta["edge"]
            Lhat = C.volume(1, e)
            phys = geom.to_physical(C.entity_vertices(1, e))
            d[j] = Lhat / np.linalg.norm(phys[1] - phys[0])
    return sparse.diags(d).tocsr()


# -- plans and the oracle ----------------------------------------------------

def oracle_rebuild(el, physical_vertices, normalization=ds.RAW):
    """The element built directly on the physical cell."""
    geometry(physical_vertices)
    return el.rebuild(np.asarray(physical_vertices, dtype=float), normalization)


class TransformPlan:
    """Per-element recipe: CellGeometry -> M, and physical tabulation."""

    def __init__(self, element, physical_normalization=ds.RAW):
        self.element = element
        self.kind = element.mapping_kind
        self.physical_normalization = physical_normalization
        self.reference = element.extended if element.extended is not None else element
        self.piola = "double" if self.kind == els.PIOLA_DOUBLE else None

    def build(self, geom):
        el = self.element
        if self.kind == els.AFFINE:
            return affine_transform(geom, el)
        if self.kind in (els.HERMITE_TYPE, els.HCT_TYPE):
            return hct_family_matrix(geom, el, self.physical_normalization)
        if self.kind == els.PIOLA_DOUBLE:
            return numeric_transform(geom, el, "double", self.physical_normalization)
        if self.kind == els.ORACLE_REBUILD:
            return None
        raise ValueError(f"unknown mapping kind {self.kind!r}")

    def tabulate(self, geom, points, max_deriv=0):
        """Physical basis at physical points."""
        if self.kind == els.ORACLE_REBUILD:
            return oracle_rebuild(self.element, geom.physical_vertices,
                                  self.physical_normalization).tabulate(points, max_deriv)
        M = self.build(geom)
        xhat = geom.to_reference(points)
        ref_tab = self.reference.tabulate(xhat, max_deriv)
        return physical_tabulation(ref_tab, geom, M, self.piola, max_deriv)


def plan_for(element, physical_normalization=ds.RAW):
    return TransformPlan(element, physical_normalization)
