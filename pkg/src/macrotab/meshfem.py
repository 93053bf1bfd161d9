"""Structured meshes, global assembly and the verification studies.

Two model problems are supported:

* the clamped plate, a(u, v) = (f, v) with
  a(u, v) = int Lap u Lap v - (1 - nu)(2 u_xx v_yy + 2 u_yy v_xx - 4 u_xy v_xy),
  discretized with any C1 element of the catalogue;
* Stokes with the Scott-Vogelius pair (continuous P2 vectors and
  discontinuous P1 pressures, both on the Alfeld split of every cell).
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from macrotab import dualset as ds
from macrotab import elements as els
from macrotab.exceptions import MacrotabError
from macrotab.polyset import DG, C0
from macrotab.quadrature import macro_rule_cells
from macrotab.transform import TransformPlan, geometry, physical_tabulation

DEFAULT_SEED = 2024
LOCAL_EDGES = ((1, 2), (0, 2), (0, 1))     # local edge i is opposite local vertex i


# -- meshes ------------------------------------------------------------------

@dataclass
class Mesh:
    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray = None
    cell_edges: np.ndarray = None
    boundary_vertices: np.ndarray = None
    boundary_edges: np.ndarray = None
    h: float = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.cells = np.asarray(self.cells, dtype=int)
        index = {}
        cell_edges = np.zeros((len(self.cells), 3), dtype=int)
        count = {}
        for c, cell in enumerate(self.cells):
            for i, (a, b) in enumerate(LOCAL_EDGES):
                key = tuple(sorted((int(cell[a]), int(cell[b]))))
                if key not in index:
                    index[key] = len(index)
                cell_edges[c, i] = index[key]
                count[key] = count.get(key, 0) + 1
        self.edges = np.array(sorted(index, key=index.get), dtype=int).reshape(-1, 2)
        self.cell_edges = cell_edges
        self.boundary_edges = np.array([count[tuple(e)] == 1 for e in self.edges])
        bv = np.zeros(len(self.vertices), dtype=bool)
        bv[self.edges[self.boundary_edges].ravel()] = True
        self.boundary_vertices = bv
        self._edge_index = index

    @property
    def num_cells(self):
        return len(self.cells)

    def cell_vertices(self, c):
        return self.vertices[self.cells[c]]

    def edge_id(self, a, b):
        return self._edge_index[tuple(sorted((int(a), int(b))))]

    def min_abs_det(self):
        P = self.vertices[self.cells]
        A = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=-1)
        return np.abs(np.linalg.det(A)).min()


def structured_mesh(N, perturb=0.0, seed=DEFAULT_SEED):
    """N x N squares of the unit square, each cut along its (0,0)-(1,1) diagonal."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0.0 <= perturb < 0.5:
        raise ValueError("perturb must lie in [0, 0.5)")
    x = np.linspace(0.0, 1.0, N + 1)
    X, Y = np.meshgrid(x, x, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    if perturb > 0.0:
        rng = np.random.default_rng(seed)
        offs = rng.uniform(-perturb / N, perturb / N, size=verts.shape)
        interior = (verts[:, 0] > 0) & (verts[:, 0] < 1) & (verts[:, 1] > 0) & (verts[:, 1] < 1)
        verts[interior] += offs[interior]
    cells = []
    for j in range(N):
        for i in range(N):
            v00 = j * (N + 1) + i
            v10, v01, v11 = v00 + 1, v00 + N + 1, v00 + N + 2
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    return Mesh(verts, np.array(cells), h=1.0 / N)


def refine(mesh):
    """Uniform red refinement: every triangle into four."""
    verts = [v for v in mesh.vertices]
    mid = {}

    def midpoint(a, b):
        key = tuple(sorted((a, b)))
        if key not in mid:
            mid[key] = len(verts)
            verts.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
        return mid[key]

    cells = []
    for a, b, c in mesh.cells:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        cells += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    h = None if mesh.h is None else mesh.h / 2
    return Mesh(np.array(verts), np.array(cells), h=h)


def mesh_sequence(levels, perturb=0.1, seed=DEFAULT_SEED):
    """Perturbed coarsest mesh, then uniform refinements (N doubles per level)."""
    levels = sorted(levels)
    out = [structured_mesh(levels[0], perturb, seed)]
    while len(out) < len(levels):
        out.append(refine(out[-1]))
    for m, N in zip(out, levels):
        if abs(m.h - 1.0 / N) > 1e-14:
            raise ValueError("levels must double")
    return out


# -- degrees of freedom ------------------------------------------------------

def _global_normal(mesh, ge):
    a, b = mesh.edges[ge]
    t = mesh.vertices[b] - mesh.vertices[a]
    t = t / np.linalg.norm(t)
    return np.array([t[1], -t[0]])


def _cell_normal(P, e):
    a, b = LOCAL_EDGES[e]
    t = P[b] - P[a]
    n = np.array([t[1], -t[0]]) / np.linalg.norm(t)
    if n @ (P[a] - P[e]) < 0:
        n = -n
    return n


def _point_key(x, comp):
    return ("p",) + tuple(np.round(x, 9) + 0.0) + (comp,)


@dataclass
class DofMap:
    """Local-to-global numbering with orientation signs per cell."""
    cell_dofs: np.ndarray
    cell_signs: np.ndarray
    keys: list
    boundary: np.ndarray
    total_dofs: int = 0

    def __post_init__(self):
        self.total_dofs = len(self.keys)


def build_dofmap(mesh, el, offset=0):
    """Global dofs for el on mesh; shared entities share dofs."""
    index = {}
    boundary = []
    nodes = el.dual.nodes
    cd = np.zeros((mesh.num_cells, len(nodes)), dtype=int)
    cs = np.ones((mesh.num_cells, len(nodes)))
    Kref = el.complex.parent
    Aref = (Kref.vertices[1:] - Kref.vertices[0]).T
    for c in range(mesh.num_cells):
        cell = mesh.cells[c]
        P = mesh.cell_vertices(c)
        for j, n in enumerate(nodes):
            kind = n.meta.get("kind")
            dim, eid = n.entity
            sign = 1.0
            on_bdry = False
            if kind == "value":
                g = int(cell[n.meta["vertex"]])
                key, on_bdry = ("v", g), mesh.boundary_vertices[g]
            elif kind == "grad":
                g = int(cell[n.meta["vertex"]])
                key, on_bdry = ("g", g, n.meta["component"]), mesh.boundary_vertices[g]
            elif kind in ("normal", "trace"):
                e = n.meta["edge"]
                a, b = LOCAL_EDGES[e]
                ge = mesh.edge_id(cell[a], cell[b])
                flipped = cell[a] > cell[b]
                i = n.meta["index"]
                if kind == "normal":
                    sign = float(np.sign(_cell_normal(P, e) @ _global_normal(mesh, ge)))
                    if flipped:
                        sign *= (-1) ** i
                elif flipped:
                    sign = (-1.0) ** (i - 1)
                key, on_bdry = (kind[0], ge, i), mesh.boundary_edges[ge]
            elif kind == "interior":
                key = ("c", c, j)
            elif kind == "point":
                xhat = n.points[0]
                mu = np.linalg.solve(Aref, xhat - Kref.vertices[0])
                lam = np.concatenate([[1 - mu.sum()], mu])
                x = lam @ P
                key = _point_key(x, n.meta["comp"])
                on_bdry = _entity_on_boundary(mesh, cell, n.entity)
            else:
                raise MacrotabError(f"node kind {kind!r} cannot be numbered globally")
            if key not in index:
                index[key] = len(index)
                boundary.append(bool(on_bdry))
            cd[c, j] = index[key] + offset
            cs[c, j] = sign
    keys = sorted(index, key=index.get)
    return DofMap(cd, cs, keys, np.array(boundary, dtype=bool))


def _entity_on_boundary(mesh, cell, entity):
    dim, eid = entity
    if dim == 0:
        return bool(mesh.boundary_vertices[cell[eid]])
    if dim == 1:
        a, b = LOCAL_EDGES[eid]
        return bool(mesh.boundary_edges[mesh.edge_id(cell[a], cell[b])])
    return False


# -- per-cell tabulation -----------------------------------------------------

class CellTabulator:
    """Physical basis of el on every mesh cell at a reference macro rule."""

    def __init__(self, el, qdeg, max_deriv):
        self.el = el
        self.plan = TransformPlan(el)
        self.rule, self.qcells = macro_rule_cells(el.complex, qdeg)
        self.max_deriv = max_deriv
        self.ref_tab = self.plan.reference.tabulate(self.rule.points, max_deriv, self.qcells)

    def __call__(self, P):
        g = geometry(P)
        M = self.plan.build(g)
        tab = physical_tabulation(self.ref_tab, g, M, self.plan.piola, self.max_deriv)
        x = g.to_physical(self.rule.points)
        w = self.rule.weights / abs(g.detJ)
        return tab, x, w, g


# -- biharmonic --------------------------------------------------------------

@dataclass
class LinearSystem:
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    fixed: np.ndarray = None
    fixed_values: np.ndarray = None
    dofmap: object = None
    info: dict = field(default_factory=dict)

    @property
    def free(self):
        mask = np.ones(self.matrix.shape[0], dtype=bool)
        if self.fixed is not None:
            mask[self.fixed] = False
        return np.flatnonzero(mask)


def plate_form(H, nu):
    """Element matrix of the plate form from Hessians H[(2,0)], H[(1,1)], H[(0,2)] weighted."""
    xx, xy, yy = H
    lap = xx + yy
    return lambda w: (
        (lap * w) @ lap.T
        - (1 - nu) * (2 * (xx * w) @ yy.T + 2 * (yy * w) @ xx.T - 4 * (xy * w) @ xy.T)
    )


def _scatter(rows, cols, vals, n):
    return sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, n)).tocsr()


def assemble_biharmonic(mesh, el, nu=0.3, f=None, qdeg=None):
    """Clamped plate system with the boundary dofs recorded for elimination."""
    if el.mapping_kind not in (els.HCT_TYPE, els.HERMITE_TYPE):
        raise MacrotabError(f"{el.name} does not provide the C1 data needed here")
    if not 0.0 < nu < 1.0:
        raise ValueError("nu must lie in (0, 1)")
    k = el.degree
    qdeg = 2 * k if qdeg is None else qdeg
    dm = build_dofmap(mesh, el)
    tabulator = CellTabulator(el, qdeg, 2)
    n = dm.total_dofs
    rows, cols, vals = [], [], []
    b = np.zeros(n)
    for c in range(mesh.num_cells):
        tab, x, w, _ = tabulator(mesh.cell_vertices(c))
        H = [tab[(2, 0)][..., 0], tab[(1, 1)][..., 0], tab[(0, 2)][..., 0]]
        Ak = plate_form(H, nu)(w)
        s = dm.cell_signs[c]
        Ak = Ak * np.outer(s, s)
        ids = dm.cell_dofs[c]
        rows.append(np.repeat(ids, len(ids)))
        cols.append(np.tile(ids, len(ids)))
        vals.append(Ak.ravel())
        if f is not None:
            np.add.at(b, ids, s * (tab[(0, 0)][..., 0] @ (w * f(x))))
    A = _scatter(rows, cols, vals, n)
    fixed = np.flatnonzero(dm.boundary)
    return LinearSystem(A, b, fixed, np.zeros(len(fixed)), dm,
                        {"problem": "biharmonic", "element": el.name, "nu": nu})


def solve_direct(sys_):
    """Direct sparse solve on the free dofs; fixed dofs take their prescribed values."""
    A = sys_.matrix.tocsr()
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    x = np.zeros(n)
    if sys_.fixed is not None and len(sys_.fixed):
        x[sys_.fixed] = sys_.fixed_values
    free = sys_.free
    rhs = sys_.rhs[free] - A[free][:, sys_.fixed] @ x[sys_.fixed] if sys_.fixed is not None \
        and len(sys_.fixed) else sys_.rhs[free]
    Aff = A[free][:, free].tocsc()
    if Aff.shape[0] == 1:
        val = Aff[0, 0]
        if val == 0:
            raise MacrotabError("singular system")
        x[free] = rhs / val
        return x
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            x[free] = spla.spsolve(Aff, rhs)
        except (spla.MatrixRankWarning, RuntimeError) as exc:
            raise MacrotabError(f"singular system: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise MacrotabError("singular system")
    return x


def residual(sys_, x):
    free = sys_.free
    r = sys_.matrix[free] @ x - sys_.rhs[free]
    return np.linalg.norm(r), np.linalg.norm(sys_.rhs[free])


# -- interpolation and errors ------------------------------------------------

def interpolate(mesh, el, dm, fn):
    """Global coefficients of the interpolant of fn(points, alpha)."""
    x = np.zeros(dm.total_dofs)
    seen = np.zeros(dm.total_dofs, dtype=bool)
    for c in range(mesh.num_cells):
        ids = dm.cell_dofs[c]
        if seen[ids].all():
            continue
        dual = el.physical_dual(mesh.cell_vertices(c))
        vals = ds.evaluate(dual.nodes, ds.FunctionSet(fn, el.ncomp))[:, 0]
        x[ids] = dm.cell_signs[c] * vals
        seen[ids] = True
    return x


def error_norms(mesh, el, coeffs, exact, dm=None, qdeg=None):
    """L2 error and H1, H2 seminorm errors; exact(points, alpha) -> values."""
    dm = dm or build_dofmap(mesh, el)
    qdeg = 2 * el.degree + 2 if qdeg is None else qdeg
    tabulator = CellTabulator(el, qdeg, 2)
    e = np.zeros(3)
    for c in range(mesh.num_cells):
        tab, x, w, _ = tabulator(mesh.cell_vertices(c))
        u = dm.cell_signs[c] * coeffs[dm.cell_dofs[c]]
        for order, alphas in ((0, [(0, 0)]), (1, [(1, 0), (0, 1)]), (2, [(2, 0), (1, 1), (0, 2)])):
            for a in alphas:
                weight = 2.0 if a == (1, 1) else 1.0
                diff = u @ tab[a][..., 0] - exact(x, a)
                e[order] += weight * (w @ diff ** 2)
    return tuple(np.sqrt(e))


# -- manufactured plate solution -------------------------------------------

def _g(t, k):
    # derivatives of g(t) = t^2 (1 - t)^2 = t^2 - 2 t^3 + t^4
    coeffs = np.polynomial.polynomial.polyder([0, 0, 1, -2, 1], k) if k else [0, 0, 1, -2, 1]
    return np.polynomial.polynomial.polyval(t, coeffs)


def plate_exact(x, alpha):
    return _g(x[:, 0], alpha[0]) * _g(x[:, 1], alpha[1])


def plate_source(x):
    X, Y = x[:, 0], x[:, 1]
    return _g(X, 4) * _g(Y, 0) + 2 * _g(X, 2) * _g(Y, 2) + _g(X, 0) * _g(Y, 4)


def solve_biharmonic(mesh, el, nu=0.3, qdeg=None):
    sys_ = assemble_biharmonic(mesh, el, nu, plate_source, qdeg)
    x = solve_direct(sys_)
    return sys_, x


# -- Stokes (Scott-Vogelius) -------------------------------------------------

def sv_elements(k=2):
    if k != 2:
        raise ValueError("the Scott-Vogelius pair is provided for k = 2")
    vel = els.make_lagrange_macro("alfeld", 2, C0, ncomp=2)
    pre = els.make_lagrange_macro("alfeld", 1, DG)
    return vel, pre


def _psi(x, a):
    return _g(x[:, 0], a[0]) * _g(x[:, 1], a[1])


def stokes_exact_velocity(x, alpha):
    """u = curl psi = (psi_y, -psi_x)."""
    a = tuple(alpha)
    return np.column_stack([_psi(x, (a[0], a[1] + 1)), -_psi(x, (a[0] + 1, a[1]))])


def stokes_exact_pressure(x, alpha=(0, 0)):
    X, Y = x[:, 0], x[:, 1]
    if alpha == (0, 0):
        return X ** 3 + Y ** 3 - 0.5
    if alpha == (1, 0):
        return 3 * X ** 2
    if alpha == (0, 1):
        return 3 * Y ** 2
    return np.zeros_like(X)


def stokes_source(x, nu=1.0):
    """-nu Lap u + grad p for the divergence-free manufactured velocity."""
    lap = stokes_exact_velocity(x, (2, 0)) + stokes_exact_velocity(x, (0, 2))
    grad_p = np.column_stack([stokes_exact_pressure(x, (1, 0)), stokes_exact_pressure(x, (0, 1))])
    return -nu * lap + grad_p


def assemble_stokes_sv(mesh, k=2, nu=1.0, source=stokes_source, qdeg=None):
    """Saddle-point system [[A, B^T, 0], [B, 0, m], [0, m^T, 0]] with a mean-zero multiplier."""
    vel, pre = sv_elements(k)
    dmu = build_dofmap(mesh, vel)
    dmp = build_dofmap(mesh, pre, offset=dmu.total_dofs)
    nu_, npr = dmu.total_dofs, dmp.total_dofs
    n = nu_ + npr + 1
    qdeg = 2 * k if qdeg is None else qdeg
    tv = CellTabulator(vel, qdeg + 1, 1)
    tp = CellTabulator(pre, qdeg + 1, 0)
    rows, cols, vals = [], [], []
    b = np.zeros(n)
    for c in range(mesh.num_cells):
        P = mesh.cell_vertices(c)
        tab, x, w, _ = tv(P)
        ptab, _, _, _ = tp(P)
        ux, uy = tab[(1, 0)], tab[(0, 1)]          # (dim, nq, 2)
        e11, e22 = ux[..., 0], uy[..., 1]
        e12 = 0.5 * (uy[..., 0] + ux[..., 1])
        A = 2 * nu * ((e11 * w) @ e11.T + (e22 * w) @ e22.T + 2 * (e12 * w) @ e12.T)
        div = e11 + e22
        q = ptab[(0, 0)][..., 0]
        B = -(q * w) @ div.T
        iu, ip = dmu.cell_dofs[c], dmp.cell_dofs[c]
        for r_ids, c_ids, blk in ((iu, iu, A), (ip, iu, B), (iu, ip, B.T)):
            rows.append(np.repeat(r_ids, len(c_ids)))
            cols.append(np.tile(c_ids, len(r_ids)))
            vals.append(blk.ravel())
        m = q @ w
        rows += [ip, np.full(len(ip), n - 1)]
        cols += [np.full(len(ip), n - 1), ip]
        vals += [m, m]
        fx = source(x)
        b[iu] += np.einsum("jqc,qc->j", tab[(0, 0)], fx * w[:, None])
    K = _scatter(rows, cols, vals, n)
    fixed = np.flatnonzero(dmu.boundary)
    sys_ = LinearSystem(K, b, fixed, np.zeros(len(fixed)), (dmu, dmp),
                        {"problem": "stokes_sv", "velocity_dofs": nu_, "pressure_dofs": npr})
    return sys_


def _field_values(mesh, el, dm, coeffs, tabulator, c):
    tab, x, w, g = tabulator(mesh.cell_vertices(c))
    u = coeffs[dm.cell_dofs[c]]
    return {a: np.einsum("j,jqc->qc", u, v) for a, v in tab.items()}, x, w


def div_norm(mesh, vel, dm, coeffs, qdeg=6):
    """(sum_K ||div u||_K^2 + sum_e h_e^{-1} ||[u.n]||_e^2)^(1/2) over interior edges."""
    tab = CellTabulator(vel, qdeg, 1)
    total = 0.0
    for c in range(mesh.num_cells):
        vals, x, w = _field_values(mesh, vel, dm, coeffs, tab, c)
        div = vals[(1, 0)][:, 0] + vals[(0, 1)][:, 1]
        total += w @ div ** 2
    jump = 0.0
    gx, gw = np.polynomial.legendre.leggauss(qdeg)
    t = 0.5 * (gx + 1.0)
    edge_cells = {}
    for c in range(mesh.num_cells):
        for ge in mesh.cell_edges[c]:
            edge_cells.setdefault(int(ge), []).append(c)
    for ge, cs in edge_cells.items():
        if len(cs) != 2:
            continue
        a, b = mesh.edges[ge]
        A, B = mesh.vertices[a], mesh.vertices[b]
        h = np.linalg.norm(B - A)
        pts = A + t[:, None] * (B - A)
        n = _global_normal(mesh, ge)
        vals = []
        for c in cs:
            g = geometry(mesh.cell_vertices(c))
            xhat = g.to_reference(pts)
            ref = vel.tabulate(xhat, 0)[(0, 0)]
            u = np.einsum("j,jqc->qc", coeffs[dm.cell_dofs[c]], ref)
            vals.append(u @ n)
        jump += (0.5 * h * gw) @ (vals[0] - vals[1]) ** 2 / h
    return math.sqrt(total + jump), math.sqrt(total), math.sqrt(jump)


def stokes_errors(mesh, sys_, x, qdeg=6):
    vel, pre = sv_elements()
    dmu, dmp = sys_.dofmap
    tv = CellTabulator(vel, qdeg, 0)
    tp = CellTabulator(pre, qdeg, 0)
    eu = ep = 0.0
    for c in range(mesh.num_cells):
        vals, X, w = _field_values(mesh, vel, dmu, x, tv, c)
        eu += w @ ((vals[(0, 0)] - stokes_exact_velocity(X, (0, 0))) ** 2).sum(axis=1)
        pv, X, w = _field_values(mesh, pre, dmp, x, tp, c)
        ep += w @ (pv[(0, 0)][:, 0] - stokes_exact_pressure(X)) ** 2
    return math.sqrt(eu), math.sqrt(ep)


def solve_stokes_sv(mesh, nu=1.0):
    sys_ = assemble_stokes_sv(mesh, 2, nu)
    x = solve_direct(sys_)
    return sys_, x


# -- sparsity and rates -------------------------------------------------------

def structural_pattern(dm):
    """Boolean pattern of a matrix coupling all dofs of each cell."""
    dofs = dm.cell_dofs if isinstance(dm, DofMap) else dm
    n = int(dofs.max()) + 1
    rows = np.concatenate([np.repeat(ids, len(ids)) for ids in dofs])
    cols = np.concatenate([np.tile(ids, len(ids)) for ids in dofs])
    P = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    P.data[:] = 1.0
    return P


def sparsity_report(sys_or_matrix, after_bc=False):
    """(rows, mean structural nonzeros per row)."""
    if isinstance(sys_or_matrix, LinearSystem):
        dm = sys_or_matrix.dofmap
        P = structural_pattern(dm) if isinstance(dm, DofMap) else (sys_or_matrix.matrix != 0)
        if after_bc and sys_or_matrix.fixed is not None:
            free = sys_or_matrix.free
            P = P[free][:, free]
    else:
        P = sparse.csr_matrix(sys_or_matrix)
        P = (P != 0)
    P = sparse.csr_matrix(P)
    P.eliminate_zeros()
    rows = P.shape[0]
    return rows, P.nnz / rows


def convergence_rates(errors):
    """rate_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1})."""
    if len(errors) < 2:
        raise ValueError("need at least two levels")
    out = []
    for (h0, e0), (h1, e1) in zip(errors[:-1], errors[1:]):
        if e0 <= 0 or e1 <= 0:
            raise ValueError("errors must be positive")
        out.append(math.log(e0 / e1) / math.log(h0 / h1))
    return out


# -- studies -----------------------------------------------------------------

BIHARMONIC_COLUMNS = ("N", "NDOF", "ErrorL2", "ErrorH1", "ErrorH2")
STOKES_COLUMNS = ("N", "dofs", "velocityL2", "pressureL2", "divL2")


def biharmonic_study(el, levels=(2, 4, 8, 16), nu=0.3, perturb=0.1, seed=DEFAULT_SEED, qdeg=None):
    rows = []
    for N, mesh in zip(sorted(levels), mesh_sequence(levels, perturb, seed)):
        sys_, x = solve_biharmonic(mesh, el, nu, qdeg)
        eL2, eH1, eH2 = error_norms(mesh, el, x, plate_exact, sys_.dofmap)
        rows.append(dict(N=N, NDOF=sys_.dofmap.total_dofs, ErrorL2=eL2, ErrorH1=eH1, ErrorH2=eH2))
    return rows


def stokes_study(levels=(2, 4, 8), perturb=0.1, seed=DEFAULT_SEED):
    rows = []
    vel, _ = sv_elements()
    for N, mesh in zip(sorted(levels), mesh_sequence(levels, perturb, seed)):
        sys_, x = solve_stokes_sv(mesh)
        eu, ep = stokes_errors(mesh, sys_, x)
        dv = div_norm(mesh, vel, sys_.dofmap[0], x)[0]
        total = sys_.info["velocity_dofs"] + sys_.info["pressure_dofs"]
        rows.append(dict(N=N, dofs=total, velocityL2=eu, pressureL2=ep, divL2=dv))
    return rows


def study_rates(rows, columns):
    hs = [1.0 / r["N"] for r in rows]
    return {c: convergence_rates([(h, r[c]) for h, r in zip(hs, rows)]) for c in columns}


def rows_to_csv(rows, columns, rates=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r[c] if isinstance(r[c], (int, np.integer)) else f"{r[c]:.10e}" for c in columns])
    if rates:
        for c, rs in rates.items():
            w.writerow([f"rate_{c}"] + [f"{v:.4f}" for v in rs])
    return buf.getvalue()


def sparsity_json(name, N=8):
    el = els.get_element(name)
    mesh = structured_mesh(N)
    dm = build_dofmap(mesh, el)
    rows, avg = sparsity_report(structural_pattern(dm))
    pat = structural_pattern(dm)
    free = np.flatnonzero(~dm.boundary)
    rows_bc, avg_bc = sparsity_report(pat[free][:, free])
    return json.dumps({"element": name, "N": N, "rows": rows, "avg_nnz_per_row": avg,
                       "rows_after_bc": rows_bc, "avg_nnz_per_row_after_bc": avg_bc})
