"""Orthogonal polynomials and macro expansion sets.

Jacobi polynomials use the classical normalization P_n^{(a,b)}(1) =
binom(n + a, n), so that

    d/dx P_n^{(a,b)} = (n + a + b + 1) / 2 * P_{n-1}^{(a+1,b+1)}.

Simplex (Dubiner) polynomials are tabulated with a collapsed-coordinate
free recurrence run on truncated Taylor jets, which yields derivatives of
any order without dividing by collapsed coordinates.  They are
orthonormal on the simplex they are attached to.
"""
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from macrotab.complex import SplitSimplicialComplex, no_split, simplex


# -- Jacobi ------------------------------------------------------------------

@dataclass(frozen=True)
class JacobiBasis:
    alpha: int
    beta: int
    max_degree: int


def _jacobi_all(n, a, b, x):
    x = np.asarray(x, dtype=float)
    P = np.zeros((n + 1,) + x.shape)
    P[0] = 1.0
    if n >= 1:
        P[1] = 0.5 * ((a + b + 2) * x + (a - b))
    for k in range(1, n):
        c = 2 * k + a + b
        a1 = 2 * (k + 1) * (k + a + b + 1) * c
        a2 = (c + 1) * (a * a - b * b)
        a3 = c * (c + 1) * (c + 2)
        a4 = 2 * (k + a) * (k + b) * (c + 2)
        P[k + 1] = ((a2 + a3 * x) * P[k] - a4 * P[k - 1]) / a1
    return P


def jacobi(n, a, b, x, deriv=0):
    """P_n^{(a,b)}(x) or one of its derivatives."""
    if n < 0:
        raise ValueError("negative degree")
    if deriv == 0:
        return _jacobi_all(n, a, b, x)[n]
    if n < deriv:
        return np.zeros_like(np.asarray(x, dtype=float))
    scale = math.prod((n + a + b + 1 + j) / 2 for j in range(deriv))
    return scale * _jacobi_all(n - deriv, a + deriv, b + deriv, x)[n - deriv]


def jacobi_eval(basis, i, shat, deriv=0):
    if not 0 <= i <= basis.max_degree:
        raise IndexError(f"index {i} outside 0..{basis.max_degree}")
    if deriv not in (0, 1):
        raise ValueError("deriv must be 0 or 1")
    return jacobi(i, basis.alpha, basis.beta, shat, deriv)


def jrc(a, b, n):
    """Coefficients of P_{n+1} = (an x + bn) P_n - cn P_{n-1} for P^{(a,b)}."""
    an = (2 * n + 1 + a + b) * (2 * n + 2 + a + b) / (2 * (n + 1) * (n + 1 + a + b))
    bn = (a * a - b * b) * (2 * n + 1 + a + b) / (2 * (n + 1) * (2 * n + a + b) * (n + 1 + a + b))
    cn = (n + a) * (n + b) * (2 * n + 2 + a + b) / ((n + 1) * (n + 1 + a + b) * (2 * n + a + b))
    return an, bn, cn


# -- Taylor jets -------------------------------------------------------------

@lru_cache(maxsize=None)
def multi_indices(d, order):
    """All multi-indices of total degree <= order, graded."""
    out = []
    for n in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(d), n):
            alpha = [0] * d
            for i in combo:
                alpha[i] += 1
            out.append(tuple(alpha))
    # stable graded lexicographic (x-derivatives first)
    return tuple(sorted(out, key=lambda a: (sum(a), tuple(-ai for ai in a))))


class _JetSpace:
    """Truncated Taylor coefficients t_alpha = D^alpha f / alpha! per point."""

    def __init__(self, d, order):
        self.d = d
        self.order = order
        self.alphas = multi_indices(d, order)
        index = {a: i for i, a in enumerate(self.alphas)}
        self.shifts = []
        for i in range(d):
            dst, src = [], []
            for k, a in enumerate(self.alphas):
                if a[i] > 0:
                    b = list(a)
                    b[i] -= 1
                    dst.append(k)
                    src.append(index[tuple(b)])
            self.shifts.append((np.array(dst, dtype=int), np.array(src, dtype=int)))
        self.factorials = np.array([math.prod(math.factorial(ai) for ai in a) for a in self.alphas])

    def constant(self, c, npts):
        J = np.zeros((len(self.alphas), npts))
        J[0] = c
        return J

    def mul_affine(self, J, a0, g):
        """Multiply jet J by the affine function with value a0 and constant gradient g."""
        out = J * a0
        for i, (dst, src) in enumerate(self.shifts):
            if g[i] != 0.0 and len(dst):
                out[dst] += g[i] * J[src]
        return out


def _affine(c0, coefs, Y, G):
    """Value and gradient of c0 + sum_i coefs[i] * y_i."""
    val = c0 + sum(ci * Y[i] for i, ci in enumerate(coefs) if ci)
    grad = sum(ci * G[i] for i, ci in enumerate(coefs) if ci) if any(coefs) else np.zeros(G.shape[1])
    return val, np.asarray(grad, dtype=float)


def _dubiner_jets(d, n, Y, G, space):
    """Raw recurrence on the biunit simplex; Y[i] are coordinates, G[i] gradients."""
    npts = Y.shape[1]
    one = space.constant(1.0, npts)
    mul = space.mul_affine

    if d == 1:
        R = [one]
        if n >= 1:
            R.append(mul(one, *_affine(0.0, [1.0], Y, G)))
        for p in range(1, n):
            xa = mul(R[p], *_affine(0.0, [1.0], Y, G))
            R.append(((2 * p + 1) * xa - p * R[p - 1]) / (p + 1))
        return [(R[p], math.sqrt(p + 0.5)) for p in range(n + 1)]

    if d == 2:
        R = {(0, 0): one}
        f1 = _affine(0.5, [1.0, 0.5], Y, G)
        h = _affine(0.5, [0.0, -0.5], Y, G)
        if n >= 1:
            R[(1, 0)] = mul(one, *f1)
        for p in range(1, n):
            a = (2.0 * p + 1) / (p + 1)
            b = p / (p + 1.0)
            R[(p + 1, 0)] = a * mul(R[(p, 0)], *f1) - b * mul(mul(R[(p - 1, 0)], *h), *h)
        for p in range(n):
            R[(p, 1)] = mul(R[(p, 0)], *_affine(0.5 * (1 + 2 * p), [0.0, 0.5 * (3 + 2 * p)], Y, G))
        for p in range(n - 1):
            for q in range(1, n - p):
                a1, a2, a3 = jrc(2 * p + 1, 0, q)
                R[(p, q + 1)] = mul(R[(p, q)], *_affine(a2, [0.0, a1], Y, G)) - a3 * R[(p, q - 1)]
        out = []
        for m in range(n + 1):
            for q in range(m + 1):
                p = m - q
                out.append((R[(p, q)], math.sqrt((p + 0.5) * (p + q + 1))))
        return out

    if d == 3:
        R = {(0, 0, 0): one}
        f1 = _affine(1.0, [1.0, 0.5, 0.5], Y, G)
        f2h = _affine(0.0, [0.0, 0.5, 0.5], Y, G)
        f3 = _affine(0.5, [0.0, 1.0, 0.5], Y, G)
        f4 = _affine(0.5, [0.0, 0.0, -0.5], Y, G)
        if n >= 1:
            R[(1, 0, 0)] = mul(one, *f1)
        for p in range(1, n):
            a1 = (2.0 * p + 1) / (p + 1)
            a2 = p / (p + 1.0)
            R[(p + 1, 0, 0)] = a1 * mul(R[(p, 0, 0)], *f1) - a2 * mul(mul(R[(p - 1, 0, 0)], *f2h), *f2h)
        for p in range(n):
            R[(p, 1, 0)] = mul(R[(p, 0, 0)], *_affine(p + 1.0, [0.0, p + 1.5, 0.5], Y, G))
        for p in range(n - 1):
            for q in range(1, n - p):
                aq, bq, cq = jrc(2 * p + 1, 0, q)
                lin = (aq * f3[0] + bq * f4[0], aq * f3[1] + bq * f4[1])
                R[(p, q + 1, 0)] = mul(R[(p, q, 0)], *lin) - cq * mul(mul(R[(p, q - 1, 0)], *f4), *f4)
        for p in range(n):
            for q in range(n - p):
                R[(p, q, 1)] = mul(R[(p, q, 0)], *_affine(1.0 + p + q, [0.0, 0.0, 2.0 + p + q], Y, G))
        for p in range(n - 1):
            for q in range(n - p - 1):
                for r in range(1, n - p - q):
                    ar, br, cr = jrc(2 * p + 2 * q + 2, 0, r)
                    R[(p, q, r + 1)] = mul(R[(p, q, r)], *_affine(br, [0.0, 0.0, ar], Y, G)) - cr * R[(p, q, r - 1)]
        out = []
        for m in range(n + 1):
            for r in range(m + 1):
                for q in range(m - r + 1):
                    p = m - q - r
                    out.append((R[(p, q, r)], math.sqrt((p + 0.5) * (p + q + 1.0) * (p + q + r + 1.5))))
        return out

    raise ValueError(f"unsupported dimension {d}")


def polynomial_dimension(d, k):
    return math.comb(k + d, d)


def _simplex_jets(vertices, degree, points, order):
    """Taylor jets, shape (m, ncoef, npts), of the simplex-orthonormal basis."""
    verts = np.asarray(vertices, dtype=float)
    d = verts.shape[1]
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    A = (verts[1:] - verts[0]).T
    Ainv = np.linalg.inv(A)
    Y = (2.0 * (Ainv @ (pts - verts[0]).T) - 1.0)
    G = 2.0 * Ainv
    space = _JetSpace(d, order)
    raw = _dubiner_jets(d, degree, Y, G, space)
    vol = abs(np.linalg.det(A)) / math.factorial(d)
    # orthonormal on biunit simplex (volume 2^d/d!) -> orthonormal on this simplex
    scale = math.sqrt((2.0 ** d / math.factorial(d)) / vol)
    jets = np.array([J * (c * scale) for J, c in raw])
    return jets, space


def simplex_tabulate(vertices, degree, points, order=0):
    """Orthonormal simplex polynomials on the given simplex.

    Returns {alpha: array (m, npts)} for every multi-index of order <= order.
    """
    jets, space = _simplex_jets(vertices, degree, points, order)
    return {a: jets[:, i, :] * space.factorials[i] for i, a in enumerate(space.alphas)}


@dataclass
class TabulatedValues:
    """values[alpha] has shape (nbasis, npoints, ncomponents)."""
    values: dict
    points: np.ndarray
    max_derivative_order: int

    def __getitem__(self, alpha):
        return self.values[alpha]

    @property
    def shape(self):
        return next(iter(self.values.values())).shape

    def rows(self):
        """Flat (alpha, basis, point, components) records."""
        for alpha in sorted(self.values, key=lambda a: (sum(a), tuple(-x for x in a))):
            arr = self.values[alpha]
            for j in range(arr.shape[0]):
                for p in range(arr.shape[1]):
                    yield alpha, j, p, arr[j, p]


def dubiner_tabulate(d, degree, points, max_deriv=0):
    from macrotab.complex import reference_simplex

    if d not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {d}")
    K = reference_simplex(d)
    tab = simplex_tabulate(K.vertices, degree, points, max_deriv)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return TabulatedValues({a: v[:, :, None] for a, v in tab.items()}, pts, max_deriv)


# -- expansion sets ----------------------------------------------------------

DG, C0, CONSTRAINED = "DG", "C0", "CONSTRAINED"


class ExpansionSet:
    """A finite set of piecewise polynomials on a split complex.

    Member j, component c, restricted to subcell t is
    ``sum_m coeffs[j, c, t, m] * psi_{t,m}`` where psi_{t,.} is the
    orthonormal polynomial basis of subcell t rescaled so that the DG set
    has identity Gram matrix over the whole complex.
    """

    def __init__(self, complex, degree, coeffs, continuity, constraint_matrix=None):
        self.complex = complex
        self.degree = degree
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.continuity = continuity
        self.constraint_matrix = constraint_matrix

    @property
    def size(self):
        return self.coeffs.shape[0]

    @property
    def ncomp(self):
        return self.coeffs.shape[1]

    def __len__(self):
        return self.size

    def _cell_jets(self, t, pts, order):
        C = self.complex
        verts = C.entity_vertices(C.dim, t)
        return _simplex_jets(verts, self.degree, pts, order)

    def tabulate(self, points, order=0, cells=None):
        """{alpha: (size, npts, ncomp)}; cells[i] >= 0 forces the subcell for point i."""
        C = self.complex
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        npts = len(pts)
        if cells is None:
            cells = C.locate(pts)
        else:
            cells = np.asarray(cells, dtype=int).copy()
            free = cells < 0
            if np.any(free):
                cells[free] = C.locate(pts[free])
        alphas = multi_indices(C.dim, order)
        out = {a: np.zeros((self.size, npts, self.ncomp)) for a in alphas}
        for t in np.unique(cells):
            idx = np.flatnonzero(cells == t)
            jets, space = self._cell_jets(t, pts[idx], order)
            # jets: (m, ncoef, n) -> values (ncoef, m, n)
            block = np.einsum("jcm,mkp->kjpc", self.coeffs[:, :, t, :], jets)
            for k, a in enumerate(alphas):
                out[a][:, idx, :] = block[k] * space.factorials[k]
        return out

    def tabulate_values(self, points, max_deriv=0, cells=None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return TabulatedValues(self.tabulate(pts, max_deriv, cells), pts, max_deriv)

    def take(self, matrix):
        """New set whose members are matrix @ (current members)."""
        coeffs = np.tensordot(np.asarray(matrix, dtype=float), self.coeffs, axes=(1, 0))
        return ExpansionSet(self.complex, self.degree, coeffs, self.continuity, self.constraint_matrix)


def _dg_coeffs(C, degree, ncomp=1):
    """Identity coefficients; subcell bases are already orthonormal on their subcell."""
    m = polynomial_dimension(C.dim, degree)
    T = C.num_cells
    n = T * m
    coeffs = np.zeros((ncomp * n, ncomp, T, m))
    for c in range(ncomp):
        for t in range(T):
            for i in range(m):
                coeffs[c * n + t * m + i, c, t, i] = 1.0
    return coeffs


def lattice(vertices, k):
    """Equispaced points of degree k on a simplex, ordered by multi-index."""
    verts = np.asarray(vertices, dtype=float)
    d = verts.shape[1]
    if k == 0:
        return verts.mean(axis=0)[None, :]
    pts = []
    for alpha in itertools.product(range(k + 1), repeat=d):
        if sum(alpha) <= k:
            lam = np.array(alpha, dtype=float) / k
            pts.append(verts[0] + (verts[1:] - verts[0]).T @ lam)
    return np.array(pts)


def _point_key(x):
    return tuple(np.round(np.asarray(x, dtype=float), 10) + 0.0)


def c0_lattice(C, degree):
    """Global lattice points of the split and, per subcell, the local->global map."""
    keys = {}
    pts = []
    local = []
    for t in range(C.num_cells):
        lp = lattice(C.entity_vertices(C.dim, t), degree)
        ids = []
        for x in lp:
            key = _point_key(x)
            if key not in keys:
                keys[key] = len(pts)
                pts.append(x)
            ids.append(keys[key])
        local.append((lp, ids))
    return np.array(pts), local


def _c0_coeffs(C, degree, ncomp=1):
    pts, local = c0_lattice(C, degree)
    n = len(pts)
    m = polynomial_dimension(C.dim, degree)
    T = C.num_cells
    coeffs = np.zeros((ncomp * n, ncomp, T, m))
    for t, (lp, ids) in enumerate(local):
        psi = simplex_tabulate(C.entity_vertices(C.dim, t), degree, lp)[(0,) * C.dim]
        # L_j = sum_m inv(psi)[j, m] psi_m, with psi[m, i] = psi_m(x_i)
        inv = np.linalg.inv(psi)
        for c in range(ncomp):
            for jl, g in enumerate(ids):
                coeffs[c * n + g, c, t, :] = inv[jl]
    return coeffs


def macro_expansion(C, degree, continuity=DG, ncomp=1):
    """DG or C0 expansion set over a split complex (ncomp copies for vector sets)."""
    if not isinstance(C, SplitSimplicialComplex):
        C = no_split(C)
    if continuity == DG:
        if degree < 0:
            raise ValueError("degree must be >= 0")
        return ExpansionSet(C, degree, _dg_coeffs(C, degree, ncomp), DG)
    if continuity == C0:
        if degree < 1:
            raise ValueError("C0 expansion needs degree >= 1")
        return ExpansionSet(C, degree, _c0_coeffs(C, degree, ncomp), C0)
    raise ValueError(f"unknown continuity {continuity!r}")


def null_space(A, rtol=1e-10):
    """Orthonormal basis (columns) of the numerical null space of A."""
    A = np.atleast_2d(A)
    n = A.shape[1]
    if A.size == 0 or A.shape[0] == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(A)
    smax = s[0] if len(s) else 0.0
    rank = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    return Vt[rank:].T


def constrained_expansion(base, constraints, rtol=1e-10):
    """Members of span(base) annihilated by every constraint functional."""
    from macrotab.dualset import evaluate

    if len(constraints) == 0:
        return ExpansionSet(base.complex, base.degree, base.coeffs.copy(), CONSTRAINED,
                            np.zeros((0, base.size)))
    L = evaluate(constraints, base)
    N = null_space(L, rtol)
    out = base.take(N.T)
    out.continuity = CONSTRAINED
    out.constraint_matrix = L
    return out


def reference_expansion(vertices, degree):
    """Plain polynomial set on an unsplit simplex."""
    return macro_expansion(no_split(simplex(vertices)), degree, DG)
