"""Shared checks for the test suite and the acceptance script."""
import numpy as np


def edge_samples(C, f, n=10):
    a, b = C.entity_vertices(C.dim - 1, f)
    t = np.linspace(0.0, 1.0, n + 2)[1:-1, None]
    return a + t * (b - a)


def one_sided(tabulate, C, f, n=10, max_deriv=1):
    """Tabulations at points of interior facet f taken from each neighbour."""
    x = edge_samples(C, f, n)
    c0, c1 = C.cells_of_facet(f)
    return x, tabulate(x, max_deriv, np.full(len(x), c0)), tabulate(x, max_deriv, np.full(len(x), c1))


def c1_jump(el, C=None, tabulate=None):
    """Max value/gradient jump of every basis function across interior facets."""
    C = C or el.complex
    tabulate = tabulate or el.tabulate
    worst = 0.0
    for f in C.interior_facets():
        _, t0, t1 = one_sided(tabulate, C, f)
        for a in t0:
            if sum(a) <= 1:
                worst = max(worst, np.abs(t0[a] - t1[a]).max())
    return worst


def traction(values, n):
    """tau n for symmetric tensors stored as (xx, xy, yy) in the last axis."""
    xx, xy, yy = values[..., 0], values[..., 1], values[..., 2]
    return np.stack([xx * n[0] + xy * n[1], xy * n[0] + yy * n[1]], axis=-1)


def tau_n_jump(el, C=None, tabulate=None):
    from macrotab.complex import facet_frame

    C = C or el.complex
    tabulate = tabulate or el.tabulate
    worst = 0.0
    for f in C.interior_facets():
        n = facet_frame(C, f).normal
        _, t0, t1 = one_sided(tabulate, C, f, max_deriv=0)
        worst = max(worst, np.abs(traction(t0[(0, 0)], n) - traction(t1[(0, 0)], n)).max())
    return worst


def div_jump(el):
    C = el.complex
    worst = 0.0
    for f in C.interior_facets():
        _, t0, t1 = one_sided(el.tabulate, C, f)
        d0 = t0[(1, 0)][..., 0] + t0[(0, 1)][..., 1]
        d1 = t1[(1, 0)][..., 0] + t1[(0, 1)][..., 1]
        worst = max(worst, np.abs(d0 - d1).max())
    return worst


def random_points(vertices, n, seed=0):
    lam = np.random.default_rng(seed).dirichlet(np.ones(3), n)
    return lam @ np.asarray(vertices, dtype=float)


def monomial(i, j, comp=None, ncomp=1):
    """fn(points, alpha) for x^i y^j (placed in component comp if vector valued)."""
    import math

    def fn(x, alpha):
        a, b = alpha
        if a > i or b > j:
            v = np.zeros(len(x))
        else:
            v = math.perm(i, a) * math.perm(j, b) * x[:, 0] ** (i - a) * x[:, 1] ** (j - b)
        if comp is None:
            return v
        out = np.zeros((len(x), ncomp))
        out[:, comp] = v
        return out
    return fn


def reproduction_error(el, fn, points):
    """max |I fn - fn| at points for the nodal interpolant on the element."""
    coef = el.interpolate(fn)
    vals = np.einsum("j,jqc->qc", coef, el.tabulate(points)[(0, 0)])
    exact = np.asarray(fn(points, (0, 0)), dtype=float).reshape(len(points), -1)
    return np.abs(vals - exact).max()


def random_triangles(n, seed=7, min_det=0.05):
    """Triangles with vertices uniform in [-1, 1]^2 and |det J| >= min_det."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        P = rng.uniform(-1, 1, (3, 2))
        if abs(np.linalg.det(np.column_stack([P[1] - P[0], P[2] - P[0]]))) >= min_det:
            out.append(P)
    return out


def dense(M):
    return M.toarray() if hasattr(M, "toarray") else np.asarray(M)


def oracle_gap(name, P, npts=20):
    """(value, gradient) max-abs gap between the fast path and the physical rebuild."""
    from macrotab import transform as tf
    from macrotab.elements import get_element

    el = get_element(name)
    x = random_points(P, npts, seed=1)
    fast = tf.plan_for(el).tabulate(tf.geometry(P), x, 1)
    slow = tf.oracle_rebuild(el, P).tabulate(x, 1)
    gv = np.abs(fast[(0, 0)] - slow[(0, 0)]).max()
    gd = max(np.abs(fast[a] - slow[a]).max() for a in ((1, 0), (0, 1)))
    return gv, gd


def tangential_identity_gap(P, fn, degree=3, qmax=2):
    """Max gap in  mu^t_i(p) = P_i(1) p(b) - P_i(-1) p(a) - mu_i(p)  over edges and i <= qmax,
    where mu^t_i weights the tangential derivative by P_i and mu_i weights the trace by
    the arclength derivative of P_i."""
    from macrotab import dualset as ds
    from macrotab.complex import simplex
    from macrotab.polyset import jacobi

    K = simplex(P)
    fs = ds.FunctionSet(fn)
    worst = 0.0
    for e in sorted(K.topology[1]):
        va, vb = K.entity_vertices(1, e)
        L = K.volume(1, e)
        for i in range(qmax + 1):
            mut = ds.moment(K, (1, e), ds.jacobi_weight(i), ds.TANGENTIAL_DERIV, degree=degree, q_degree=i)
            dq = ds.djacobi_weight(i)
            tr = ds.moment(K, (1, e), lambda s, dq=dq: dq(s) * 2.0 / L, ds.TRACE, degree=degree, q_degree=i)
            lhs = ds.evaluate([mut], fs)[0, 0]
            ends = jacobi(i, 1, 1, 1.0) * fn(vb[None], (0, 0))[0] - jacobi(i, 1, 1, -1.0) * fn(va[None], (0, 0))[0]
            worst = max(worst, abs(lhs - (ends - ds.evaluate([tr], fs)[0, 0])))
    return worst
