"""Collapsed Gauss-Jacobi rules on simplices and their macro tilings."""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from macrotab.complex import _measure, is_refinement_of
from macrotab.exceptions import IncompatibleComplexesError


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    exact_degree: int
    domain: tuple = None

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        """Apply the rule to values sampled at self.points (last axis = points)."""
        return np.asarray(values) @ self.weights


def _gauss_jacobi01(n, a):
    """n-point rule on [0, 1] for the weight (1 - t)^a."""
    x, w = roots_jacobi(n, a, 0)
    return (1.0 + x) / 2.0, w / 2.0 ** (a + 1)


@lru_cache(maxsize=None)
def _collapsed(d, degree):
    n = max(1, math.ceil((degree + 1) / 2))
    if d == 1:
        t, w = _gauss_jacobi01(n, 0)
        return t[:, None], w
    if d == 2:
        u, wu = _gauss_jacobi01(n, 0)
        v, wv = _gauss_jacobi01(n, 1)
        U, V = np.meshgrid(u, v, indexing="ij")
        pts = np.column_stack([(U * (1 - V)).ravel(), V.ravel()])
        return pts, np.outer(wu, wv).ravel()
    if d == 3:
        u, wu = _gauss_jacobi01(n, 0)
        v, wv = _gauss_jacobi01(n, 1)
        w, ww = _gauss_jacobi01(n, 2)
        U, V, W = np.meshgrid(u, v, w, indexing="ij")
        pts = np.column_stack([(U * (1 - V) * (1 - W)).ravel(),
                               (V * (1 - W)).ravel(), W.ravel()])
        return pts, np.einsum("i,j,k->ijk", wu, wv, ww).ravel()
    raise ValueError(f"unsupported dimension {d}")


def simplex_rule(d, degree, vertices=None):
    """Rule exact on P_degree over the unit simplex, or over the given simplex."""
    if d not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {d}")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    pts, wts = _collapsed(d, degree)
    if vertices is None:
        return QuadratureRule(pts.copy(), wts.copy(), degree)
    verts = np.asarray(vertices, dtype=float)
    A = (verts[1:] - verts[0]).T
    scale = _measure(verts) * math.factorial(d)
    return QuadratureRule(verts[0] + pts @ A.T, wts * scale, degree)


def macro_rule(C, degree):
    """The base rule copied onto every subcell of C."""
    d = C.dim
    base_pts, base_wts = _collapsed(d, degree)
    pts, wts = [], []
    for t in sorted(C.topology[d]):
        verts = C.entity_vertices(d, t)
        A = (verts[1:] - verts[0]).T
        pts.append(verts[0] + base_pts @ A.T)
        wts.append(base_wts * abs(np.linalg.det(A)))
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), degree, (C, (d, 0)))


def macro_rule_cells(C, degree):
    """Macro rule plus the owning subcell of every point."""
    n = len(_collapsed(C.dim, degree)[1])
    cells = np.repeat(np.arange(C.num_cells), n)
    return macro_rule(C, degree), cells


def facet_rule(C, entity, degree):
    """Rule on a sub-entity of C, mapped to ambient coordinates."""
    dim, eid = entity
    if dim not in C.topology or eid not in C.topology[dim]:
        raise ValueError(f"invalid entity {entity}")
    verts = C.entity_vertices(dim, eid)
    if dim == 0:
        return QuadratureRule(verts.copy(), np.ones(1), degree, (C, entity))
    ref_pts, ref_wts = _collapsed(dim, degree)
    pts = verts[0] + ref_pts @ (verts[1:] - verts[0])
    wts = ref_wts * _measure(verts) * math.factorial(dim)
    return QuadratureRule(pts, wts, degree, (C, entity))


def common_rule(A, B, degree):
    """Macro rule on whichever complex refines the other."""
    if is_refinement_of(A, B):
        return macro_rule(A, degree)
    if is_refinement_of(B, A):
        return macro_rule(B, degree)
    raise IncompatibleComplexesError("neither complex refines the other")
