"""Composite quadrature on split triangles integrates piecewise polynomials exactly."""
import math

from macrotab import complex as cx
from macrotab.quadrature import macro_rule

T = cx.reference_simplex(2)
for name in ("alfeld", "ps6", "ps12", "iso2"):
    C = cx.split(T, name)
    rule = macro_rule(C, 6)
    x, y = rule.points.T
    exact = math.factorial(4) * math.factorial(2) / math.factorial(8)
    print(f"{name:7s} {len(C.topology[2]):2d} subcells, {len(rule):3d} points, "
          f"int x^4 y^2 error {abs(rule.integrate(x ** 4 * y ** 2) - exact):.1e}")
