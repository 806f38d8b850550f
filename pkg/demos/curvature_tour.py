"""Curvature on the small finite-dimensional sets.

Box corners are flat (value 0), the unit disc bends with curvature 2*lam*|h|^2,
and the region above |x1|^1.5 bends infinitely fast at the origin. Flipping
that region gives -infinity.
"""

import numpy as np

from curvlab import Box, PowerEpigraph, UnitBall, curvature_brute_force, curvature_closed_form


def show(label, value):
    print(f"{label:<40} {value.label():>14}  [{value.method}] {value.note}")


show("box corner, h along the free edge", curvature_brute_force(Box([-1, -1], [1, 1]), [1, 0], [-1, 0], [0, 1]))
for lam in (0.5, 1.0, 2.0):
    x = np.array([1.0, 0.0])
    show(f"unit disc, lam={lam}, closed form", curvature_closed_form(UnitBall(2), x, -2 * lam * x, [0, 1]))
    show(f"unit disc, lam={lam}, brute force", curvature_brute_force(UnitBall(2), x, -2 * lam * x, [0, 1]))
show("region above |x1|^1.5", curvature_brute_force(PowerEpigraph(1.5), [0, 0], [0, 1], [1, 0]))
show("region below |x1|^1.5", curvature_brute_force(PowerEpigraph(1.5, "below"), [0, 0], [0, -1], [1, 0]))
