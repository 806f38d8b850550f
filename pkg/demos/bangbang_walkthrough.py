"""Bang-bang geometry for phi = xi - 1/2 on (0, 1) and the circle in 2D."""

import math

import numpy as np

from curvlab import bangbang as bb
from curvlab import problems
from curvlab.model import Grid
from curvlab.problems import Numerics, analyze

grid = Grid(((0, 1),), 2048)
f = bb.AdjointField.from_callables(grid, lambda p: p[:, 0] - 0.5, lambda p: np.ones_like(p))
sm = bb.extract_zero_set(f)
lsc = bb.level_set_constant(f)
print("zero set:", sm.nodes.ravel(), "K estimate:", lsc.K_estimate)

g2 = sm.with_density(2.0)
print("surface curvature for g = 2:", bb.surface_curvature(g2))
rep = bb.verify_recovery_limits(f, g2, [4e-3, 2e-3, 1e-3], [lambda p: p[:, 0]])
for t, e in zip(rep.t_schedule, (rep.errors(i) for i in range(3))):
    print(f"  t={t:.0e}  pairing err {e['pairing']:.1e}  l1 err {e['l1']:.1e}  curvature err {e['curvature']:.1e}")
print("  rates:", {k: round(v, 2) for k, v in rep.rates.items()})

taylor = bb.l1_taylor_check(f, lambda p: p[:, 0], 2.0 ** -np.arange(4, 9))
print("L1 expansion residuals, v = xi:", np.round(taylor.residuals, 6))

for kappa in (0.0, 2.0):
    out, growth = analyze(problems.bangbang_1d(kappa=kappa), "full", Numerics())
    print(f"kappa={kappa}: {out['verdict']}, fitted growth {growth.fitted_c:.4f}")

circle = problems.bangbang_2d_circle()
smc = bb.extract_zero_set(circle.field)
print(f"circle: length/pi = {smc.length / math.pi:.5f}, curvature(g=1)/(pi/2) = {bb.surface_curvature(smc.with_density(1.0)) / (math.pi / 2):.5f}")
