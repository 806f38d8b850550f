"""Run the full no-gap analysis on every bundled example."""

import time

from curvlab import problems
from curvlab.problems import EXAMPLES, Numerics, analyze

for name, ex in EXAMPLES.items():
    start = time.perf_counter()
    out, growth = analyze(problems.build_example(name), "full", Numerics())
    c = growth.fitted_c if growth is not None else float("nan")
    print(f"{name:<24} {out['verdict']:<18} c={c:<10.4g} {time.perf_counter() - start:5.1f}s  {out['details']}")
