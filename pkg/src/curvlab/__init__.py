"""Curvature of admissible sets and no-gap second-order optimality checks."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    BangBangBox,
    Box,
    Grid,
    HalfLineNonPos,
    LevelSet,
    Objective,
    Polyhedron,
    PowerEpigraph,
    UnitBall,
    check_objective,
    membership,
    norm,
)
from .cones import (  # noqa: E402
    critical_cone_contains,
    normal_cone_contains,
    radial_cone_contains,
    second_order_tangent_set,
    tangent_cone_contains,
)
from .curvature import (  # noqa: E402
    BruteForceConfig,
    CurvatureValue,
    curvature_brute_force,
    curvature_closed_form,
    curvature_pullback,
)
from .soc import GrowthConfig, SocConfig, fonc_check, growth_sample, no_gap_report  # noqa: E402
from .bangbang import (  # noqa: E402
    AdjointField,
    BangBangObjective,
    bangbang_no_gap,
    extract_zero_set,
    level_set_constant,
    surface_curvature,
)
