import numpy as np
import pytest

from curvlab.expr import compile_expr, field_function, point_function, vector_function
from curvlab.model import StructuralError


def test_arithmetic_and_power():
    f = point_function("x1^2 + 3*x2 - sqrt(4) + abs(-1) / 2", 2)
    assert f([2.0, 1.0]) == pytest.approx(4 + 3 - 2 + 0.5)


def test_functions_and_constants():
    f = point_function("sin(pi/2) + cos(0) + exp(0)", 1)
    assert f([0.0]) == pytest.approx(3.0)


def test_field_vectorized():
    phi = field_function("xi1^2 + xi2^2 - 0.25", 2)
    pts = np.array([[0.5, 0.0], [0.0, 0.0]])
    assert np.allclose(phi(pts), [0.0, -0.25])
    const = field_function("2", 2)
    assert np.allclose(const(pts), [2.0, 2.0])


def test_nested_shapes():
    H = vector_function([["2", "x1"], ["x1", "0"]], 2)
    assert H([3.0, 0.0]).shape == (2, 2)
    assert H([3.0, 0.0])[0, 1] == 3.0


@pytest.mark.parametrize(
    "text",
    ["__import__('os')", "x1.real", "x3", "[x1]", "lambda: 1", "x1 if x1 else 0", "'a'", "", "x1 +"],
)
def test_rejects_outside_grammar(text):
    with pytest.raises(StructuralError):
        compile_expr(text, ["x1", "x2"])
