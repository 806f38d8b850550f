"""Small arithmetic-expression language for inline problem configs.

Grammar: numbers, variables, ``+ - * / ^``, parentheses and the functions
abs, sqrt, sin, cos, exp. ``^`` is exponentiation. Expressions are parsed
with :mod:`ast`, checked against a whitelist and evaluated on numpy
arrays, so a field expression can be evaluated at many points at once.
"""

from __future__ import annotations

import ast
from typing import Callable, Sequence

import numpy as np

from .model import StructuralError

FUNCTIONS = {"abs": np.abs, "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos, "exp": np.exp}
CONSTANTS = {"pi": np.pi}

_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
)


def compile_expr(text: str, names: Sequence[str]) -> Callable[..., np.ndarray]:
    """Compile ``text`` into a function of the given variable names."""
    if not isinstance(text, str) or not text.strip():
        raise StructuralError("expression must be a non-empty string")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as err:
        raise StructuralError(f"cannot parse {text!r}: {err.msg}") from None
    allowed = set(names) | set(FUNCTIONS) | set(CONSTANTS)
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise StructuralError(f"{text!r}: {type(node).__name__} is not allowed")
        if isinstance(node, ast.Name) and node.id not in allowed:
            raise StructuralError(f"{text!r}: unknown name {node.id!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS or len(node.args) != 1 or node.keywords:
                raise StructuralError(f"{text!r}: only single-argument calls of {sorted(FUNCTIONS)}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise StructuralError(f"{text!r}: only numeric constants")
    code = compile(tree, "<expr>", "eval")
    env = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS}

    def fn(*args):
        scope = dict(zip(names, args))
        out = eval(code, env, scope)
        return np.asarray(out, dtype=float)

    return fn


def point_function(text: str, dim: int, prefix: str = "x") -> Callable[[np.ndarray], float]:
    """f(x) for a vector x with components x1..xn."""
    names = [f"{prefix}{i + 1}" for i in range(dim)]
    fn = compile_expr(text, names)
    return lambda x: float(fn(*np.asarray(x, dtype=float).reshape(-1)))


def vector_function(texts: Sequence, dim: int, prefix: str = "x") -> Callable[[np.ndarray], np.ndarray]:
    """Nested lists of expressions evaluated at one point, keeping the nesting shape."""
    names = [f"{prefix}{i + 1}" for i in range(dim)]
    arr = np.asarray(texts, dtype=object)
    fns = [compile_expr(t, names) for t in arr.reshape(-1)]

    def f(x):
        xs = np.asarray(x, dtype=float).reshape(-1)
        return np.array([float(g(*xs)) for g in fns]).reshape(arr.shape)

    return f


def field_function(text: str, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """phi(points) for points of shape (N, dim) with variables xi1..xid."""
    names = [f"xi{i + 1}" for i in range(dim)]
    fn = compile_expr(text, names)

    def f(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.broadcast_to(fn(*pts.T), (pts.shape[0],)).astype(float)

    return f


def field_gradient(texts: Sequence[str], dim: int) -> Callable[[np.ndarray], np.ndarray]:
    comps = [field_function(t, dim) for t in texts]
    if len(comps) != dim:
        raise StructuralError(f"gradient needs {dim} components")
    return lambda pts: np.stack([c(pts) for c in comps], axis=1)
