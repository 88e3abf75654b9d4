"""Closed-form fields given as arithmetic expressions in ``x, y, z, t``.

Expressions are parsed with :mod:`ast` and only a whitelist of node types,
names and numpy functions is accepted, so configuration files cannot run
arbitrary code::

    >>> AnalyticField("cos(2*x) + 0.5*sin(y)")
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

from fracflow.errors import ConfigError
from fracflow.fields import GridSpec, ScalarField, VectorField

_FUNCS = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "sinh", "cosh", "abs")
}
_CONSTS = {"pi": np.pi, "e": np.e}
_VARS = ("x", "y", "z", "t")
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


def _compile(expr: str):
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ConfigError(f"unsupported syntax {type(node).__name__} in {expr!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ConfigError(f"only numeric literals are allowed in {expr!r}")
        if isinstance(node, ast.Call) and not (
            isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords
        ):
            raise ConfigError(f"unsupported function call in {expr!r}")
        if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS and node.id not in _VARS:
            raise ConfigError(f"unknown name {node.id!r} in {expr!r}")
    return compile(tree, "<field>", "eval")


@dataclass(frozen=True)
class AnalyticField:
    expr: str

    def __post_init__(self) -> None:
        _compile(self.expr)

    @property
    def time_dependent(self) -> bool:
        return any(isinstance(n, ast.Name) and n.id == "t" for n in ast.walk(ast.parse(self.expr, mode="eval")))

    def evaluate(self, grid: GridSpec, t: float = 0.0) -> np.ndarray:
        mesh = grid.mesh()
        env = dict(_FUNCS, **_CONSTS, t=float(t))
        for name, arr in zip(_VARS, mesh):
            env[name] = arr
        for name in _VARS[grid.ndim : 3]:
            env[name] = np.zeros(grid.shape)
        value = eval(_compile(self.expr), {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(value, dtype=float), grid.shape).copy()

    def sample(self, grid: GridSpec, t: float = 0.0) -> ScalarField:
        return ScalarField(grid, self.evaluate(grid, t), {"expr": self.expr})


def sample_vector(exprs, grid: GridSpec, t: float = 0.0) -> VectorField:
    exprs = [e if isinstance(e, AnalyticField) else AnalyticField(str(e)) for e in exprs]
    if len(exprs) != grid.ndim:
        raise ConfigError(f"need {grid.ndim} component expressions, got {len(exprs)}")
    return VectorField(grid, np.stack([e.evaluate(grid, t) for e in exprs]))
