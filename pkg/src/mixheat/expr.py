"""A small closed-form expression language for smooth data.

Expressions are ordinary arithmetic over the coordinates ``x`` (and ``y``
in 2-D), the box period ``L`` and the constants ``pi`` and ``e``.
Allowed operators are ``+ - * / **`` and unary minus; allowed functions:

    sin, cos, exp, sqrt, abs, tanh
    gauss(v, center, width)   -> exp(-(v - center)**2 / (2 * width**2))

Anything else (attribute access, subscripts, other names) is rejected at
parse time, so expressions read from config files are never executed as
Python.
"""

from __future__ import annotations

import ast
import math

import numpy as np

__all__ = ["Expression"]


def _gauss(v, center, width):
    return np.exp(-((v - center) ** 2) / (2.0 * width**2))


_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
    "gauss": _gauss,
}
_ARITY = {"gauss": 3}
_CONSTANTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class Expression:
    """Parsed, validated expression; call it with a grid to sample it."""

    def __init__(self, text: str):
        self.text = str(text)
        try:
            tree = ast.parse(self.text, mode="eval")
        except SyntaxError as exc:
            raise ValueError(f"cannot parse expression {self.text!r}: {exc.msg}") from None
        self._tree = tree.body
        self._check(self._tree)

    def __repr__(self):
        return f"Expression({self.text!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and other.text == self.text

    def __hash__(self):
        return hash(self.text)

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ValueError(f"only numeric constants allowed in {self.text!r}")
        elif isinstance(node, ast.Name):
            if node.id not in _CONSTANTS and node.id not in ("x", "y", "L"):
                raise ValueError(f"unknown name {node.id!r} in {self.text!r}")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ValueError(f"operator not allowed in {self.text!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ValueError(f"operator not allowed in {self.text!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ValueError(f"unknown function in {self.text!r}")
            if node.keywords:
                raise ValueError(f"keyword arguments not allowed in {self.text!r}")
            if len(node.args) != _ARITY.get(node.func.id, 1):
                raise ValueError(f"wrong number of arguments to {node.func.id} in {self.text!r}")
            for arg in node.args:
                self._check(arg)
        else:
            raise ValueError(f"unsupported syntax in {self.text!r}")

    def uses(self, name: str) -> bool:
        return any(isinstance(n, ast.Name) and n.id == name for n in ast.walk(self._tree))

    def evaluate(self, grid) -> np.ndarray:
        """Sample on ``grid``; returns an array of shape ``grid.shape``."""
        if grid.dimension == 1 and self.uses("y"):
            raise ValueError(f"expression {self.text!r} uses y on a 1-D grid")
        env = dict(_CONSTANTS, L=grid.period)
        env["x"] = grid.coordinates[0]
        if grid.dimension == 2:
            env["y"] = grid.coordinates[1]
        with np.errstate(over="raise", divide="raise", invalid="raise", under="ignore"):
            try:
                out = self._eval(self._tree, env)
            except FloatingPointError as exc:
                raise ValueError(f"expression {self.text!r} is not finite on the grid: {exc}") from None
        return np.broadcast_to(np.asarray(out, dtype=float), grid.shape).copy()

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        args = [self._eval(a, env) for a in node.args]
        return _FUNCTIONS[node.func.id](*args)
