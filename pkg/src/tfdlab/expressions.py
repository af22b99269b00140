"""Small arithmetic-expression evaluator for coefficient definitions.

Expressions such as ``1 + x**2`` or ``2 + cos(pi*x)`` are parsed with
:mod:`ast` and evaluated by walking a whitelisted subset of the tree, so
config files never reach :func:`eval`. Functions act elementwise on numpy
arrays.
"""

from __future__ import annotations

import ast
import operator
from typing import Callable, Sequence

import numpy as np

from .exceptions import PreconditionViolation

__all__ = ["ExpressionError", "FUNCTIONS", "CONSTANTS", "compile_expression"]


class ExpressionError(PreconditionViolation):
    pass


FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
    "abs": np.abs,
    # positive part, for coefficients switched on past a point
    "pos": lambda z: np.maximum(z, 0.0),
}

CONSTANTS = {"pi": np.pi, "e": np.e}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _check(node, variables, text):
    if isinstance(node, ast.Expression):
        return _check(node.body, variables, text)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported literal {node.value!r} in {text!r}")
        return
    if isinstance(node, ast.Name):
        if node.id not in variables and node.id not in CONSTANTS:
            allowed = ", ".join(sorted(set(variables) | set(CONSTANTS)))
            raise ExpressionError(f"unknown name {node.id!r} in {text!r} (allowed: {allowed})")
        return
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left, variables, text)
        _check(node.right, variables, text)
        return
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        _check(node.operand, variables, text)
        return
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            name = getattr(node.func, "id", "?")
            raise ExpressionError(
                f"unknown function {name!r} in {text!r} (allowed: {', '.join(sorted(FUNCTIONS))})"
            )
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id}() takes exactly one argument in {text!r}")
        _check(node.args[0], variables, text)
        return
    raise ExpressionError(f"unsupported syntax {type(node).__name__} in {text!r}")


def _eval(node, env):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else CONSTANTS[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNOPS[type(node.op)](_eval(node.operand, env))
    return FUNCTIONS[node.func.id](_eval(node.args[0], env))


def compile_expression(text: str, variable: str = "x") -> Callable:
    """Parse ``text`` into a vectorised function of one variable.

    The result always returns an array shaped like its argument, also for
    constant expressions.

    >>> f = compile_expression("1 + x**2")
    >>> f(np.array([0.0, 2.0]))
    array([1., 5.])
    """
    text = str(text).strip()
    if not text:
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    _check(tree, (variable,), text)
    body = tree.body

    def f(z):
        z = np.asarray(z, dtype=float)
        with np.errstate(all="ignore"):
            out = _eval(body, {variable: z})
        out = np.broadcast_to(np.asarray(out, dtype=float), z.shape).copy()
        return out

    f.expression = text
    f.__name__ = f"expr[{text}]"
    return f
