"""Small arithmetic expression grammar over a single variable ``t``.

Expressions use ``+ - * / ^`` (``**`` is accepted too), parentheses, numeric
literals, the constants ``pi`` and ``e``, and the functions ``sin``, ``cos``,
``tan``, ``sinh``, ``cosh``, ``tanh``, ``exp``, ``log`` and ``sqrt``.

The grammar is checked on the Python AST before anything is evaluated, then
converted to a sympy expression so derivatives of every order are exact.
"""
from __future__ import annotations

import ast
from functools import cached_property

import numpy as np
import sympy as sp

FUNCTIONS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "sinh": sp.sinh,
    "cosh": sp.cosh,
    "tanh": sp.tanh,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
}
CONSTANTS = {"pi": sp.pi, "e": sp.E}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARY = (ast.UAdd, ast.USub)

T = sp.Symbol("t", real=True)


class ExpressionError(ValueError):
    """Raised for text outside the expression grammar."""


def _check(node: ast.AST) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left)
        _check(node.right)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _UNARY):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.operand)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError("unknown function")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        _check(node.args[0])
    elif isinstance(node, ast.Name):
        if node.id != "t" and node.id not in CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise ExpressionError("only numeric literals are allowed")
    else:
        raise ExpressionError(f"syntax element {type(node).__name__} not allowed")


def _to_sympy(node: ast.AST) -> sp.Expr:
    if isinstance(node, ast.Expression):
        return _to_sympy(node.body)
    if isinstance(node, ast.BinOp):
        left, right = _to_sympy(node.left), _to_sympy(node.right)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
        return left**right
    if isinstance(node, ast.UnaryOp):
        operand = _to_sympy(node.operand)
        return -operand if isinstance(node.op, ast.USub) else operand
    if isinstance(node, ast.Call):
        return FUNCTIONS[node.func.id](_to_sympy(node.args[0]))
    if isinstance(node, ast.Name):
        return T if node.id == "t" else CONSTANTS[node.id]
    return sp.nsimplify(node.value) if isinstance(node.value, int) else sp.Float(node.value)


def parse(text: str) -> sp.Expr:
    """Parse ``text`` into a sympy expression in the symbol ``t``."""
    source = text.strip().replace("^", "**")
    if not source:
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    _check(tree)
    return _to_sympy(tree)


class Expression:
    """A parsed expression with exact derivatives, evaluated on numpy arrays."""

    def __init__(self, text: str):
        self.text = text
        self.expr = parse(text)

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"

    @cached_property
    def _derivative_funcs(self):
        funcs = []
        expr = self.expr
        for _ in range(5):
            funcs.append(sp.lambdify(T, expr, modules="numpy"))
            expr = sp.diff(expr, T)
        return funcs

    def derivatives(self, t, order: int = 3) -> tuple[np.ndarray, ...]:
        """Return ``(g, g', ..., g^(order))`` at ``t`` (order at most 4)."""
        if order > 4:
            raise ValueError("derivatives are available up to order 4")
        t = np.asarray(t, dtype=float)
        return tuple(
            np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape).copy()
            for fn in self._derivative_funcs[: order + 1]
        )

    def __call__(self, t, order: int = 3):
        return self.derivatives(t, order)
