"""Small arithmetic expression language used by scenario configs.

Grammar: numbers, identifiers, ``+ - * /``, ``^`` (power), parentheses and
the functions ``exp, log, sqrt, abs, min, max, step``.  ``step`` is the
Heaviside function with ``step(0) = 1/2``; it is what lets a config write
the gradient of a ramp.  Constants ``pi`` and ``e`` are predefined.

Expressions are compiled once and evaluated on numpy arrays.
"""

import ast
import math

import numpy as np

__all__ = ["Expression", "ExpressionError", "compile_expression"]


class ExpressionError(ValueError):
    pass


_FUNCS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "min": np.minimum,
    "max": np.maximum,
    "step": lambda x: np.heaviside(x, 0.5),
}
_CONSTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class Expression:
    """A parsed expression; call it with keyword arrays for its variables."""

    def __init__(self, source):
        self.source = str(source)
        try:
            # '^' must bind like '**', not like Python's xor
            tree = ast.parse(self.source.strip().replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.source!r}: {exc.msg}") from None
        self._tree = tree.body
        self.variables = set()
        self._check(self._tree)

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise ExpressionError(f"non-numeric literal in {self.source!r}")
        elif isinstance(node, ast.Name):
            if node.id not in _CONSTS:
                self.variables.add(node.id)
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"operator not allowed in {self.source!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ExpressionError(f"operator not allowed in {self.source!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ExpressionError(f"unknown function in {self.source!r}")
            if node.keywords:
                raise ExpressionError(f"keyword arguments not allowed in {self.source!r}")
            nargs = 2 if node.func.id in ("min", "max") else 1
            if len(node.args) != nargs:
                raise ExpressionError(
                    f"{node.func.id} takes {nargs} argument(s) in {self.source!r}")
            for arg in node.args:
                self._check(arg)
        else:
            raise ExpressionError(
                f"unsupported syntax {type(node).__name__} in {self.source!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            return _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env),
                                          self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            val = self._eval(node.operand, env)
            return -val if isinstance(node.op, ast.USub) else val
        func = _FUNCS[node.func.id]
        return func(*(self._eval(a, env) for a in node.args))

    def __call__(self, **env):
        missing = self.variables - set(env)
        if missing:
            raise ExpressionError(
                f"unbound variable(s) {sorted(missing)} in {self.source!r}")
        env = {k: np.asarray(v, dtype=float) for k, v in env.items()}
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, env)
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def __repr__(self):
        return f"Expression({self.source!r})"


def compile_expression(source):
    if isinstance(source, Expression):
        return source
    return Expression(source)
