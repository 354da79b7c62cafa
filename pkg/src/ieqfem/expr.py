"""Small arithmetic expression language for initial data.

Variables ``x``, ``y``, ``t`` and the constant ``pi``; operators
``+ - * / ^`` (``**`` also accepted); functions sin, cos, tanh, exp, sqrt,
abs, log, max, min. Expressions are parsed with :mod:`ast` and compiled to
a numpy-vectorized closure; nothing is ever passed to ``eval``.
"""

from __future__ import annotations

import ast
import operator

import numpy as np

from .errors import ConfigError

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "tanh": np.tanh, "exp": np.exp,
    "sqrt": np.sqrt, "abs": np.abs, "log": np.log,
    "max": np.maximum, "min": np.minimum,
}
_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
}
_CONSTS = {"pi": np.pi, "e": np.e}
VARIABLES = ("x", "y", "t")


def _compile(node, src, key):
    if isinstance(node, ast.Expression):
        return _compile(node.body, src, key)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        v = float(node.value)
        return lambda env: v
    if isinstance(node, ast.Name):
        name = node.id
        if name in VARIABLES:
            return lambda env: env[name]
        if name in _CONSTS:
            v = _CONSTS[name]
            return lambda env: v
        raise ConfigError(f"unknown name {name!r} in expression {src!r}", key=key)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        f = _compile(node.operand, src, key)
        if isinstance(node.op, ast.USub):
            return lambda env: -f(env)
        return f
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        a = _compile(node.left, src, key)
        b = _compile(node.right, src, key)
        return lambda env: op(a(env), b(env))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        if name not in _FUNCS:
            raise ConfigError(f"unknown function {name!r} in expression {src!r}", key=key)
        args = [_compile(a, src, key) for a in node.args]
        fn = _FUNCS[name]
        if name in ("max", "min"):
            if len(args) < 2:
                raise ConfigError(f"{name} needs at least two arguments", key=key)

            def call(env, fn=fn, args=args):
                out = args[0](env)
                for a in args[1:]:
                    out = fn(out, a(env))
                return out

            return call
        if len(args) != 1:
            raise ConfigError(f"{name} takes one argument", key=key)
        (a,) = args
        return lambda env: fn(a(env))
    raise ConfigError(f"unsupported syntax in expression {src!r}", key=key)


def parse_expression(src, key="initial.expression"):
    """Compile ``src`` into ``f(x, y, t=0.0)``."""
    if not isinstance(src, str) or not src.strip():
        raise ConfigError("empty expression", key=key)
    try:
        tree = ast.parse(src.replace("^", "**").strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {src!r}: {exc.msg}", key=key) from None
    body = _compile(tree, src, key)

    def f(x, y, t=0.0):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(all="ignore"):
            out = body({"x": x, "y": y, "t": t})
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x, y).shape).copy()

    f.source = src
    return f
