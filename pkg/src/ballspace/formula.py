"""Arithmetic formulas in one index variable, e.g. ``2^k`` or ``2^(k*t)``.

Only numbers, names, + - * / ^ ** and a few math functions are accepted;
everything else is rejected before evaluation.
"""
from __future__ import annotations

import ast
import math
import operator

from .errors import DSLError

_BINARY = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log, "log2": math.log2,
          "floor": math.floor, "ceil": math.ceil, "abs": abs}


def compile_formula(text: str, path: str = ""):
    """Parse once; returns a callable taking the variable bindings as keywords."""
    if not isinstance(text, str):
        if isinstance(text, (int, float)):
            value = float(text)
            return lambda **_: value
        raise DSLError("formula must be a string or a number", path)
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise DSLError(f"cannot parse formula {text!r}: {exc.msg}", path) from None
    _validate(tree.body, text, path)

    def run(**names):
        return _eval(tree.body, names, text, path)
    return run


def _validate(node, text, path):
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise DSLError(f"only numeric literals are allowed in {text!r}", path)
    elif isinstance(node, ast.Name):
        pass
    elif isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
        _validate(node.left, text, path)
        _validate(node.right, text, path)
    elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        _validate(node.operand, text, path)
    elif (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
          and len(node.args) == 1 and not node.keywords):
        _validate(node.args[0], text, path)
    else:
        raise DSLError(f"unsupported construct {type(node).__name__} in {text!r}", path)


def _eval(node, names, text, path):
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.Name):
        if node.id not in names:
            raise DSLError(f"unknown name {node.id!r} in {text!r}", path)
        return names[node.id]
    if isinstance(node, ast.BinOp):
        try:
            return _BINARY[type(node.op)](_eval(node.left, names, text, path), _eval(node.right, names, text, path))
        except (ZeroDivisionError, OverflowError) as exc:
            raise DSLError(f"{exc} while evaluating {text!r}", path) from None
    if isinstance(node, ast.UnaryOp):
        return _UNARY[type(node.op)](_eval(node.operand, names, text, path))
    try:
        return _FUNCS[node.func.id](_eval(node.args[0], names, text, path))
    except ValueError as exc:
        raise DSLError(f"{exc} while evaluating {text!r}", path) from None
