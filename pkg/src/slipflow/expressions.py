"""Closed-form field expressions for configuration files.

Initial data and body forces are given in config files as small arithmetic
expressions over the coordinates.  The grammar is deliberately tiny: the
binary operators ``+ - * / ^``, the functions ``sin``, ``cos``, ``exp``,
the constant ``pi``, numeric literals, and the coordinates ``x``, ``y``
(plus ``t`` where a caller allows time dependence).  Anything else is
rejected with a message naming the offending symbol.
"""

from typing import Callable, Sequence

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import ConfigError

X, Y, T = sp.symbols("x y t", real=True)

_LOCALS = {
    "x": X, "y": Y, "t": T, "pi": sp.pi,
    "sin": sp.sin, "cos": sp.cos, "exp": sp.exp,
}
_TRANSFORMS = standard_transformations + (convert_xor,)
# Without a restricted global namespace, parse_expr would resolve any sympy
# function name (tan, sinh, ...) and silently widen the grammar.  This keeps
# just enough for the numeric-literal transformations to work; everything
# unknown becomes an undefined function and is rejected below.
_GLOBALS = {
    "Integer": sp.Integer, "Float": sp.Float, "Rational": sp.Rational,
    "Symbol": sp.Symbol, "Function": sp.Function,
}


def parse_field(text: str, allow_t: bool = False) -> sp.Expr:
    """Parse an expression string into a sympy expression.

    Args:
        text: the expression, e.g. ``"1 + 0.1*cos(2*pi*x)*cos(pi*y)"``.
        allow_t: whether the time coordinate may appear.

    Returns:
        The parsed expression in the symbols x, y (and t if allowed).

    Raises:
        ConfigError: on syntax errors or names outside the grammar.
    """
    try:
        expr = parse_expr(text, local_dict=_LOCALS, global_dict=_GLOBALS,
                          transformations=_TRANSFORMS, evaluate=True)
    except (SyntaxError, TypeError, sp.SympifyError) as exc:
        raise ConfigError(f"could not parse expression {text!r}: {exc}") from None

    allowed = {X, Y, T} if allow_t else {X, Y}
    extra = expr.free_symbols - allowed
    if extra:
        names = ", ".join(sorted(str(s) for s in extra))
        raise ConfigError(
            f"expression {text!r} uses names outside the grammar: {names} "
            f"(allowed: x, y{', t' if allow_t else ''}, pi, sin, cos, exp)")
    unknown = expr.atoms(sp.core.function.AppliedUndef)
    if unknown:
        names = ", ".join(sorted(f.func.__name__ for f in unknown))
        raise ConfigError(
            f"expression {text!r} calls functions outside the grammar: {names} "
            f"(allowed: sin, cos, exp)")
    return expr


def compile_field(source, allow_t: bool = False) -> Callable:
    """Compile an expression (string or sympy) into a vectorized callable.

    The returned function has signature ``field(x, y, t=0.0)`` and always
    returns an array broadcast to the common shape of its arguments, even
    for constant expressions.
    """
    expr = parse_field(source, allow_t=allow_t) if isinstance(source, str) else source
    fn = sp.lambdify((X, Y, T), expr, modules="numpy")

    def field(x, y, t=0.0):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape, np.shape(t))
        out = np.asarray(fn(x, y, t), dtype=float)
        if out.shape != shape:
            out = np.broadcast_to(out, shape).copy()
        return out

    field.expression = str(expr)
    return field


def evaluate_fields(sources: Sequence[str], x: np.ndarray, y: np.ndarray,
                    t: float = 0.0, allow_t: bool = False) -> np.ndarray:
    """Evaluate several expression strings on a common grid, stacked."""
    return np.stack([compile_field(s, allow_t=allow_t)(x, y, t)
                     for s in sources])
