"""Coefficient expressions in the chart coordinates.

Expressions are plain arithmetic strings over ``x1, x2, x3`` (``x``, ``y``, ``z``
are accepted aliases), numeric literals, ``pi``/``e`` and a small whitelist of
elementwise functions. They are validated on the AST before compilation, so a
config file can never smuggle in arbitrary code.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field

import numpy as np

FUNCTIONS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "abs": np.abs,
}
CONSTANTS = {"pi": np.pi, "e": np.e}
ALIASES = {"x": "x1", "y": "x2", "z": "x3"}

_ALLOWED_NODES = (
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


class ExpressionError(ValueError):
    pass


class _Rename(ast.NodeTransformer):
    def visit_Name(self, node: ast.Name) -> ast.Name:
        return ast.copy_location(ast.Name(id=ALIASES.get(node.id, node.id), ctx=node.ctx), node)


def _validate(tree: ast.AST, dim: int, source: str) -> set[str]:
    used = set()
    allowed_vars = {f"x{i + 1}" for i in range(dim)}
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ExpressionError(f"unsupported syntax {type(node).__name__} in {source!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ExpressionError(f"non-numeric literal in {source!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError(f"unknown function in {source!r}")
            if node.keywords or len(node.args) != 1:
                raise ExpressionError(f"functions take exactly one argument: {source!r}")
        if isinstance(node, ast.Name):
            if node.id in FUNCTIONS or node.id in CONSTANTS:
                continue
            if node.id not in allowed_vars:
                raise ExpressionError(f"unknown name {node.id!r} in {source!r} (dimension {dim})")
            used.add(node.id)
    return used


@dataclass(frozen=True)
class Expr:
    """A scalar field ``x -> value`` compiled from a string.

    Calling it with an array of points of shape ``(..., dim)`` returns an array
    of shape ``(...)``.
    """

    source: str
    dim: int
    _fn: object = field(repr=False, compare=False, default=None)
    variables: frozenset = field(compare=False, default=frozenset())

    @classmethod
    def parse(cls, source, dim: int) -> "Expr":
        if isinstance(source, (int, float)) and not isinstance(source, bool):
            source = repr(float(source))
        if not isinstance(source, str):
            raise ExpressionError(f"expression must be a string or number, got {type(source).__name__}")
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
        tree = ast.fix_missing_locations(_Rename().visit(tree))
        used = _validate(tree, dim, source)
        canonical = ast.unparse(tree)
        code = compile(tree, "<expr>", "eval")
        return cls(canonical, dim, code, frozenset(used))

    @property
    def is_constant(self) -> bool:
        return not self.variables

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        env = {f"x{i + 1}": x[..., i] for i in range(self.dim)}
        env.update(FUNCTIONS)
        env.update(CONSTANTS)
        out = eval(self._fn, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape[:-1]).copy()

    def __str__(self) -> str:
        return self.source


def parse_matrix(source, dim: int) -> tuple[tuple[Expr, ...], ...]:
    """A metric given as a scalar (conformal factor times identity) or a full matrix."""
    if isinstance(source, (str, int, float)) and not isinstance(source, bool):
        s = Expr.parse(source, dim)
        zero = Expr.parse("0", dim)
        return tuple(tuple(s if i == j else zero for j in range(dim)) for i in range(dim))
    rows = list(source)
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise ExpressionError(f"metric must be {dim}x{dim}")
    mat = tuple(tuple(Expr.parse(c, dim) for c in r) for r in rows)
    for i in range(dim):
        for j in range(i):
            if mat[i][j].source != mat[j][i].source:
                raise ExpressionError("metric matrix must be symmetric")
    return mat


def eval_matrix(mat, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = len(mat)
    out = np.empty(x.shape[:-1] + (n, n))
    for i in range(n):
        for j in range(n):
            out[..., i, j] = mat[i][j](x)
    return out


def eval_vector(vec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.stack([c(x) for c in vec], axis=-1)
