"""Code recipes: tessellation, logical identifications, seed and truncation."""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import SurfaceKind, SurfacePoint, UnitTriangle, build_unit_triangle, polar_embedding
from .logical import LogicalRep


class SpecError(ValueError):
    """Raised when a code recipe is inconsistent."""


_FUNCS = {
    "sqrt": math.sqrt, "cos": math.cos, "sin": math.sin, "tan": math.tan,
    "acos": math.acos, "asin": math.asin, "atan": math.atan, "atan2": math.atan2,
    "cosh": math.cosh, "sinh": math.sinh, "acosh": math.acosh, "asinh": math.asinh,
    "exp": math.exp, "log": math.log,
}
_CONSTS = {"pi": math.pi, "e": math.e, "phi_g": (1 + math.sqrt(5)) / 2}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def eval_expr(text) -> float:
    """Evaluate a numeric field such as ``"acos(1/3)/2"`` without ``eval``."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and not node.keywords):
            return _FUNCS[node.func.id](*[ev(a) for a in node.args])
        raise SpecError(f"unsupported expression {text!r}")

    try:
        return float(ev(ast.parse(str(text), mode="eval")))
    except SyntaxError as exc:
        raise SpecError(f"cannot parse expression {text!r}") from exc


def seed_embedding(kind: SurfaceKind, a: float, b: float) -> np.ndarray:
    """Seed coordinates per surface: sphere (theta, phi), plane (x, y),
    hyperbolic polar (eta, theta)."""
    if kind is SurfaceKind.EUCLIDEAN:
        return np.array([a, b, 1.0])
    return polar_embedding(kind, a, b)


@dataclass(frozen=True)
class Truncation:
    radius: float = 0.0
    max_word_length: int = 64


@dataclass(frozen=True)
class CodeSpec:
    name: str
    pqr: tuple[int, int, int]
    family: str
    dim: int
    identifications: tuple[tuple[str, str], ...]
    relations: tuple[str, ...] = ()
    seed: tuple[str, str] = ("0", "0")
    sigma: tuple[complex, ...] | None = None
    matrices: tuple[tuple[str, tuple[tuple[complex, ...], ...]], ...] = ()
    orientation: int = 1
    scale: str = "1"
    truncation: Truncation = field(default_factory=Truncation)

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise SpecError("orientation must be +1 or -1")
        if len(self.pqr) != 3:
            raise SpecError("tessellation needs three integers")
        if self.kind is not SurfaceKind.SPHERE and self.truncation.radius <= 0:
            raise SpecError("infinite tessellations need a positive truncation radius")

    @property
    def kind(self) -> SurfaceKind:
        return SurfaceKind.classify(*self.pqr)

    @cached_property
    def triangle(self) -> UnitTriangle:
        return build_unit_triangle(*self.pqr, scale=eval_expr(self.scale))

    @cached_property
    def rep(self) -> LogicalRep:
        explicit = {name: np.array(rows, dtype=complex) for name, rows in self.matrices}
        return LogicalRep(self.dim, self.family, dict(self.identifications), explicit)

    @cached_property
    def seed_point(self) -> SurfacePoint:
        a, b = (eval_expr(s) for s in self.seed)
        return SurfacePoint(self.kind, seed_embedding(self.kind, a, b))

    @cached_property
    def sigma_vector(self) -> np.ndarray:
        if self.sigma is None:
            v = np.zeros(self.dim, dtype=complex)
            v[0] = 1.0
            return v
        v = np.asarray(self.sigma, dtype=complex)
        if v.shape != (self.dim,):
            raise SpecError(f"reference vector must have length {self.dim}")
        n = np.linalg.norm(v)
        if abs(n - 1.0) > 1e-12:
            raise SpecError("reference vector must be normalised")
        return v

    def __hash__(self):
        return hash((self.name, self.pqr, self.identifications, self.relations, self.seed,
                     self.sigma, self.matrices, self.orientation, self.scale, self.truncation))

    def with_seed(self, seed) -> "CodeSpec":
        from dataclasses import replace
        return replace(self, seed=tuple(str(s) for s in seed))

    def with_truncation(self, radius: float | None = None, max_word_length: int | None = None) -> "CodeSpec":
        from dataclasses import replace
        t = self.truncation
        return replace(self, truncation=Truncation(
            t.radius if radius is None else float(radius),
            t.max_word_length if max_word_length is None else int(max_word_length)))
