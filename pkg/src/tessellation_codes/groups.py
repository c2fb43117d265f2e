"""Enumeration of proper triangle group elements and the logical quotient.

Elements are identified geometrically: two words give the same element iff
they move a point with trivial stabiliser to the same place.  Enumeration is
a layered breadth-first search by right multiplication with the generator
letters ``A a B b`` (lower case = inverse).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .codespec import CodeSpec, SpecError
from .geometry import (Isometry, SurfaceKind, SurfacePoint, _project, distance_coords, inverse_matrix,
                       rotation_about)
from .logical import LogicalRep, WordError, flatten_word, invert_letters, matrix_key, parse_word

log = logging.getLogger(__name__)

LETTERS = ("A", "a", "B", "b")
# relative lookup tolerance: covers the drift of long hyperbolic products
# (about 1e-6 relative near radius 8) and stays far below point spacing
LOOKUP_RTOL = 1e-5


class GroupError(RuntimeError):
    """Raised when an enumeration fails to saturate or is inconsistent."""


def generator_isometries(p: int, q: int, r: int, orientation: int = 1, scale: float = 1.0,
                         triangle=None) -> dict[str, Isometry]:
    """Vertex rotations by 2 pi/p, 2 pi/q, 2 pi/r about A, B, C.

    With ``orientation=1`` the rotations are counter-clockwise and satisfy
    r_A r_B r_C = 1; with ``orientation=-1`` they are clockwise and satisfy
    r_B r_A r_C = 1.
    """
    from .geometry import build_unit_triangle
    tri = triangle or build_unit_triangle(p, q, r, scale=scale)
    s = float(orientation)
    return {
        "A": rotation_about(tri.A, s * 2 * math.pi / p),
        "B": rotation_about(tri.B, s * 2 * math.pi / q),
        "C": rotation_about(tri.C, s * 2 * math.pi / r),
    }


def symbol_letters(orientation: int) -> dict[str, tuple[str, ...]]:
    """Letter expansions of the symbols allowed in relation words."""
    C = ("b", "a") if orientation == 1 else ("a", "b")
    return {"A": ("A",), "B": ("B",), "C": C, "Omega": ("B", "A") + C}


def word_letters(word, orientation: int = 1) -> tuple[str, ...]:
    """Normalise a word (string or letter sequence) to a tuple of letters."""
    if isinstance(word, str):
        return flatten_word(parse_word(word), symbol_letters(orientation))
    letters = []
    for w in word:
        if w in LETTERS:
            letters.append(w)
        else:
            letters.extend(symbol_letters(orientation)[w])
    return tuple(letters)


def reduce_letters(letters) -> tuple[str, ...]:
    """Free reduction (cancel adjacent x x^-1)."""
    out: list[str] = []
    for c in letters:
        if out and out[-1] == c.swapcase():
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def logical_image(word, rep: LogicalRep, orientation: int = 1) -> np.ndarray:
    """Ordered product of logical generator matrices along ``word``."""
    M = np.eye(rep.dim, dtype=complex)
    for c in word_letters(word, orientation):
        M = M @ rep.letter_matrix(c)
    return M


@dataclass(frozen=True, eq=False)
class GroupElement:
    word: tuple[str, ...]
    geo: Isometry
    logi: np.ndarray

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(reduce_letters(self.word + other.word), self.geo @ other.geo, self.logi @ other.logi)

    def inverse(self) -> "GroupElement":
        return GroupElement(invert_letters(self.word), Isometry(self.geo.kind, inverse_matrix(self.geo.kind, self.geo.M)),
                            self.logi.conj().T)

    @property
    def word_text(self) -> str:
        return " ".join(c if c.isupper() else c.upper() + "^-1" for c in self.word) or "1"


class PointIndex:
    """Tolerance-based lookup of embedding vectors."""

    def __init__(self, kind: SurfaceKind, X: np.ndarray, rtol: float = LOOKUP_RTOL):
        self.kind = kind
        self.X = np.asarray(X, dtype=float).reshape(-1, 3)
        self.rtol = rtol
        self.tree = cKDTree(self.X) if len(self.X) else None

    def tol_for(self, Y: np.ndarray) -> float:
        return self.rtol * max(1.0, float(np.max(np.abs(Y))) if len(Y) else 1.0)

    def lookup(self, Y: np.ndarray) -> np.ndarray:
        """Index of the stored point matching each row of ``Y`` (-1 if none)."""
        Y = np.asarray(Y, dtype=float).reshape(-1, 3)
        if self.tree is None or not len(Y):
            return -np.ones(len(Y), dtype=int)
        d, i = self.tree.query(Y, k=1)
        i = np.where(d <= self.tol_for(Y), i, -1)
        return i.astype(int)


def cluster_points(X: np.ndarray, tol: float) -> np.ndarray:
    """Label rows of ``X`` so that rows within ``tol`` share a label; labels
    are the smallest row index of each cluster."""
    n = len(X)
    parent = np.arange(n)
    if n < 2:
        return parent
    pairs = cKDTree(X).query_pairs(tol, output_type="ndarray")

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in pairs:
        a, b = find(i), find(j)
        if a != b:
            parent[max(a, b)] = min(a, b)
    return np.array([find(i) for i in range(n)])


@dataclass
class Enumeration:
    """A finite set of group elements stored as stacked arrays."""

    spec: CodeSpec
    M: np.ndarray            # (n, 3, 3) isometry matrices
    L: np.ndarray            # (n, d, d) logical images
    words: list
    saturated: bool
    radius: float
    x_ref: np.ndarray

    def __len__(self) -> int:
        return len(self.words)

    @property
    def kind(self) -> SurfaceKind:
        return self.spec.kind

    def element(self, i: int) -> GroupElement:
        return GroupElement(self.words[i], Isometry(self.kind, self.M[i]), self.L[i])

    def __iter__(self):
        return (self.element(i) for i in range(len(self)))

    @cached_property
    def ref_images(self) -> np.ndarray:
        return _project(self.kind, np.einsum("nij,j->ni", self.M, self.x_ref))

    @cached_property
    def index(self) -> PointIndex:
        return PointIndex(self.kind, self.ref_images)

    def find(self, M: np.ndarray) -> int:
        """Index of the enumerated element with isometry ``M`` (-1 if absent)."""
        y = _project(self.kind, np.asarray(M) @ self.x_ref)
        return int(self.index.lookup(y[None])[0])

    @cached_property
    def logical_keys(self) -> list[tuple]:
        return [matrix_key(L) for L in self.L]

    def kernel_indices(self) -> list[int]:
        I = np.eye(self.L.shape[1])
        ok = np.max(np.abs(self.L - I), axis=(1, 2)) < 1e-9
        geo_id = np.max(np.abs(self.M - np.eye(3)), axis=(1, 2)) < 1e-9
        return [int(i) for i in np.nonzero(ok & ~geo_id)[0]]


def _letter_tables(spec: CodeSpec):
    gens = generator_isometries(*spec.pqr, orientation=spec.orientation, triangle=spec.triangle)
    rep = spec.rep
    geo = {"A": gens["A"].M, "B": gens["B"].M}
    geo["a"] = inverse_matrix(spec.kind, geo["A"])
    geo["b"] = inverse_matrix(spec.kind, geo["B"])
    logi = {c: rep.letter_matrix(c) for c in LETTERS}
    return geo, logi


def check_identifications(spec: CodeSpec, tol: float = 1e-9) -> float:
    """Residual between the declared r_C image and the one forced by the
    generator relation; raises if they disagree."""
    rep = spec.rep
    forced = logical_image("C", rep, spec.orientation)
    err = float(np.max(np.abs(forced - rep.gens["C"])))
    if err > tol:
        rel = "r_A r_B r_C" if spec.orientation == 1 else "r_B r_A r_C"
        raise SpecError(f"{spec.name}: declared image of r_C violates {rel} = 1 (residual {err:.3g})")
    orders = dict(zip("ABC", spec.pqr))
    for g, n in orders.items():
        res = float(np.max(np.abs(np.linalg.matrix_power(rep.gens[g], n) - np.eye(rep.dim))))
        if res > tol:
            raise SpecError(f"{spec.name}: logical image of r_{g} does not have order dividing {n}")
    return err


def enumerate_ball(spec: CodeSpec, max_word_length: int | None = None, max_radius: float | None = None,
                   cap: int = 2_000_000) -> Enumeration:
    """Breadth-first closure of the generators, pruned by displacement.

    On the sphere the search must saturate within ``max_word_length`` layers.
    On the planes an element is kept only if it moves the tile label point
    at most ``max_radius`` from the origin.
    """
    L_max = spec.truncation.max_word_length if max_word_length is None else int(max_word_length)
    if L_max < 0:
        raise ValueError("max_word_length must be >= 0")
    R = spec.truncation.radius if max_radius is None else float(max_radius)
    kind = spec.kind
    check_identifications(spec)
    geo, logi = _letter_tables(spec)
    x_ref = spec.triangle.reference_point().X
    origin = SurfacePoint.origin(kind).X
    d = spec.dim
    # expanding a little past R keeps tiles near the rim reachable
    hop = max(float(distance_coords(kind, _project(kind, geo[c] @ x_ref), x_ref)) for c in LETTERS)

    Ms = [np.eye(3)[None]]
    Ls = [np.eye(d, dtype=complex)[None]]
    words: list[tuple[str, ...]] = [()]
    pts = [x_ref[None]]
    tree_pts = x_ref[None]
    frontier = (np.eye(3)[None], np.eye(d, dtype=complex)[None], [()])
    saturated = False
    for _layer in range(L_max):
        fM, fL, fW = frontier
        cM = np.concatenate([fM @ geo[c] for c in LETTERS])
        cL = np.concatenate([fL @ logi[c] for c in LETTERS])
        cW = [w + (c,) for c in LETTERS for w in fW]
        Y = _project(kind, np.einsum("nij,j->ni", cM, x_ref))
        keep = np.ones(len(Y), dtype=bool)
        if kind is not SurfaceKind.SPHERE:
            keep &= distance_coords(kind, Y, origin) <= R + hop
        tol = LOOKUP_RTOL * max(1.0, float(np.max(np.abs(Y))) if len(Y) else 1.0)
        if keep.any():
            dist, _ = cKDTree(tree_pts).query(Y, k=1)
            keep &= dist > tol
        idx = np.nonzero(keep)[0]
        if len(idx):
            lab = cluster_points(Y[idx], tol)
            idx = idx[lab == np.arange(len(idx))]
        if not len(idx):
            saturated = True
            break
        nM, nL, nW = cM[idx], cL[idx], [cW[i] for i in idx]
        Ms.append(nM)
        Ls.append(nL)
        words.extend(nW)
        pts.append(Y[idx])
        tree_pts = np.concatenate(pts)
        if len(words) > cap:
            raise GroupError(f"enumeration exceeded {cap} elements")
        frontier = (nM, nL, nW)
    if kind is SurfaceKind.SPHERE and not saturated:
        raise GroupError(f"{spec.name}: spherical enumeration did not saturate within {L_max} layers")
    return Enumeration(spec, np.concatenate(Ms), np.concatenate(Ls), words, saturated, R, x_ref)


@dataclass
class QuotientReport:
    image_order: int
    expected_order: int | None
    kernel_words: list[str]
    surjective: bool
    relation_residuals: dict[str, float] = field(default_factory=dict)
    relation_geo_trivial: dict[str, bool] = field(default_factory=dict)
    is_group: bool = True
    enumerated: int = 0

    @property
    def order_ok(self) -> bool:
        return self.expected_order is None or self.image_order == self.expected_order

    @property
    def relations_ok(self) -> bool:
        return all(v < 1e-9 for v in self.relation_residuals.values())

    @property
    def ok(self) -> bool:
        return self.order_ok and self.relations_ok and self.surjective and self.is_group

    def as_dict(self) -> dict:
        return {
            "image_order": self.image_order, "expected_order": self.expected_order,
            "surjective": self.surjective, "is_group": self.is_group, "enumerated": self.enumerated,
            "relations": {k: {"residual": v, "isometry_is_identity": self.relation_geo_trivial[k]}
                          for k, v in self.relation_residuals.items()},
            "kernel_words": self.kernel_words, "ok": self.ok,
        }


def element_from_word(spec: CodeSpec, word) -> GroupElement:
    """Group element (isometry and logical image) of a word."""
    letters = word_letters(word, spec.orientation)
    geo, _ = _letter_tables(spec)
    M = np.eye(3)
    for c in letters:
        M = M @ geo[c]
    return GroupElement(reduce_letters(letters), Isometry(spec.kind, M), logical_image(letters, spec.rep, spec.orientation))


def generator_elements(spec: CodeSpec) -> dict[str, GroupElement]:
    """The three vertex rotations as group elements."""
    return {g: element_from_word(spec, g) for g in ("A", "B", "C")}


def relation_residual(spec: CodeSpec, word: str) -> tuple[float, bool]:
    """Logical residual of a relation word and whether its isometry is trivial."""
    letters = word_letters(word, spec.orientation)
    L = logical_image(letters, spec.rep, spec.orientation)
    geo, _ = _letter_tables(spec)
    M = np.eye(3)
    for c in letters:
        M = M @ geo[c]
    res = float(np.max(np.abs(L - np.eye(spec.dim))))
    return res, bool(np.max(np.abs(M - np.eye(3))) < 1e-9)


def quotient_check(spec: CodeSpec, enumeration: Enumeration | None = None, expected_order: int | None = None,
                   strict: bool = True, relations=None, max_kernel_words: int = 8) -> QuotientReport:
    """Check extra relations, the order of the logical image and list short
    generalised-stabiliser words."""
    from .logical import matrix_closure
    enumeration = enumeration or enumerate_ball(spec)
    relations = spec.relations if relations is None else relations
    residuals, geo_trivial = {}, {}
    for w in relations:
        try:
            residuals[w], geo_trivial[w] = relation_residual(spec, w)
        except WordError as exc:
            raise SpecError(f"{spec.name}: bad relation {w!r}: {exc}") from exc
    if strict:
        bad = {w: r for w, r in residuals.items() if r > 1e-9}
        if bad:
            raise SpecError(f"{spec.name}: relations do not hold logically: {bad}")
    keys = {}
    for k, L in zip(enumeration.logical_keys, enumeration.L):
        keys.setdefault(k, L)
    image = list(keys.values())
    closure = matrix_closure([spec.rep.gens["A"], spec.rep.gens["B"]])
    surjective = len(image) == len(closure)
    is_group = True
    if len(image) <= 200:
        for X in image:
            for Y in image:
                if matrix_key(X @ Y) not in keys:
                    is_group = False
                    break
            if not is_group:
                break
    kern = sorted(enumeration.kernel_indices(), key=lambda i: (len(enumeration.words[i]), enumeration.words[i]))
    kernel_words = [enumeration.element(i).word_text for i in kern[:max_kernel_words]]
    report = QuotientReport(len(image), expected_order, kernel_words, surjective, residuals, geo_trivial,
                            is_group, len(enumeration))
    if not report.order_ok:
        log.warning("%s: image order %d, expected %s", spec.name, report.image_order, expected_order)
    return report
