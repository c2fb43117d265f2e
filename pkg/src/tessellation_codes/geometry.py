"""Points, isometries and distances on the three constant-curvature surfaces.

All three surfaces use a 3-vector embedding so that every orientation
preserving isometry is a 3x3 real matrix:

* sphere: unit vectors in R^3, the origin is the north pole (0, 0, 1);
* Euclidean plane: homogeneous vectors (x, y, 1), isometries [R t; 0 1];
* hyperbolic plane: the upper sheet of -X0^2 + X1^2 + X2^2 = -1, origin
  (1, 0, 0), isometries in SO(2,1)+.

Polar coordinates (d, phi) about the origin are used throughout: d is the
geodesic distance from the origin and phi the angle from the phi=0 ray.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

ETA = np.diag([-1.0, 1.0, 1.0])


class GeometryError(ValueError):
    """Raised for inconsistent surface kinds or invalid geometric input."""


class SurfaceKind(enum.Enum):
    SPHERE = "sphere"
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"

    @classmethod
    def classify(cls, p: int, q: int, r: int) -> "SurfaceKind":
        """Surface carrying the {p,q,r} triangle tessellation."""
        s = Fraction(1, p) + Fraction(1, q) + Fraction(1, r)
        if s > 1:
            return cls.SPHERE
        if s == 1:
            return cls.EUCLIDEAN
        return cls.HYPERBOLIC


def _project(kind: SurfaceKind, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if kind is SurfaceKind.SPHERE:
        return x / np.linalg.norm(x, axis=-1, keepdims=True)
    if kind is SurfaceKind.EUCLIDEAN:
        return x / x[..., 2:3]
    # hyperboloid: rescale onto the upper sheet; near the sheet only X0 is
    # recomputed, which avoids cancellation far from the origin
    q = -x[..., 0] ** 2 + x[..., 1] ** 2 + x[..., 2] ** 2
    near = np.abs(q + 1.0) < 1e-6 * np.maximum(1.0, x[..., 0] ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        y = x / np.sqrt(-q)[..., None]
    y = np.where(near[..., None], x, y * np.sign(y[..., 0:1]))
    y = np.array(y)
    y[..., 0] = np.sqrt(1.0 + y[..., 1] ** 2 + y[..., 2] ** 2)
    return y


@dataclass(frozen=True, eq=False)
class SurfacePoint:
    kind: SurfaceKind
    X: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float).reshape(3)
        X.setflags(write=False)
        object.__setattr__(self, "X", X)

    @classmethod
    def polar(cls, kind: SurfaceKind, d: float, phi: float) -> "SurfacePoint":
        return cls(kind, polar_embedding(kind, d, phi))

    @classmethod
    def origin(cls, kind: SurfaceKind) -> "SurfacePoint":
        return cls.polar(kind, 0.0, 0.0)

    def to_polar(self) -> tuple[float, float]:
        X = self.X
        if self.kind is SurfaceKind.SPHERE:
            return math.acos(max(-1.0, min(1.0, X[2]))), math.atan2(X[1], X[0])
        if self.kind is SurfaceKind.EUCLIDEAN:
            return math.hypot(X[0], X[1]), math.atan2(X[1], X[0])
        return math.acosh(max(1.0, X[0])), math.atan2(X[2], X[1])

    def __repr__(self) -> str:
        return f"SurfacePoint({self.kind.value}, {np.array2string(self.X, precision=6)})"


def polar_embedding(kind: SurfaceKind, d, phi) -> np.ndarray:
    """Embedding coordinates of the point(s) at distance ``d``, angle ``phi``."""
    d = np.asarray(d, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    if kind is SurfaceKind.SPHERE:
        out = [np.sin(d) * c, np.sin(d) * s, np.cos(d)]
    elif kind is SurfaceKind.EUCLIDEAN:
        out = [d * c, d * s, np.ones_like(d * c)]
    else:
        out = [np.cosh(d) * np.ones_like(c), np.sinh(d) * c, np.sinh(d) * s]
    return np.stack(np.broadcast_arrays(*out), axis=-1)


def distance_coords(kind: SurfaceKind, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorised geodesic distance between embedding coordinates.

    ``a`` and ``b`` broadcast against each other along leading axes.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if kind is SurfaceKind.SPHERE:
        # atan2 form keeps full precision near 0 and pi
        cross = np.linalg.norm(np.cross(a, b), axis=-1)
        dot = np.sum(a * b, axis=-1)
        return np.arctan2(cross, dot)
    if kind is SurfaceKind.EUCLIDEAN:
        return np.linalg.norm(a[..., :2] / a[..., 2:3] - b[..., :2] / b[..., 2:3], axis=-1)
    inner = a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]
    inner = np.maximum(inner, 1.0)
    # arccosh loses precision near 1; use the chord length instead
    diff = a - b
    chord2 = -diff[..., 0] ** 2 + diff[..., 1] ** 2 + diff[..., 2] ** 2
    chord2 = np.maximum(chord2, 0.0)
    small = 2.0 * np.arcsinh(np.sqrt(chord2) / 2.0)
    return np.where(inner < 2.0, small, np.arccosh(inner))


def distance(a: SurfacePoint, b: SurfacePoint) -> float:
    if a.kind is not b.kind:
        raise GeometryError(f"cannot measure between {a.kind.value} and {b.kind.value}")
    return float(distance_coords(a.kind, a.X, b.X))


@dataclass(frozen=True, eq=False)
class Isometry:
    kind: SurfaceKind
    M: np.ndarray

    def __post_init__(self):
        M = np.array(self.M, dtype=float).reshape(3, 3)
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    @classmethod
    def identity(cls, kind: SurfaceKind) -> "Isometry":
        return cls(kind, np.eye(3))

    def __matmul__(self, other):
        if isinstance(other, Isometry):
            return compose(self, other)
        if isinstance(other, SurfacePoint):
            return apply(self, other)
        return NotImplemented

    def defect(self) -> float:
        """Max-norm violation of the defining matrix identity."""
        return isometry_defect(self.kind, self.M)

    def rotation_angle(self) -> float:
        """Unsigned rotation angle of the linear/rotational part, in [0, pi]."""
        M = self.M
        if self.kind is SurfaceKind.SPHERE:
            return math.acos(max(-1.0, min(1.0, (np.trace(M) - 1.0) / 2.0)))
        if self.kind is SurfaceKind.EUCLIDEAN:
            return abs(math.atan2(M[1, 0], M[0, 0]))
        raise GeometryError("rotation angle of a hyperbolic isometry depends on its centre")

    def __repr__(self) -> str:
        return f"Isometry({self.kind.value}, {np.array2string(self.M, precision=6)})"


def isometry_defect(kind: SurfaceKind, M: np.ndarray) -> float:
    M = np.asarray(M, dtype=float)
    if kind is SurfaceKind.SPHERE:
        err = np.max(np.abs(M.T @ M - np.eye(3)))
    elif kind is SurfaceKind.EUCLIDEAN:
        R = M[:2, :2]
        err = max(np.max(np.abs(R.T @ R - np.eye(2))), np.max(np.abs(M[2] - [0, 0, 1])))
    else:
        # boosts far from the origin have large entries; measure relatively
        scale = max(1.0, float(np.max(np.abs(M))))
        err = np.max(np.abs(M.T @ ETA @ M - ETA)) / scale**2
        if M[0, 0] < 1.0:
            err = max(err, 1.0 - M[0, 0])
    return float(max(err, abs(np.linalg.det(M) - 1.0) / max(1.0, float(np.max(np.abs(M))))))


def reproject_matrix(kind: SurfaceKind, M: np.ndarray) -> np.ndarray:
    """Snap a slightly drifted matrix back onto the isometry group."""
    M = np.array(M, dtype=float)
    if kind is SurfaceKind.SPHERE:
        u, _, vt = np.linalg.svd(M)
        return u @ vt
    if kind is SurfaceKind.EUCLIDEAN:
        u, _, vt = np.linalg.svd(M[:2, :2])
        M[:2, :2] = u @ vt
        M[2] = [0.0, 0.0, 1.0]
        return M
    # Gram-Schmidt of the columns in the Minkowski metric
    e0 = M[:, 0] / math.sqrt(M[0, 0] ** 2 - M[1, 0] ** 2 - M[2, 0] ** 2)
    e1 = M[:, 1] + _mink(e0, M[:, 1]) * e0
    e1 = e1 / math.sqrt(_mink(e1, e1))
    e2 = M[:, 2] + _mink(e0, M[:, 2]) * e0 - _mink(e1, M[:, 2]) * e1
    e2 = e2 / math.sqrt(_mink(e2, e2))
    return np.stack([e0, e1, e2], axis=1)


def reproject_stack(kind: SurfaceKind, Ms: np.ndarray) -> np.ndarray:
    """One Newton step towards the isometry group for a stack (n, 3, 3).

    Uses M (3 - J)/2 with J = M^-1_exact M, which removes first-order drift
    without the cancellation a column Gram-Schmidt suffers for large boosts.
    """
    Ms = np.array(Ms, dtype=float)
    if kind is SurfaceKind.EUCLIDEAN:
        R = Ms[:, :2, :2]
        Ms[:, :2, :2] = R @ (3.0 * np.eye(2) - np.swapaxes(R, 1, 2) @ R) / 2.0
        Ms[:, 2] = [0.0, 0.0, 1.0]
        return Ms
    if kind is SurfaceKind.SPHERE:
        J = np.swapaxes(Ms, 1, 2) @ Ms
    else:
        J = ETA @ np.swapaxes(Ms, 1, 2) @ ETA @ Ms
    return Ms @ (3.0 * np.eye(3) - J) / 2.0


def _mink(a, b):
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _check(a, b):
    if a.kind is not b.kind:
        raise GeometryError(f"surface mismatch: {a.kind.value} vs {b.kind.value}")


def compose(g: Isometry, h: Isometry) -> Isometry:
    """The isometry ``g o h`` (apply ``h`` first)."""
    _check(g, h)
    M = g.M @ h.M
    # snapping large boosts costs more accuracy than it saves; only repair
    # visible drift
    if isometry_defect(g.kind, M) > 1e-10:
        M = reproject_matrix(g.kind, M)
    return Isometry(g.kind, M)


def inverse(g: Isometry) -> Isometry:
    if g.kind is SurfaceKind.SPHERE:
        return Isometry(g.kind, g.M.T)
    if g.kind is SurfaceKind.EUCLIDEAN:
        R = g.M[:2, :2]
        out = np.eye(3)
        out[:2, :2] = R.T
        out[:2, 2] = -R.T @ g.M[:2, 2]
        return Isometry(g.kind, out)
    return Isometry(g.kind, ETA @ g.M.T @ ETA)


def inverse_matrix(kind: SurfaceKind, M: np.ndarray) -> np.ndarray:
    return inverse(Isometry(kind, M)).M


def apply(g: Isometry, p: SurfacePoint) -> SurfacePoint:
    _check(g, p)
    return SurfacePoint(g.kind, _project(g.kind, g.M @ p.X))


def apply_coords(kind: SurfaceKind, M: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Apply a matrix to a stack of embedding vectors and re-project."""
    return _project(kind, np.asarray(X) @ np.asarray(M).T)


def boost_to(kind: SurfaceKind, c: np.ndarray) -> np.ndarray:
    """An isometry taking the origin to ``c`` along the geodesic through both."""
    c = np.asarray(c, dtype=float)
    if kind is SurfaceKind.EUCLIDEAN:
        M = np.eye(3)
        M[:2, 2] = c[:2] / c[2]
        return M
    d, phi = SurfacePoint(kind, c).to_polar()
    rot = _origin_rotation(kind, phi)
    if kind is SurfaceKind.SPHERE:
        ch, sh = math.cos(d), math.sin(d)
        # rotate north pole towards +x by d
        tilt = np.array([[ch, 0.0, sh], [0.0, 1.0, 0.0], [-sh, 0.0, ch]])
    else:
        ch, sh = math.cosh(d), math.sinh(d)
        tilt = np.array([[ch, sh, 0.0], [sh, ch, 0.0], [0.0, 0.0, 1.0]])
    return rot @ tilt @ rot.T


def _origin_rotation(kind: SurfaceKind, alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    if kind is SurfaceKind.HYPERBOLIC:
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_about(c: SurfacePoint, alpha: float) -> Isometry:
    """Counter-clockwise rotation by ``alpha`` about ``c``.

    Counter-clockwise is measured with the outward normal on the sphere and
    in the (x, y) / Poincare-disk picture on the two planes.
    """
    kind = c.kind
    if kind is SurfaceKind.SPHERE:
        k = c.X
        K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
        M = np.eye(3) + math.sin(alpha) * K + (1.0 - math.cos(alpha)) * (K @ K)
        return Isometry(kind, M)
    B = boost_to(kind, c.X)
    M = B @ _origin_rotation(kind, alpha) @ inverse_matrix(kind, B)
    return Isometry(kind, M)


def rotated_point_distance(d0j: float, alpha: float, kind: SurfaceKind) -> float:
    """Distance between a point and its image under rotation by ``alpha``
    about a centre at distance ``d0j``."""
    if kind is SurfaceKind.SPHERE:
        # cos d = sin^2 d0 cos a + cos^2 d0, written via the half angle
        s = abs(math.sin(d0j) * math.sin(alpha / 2.0))
        return 2.0 * math.asin(min(1.0, s))
    if kind is SurfaceKind.EUCLIDEAN:
        return 2.0 * abs(d0j * math.sin(alpha / 2.0))
    # cosh d = cosh^2 d0 - sinh^2 d0 cos a
    return 2.0 * math.asinh(abs(math.sinh(d0j) * math.sin(alpha / 2.0)))


def project_poincare(p: SurfacePoint) -> tuple[float, float]:
    if p.kind is not SurfaceKind.HYPERBOLIC:
        raise GeometryError("Poincare projection needs a hyperbolic point")
    X = p.X
    return float(X[1] / (1.0 + X[0])), float(X[2] / (1.0 + X[0]))


@dataclass(frozen=True)
class UnitTriangle:
    """The fundamental triangle: C at the origin, A on the phi=0 ray and B on
    the phi=pi/r ray, so the vertices run counter-clockwise C, A, B."""

    p: int
    q: int
    r: int
    kind: SurfaceKind
    A: SurfacePoint
    B: SurfacePoint
    C: SurfacePoint
    side_ca: float
    side_cb: float

    @property
    def vertices(self) -> dict[str, SurfacePoint]:
        return {"A": self.A, "B": self.B, "C": self.C}

    @property
    def orders(self) -> dict[str, int]:
        return {"A": self.p, "B": self.q, "C": self.r}

    def reference_point(self) -> SurfacePoint:
        """An interior point with trivial stabiliser (barycentre of the
        embedding vectors), used to label tiles."""
        return self.point_from_barycentric([1.0, 1.0, 1.0])

    def point_from_barycentric(self, w) -> SurfacePoint:
        w = np.asarray(w, dtype=float)
        X = w[0] * self.A.X + w[1] * self.B.X + w[2] * self.C.X
        if self.kind is SurfaceKind.EUCLIDEAN:
            X = X / X[2]
        return SurfacePoint(self.kind, _project(self.kind, X))


def triangle_sides(p: int, q: int, r: int, kind: SurfaceKind, scale: float = 1.0):
    """Lengths (CA, CB) of the sides adjacent to vertex C."""
    A, B, C = math.pi / p, math.pi / q, math.pi / r
    if kind is SurfaceKind.EUCLIDEAN:
        ca = scale
        return ca, ca * math.sin(A) / math.sin(B)
    # side opposite B is CA, opposite A is CB
    cos_ca = (math.cos(B) + math.cos(C) * math.cos(A)) / (math.sin(C) * math.sin(A))
    cos_cb = (math.cos(A) + math.cos(B) * math.cos(C)) / (math.sin(B) * math.sin(C))
    if kind is SurfaceKind.SPHERE:
        return math.acos(max(-1.0, min(1.0, cos_ca))), math.acos(max(-1.0, min(1.0, cos_cb)))
    return math.acosh(cos_ca), math.acosh(cos_cb)


def build_unit_triangle(p: int, q: int, r: int, scale: float = 1.0) -> UnitTriangle:
    """Unit triangle with interior angles pi/p, pi/q, pi/r at A, B, C.

    ``scale`` fixes the length of side CA on the Euclidean plane and is
    ignored on the curved surfaces, where the angles determine the sides.
    """
    for n in (p, q, r):
        if int(n) != n or n < 2:
            raise GeometryError(f"triangle orders must be integers >= 2, got {(p, q, r)}")
    kind = SurfaceKind.classify(p, q, r)
    ca, cb = triangle_sides(p, q, r, kind, scale)
    C = SurfacePoint.origin(kind)
    A = SurfacePoint.polar(kind, ca, 0.0)
    B = SurfacePoint.polar(kind, cb, math.pi / r)
    return UnitTriangle(p, q, r, kind, A, B, C, ca, cb)
