"""Position-error channel, two-point maximal-probability decoder and Monte
Carlo driver.

Noise law: an error is T(v) R(alpha) with R(alpha) a rotation about the
origin by a von Mises angle and T(v) the translation along the geodesic with
tangent vector v ~ N(0, sigma_t^2 I) (Euclidean and hyperbolic).  On the
sphere the error is a rotation about a uniformly random axis by a von Mises
angle.  The decoder scores candidates with the same log-density in (v, alpha)
coordinates.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .encoder import CodeConstruction
from .geometry import (ETA, Isometry, SurfaceKind, SurfacePoint, _origin_rotation, _project,
                       distance_coords, inverse_matrix, rotation_about)

STRONG = 1e12   # finite stand-in for kappa = inf / sigma = 0 in the density


class DegeneratePair(ValueError):
    """The two points do not fix an isometry (coincident or antipodal)."""


@dataclass(frozen=True)
class NoiseModel:
    kind: SurfaceKind
    sigma_t: float = 0.0
    kappa: float = math.inf

    def __post_init__(self):
        if self.sigma_t < 0 or self.kappa < 0:
            raise ValueError("noise parameters must be non-negative")

    def scaled(self, factor: float) -> "NoiseModel":
        return NoiseModel(self.kind, self.sigma_t * factor, self.kappa / factor**2 if factor else math.inf)


def _von_mises(rng: np.random.Generator, kappa: float) -> float:
    return 0.0 if math.isinf(kappa) else float(rng.vonmises(0.0, kappa))


def translation(kind: SurfaceKind, v) -> np.ndarray:
    """Isometry moving the origin along the tangent vector ``v``."""
    v = np.asarray(v, dtype=float)
    r = float(np.hypot(v[0], v[1]))
    if r == 0.0:
        return np.eye(3)
    return translation_stack(kind, v[None])[0]


def sample_noise(model: NoiseModel, rng: np.random.Generator) -> Isometry:
    kind = model.kind
    alpha = _von_mises(rng, model.kappa)
    if kind is SurfaceKind.SPHERE:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        return rotation_about(SurfacePoint(kind, axis), alpha)
    v = rng.normal(scale=model.sigma_t, size=2) if model.sigma_t > 0 else np.zeros(2)
    return Isometry(kind, translation(kind, v) @ _origin_rotation(kind, alpha))


def translation_stack(kind: SurfaceKind, v: np.ndarray) -> np.ndarray:
    """Stacked translations (n, 3, 3) for tangent vectors v (n, 2)."""
    v = np.asarray(v, dtype=float).reshape(-1, 2)
    n = len(v)
    T = np.tile(np.eye(3), (n, 1, 1))
    if kind is SurfaceKind.EUCLIDEAN:
        T[:, :2, 2] = v
        return T
    r = np.hypot(v[:, 0], v[:, 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(r[:, None] > 0, v / r[:, None], 0.0)
    if kind is SurfaceKind.SPHERE:
        # rotation carrying the north pole along u by angle r
        c, s = np.cos(r), np.sin(r)
        k = np.stack([-u[:, 1], u[:, 0], np.zeros(n)], axis=1)
        K = np.zeros((n, 3, 3))
        K[:, 0, 2], K[:, 2, 0] = k[:, 1], -k[:, 1]
        K[:, 1, 2], K[:, 2, 1] = -k[:, 0], k[:, 0]
        K[:, 0, 1], K[:, 1, 0] = -k[:, 2], k[:, 2]
        return T + s[:, None, None] * K + (1 - c)[:, None, None] * (K @ K)
    ch, sh = np.cosh(r), np.sinh(r)
    T[:, 0, 0] = ch
    T[:, 0, 1:] = sh[:, None] * u
    T[:, 1:, 0] = sh[:, None] * u
    T[:, 1:, 1:] = np.eye(2) + (ch - 1)[:, None, None] * np.einsum("ni,nj->nij", u, u)
    return T


def inverse_stack(kind: SurfaceKind, M: np.ndarray) -> np.ndarray:
    if kind is SurfaceKind.SPHERE:
        return np.swapaxes(M, 1, 2)
    if kind is SurfaceKind.HYPERBOLIC:
        return ETA @ np.swapaxes(M, 1, 2) @ ETA
    return np.linalg.inv(M)


def decompose(kind: SurfaceKind, M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(v, alpha) coordinates of a stack of isometries (n, 3, 3), with
    M = T(v) R(alpha); on the sphere v is zero and alpha the rotation angle."""
    M = np.asarray(M, dtype=float).reshape(-1, 3, 3)
    if kind is SurfaceKind.SPHERE:
        c = np.clip((np.trace(M, axis1=1, axis2=2) - 1.0) / 2.0, -1.0, 1.0)
        return np.zeros((len(M), 2)), np.arccos(c)
    o = np.array([1.0, 0.0, 0.0]) if kind is SurfaceKind.HYPERBOLIC else np.array([0.0, 0.0, 1.0])
    y = _project(kind, M @ o)
    r = distance_coords(kind, y, o)
    if kind is SurfaceKind.EUCLIDEAN:
        phi = np.arctan2(y[:, 1], y[:, 0])
    else:
        phi = np.arctan2(y[:, 2], y[:, 1])
    v = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
    R = translation_stack(kind, -v) @ M
    if kind is SurfaceKind.EUCLIDEAN:
        alpha = np.arctan2(R[:, 1, 0], R[:, 0, 0])
    else:
        alpha = np.arctan2(R[:, 2, 1], R[:, 1, 1])
    return v, alpha


def log_density(model: NoiseModel, M: np.ndarray) -> np.ndarray:
    """Unnormalised log-density of the noise law at the isometries ``M``."""
    v, alpha = decompose(model.kind, M)
    kappa = STRONG if math.isinf(model.kappa) else model.kappa
    out = kappa * (np.cos(alpha) - 1.0)
    if model.kind is not SurfaceKind.SPHERE:
        s2 = model.sigma_t**2 if model.sigma_t > 0 else 1.0 / STRONG
        out = out - np.sum(v * v, axis=1) / (2.0 * s2)
    return out


# isometry from two point correspondences

def _frames(kind: SurfaceKind, P1: np.ndarray, P2: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Orthonormal frames (n, 3, 3) at P1 pointing towards P2."""
    P1 = np.asarray(P1, dtype=float).reshape(-1, 3)
    P2 = np.asarray(P2, dtype=float).reshape(-1, 3)
    n = len(P1)
    if kind is SurfaceKind.EUCLIDEAN:
        u = P2[:, :2] - P1[:, :2]
        L = np.linalg.norm(u, axis=1)
        if np.any(L < tol):
            raise DegeneratePair("coincident points")
        u = u / L[:, None]
        F = np.zeros((n, 3, 3))
        F[:, 0, 0], F[:, 1, 0] = u[:, 0], u[:, 1]
        F[:, 0, 1], F[:, 1, 1] = -u[:, 1], u[:, 0]
        F[:, :2, 2] = P1[:, :2]
        F[:, 2, 2] = 1.0
        return F
    if kind is SurfaceKind.SPHERE:
        e0 = P1
        d = np.sum(P1 * P2, axis=1)
        e1 = P2 - d[:, None] * P1
        L = np.linalg.norm(e1, axis=1)
        if np.any(L < 1e-9):
            raise DegeneratePair("coincident or antipodal points; a third point is needed")
        e1 = e1 / L[:, None]
        e2 = np.cross(e0, e1)
        return np.stack([e0, e1, e2], axis=2)
    # boost P1 to the origin and read the direction of P2 there; working in
    # the embedding directly loses digits far from the origin
    B = _boost_stack(P1)
    Q = np.einsum("nij,nj->ni", inverse_stack(kind, B), P2)
    rho = np.hypot(Q[:, 1], Q[:, 2])
    if np.any(rho < 1e-9):
        raise DegeneratePair("coincident points")
    c, s = Q[:, 1] / rho, Q[:, 2] / rho
    R = np.zeros((n, 3, 3))
    R[:, 0, 0] = 1.0
    R[:, 1, 1], R[:, 1, 2], R[:, 2, 1], R[:, 2, 2] = c, -s, s, c
    return B @ R


def _boost_stack(P: np.ndarray) -> np.ndarray:
    """Pure boosts sending the hyperboloid origin to each row of ``P``."""
    x0, x1, x2 = P[:, 0], P[:, 1], P[:, 2]
    k = 1.0 / (1.0 + x0)
    B = np.empty((len(P), 3, 3))
    B[:, 0, 0], B[:, 0, 1], B[:, 0, 2] = x0, x1, x2
    B[:, 1, 0], B[:, 2, 0] = x1, x2
    B[:, 1, 1] = 1.0 + k * x1 * x1
    B[:, 2, 2] = 1.0 + k * x2 * x2
    B[:, 1, 2] = B[:, 2, 1] = k * x1 * x2
    return B


def solve_batch(kind: SurfaceKind, a1, a2, B1, B2) -> np.ndarray:
    """Isometries sending (a1, a2) to each row pair of (B1, B2)."""
    Fa = _frames(kind, a1, a2)
    Fb = _frames(kind, B1, B2)
    return Fb @ inverse_stack(kind, Fa)


def solve_isometry_from_pairs(a1: SurfacePoint, a2: SurfacePoint, b1: SurfacePoint, b2: SurfacePoint,
                              tol: float = 1e-7) -> Isometry | None:
    """The orientation-preserving isometry with g a_i = b_i, or ``None`` if
    the two distances differ.  Raises :class:`DegeneratePair` when the pair
    does not fix the isometry."""
    kind = a1.kind
    da = float(distance_coords(kind, a1.X, a2.X))
    db = float(distance_coords(kind, b1.X, b2.X))
    if abs(da - db) > tol * max(1.0, da):
        return None
    M = solve_batch(kind, a1.X, a2.X, b1.X[None], b2.X[None])[0]
    return Isometry(kind, M)


# decoder

@dataclass
class DecodeOutcome:
    error: np.ndarray
    measured: np.ndarray
    candidates: int
    chosen_error: np.ndarray | None
    success: bool
    failure: str = ""
    displacement: float = 0.0
    near_boundary: bool = False


class Decoder:
    """Two-point maximal-probability decoder for one code.

    ``L`` is the support inside ``lattice_radius``; measurements are drawn
    from the support inside ``window_radius``.
    """

    def __init__(self, code: CodeConstruction, window_radius: float | None = None,
                 lattice_radius: float | None = None, eps_d: float = 1e-7, eps_p: float = 1e-6):
        self.code = code
        self.kind = code.kind
        support = np.any(np.abs(code.amps) > 0, axis=1) & code.complete
        r = code.radii
        if self.kind is SurfaceKind.SPHERE:
            w = np.ones(len(r), dtype=bool)
            lat = w
        else:
            safe = code.safe_radius
            self.window_radius = window_radius if window_radius is not None else min(3.5, safe / 2)
            self.lattice_radius = lattice_radius if lattice_radius is not None else min(safe, self.window_radius + 2.0)
            if self.lattice_radius > safe + 1e-9:
                raise ValueError("lattice radius exceeds the complete part of the constellation")
            w = r <= self.window_radius
            lat = r <= self.lattice_radius
        self.W = code.X[support & w]
        self.L = code.X[support & lat]
        if len(self.W) < 2:
            raise ValueError("measurement window holds fewer than two support points")
        self.DL = distance_coords(self.kind, self.L[:, None, :], self.L[None, :, :])
        self.eps_d = eps_d
        self.eps_p = eps_p
        from .groups import PointIndex
        self.L_index = PointIndex(self.kind, self.L)

    def displacement(self, M: np.ndarray) -> float:
        """Largest distance a window point is moved by ``M``."""
        Y = _project(self.kind, self.W @ np.asarray(M).T)
        return float(np.max(distance_coords(self.kind, Y, self.W)))

    def candidate_set(self, measured: np.ndarray) -> np.ndarray:
        """Corrections g (n, 3, 3) with every g p_m in L."""
        measured = np.asarray(measured, dtype=float)
        i0, j0 = self._pair(measured)
        p1, p2 = measured[i0], measured[j0]
        D = float(distance_coords(self.kind, p1, p2))
        qi, qj = np.nonzero(np.abs(self.DL - D) < self.eps_d * max(1.0, D))
        qi, qj = qi[qi != qj], qj[qi != qj]
        if not len(qi):
            return np.zeros((0, 3, 3))
        G = solve_batch(self.kind, p1, p2, self.L[qi], self.L[qj])
        ok = np.ones(len(G), dtype=bool)
        for p in measured:
            img = _project(self.kind, np.einsum("nij,j->ni", G, p))
            ok &= self.L_index.lookup(img) >= 0
        G = G[ok]
        if not len(G):
            return G
        key = np.round(G.reshape(len(G), -1) * 1e6)
        _, first = np.unique(key, axis=0, return_index=True)
        return G[np.sort(first)]

    def _pair(self, measured: np.ndarray) -> tuple[int, int]:
        n = len(measured)
        for i in range(n):
            for j in range(i + 1, n):
                try:
                    _frames(self.kind, measured[i], measured[j])
                    return i, j
                except DegeneratePair:
                    continue
        raise DegeneratePair("all measured pairs are degenerate")

    def decode(self, measured: np.ndarray, model: NoiseModel) -> tuple[np.ndarray | None, int]:
        """Most probable error consistent with the measurement."""
        G = self.candidate_set(measured)
        if not len(G):
            return None, 0
        E = inverse_stack(self.kind, G)
        score = log_density(model, E)
        v, alpha = decompose(self.kind, E)
        disp = np.hypot(v[:, 0], v[:, 1]) + np.abs(alpha)
        order = np.lexsort(tuple(E.reshape(len(E), -1).T[::-1]) + (np.round(disp, 12), -np.round(score, 9)))
        return E[order[0]], len(G)

    def verify(self, error: np.ndarray, chosen: np.ndarray) -> tuple[bool, str]:
        """Success iff chosen^-1 error is a generalised stabiliser."""
        enum = self.code.enumeration
        R = inverse_matrix(self.kind, chosen) @ error
        i = enum.find(R)
        if i < 0:
            return False, "not-a-symmetry"
        if np.max(np.abs(enum.L[i] - np.eye(enum.L.shape[1]))) > 1e-9:
            return False, "wrong-coset"
        return True, ""

    def measure(self, error: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Two (three, if the first two are degenerate) post-error points."""
        idx = rng.choice(len(self.W), size=2, replace=False)
        pts = [self.W[i] for i in idx]
        if self.kind is SurfaceKind.SPHERE and float(np.dot(pts[0], pts[1])) < -1 + 1e-9:
            rest = [i for i in range(len(self.W)) if i not in idx]
            pts.append(self.W[rng.choice(rest)])
        return _project(self.kind, np.array(pts) @ np.asarray(error).T)

    def run_trial(self, model: NoiseModel, rng: np.random.Generator, max_displacement: float | None = None,
                  max_tries: int = 10000) -> DecodeOutcome:
        for _ in range(max_tries):
            Eg = sample_noise(model, rng).M
            disp = self.displacement(Eg)
            if max_displacement is None or disp <= max_displacement:
                break
        else:
            raise RuntimeError("rejection sampling did not find an admissible error")
        return self.decode_error(Eg, model, rng, disp)

    def decode_error(self, Eg: np.ndarray, model: NoiseModel, rng: np.random.Generator,
                     disp: float | None = None) -> DecodeOutcome:
        meas = self.measure(Eg, rng)
        disp = self.displacement(Eg) if disp is None else disp
        chosen, nq = self.decode(meas, model)
        if chosen is None:
            return DecodeOutcome(Eg, meas, 0, None, False, "empty-candidates", disp)
        ok, why = self.verify(Eg, chosen)
        near = False
        if self.kind is not SurfaceKind.SPHERE:
            o = SurfacePoint.origin(self.kind).X
            near = float(distance_coords(self.kind, chosen @ o, o)) > self.lattice_radius - self.window_radius
        return DecodeOutcome(Eg, meas, nq, chosen, ok, why, disp, near)


def default_noise(dec: Decoder, dx: float) -> NoiseModel:
    """Noise whose typical window displacement is a small fraction of d_x."""
    kind = dec.kind
    lever = 1.0
    if kind is SurfaceKind.EUCLIDEAN:
        lever = max(1.0, dec.window_radius)
    elif kind is SurfaceKind.HYPERBOLIC:
        lever = math.sinh(dec.window_radius)
    alpha = 0.15 * dx / lever
    return NoiseModel(kind, 0.15 * dx, 1.0 / alpha**2)


@dataclass
class MonteCarloResult:
    seed: int
    model: NoiseModel
    outcomes: list[DecodeOutcome] = field(default_factory=list)

    @property
    def trials(self) -> int:
        return len(self.outcomes)

    @property
    def rate(self) -> float:
        return sum(o.success for o in self.outcomes) / max(1, self.trials)

    def failures(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for o in self.outcomes:
            if not o.success:
                out[o.failure] = out.get(o.failure, 0) + 1
        return out

    def to_table(self, sep: str = ",") -> str:
        buf = io.StringIO()
        buf.write(sep.join(["seed", "trial", "sigma_t", "kappa", "displacement", "candidates", "success", "failure"]) + "\n")
        for t, o in enumerate(self.outcomes):
            buf.write(sep.join([str(self.seed), str(t), f"{self.model.sigma_t:.6g}", f"{self.model.kappa:.6g}",
                                f"{o.displacement:.9g}", str(o.candidates), str(int(o.success)), o.failure]) + "\n")
        return buf.getvalue()


def monte_carlo(decoder: Decoder, model: NoiseModel, trials: int, seed: int = 0,
                max_displacement: float | None = None) -> MonteCarloResult:
    """Independent seeded trials; trial t uses the t-th spawned stream."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    streams = np.random.SeedSequence(seed).spawn(trials)
    res = MonteCarloResult(seed, model)
    for ss in streams:
        res.outcomes.append(decoder.run_trial(model, np.random.default_rng(ss), max_displacement))
    return res
