"""Covariant codewords as weighted point constellations.

The amplitude of codeword ``k`` at a point ``y`` is the sum over group
elements ``h`` with ``h p = y`` of ``<Sigma| rho_L(h)^dagger |k>``, divided by
the order of the seed stabiliser so that a seed with trivial stabiliser gets
unit weight.  Codewords on the planes are periodic under the generalised
stabiliser group; inner products are taken over one point per orbit (a
transversal), which is the per-unit-cell inner product.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .codespec import CodeSpec, SpecError
from .geometry import SurfaceKind, SurfacePoint, _project, distance_coords, inverse_matrix
from .groups import LOOKUP_RTOL, Enumeration, GroupElement, PointIndex, cluster_points, enumerate_ball

log = logging.getLogger(__name__)

MERGE_RTOL = LOOKUP_RTOL
AMP_EPS = 1e-12


class TruncationError(RuntimeError):
    """The truncated constellation is too small for the requested check."""


@dataclass(frozen=True, eq=False)
class Constellation:
    """One codeword: support points (embedding rows) with complex amplitudes."""

    kind: SurfaceKind
    X: np.ndarray
    amp: np.ndarray
    k: int = 0

    def __len__(self) -> int:
        return len(self.amp)

    @cached_property
    def index(self) -> PointIndex:
        return PointIndex(self.kind, self.X, MERGE_RTOL)

    def points(self) -> list[SurfacePoint]:
        return [SurfacePoint(self.kind, x) for x in self.X]

    def amplitude_at(self, Y: np.ndarray) -> np.ndarray:
        i = self.index.lookup(Y)
        out = np.zeros(len(i), dtype=complex)
        out[i >= 0] = self.amp[i[i >= 0]]
        return out

    def transformed(self, M: np.ndarray) -> "Constellation":
        """The codeword moved by the isometry ``M`` (points mapped, amplitudes kept)."""
        return Constellation(self.kind, _project(self.kind, self.X @ np.asarray(M).T), self.amp, self.k)

    def to_records(self) -> list[dict]:
        return [{"kind": self.kind.value, "X": [float(v) for v in x], "re": float(a.real),
                 "im": float(a.imag), "k": self.k} for x, a in zip(self.X, self.amp)]


def inner_product(a: Constellation, b: Constellation, region: np.ndarray | None = None) -> complex:
    """Delta overlap: sum of conj(a) b over coincident points.

    With ``region`` (embedding rows) the sum runs over those points only.
    """
    if a.kind is not b.kind:
        raise ValueError("constellations live on different surfaces")
    if region is None:
        return complex(np.sum(np.conj(a.amp) * b.amplitude_at(a.X)))
    return complex(np.sum(np.conj(a.amplitude_at(region)) * b.amplitude_at(region)))


def apply_phase_profile(c: Constellation, f: Callable[[np.ndarray], np.ndarray]) -> Constellation:
    """Multiply each amplitude by the unimodular value ``f(x)`` at its point."""
    ph = np.asarray(f(c.X), dtype=complex).reshape(len(c))
    if len(ph) and np.max(np.abs(np.abs(ph) - 1.0)) > 1e-9:
        raise ValueError("phase profile must be unimodular")
    return Constellation(c.kind, c.X, c.amp * ph, c.k)


@dataclass
class CodeConstruction:
    """All codewords of a spec over a shared support."""

    spec: CodeSpec
    enumeration: Enumeration
    X: np.ndarray          # (n, 3) merged support points
    amps: np.ndarray       # (n, d)
    multiplicity: np.ndarray
    stabilizer_order: int
    complete: np.ndarray   # all preimages of the point were enumerated
    class_id: np.ndarray   # orbit label under the generalised stabiliser group (-1 if incomplete)
    transversal: np.ndarray  # indices into X, one complete point per orbit
    expected_classes: int

    @property
    def kind(self) -> SurfaceKind:
        return self.spec.kind

    @property
    def dim(self) -> int:
        return self.spec.dim

    @cached_property
    def index(self) -> PointIndex:
        return PointIndex(self.kind, self.X, MERGE_RTOL)

    @cached_property
    def radii(self) -> np.ndarray:
        return distance_coords(self.kind, self.X, SurfacePoint.origin(self.kind).X)

    def codeword(self, k: int, prune: bool = True) -> Constellation:
        a = self.amps[:, k]
        keep = np.abs(a) >= AMP_EPS if prune else np.ones(len(a), dtype=bool)
        return Constellation(self.kind, self.X[keep], a[keep], k)

    def codewords(self) -> list[Constellation]:
        return [self.codeword(k) for k in range(self.dim)]

    @cached_property
    def cell_points(self) -> np.ndarray:
        return self.X[self.transversal]

    def amplitudes_at(self, Y: np.ndarray, require_complete: bool = True) -> np.ndarray:
        """(m, d) amplitudes at the points ``Y``; points absent from the
        support have amplitude 0 unless they fall in the truncation collar."""
        Y = np.asarray(Y, dtype=float).reshape(-1, 3)
        i = self.index.lookup(Y)
        out = np.zeros((len(Y), self.dim), dtype=complex)
        hit = i >= 0
        out[hit] = self.amps[i[hit]]
        if require_complete:
            bad = hit.copy()
            bad[hit] = ~self.complete[i[hit]]
            # a missing point is only trustworthy well inside the ball
            if self.kind is not SurfaceKind.SPHERE:
                r = distance_coords(self.kind, Y, SurfacePoint.origin(self.kind).X)
                bad |= (~hit) & (r > self.safe_radius)
            if bad.any():
                raise TruncationError(f"{int(bad.sum())} lookups fall in the truncation collar; enlarge the radius")
        return out

    @cached_property
    def safe_radius(self) -> float:
        """Radius inside which every point of the orbit is complete."""
        if self.kind is SurfaceKind.SPHERE:
            return np.inf
        # every preimage of a point this close moves the label point at most R
        slack = float(distance_coords(self.kind, self.spec.seed_point.X, self.enumeration.x_ref))
        bound = self.enumeration.radius - slack
        inc = self.radii[~self.complete]
        if len(inc):
            bound = min(bound, float(np.min(inc)))
        return bound - 1e-9

    def gram(self) -> np.ndarray:
        """Per-cell Gram matrix G[j, k] = <j|k>."""
        A = self.amps[self.transversal]
        return A.conj().T @ A

    @cached_property
    def cell_norm(self) -> float:
        return float(np.real(self.gram()[0, 0]))

    def transversal_near(self, c: np.ndarray) -> np.ndarray:
        """One complete point per orbit, each the member closest to ``c``."""
        idx = np.nonzero(self.class_id >= 0)[0]
        dist = np.round(distance_coords(self.kind, self.X[idx], np.asarray(c, dtype=float)), 9)
        order = np.lexsort((idx, dist, self.class_id[idx]))
        cls = self.class_id[idx][order]
        first = np.concatenate([[True], cls[1:] != cls[:-1]])
        return idx[order][first]

    def _cell_for(self, M: np.ndarray) -> np.ndarray:
        if self.kind is SurfaceKind.SPHERE:
            return self.transversal
        return self.transversal_near(action_centre(self.kind, M))

    def action_matrix(self, M: np.ndarray) -> np.ndarray:
        """Normalised matrix <j| rho(g) |k> for the isometry ``M``.

        The cell is centred on the fixed point of ``M`` (or halfway to the
        image of the origin) so preimages stay inside the enumerated ball.
        """
        D = self._cell_for(M)
        Minv = inverse_matrix(self.kind, M)
        pre = _project(self.kind, self.X[D] @ Minv.T)
        A = self.amps[D]
        B = self.amplitudes_at(pre)
        return (A.conj().T @ B) / self.cell_norm

    def periodicity_defect(self, M: np.ndarray) -> float:
        """Max amplitude change on the cell when moved by an isometry that
        should be a symmetry (e.g. a kernel element)."""
        D = self._cell_for(M)
        pre = _project(self.kind, self.X[D] @ inverse_matrix(self.kind, M).T)
        return float(np.max(np.abs(self.amplitudes_at(pre) - self.amps[D])))

    def export_text(self) -> str:
        """One line per (point, codeword): kind, X0 X1 X2, re, im, k."""
        lines = ["# kind x0 x1 x2 re im k"]
        for k in range(self.dim):
            c = self.codeword(k)
            for x, a in zip(c.X, c.amp):
                lines.append(" ".join([self.kind.value, *(f"{v:.17g}" for v in x),
                                       f"{a.real:.17g}", f"{a.imag:.17g}", str(k)]))
        return "\n".join(lines) + "\n"


def action_centre(kind: SurfaceKind, M: np.ndarray) -> np.ndarray:
    """Fixed point of an elliptic isometry, else the midpoint between the
    origin and its image."""
    M = np.asarray(M, dtype=float)
    o = SurfacePoint.origin(kind).X
    if kind is SurfaceKind.EUCLIDEAN:
        R, t = M[:2, :2], M[:2, 2]
        if np.max(np.abs(R - np.eye(2))) > 1e-9:
            x = np.linalg.solve(np.eye(2) - R, t)
            return np.array([x[0], x[1], 1.0])
        return np.array([t[0] / 2, t[1] / 2, 1.0])
    if kind is SurfaceKind.HYPERBOLIC and np.trace(M) < 3.0 - 1e-9:
        w, v = np.linalg.eig(M)
        j = int(np.argmin(np.abs(w - 1.0)))
        x = np.real(v[:, j])
        if -x[0] ** 2 + x[1] ** 2 + x[2] ** 2 < 0:
            return _project(kind, x)
    y = M @ o
    return _project(kind, o + y) if kind is not SurfaceKind.EUCLIDEAN else (o + y) / 2


def _stabilizer(enum: Enumeration, seed: np.ndarray) -> list[int]:
    kind = enum.kind
    P = _project(kind, np.einsum("nij,j->ni", enum.M, seed))
    near = distance_coords(kind, P, seed) < 1e-7
    return [int(i) for i in np.nonzero(near)[0]]


def build_codewords(spec: CodeSpec, enumeration: Enumeration | None = None) -> CodeConstruction:
    """Constellations of all ``d`` codewords of ``spec``."""
    enum = enumeration or enumerate_ball(spec)
    kind = spec.kind
    seed = spec.seed_point.X
    sigma = spec.sigma_vector
    stab = _stabilizer(enum, seed)
    F = len(stab)
    if F > 1:
        # a vertex seed needs Sigma in the fixed subspace of its stabiliser
        P = sum(enum.L[i] for i in stab) / F
        if np.linalg.norm(P @ sigma - sigma) > 1e-9:
            log.info("%s: reference vector is not fixed by the seed stabiliser (order %d)", spec.name, F)
    P = _project(kind, np.einsum("nij,j->ni", enum.M, seed))
    # <Sigma| L^dagger |k> = conj((L Sigma)_k)
    contrib = np.conj(enum.L @ sigma) / F
    tol = MERGE_RTOL * max(1.0, float(np.max(np.abs(P))))
    lab = cluster_points(P, tol)
    uniq, inv = np.unique(lab, return_inverse=True)
    n = len(uniq)
    X = P[uniq]
    amps = np.zeros((n, spec.dim), dtype=complex)
    np.add.at(amps, inv, contrib)
    mult = np.bincount(inv, minlength=n)
    absorbed = np.zeros((n, spec.dim))
    np.add.at(absorbed, inv, np.abs(contrib))
    cancel = (np.abs(amps) < AMP_EPS) & (absorbed > AMP_EPS)
    if cancel.any():
        log.debug("%s: %d destructive merges", spec.name, int(cancel.sum()))
    amps[np.abs(amps) < AMP_EPS] = 0.0
    if not np.any(np.abs(amps) > 0):
        raise SpecError(f"{spec.name}: every codeword amplitude vanishes (reference vector incompatible with seed)")
    complete = mult == F
    # orbit label: the set of logical images sending the seed to the point
    keys = enum.logical_keys
    members: list[list] = [[] for _ in range(n)]
    for i, c in enumerate(inv):
        members[c].append(keys[i])
    class_of: dict[frozenset, int] = {}
    class_id = -np.ones(n, dtype=int)
    for c in range(n):
        if complete[c]:
            class_id[c] = class_of.setdefault(frozenset(members[c]), len(class_of))
    radii = distance_coords(kind, X, SurfacePoint.origin(kind).X)
    transversal = []
    for cid in range(len(class_of)):
        idx = np.nonzero(class_id == cid)[0]
        transversal.append(int(idx[np.lexsort((idx, np.round(radii[idx], 9)))][0]))
    stab_keys = {keys[i] for i in stab}
    image_order = len(set(keys))
    expected = image_order // len(stab_keys)
    if len(class_of) != expected:
        raise TruncationError(f"{spec.name}: found {len(class_of)} point orbits, expected {expected}; "
                              "enlarge the truncation radius")
    code = CodeConstruction(spec, enum, X, amps, mult, F, complete, class_id, np.array(transversal),
                            expected)
    return code


def phase_fix_error(M: np.ndarray, L: np.ndarray) -> tuple[float, complex]:
    """Max-norm distance between M and L after the best global phase."""
    s = np.vdot(L, M)
    ph = s / abs(s) if abs(s) > 1e-15 else 1.0
    return float(np.max(np.abs(M - ph * L))), ph


@dataclass
class ActionReport:
    element: GroupElement
    matrix: np.ndarray
    error: float
    exact_error: float
    phase: complex

    @property
    def ok(self) -> bool:
        return self.error < 1e-8


def verify_logical_action(code: CodeConstruction, g: GroupElement) -> ActionReport:
    """Compare the geometric action of ``g`` on the codewords with its
    logical image."""
    M = code.action_matrix(g.geo.M)
    err, ph = phase_fix_error(M, g.logi)
    return ActionReport(g, M, err, float(np.max(np.abs(M - g.logi))), ph)
