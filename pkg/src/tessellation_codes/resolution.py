"""Code resolution (half the minimum distance between constellation points)
and seed optimisation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, root
from scipy.spatial import cKDTree

from .codespec import CodeSpec
from .encoder import CodeConstruction, build_codewords
from .geometry import (SurfaceKind, SurfacePoint, UnitTriangle, build_unit_triangle, distance,
                       distance_coords, rotated_point_distance)

VERTEX_EPS = 1e-6


class ResolutionMismatch(RuntimeError):
    """Closed-form and brute-force resolutions disagree."""


@dataclass
class ResolutionReport:
    d_x: float
    argmin_vertex: str
    vertex_distances: dict[str, float]
    seed: SurfacePoint
    method: str
    scan_d_x: float | None = None

    @property
    def agreement(self) -> float | None:
        return None if self.scan_d_x is None else abs(self.d_x - self.scan_d_x)

    def as_dict(self) -> dict:
        return {"d_x": self.d_x, "argmin_vertex": self.argmin_vertex,
                "vertex_distances": self.vertex_distances, "method": self.method,
                "scan_d_x": self.scan_d_x, "seed": [float(v) for v in self.seed.X]}


def vertex_rotation_distances(tri: UnitTriangle, p: SurfacePoint, skip_eps: float = 1e-9) -> dict[str, float]:
    """Distance from ``p`` to its image under each vertex rotation; vertices
    the point sits on are left out."""
    out = {}
    for name, V in tri.vertices.items():
        d0 = distance(p, V)
        if d0 < skip_eps:
            continue
        out[name] = rotated_point_distance(d0, 2 * math.pi / tri.orders[name], tri.kind)
    return out


def closed_form_resolution(tri: UnitTriangle, p: SurfacePoint) -> tuple[float, str, dict]:
    dists = vertex_rotation_distances(tri, p)
    name = min(dists, key=dists.get)
    return dists[name] / 2.0, name, dists


def scan_resolution(code: CodeConstruction) -> float:
    """Half the minimum pairwise distance over the points of the truncated
    support that lie safely inside the ball."""
    support = np.any(np.abs(code.amps) > 0, axis=1)
    inner = support & (code.radii <= code.safe_radius) if code.kind is not SurfaceKind.SPHERE else support
    X = code.X[inner]
    if code.kind is SurfaceKind.EUCLIDEAN:
        d, _ = cKDTree(X[:, :2]).query(X[:, :2], k=2)
        return float(np.min(d[:, 1])) / 2.0
    # embedding distance is monotone in geodesic distance for neighbours;
    # take a few nearest candidates and measure them exactly
    k = min(8, len(X))
    _, idx = cKDTree(X).query(X, k=k)
    D = distance_coords(code.kind, X[:, None, :], X[idx])
    D[idx == np.arange(len(X))[:, None]] = np.inf
    return float(np.min(D)) / 2.0


def resolution(spec: CodeSpec, code: CodeConstruction | None = None, scan: bool = True,
               tol: float = 1e-7) -> ResolutionReport:
    """Resolution from the three vertex rotations, guarded by a full scan."""
    tri = spec.triangle
    p = spec.seed_point
    dx, name, dists = closed_form_resolution(tri, p)
    rep = ResolutionReport(dx, name, dists, p, "vertex-rotation")
    if scan:
        code = code or build_codewords(spec)
        rep.scan_d_x = scan_resolution(code)
        rep.method = "vertex-rotation+scan"
        if abs(rep.scan_d_x - dx) > tol:
            raise ResolutionMismatch(f"{spec.name}: closed form {dx:.12g} vs scan {rep.scan_d_x:.12g}")
    return rep


@dataclass
class SeedOptimum:
    seed: SurfacePoint
    d_x: float
    vertex_distances: dict[str, float]
    converged: bool
    residual: float
    coords: tuple[float, float]


def natural_coords(p: SurfacePoint) -> tuple[float, float]:
    """(theta, phi) on the sphere, (x, y) on the plane, (eta, theta) on the
    hyperbolic plane."""
    if p.kind is SurfaceKind.EUCLIDEAN:
        return float(p.X[0]), float(p.X[1])
    return p.to_polar()


def _softmax(z):
    w = np.exp(np.concatenate([[0.0], z]) - max(0.0, float(np.max(z))))
    return w / w.sum()


def optimize_seed(p: int, q: int, r: int, starts: int = 16, maxiter: int = 2000, scale: float = 1.0,
                  rng_seed: int = 0) -> SeedOptimum:
    """Seed maximising the smallest vertex-rotation distance.

    Multi-start Nelder-Mead over softmax barycentric weights, then a polish
    that solves for equal vertex-rotation distances.
    """
    tri = build_unit_triangle(p, q, r, scale=scale)

    def point(z):
        w = _softmax(np.asarray(z))
        return tri.point_from_barycentric(w[[1, 2, 0]])   # weights for A, B, C

    def objective(z):
        pt = point(z)
        vals = []
        for name, V in tri.vertices.items():
            d0 = distance(pt, V)
            if d0 < VERTEX_EPS:
                return 0.0
            vals.append(rotated_point_distance(d0, 2 * math.pi / tri.orders[name], tri.kind))
        return -min(vals)

    rng = np.random.default_rng(rng_seed)
    inits = [np.zeros(2)] + [rng.normal(scale=1.5, size=2) for _ in range(starts - 1)]
    results = [minimize(objective, z0, method="Nelder-Mead",
                        options={"maxiter": maxiter, "xatol": 1e-12, "fatol": 1e-14}) for z0 in inits]
    best = min(results, key=lambda res: (res.fun, tuple(res.x)))
    z = best.x

    def eqs(zz):
        d = list(vertex_rotation_distances(tri, point(zz)).values())
        if len(d) < 3:
            return [1.0, 1.0]
        return [d[0] - d[1], d[1] - d[2]]

    sol = root(eqs, z, method="hybr")
    if sol.success and objective(sol.x) <= best.fun + 1e-12:
        z = sol.x
    pt = point(z)
    dists = vertex_rotation_distances(tri, pt)
    vals = list(dists.values())
    residual = max(vals) - min(vals)
    return SeedOptimum(pt, min(vals) / 2.0, dists, bool(residual < 1e-6), residual, natural_coords(pt))
