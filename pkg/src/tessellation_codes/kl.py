"""Knill-Laflamme matrix elements for position and momentum errors.

Position errors are isometries and are evaluated on constellations.  Momentum
errors are multiplication operators: spherical harmonics on the sphere, plane
waves on the Euclidean plane and the angular factor ``e^{i n phi}`` about a
rotation centre on the hyperbolic plane (the radial conical-function factor
is not evaluated).
"""

from __future__ import annotations

import cmath
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .encoder import CodeConstruction
from .geometry import SurfaceKind, SurfacePoint, _project, distance_coords, inverse_matrix

KL_TOL = 1e-9


def deviation_from_scalar(E: np.ndarray) -> tuple[float, complex]:
    """Max-norm distance of ``E`` from the nearest multiple of the identity."""
    d = E.shape[0]
    lam = np.trace(E) / d
    return float(np.max(np.abs(E - lam * np.eye(d)))), complex(lam)


@dataclass
class KLReport:
    labels: tuple
    matrix: np.ndarray
    deviation: float
    violated: bool
    extra: dict = field(default_factory=dict)


def _report(labels, E, tol=KL_TOL, **extra) -> KLReport:
    dev, lam = deviation_from_scalar(E)
    return KLReport(labels, E, dev, dev > tol, {"lambda": lam, **extra})


# position errors

def position_kl(code: CodeConstruction, g1: np.ndarray, g2: np.ndarray, tol: float = KL_TOL) -> KLReport:
    """KL matrix of the error pair (g1, g2): <j| rho(g2)^dagger rho(g1) |k>."""
    g1 = getattr(g1, "M", g1)
    g2 = getattr(g2, "M", g2)
    M = inverse_matrix(code.kind, g2) @ g1
    E = code.action_matrix(M)
    return _report(("position",), E, tol)


# spherical harmonics

def associated_legendre(l: int, m: int, x):
    """P_l^m(x) without the Condon-Shortley phase, by upward recurrence.

    Negative orders use P_l^{-m} = (-1)^m (l-m)!/(l+m)! P_l^m.
    """
    if l < 0 or abs(m) > l:
        raise ValueError(f"need |m| <= l, got l={l}, m={m}")
    x = np.asarray(x, dtype=float)
    if m < 0:
        mm = -m
        return (-1) ** mm * math.factorial(l - mm) / math.factorial(l + mm) * associated_legendre(l, mm, x)
    s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    # P_m^m = (2m-1)!! s^m
    pmm = np.ones_like(x) * math.prod(range(1, 2 * m, 2)) * s**m
    if l == m:
        return pmm
    pm1 = x * (2 * m + 1) * pmm
    if l == m + 1:
        return pm1
    for n in range(m + 2, l + 1):
        pmm, pm1 = pm1, ((2 * n - 1) * x * pm1 - (n + m - 1) * pmm) / (n - m)
    return pm1


def spherical_harmonic(l: int, m: int, theta, phi):
    """Unnormalised Y_l^m = P_l^m(cos theta) e^{i m phi}."""
    return associated_legendre(l, m, np.cos(theta)) * np.exp(1j * m * np.asarray(phi))


def sphere_momentum_closed_form(l1: int, m1: int, l2: int, m2: int, theta0: float, phi0: float):
    """Diagonal elements <k| Y_{l1}^{m1 dagger} Y_{l2}^{m2} |k> (k = 0, 1) for
    the {2,2,4} codewords with seed (theta0, phi0)."""
    P = associated_legendre(l1, m1, math.cos(theta0)) * associated_legendre(l2, m2, math.cos(theta0))
    fac = 1 + (-1) ** (m1 + m2)
    sgn = (-1) ** (l1 + l2)

    def v(ph):
        return 0.25 * P * fac * (cmath.exp(1j * (m2 - m1) * ph) + sgn * cmath.exp(-1j * (m2 - m1) * ph))

    return complex(v(phi0)), complex(v(phi0 + math.pi / 2))


def sphere_momentum_direct(code: CodeConstruction, l1: int, m1: int, l2: int, m2: int) -> np.ndarray:
    """Full KL matrix of Y_{l1}^{m1 dagger} Y_{l2}^{m2} by summation over the
    (normalised) constellation."""
    if code.kind is not SurfaceKind.SPHERE:
        raise ValueError("spherical harmonics need a spherical code")
    X = code.X
    theta = np.arccos(np.clip(X[:, 2], -1, 1))
    phi = np.arctan2(X[:, 1], X[:, 0])
    f = np.conj(spherical_harmonic(l1, m1, theta, phi)) * spherical_harmonic(l2, m2, theta, phi)
    A = code.amps / np.sqrt(code.cell_norm)
    return (A.conj().T * f) @ A


def sphere_momentum_kl(l1: int, m1: int, l2: int, m2: int, theta0: float, phi0: float,
                       code: CodeConstruction | None = None, tol: float = KL_TOL) -> KLReport:
    """Closed-form diagonal pair, optionally cross-checked on ``code``."""
    v0, v1 = sphere_momentum_closed_form(l1, m1, l2, m2, theta0, phi0)
    extra = {"closed_form": (v0, v1)}
    if code is not None:
        E = sphere_momentum_direct(code, l1, m1, l2, m2)
        extra["closed_form_error"] = float(max(abs(E[0, 0] - v0), abs(E[1, 1] - v1)))
    else:
        E = np.diag([v0, v1])
    return _report((l1, m1, l2, m2), E, tol, **extra)


def sphere_label_pairs(lmax: int):
    labs = [(l, m) for l in range(lmax + 1) for m in range(-l, l + 1)]
    return [(l1, m1, l2, m2) for (l1, m1) in labs for (l2, m2) in labs]


def label_weight(lab) -> int:
    return sum(abs(v) for v in lab)


@dataclass
class SphereScan:
    reports: list[KLReport]

    @property
    def violations(self) -> set:
        return {r.labels for r in self.reports if r.violated}

    def lowest(self) -> set:
        """All violating label tuples of minimal |l1|+|l2|+|m1|+|m2|."""
        v = self.violations
        if not v:
            return set()
        w = min(label_weight(x) for x in v)
        return {x for x in v if label_weight(x) == w}

    def to_table(self) -> str:
        buf = io.StringIO()
        buf.write("l1,m1,l2,m2,v0_re,v0_im,v1_re,v1_im,violated\n")
        for r in self.reports:
            v0, v1 = r.matrix[0, 0], r.matrix[1, 1]
            buf.write(",".join(map(str, r.labels)) +
                      f",{v0.real:.12g},{v0.imag:.12g},{v1.real:.12g},{v1.imag:.12g},{int(r.violated)}\n")
        return buf.getvalue()


def sphere_scan(code: CodeConstruction, lmax: int = 3, tol: float = KL_TOL) -> SphereScan:
    """Direct KL scan over all label pairs with l <= lmax."""
    reps = []
    for lab in sphere_label_pairs(lmax):
        E = sphere_momentum_direct(code, *lab)
        reps.append(_report(lab, E, tol))
    return SphereScan(reps)


def sphere_predicate(l1, m1, l2, m2) -> bool:
    """Predicted violations for the {2,2,4} cube seed."""
    return (l1 + l2) % 2 == 1 and (m2 - m1) % 4 == 2


def sphere_predicate_sum_form(l1, m1, l2, m2) -> bool:
    """Variant with m1 + m2 in place of m2 - m1, kept for comparison."""
    return (l1 + l2) % 2 == 1 and (m1 + m2) % 4 == 2


# plane waves

@dataclass
class TranslationLattice:
    basis: np.ndarray      # rows are the two basis vectors
    vectors: np.ndarray    # all kernel translations found

    @property
    def dual(self) -> np.ndarray:
        """Rows b_i with b_i . v_j = 2 pi delta_ij."""
        return 2 * math.pi * np.linalg.inv(self.basis).T

    def coefficients(self, dk) -> np.ndarray:
        return self.basis @ np.asarray(dk, dtype=float) / (2 * math.pi)


def translation_lattice(code: CodeConstruction) -> TranslationLattice:
    """Translations among the generalised stabilisers, reduced to a basis."""
    if code.kind is not SurfaceKind.EUCLIDEAN:
        raise ValueError("translation lattice needs a Euclidean code")
    enum = code.enumeration
    ker = enum.kernel_indices()
    M = enum.M[ker]
    pure = np.max(np.abs(M[:, :2, :2] - np.eye(2)), axis=(1, 2)) < 1e-9
    T = M[pure][:, :2, 2]
    if len(T) < 2:
        raise ValueError("not enough kernel translations; enlarge the truncation")
    T = T[np.argsort(np.linalg.norm(T, axis=1), kind="stable")]
    v1 = T[0]
    v2 = next((t for t in T[1:] if abs(v1[0] * t[1] - v1[1] * t[0]) > 1e-6 * np.dot(v1, v1)), None)
    if v2 is None:
        raise ValueError("kernel translations are collinear")
    B = np.array([v1, v2])
    coef = T @ np.linalg.inv(B)
    if np.max(np.abs(coef - np.round(coef))) > 1e-6:
        raise ValueError("kernel translations are not generated by the two shortest ones")
    return TranslationLattice(B, T)


def lattice_cell(code: CodeConstruction, lat: TranslationLattice) -> np.ndarray:
    """One complete support point per translation class (indices into X)."""
    idx = np.nonzero(code.class_id >= 0)[0]
    idx = idx[code.radii[idx] <= code.safe_radius]
    frac = code.X[idx, :2] @ np.linalg.inv(lat.basis)
    key = np.round((frac - np.floor(frac + 1e-7)) * 1e6).astype(np.int64) % 1_000_000
    best: dict[tuple, int] = {}
    for i, kk in zip(idx, map(tuple, key)):
        j = best.get(kk)
        if j is None or code.radii[i] < code.radii[j]:
            best[kk] = int(i)
    cell = np.array(sorted(best.values()))
    # the point group of the stabilisers multiplies the orbit count
    enum = code.enumeration
    rots = {tuple(np.round(enum.M[i, :2, :2].ravel(), 6)) for i in enum.kernel_indices()} | {(1.0, 0.0, 0.0, 1.0)}
    expected = len(code.transversal) * len(rots)
    if len(cell) != expected:
        raise ValueError(f"found {len(cell)} translation classes, expected {expected}")
    return cell


@dataclass
class PlaneWaveKL:
    dk: tuple[float, float]
    coefficients: tuple[float, float]
    support: bool
    cell_elements: np.ndarray   # normalised d x d per translation cell
    violated: bool
    deviation: float


class PlaneWaveAnalyzer:
    """Plane-wave KL elements ``<j| e^{i dk.x} |k>`` on a Euclidean code."""

    def __init__(self, code: CodeConstruction):
        self.code = code
        self.lattice = translation_lattice(code)
        self.cell = lattice_cell(code, self.lattice)
        self.A = code.amps[self.cell]
        self.Y = code.X[self.cell, :2]
        self.norm = float(np.sum(np.abs(self.A[:, 0]) ** 2))

    def raw_elements(self, dk) -> np.ndarray:
        ph = np.exp(1j * (self.Y @ np.asarray(dk, dtype=float)))
        return (self.A.conj().T * ph) @ self.A

    def __call__(self, dk, tol: float = KL_TOL) -> PlaneWaveKL:
        dk = np.asarray(dk, dtype=float)
        c = self.lattice.coefficients(dk)
        support = bool(np.max(np.abs(c - np.round(c))) < 1e-9)
        E = self.raw_elements(dk) / self.norm
        if not support:
            return PlaneWaveKL(tuple(dk), tuple(c), False, np.zeros_like(E), False, 0.0)
        dev, _ = deviation_from_scalar(E)
        return PlaneWaveKL(tuple(dk), tuple(c), True, E, dev > tol, dev)


def printed_predicate_244(dkx: float, dky: float) -> bool:
    """Both components odd multiples of pi/2."""
    a, b = dkx / (math.pi / 2), dky / (math.pi / 2)
    ok = abs(a - round(a)) < 1e-9 and abs(b - round(b)) < 1e-9
    return ok and round(a) % 2 == 1 and round(b) % 2 == 1


def closed_form_244(dkx: float, dky: float, x0: float, y0: float) -> tuple[float, float | None]:
    """Per-cell <0|V|0> and, where the cosine relation fixes it, <1|V|1>."""
    v0 = 4 * math.cos(dkx + dky) * (math.cos(dkx - dky + x0 * dky - y0 * dkx)
                                     + math.cos(dkx + dky - x0 * dkx - y0 * dky))
    c = math.cos(dkx + dky)
    v1 = math.cos(dkx - dky) * v0 / c if abs(c) > 1e-12 else None
    return v0, v1


def mn_333(dkx: float, dky: float) -> tuple[float, float]:
    m = (4.5 * dkx + 1.5 * math.sqrt(3) * dky) / (2 * math.pi)
    n = 3 * math.sqrt(3) * dky / (2 * math.pi)
    return m, n


def printed_predicate_333(dkx: float, dky: float) -> bool:
    """On the support, violated iff m or n is not a multiple of 3."""
    m, n = mn_333(dkx, dky)
    if abs(m - round(m)) > 1e-9 or abs(n - round(n)) > 1e-9:
        return False
    return round(m) % 3 != 0 or round(n) % 3 != 0


def closed_form_333(dkx: float, dky: float) -> tuple[complex, complex, complex]:
    s3 = math.sqrt(3)
    S0 = cmath.exp(1j * dkx) + cmath.exp(-2j * dkx) + cmath.exp(1j * (-0.5 * dkx + 1.5 * s3 * dky))
    return S0, cmath.exp(1j * (1.5 * dkx - 0.5 * s3 * dky)) * S0, cmath.exp(-1j * s3 * dky) * S0


@dataclass
class EuclidKL:
    dk: tuple[float, float]
    support: bool
    printed_violation: bool
    direct_violation: bool
    elements: np.ndarray
    closed_form_error: float


def euclid_momentum_kl_244(dkx: float, dky: float, analyzer: PlaneWaveAnalyzer) -> EuclidKL:
    r = analyzer(np.array([dkx, dky]))
    x0, y0 = analyzer.code.spec.seed_point.X[:2]
    err = 0.0
    if r.support:
        raw = analyzer.raw_elements([dkx, dky])
        v0, v1 = closed_form_244(dkx, dky, x0, y0)
        # the printed per-cell sum runs over the 4 x 4 period of one codeword
        err = abs(raw[0, 0] - v0)
        if v1 is not None:
            err = max(err, abs(raw[1, 1] - v1))
    return EuclidKL((dkx, dky), r.support, printed_predicate_244(dkx, dky), r.violated, r.cell_elements, float(err))


def euclid_momentum_kl_333(dkx: float, dky: float, analyzer: PlaneWaveAnalyzer) -> EuclidKL:
    r = analyzer(np.array([dkx, dky]))
    err = 0.0
    if r.support:
        raw = analyzer.raw_elements([dkx, dky])
        cf = closed_form_333(dkx, dky)
        err = max(abs(raw[k, k] - cf[k]) for k in range(3))
    return EuclidKL((dkx, dky), r.support, printed_predicate_333(dkx, dky), r.violated, r.cell_elements, float(err))


def correctable_radius(violating_dks) -> float:
    """Half the smallest violating |dk| (errors of norm below it are safe)."""
    norms = [math.hypot(*dk) for dk in violating_dks]
    return min(norms) / 2 if norms else math.inf


# hyperbolic angular factor

@dataclass
class AngularSelection:
    n: int
    centre: str
    order: int
    rings: int
    max_entry: float
    vanishes: bool
    trivial: bool

    @property
    def protected(self) -> bool:
        return self.trivial or self.vanishes


def hyperbolic_angular_selection(code: CodeConstruction, n: int, centre: str = "A",
                                 tol: float = KL_TOL) -> AngularSelection:
    """Angular factor e^{i n phi} about a vertex, summed ring by ring.

    Each ring is an orbit of the vertex rotation; since the radial factor is
    constant on a ring, the angular selection rule protects the pair when
    every ring matrix vanishes.  ``n = 0`` carries no angular constraint.
    """
    tri = code.spec.triangle
    V = tri.vertices[centre]
    order = tri.orders[centre]
    from .geometry import boost_to
    Binv = inverse_matrix(code.kind, boost_to(code.kind, V.X))
    r_c = distance_coords(code.kind, code.X, V.X)
    r_o = float(distance_coords(code.kind, V.X, SurfacePoint.origin(code.kind).X))
    inside = (code.radii <= code.safe_radius) & (r_c > 1e-9) & (r_c + r_o <= code.safe_radius)
    idx = np.nonzero(inside & np.any(np.abs(code.amps) > 0, axis=1))[0]
    local = _project(code.kind, code.X[idx] @ Binv.T)
    phi = np.arctan2(local[:, 2], local[:, 1]) if code.kind is SurfaceKind.HYPERBOLIC else \
        np.arctan2(local[:, 1], local[:, 0])
    ring_key = np.round(r_c[idx], 7)
    A = code.amps[idx] / math.sqrt(code.cell_norm)
    worst = 0.0
    rings = 0
    for key in np.unique(ring_key):
        sel = ring_key == key
        Aring = A[sel]
        E = (Aring.conj().T * np.exp(1j * n * phi[sel])) @ Aring
        worst = max(worst, float(np.max(np.abs(E))))
        rings += 1
    return AngularSelection(n, centre, order, rings, worst, worst < tol, n == 0)


def scalar_power(code: CodeConstruction, centre: str = "A") -> int:
    """Smallest k dividing the vertex order with rho(r)^k a multiple of I."""
    p = code.spec.triangle.orders[centre]
    L = code.spec.rep.gens[centre]
    for k in range(1, p + 1):
        if p % k:
            continue
        P = np.linalg.matrix_power(L, k)
        if deviation_from_scalar(P)[0] < 1e-9:
            return k
    return p


def angular_guaranteed(code: CodeConstruction, n: int, centre: str = "A") -> bool:
    """Protection forced by symmetry alone: if rho(r)^k is scalar the ring
    sum factorises over s mod k and vanishes unless p/k divides n."""
    p = code.spec.triangle.orders[centre]
    step = p // scalar_power(code, centre)
    return n == 0 or n % step != 0


def derived_predicate_333(dkx: float, dky: float) -> bool:
    """Violation set found by direct summation: m = 2n (mod 3), n != 0 (mod 3)."""
    m, n = mn_333(dkx, dky)
    if abs(m - round(m)) > 1e-9 or abs(n - round(n)) > 1e-9:
        return False
    m, n = round(m), round(n)
    return (m - 2 * n) % 3 == 0 and n % 3 != 0


def grid_244(half: int = 20) -> list[tuple[float, float]]:
    """(2 half + 1)^2 grid with step pi/4."""
    g = np.arange(-half, half + 1) * math.pi / 4
    return [(float(a), float(b)) for a in g for b in g]


def grid_333(half: int = 20) -> list[tuple[float, float]]:
    """(2 half + 1)^2 grid with half-integer steps in the (m, n) coordinates."""
    s3 = math.sqrt(3)
    out = []
    for m in np.arange(-half, half + 1) / 2:
        for n in np.arange(-half, half + 1) / 2:
            dky = 2 * math.pi * n / (3 * s3)
            out.append(((2 * math.pi * m - 1.5 * s3 * dky) / 4.5, dky))
    return out


@dataclass
class EuclidScan:
    results: list[EuclidKL]
    printed: Callable
    derived: Callable

    @property
    def violating(self) -> list[tuple[float, float]]:
        return [r.dk for r in self.results if r.direct_violation]

    def mismatches(self, which: str = "printed") -> list[tuple[float, float]]:
        pred = self.printed if which == "printed" else self.derived
        return [r.dk for r in self.results if pred(*r.dk) != r.direct_violation]

    @property
    def radius(self) -> float:
        return correctable_radius(self.violating)

    @property
    def closed_form_error(self) -> float:
        return max((r.closed_form_error for r in self.results), default=0.0)

    def to_table(self, sep: str = ",") -> str:
        rows = [sep.join(["dkx", "dky", "support", "violated", "printed"])]
        for r in self.results:
            rows.append(sep.join([f"{r.dk[0]:.12g}", f"{r.dk[1]:.12g}", str(int(r.support)),
                                  str(int(r.direct_violation)), str(int(r.printed_violation))]))
        return "\n".join(rows) + "\n"


def euclid_scan(code: CodeConstruction, grid=None) -> EuclidScan:
    """Plane-wave KL scan of the {2,4,4} or {3,3,3} code on a 41 x 41 grid."""
    an = PlaneWaveAnalyzer(code)
    if code.spec.pqr == (2, 4, 4):
        grid = grid or grid_244()
        res = [euclid_momentum_kl_244(a, b, an) for a, b in grid]
        return EuclidScan(res, printed_predicate_244, printed_predicate_244)
    if code.spec.pqr == (3, 3, 3):
        grid = grid or grid_333()
        res = [euclid_momentum_kl_333(a, b, an) for a, b in grid]
        return EuclidScan(res, printed_predicate_333, derived_predicate_333)
    raise ValueError("plane-wave scan is set up for the {2,4,4} and {3,3,3} codes")
