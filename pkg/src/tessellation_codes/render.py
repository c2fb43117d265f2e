"""SVG pictures of constellations.

Sphere: orthographic views of the two hemispheres.  Euclidean plane: unit
cells with the lattice vectors.  Hyperbolic plane: the Poincare disk with
triangle edges drawn as arcs orthogonal to the boundary.
"""

from __future__ import annotations

import cmath
import math
import xml.etree.ElementTree as ET

import numpy as np

from .encoder import CodeConstruction
from .geometry import SurfaceKind, SurfacePoint, _project, distance_coords

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
DEFAULTS = {"size": 480, "labels": True, "cells": None, "edges": True, "radius": None}
SVG_NS = "http://www.w3.org/2000/svg"


def format_amplitude(a: complex, d: int, ref: float) -> str:
    """Amplitude relative to ``ref``; phases that are multiples of 2 pi/d are
    written as powers of w (w = e^{2 pi i/d})."""
    r = abs(a) / ref
    ph = cmath.phase(a) / (2 * math.pi) * d
    k = round(ph)
    mag = "" if abs(r - 1) < 1e-6 else f"{r:.3g}"
    if abs(ph - k) < 1e-6:
        k %= d
        if d == 2 or k == 0:
            sign = "-" if k == 1 and d == 2 else "+"
            return f"{sign}{mag or '1'}"
        return f"{mag}w^{k}" if k > 1 else f"{mag}w"
    return f"{mag or '1'}e^{{i{cmath.phase(a):.3f}}}"


class _Canvas:
    def __init__(self, size: int, width: int | None = None):
        self.size = size
        self.root = ET.Element("svg", {"xmlns": SVG_NS, "width": str(width or size), "height": str(size),
                                       "viewBox": f"0 0 {width or size} {size}"})
        self.edges = ET.SubElement(self.root, "g", {"class": "edges", "stroke": "#999", "fill": "none",
                                                   "stroke-width": "0.6"})
        self.marks = ET.SubElement(self.root, "g", {"class": "marks"})
        self.labels = ET.SubElement(self.root, "g", {"class": "labels", "font-size": "9",
                                                    "font-family": "sans-serif"})
        self._used: dict[tuple[int, int], int] = {}

    def circle(self, parent, cx, cy, r, **attrs):
        a = {"cx": f"{cx:.3f}", "cy": f"{cy:.3f}", "r": f"{r:.3f}"}
        a.update({k.replace("_", "-"): str(v) for k, v in attrs.items()})
        return ET.SubElement(parent, "circle", a)

    def mark(self, x, y, k, label: str | None):
        self.circle(self.marks, x, y, 3.2, fill=PALETTE[k % len(PALETTE)], data_k=k, **{"class": "mark"})
        if label is None:
            return
        # points shared by several codewords stack their labels
        key = (round(x), round(y))
        n = self._used.get(key, 0)
        self._used[key] = n + 1
        t = ET.SubElement(self.labels, "text", {"x": f"{x + 4:.3f}", "y": f"{y - 4 + 10 * n:.3f}",
                                               "fill": PALETTE[k % len(PALETTE)], "class": "label"})
        t.text = label

    def polyline(self, pts):
        if len(pts) >= 2:
            ET.SubElement(self.edges, "polyline", {"points": " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)})

    def text(self) -> str:
        return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(self.root, encoding="unicode")


def _triangle_edges(code: CodeConstruction, radius: float | None, samples: int = 24) -> list[np.ndarray]:
    """Sampled geodesic edges of the tiles whose label point lies within ``radius``."""
    enum = code.enumeration
    tri = code.spec.triangle
    V = np.array([tri.A.X, tri.B.X, tri.C.X])
    keep = np.ones(len(enum), dtype=bool)
    if radius is not None and code.kind is not SurfaceKind.SPHERE:
        keep = distance_coords(code.kind, enum.ref_images, SurfacePoint.origin(code.kind).X) <= radius
    imgs = _project(code.kind, np.einsum("nij,vj->nvi", enum.M[keep], V))
    seen = set()
    out = []
    t = np.linspace(0.0, 1.0, samples)[:, None]
    for tile in imgs:
        for i, j in ((0, 1), (1, 2), (2, 0)):
            p, q = tile[i], tile[j]
            key = tuple(sorted([tuple(np.round(p, 6)), tuple(np.round(q, 6))]))
            if key in seen:
                continue
            seen.add(key)
            # straight chord in the embedding, projected back: a geodesic on
            # all three surfaces
            out.append(_project(code.kind, (1 - t) * p + t * q))
    return out


def _amp_labels(code: CodeConstruction):
    ref = float(np.max(np.abs(code.amps)))
    return lambda a: format_amplitude(a, code.dim, ref)


def _render_sphere(code: CodeConstruction, opts: dict) -> str:
    s = opts["size"]
    cv = _Canvas(s, 2 * s)
    R = 0.45 * s
    centres = ((0.5 * s, 0.5 * s, 1.0), (1.5 * s, 0.5 * s, -1.0))
    for cx, cy, _ in centres:
        cv.circle(cv.edges, cx, cy, R, stroke="#333")

    def to_xy(X, side):
        cx, cy, sgn = centres[side]
        # view from +z on the left, from -z (mirror x) on the right
        return cx + sgn * X[0] * R, cy - X[1] * R

    if opts["edges"]:
        for e in _triangle_edges(code, None):
            for side, sgn in ((0, 1.0), (1, -1.0)):
                seg = [to_xy(X, side) for X in e if sgn * X[2] >= -1e-9]
                cv.polyline(seg)
    lab = _amp_labels(code)
    for k in range(code.dim):
        c = code.codeword(k)
        for X, a in zip(c.X, c.amp):
            side = 0 if X[2] >= 0 else 1
            x, y = to_xy(X, side)
            cv.mark(x, y, k, lab(a) if opts["labels"] else None)
    return cv.text()


def _render_euclid(code: CodeConstruction, opts: dict) -> str:
    from .kl import lattice_cell, translation_lattice
    s = opts["size"]
    cv = _Canvas(s)
    lat = translation_lattice(code)
    cells = opts["cells"]
    if cells:
        cell = lattice_cell(code, lat)
        base = code.X[cell]
        shifts = [i * lat.basis[0] + j * lat.basis[1] for i in range(cells) for j in range(cells)]
        pts = [(base[:, :2] + sh, code.amps[cell]) for sh in shifts]
        P = np.vstack([p for p, _ in pts])
        A = np.vstack([a for _, a in pts])
    else:
        r = opts["radius"] or min(code.safe_radius, 6.0)
        inner = code.radii <= r
        P, A = code.X[inner, :2], code.amps[inner]
    ext = max(1.0, float(np.max(np.abs(P))), float(np.max(np.abs(lat.basis)))) * 1.15
    scale = 0.5 * s / ext

    def to_xy(x, y):
        return 0.5 * s + x * scale, 0.5 * s - y * scale

    if opts["edges"]:
        for e in _triangle_edges(code, ext * 1.5, samples=2):
            if np.all(np.abs(e[:, :2]) <= ext):
                cv.polyline([to_xy(*X[:2]) for X in e])
    vec = ET.SubElement(cv.root, "g", {"class": "lattice", "stroke": "#000", "stroke-width": "1.5"})
    for b in lat.basis:
        x0, y0 = to_xy(0.0, 0.0)
        x1, y1 = to_xy(*b)
        ET.SubElement(vec, "line", {"x1": f"{x0:.2f}", "y1": f"{y0:.2f}", "x2": f"{x1:.2f}", "y2": f"{y1:.2f}"})
    lab = _amp_labels(code)
    for k in range(code.dim):
        on = np.abs(A[:, k]) > 0
        for (x, y), a in zip(P[on], A[on, k]):
            X, Y = to_xy(x, y)
            cv.mark(X, Y, k, lab(a) if opts["labels"] else None)
    return cv.text()


def _disk(X: np.ndarray) -> np.ndarray:
    return X[..., 1:] / (1.0 + X[..., 0:1])


def _arc_path(p, q, to_xy) -> str:
    """Geodesic between disk points p and q: an arc of the circle through p,
    q and the inverse of p."""
    x0, y0 = to_xy(*p)
    x1, y1 = to_xy(*q)
    cross = p[0] * q[1] - p[1] * q[0]
    if abs(cross) < 1e-9:
        return f"M {x0:.2f} {y0:.2f} L {x1:.2f} {y1:.2f}"
    # centre c solves |c|^2 = r^2 + 1 and |c - p| = |c - q| = r
    a = np.array([[p[0], p[1]], [q[0], q[1]]])
    b = 0.5 * np.array([p @ p + 1.0, q @ q + 1.0])
    c = np.linalg.solve(a, b)
    r = float(np.sqrt(c @ c - 1.0))
    scale = abs(to_xy(1.0, 0.0)[0] - to_xy(0.0, 0.0)[0])
    # counter-clockwise about c in the disk is clockwise on screen (y down)
    turn = (p[0] - c[0]) * (q[1] - c[1]) - (p[1] - c[1]) * (q[0] - c[0])
    sweep = 1 if turn > 0 else 0
    return f"M {x0:.2f} {y0:.2f} A {r * scale:.2f} {r * scale:.2f} 0 0 {sweep} {x1:.2f} {y1:.2f}"


def _render_hyperbolic(code: CodeConstruction, opts: dict) -> str:
    s = opts["size"]
    cv = _Canvas(s)
    R = 0.47 * s

    def to_xy(u, v):
        return 0.5 * s + u * R, 0.5 * s - v * R

    cv.circle(cv.edges, 0.5 * s, 0.5 * s, R, stroke="#333")
    radius = opts["radius"] or min(code.safe_radius, 5.0)
    if opts["edges"]:
        for e in _triangle_edges(code, radius, samples=2):
            p, q = _disk(e[0]), _disk(e[-1])
            ET.SubElement(cv.edges, "path", {"d": _arc_path(p, q, to_xy)})
    lab = _amp_labels(code)
    inner = code.radii <= radius
    for k in range(code.dim):
        on = inner & (np.abs(code.amps[:, k]) > 0)
        for X, a in zip(code.X[on], code.amps[on, k]):
            u, v = _disk(X)
            cv.mark(*to_xy(u, v), k, lab(a) if opts["labels"] else None)
    return cv.text()


def render_svg(code: CodeConstruction, options: dict | None = None) -> str:
    opts = dict(DEFAULTS)
    opts.update({k: v for k, v in (options or {}).items() if v is not None})
    unknown = set(opts) - set(DEFAULTS)
    if unknown:
        raise ValueError(f"unknown render option(s): {', '.join(sorted(unknown))}")
    if code.kind is SurfaceKind.SPHERE:
        return _render_sphere(code, opts)
    if code.kind is SurfaceKind.EUCLIDEAN:
        return _render_euclid(code, opts)
    return _render_hyperbolic(code, opts)
