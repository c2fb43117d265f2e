"""Built-in codes with expected values, and GKP views of the flat codes."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .codespec import CodeSpec, SpecError, eval_expr
from .document import doc_to_spec, dump_document, parse_document, spec_to_doc
from .encoder import CodeConstruction, build_codewords
from .groups import cluster_points

CATALOG_ENV = "TESSELLATION_CODES_CATALOG"
BUILTIN_NAMES = ("224-cube", "244-square", "333-honeycomb", "555-qudit", "648-clifford", "435-icosahedral",
                 "224-flat", "224-optimal")
TABLE_CODES = BUILTIN_NAMES[:6]


@dataclass
class CatalogEntry:
    name: str
    spec: CodeSpec
    render: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)

    @property
    def expected_resolution(self) -> tuple[float, float, str]:
        r = self.expected["resolution"]
        return eval_expr(r["value"]), float(r["tolerance"]), r["source"]

    @property
    def expected_order(self) -> tuple[int, str]:
        o = self.expected["order"]
        return int(o["value"]), o["source"]

    @property
    def printed_relations(self) -> tuple[str, ...]:
        out = []
        for item in self.expected.get("printed_relations", []):
            out.extend(item["words"])
        return tuple(out)

    def document(self) -> dict:
        return spec_to_doc(self.spec, self.render, self.expected)

    def to_text(self) -> str:
        return dump_document(self.document())

    @classmethod
    def from_text(cls, text: str) -> "CatalogEntry":
        spec, render, expected = doc_to_spec(parse_document(text))
        return cls(spec.name, spec, render, expected)


def catalog_dir() -> Path:
    env = os.environ.get(CATALOG_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("tessellation_codes") / "data"))


def _path_for(name: str, directory: Path | None) -> Path:
    d = directory or catalog_dir()
    p = d / f"{name}.yaml"
    if not p.exists():
        p = Path(str(resources.files("tessellation_codes") / "data" / f"{name}.yaml"))
    if not p.exists():
        raise SpecError(f"no catalog entry named {name!r}")
    return p


def load_entry(name: str, directory: Path | None = None) -> CatalogEntry:
    text = _path_for(name, directory).read_text()
    if yaml.safe_load(text).get("stub"):
        raise SpecError(f"catalog entry {name!r} is a stub without enumeration support")
    return CatalogEntry.from_text(text)


def builtin_codes(directory: Path | None = None) -> list[CatalogEntry]:
    """The six table codes followed by the flat and optimal {2,2,4} seeds."""
    return [load_entry(n, directory) for n in BUILTIN_NAMES]


def stubs(directory: Path | None = None) -> list[dict]:
    d = directory or catalog_dir()
    out = []
    for p in sorted(d.glob("*.yaml")):
        doc = yaml.safe_load(p.read_text())
        if isinstance(doc, dict) and doc.get("stub"):
            out.append(doc)
    return out


def list_names(directory: Path | None = None) -> list[str]:
    d = directory or catalog_dir()
    return sorted(p.stem for p in d.glob("*.yaml"))


def resolve_code(ref: str) -> CatalogEntry:
    """``catalog:NAME`` or a path to a code document."""
    if ref.startswith("catalog:"):
        return load_entry(ref.split(":", 1)[1])
    p = Path(ref)
    if not p.exists():
        raise SpecError(f"no such code document: {ref}")
    return CatalogEntry.from_text(p.read_text())


# GKP views

@dataclass
class GKPCheck:
    name: str
    deviation: float
    eigenvalue: complex
    passed: bool
    detail: str = ""


@dataclass
class GKPReport:
    code: str
    checks: list[GKPCheck]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {"code": self.code, "ok": self.ok,
                "checks": [{"name": c.name, "deviation": c.deviation, "eigenvalue": [c.eigenvalue.real, c.eigenvalue.imag],
                            "passed": c.passed, "detail": c.detail} for c in self.checks]}


def _plane(xy: np.ndarray) -> np.ndarray:
    return np.column_stack([xy, np.ones(len(xy))])


class _View:
    """Pointwise operator checks on the interior of a Euclidean code."""

    def __init__(self, code: CodeConstruction, tol: float = 1e-8):
        self.code = code
        self.tol = tol
        self.support = code.X[np.any(np.abs(code.amps) > 0, axis=1), :2]
        self.scale = float(np.max(np.abs(code.amps)))

    def region(self, t) -> np.ndarray:
        r_in = self.code.safe_radius - math.hypot(*t) - 1e-6
        pts = np.vstack([self.support, self.support + np.asarray(t)])
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= r_in]
        lab = cluster_points(pts, 1e-7)
        return pts[lab == np.arange(len(pts))]

    def compare(self, name: str, out: np.ndarray, target: np.ndarray, expect: complex | None) -> GKPCheck:
        """``out`` should equal lambda * ``target`` with |lambda| = 1."""
        norm = np.vdot(target, target).real
        lam = np.vdot(target, out) / norm if norm > 0 else 0.0
        ref = lam if expect is None else expect
        dev = float(np.max(np.abs(out - ref * target))) / self.scale
        dev = max(dev, abs(abs(lam) - 1.0))
        ok = dev < self.tol and (expect is None or abs(lam - expect) < self.tol)
        return GKPCheck(name, dev, complex(lam), bool(ok))

    def translation(self, name: str, t, sign: complex, k: int, target_k: int, expect: complex | None = 1.0) -> GKPCheck:
        Y = self.region(t)
        out = sign * self.code.amplitudes_at(_plane(Y - np.asarray(t)))[:, k]
        target = self.code.amplitudes_at(_plane(Y))[:, target_k]
        return self.compare(name, out, target, expect)

    def phase(self, name: str, f, k: int, expect: complex | None = 1.0) -> GKPCheck:
        Y = self.region((0.0, 0.0))
        a = self.code.amplitudes_at(_plane(Y))[:, k]
        ph = f(Y[:, 0], Y[:, 1])
        on = np.abs(a) > 0
        if np.any(np.abs(np.abs(ph[on]) - 1.0) > 1e-9):
            return GKPCheck(name, 1.0, 0j, False, "profile not unimodular on the support")
        return self.compare(name, ph * a, a, expect)


def gkp_view_244(code: CodeConstruction | None = None, tol: float = 1e-8) -> GKPReport:
    """Two-mode GKP reading of the {2,4,4} code: lattice periods, the
    stabiliser -X_x X_y, logical X as a shift by 2, logical Z as
    (sqrt2 sin(pi x/2)) (sqrt2 sin(pi y/2))."""
    code = code or build_codewords(load_entry("244-square").spec)
    if code.spec.pqr != (2, 4, 4):
        raise SpecError("gkp_view_244 needs a {2,4,4} code")
    v = _View(code, tol)
    checks = []
    for k in range(2):
        checks.append(v.translation(f"identity |{k}>", (0.0, 0.0), 1.0, k, k))
        checks.append(v.translation(f"T(4,0) |{k}>", (4.0, 0.0), 1.0, k, k))
        checks.append(v.translation(f"T(0,4) |{k}>", (0.0, 4.0), 1.0, k, k))
        checks.append(v.translation(f"S = -T(2,2) |{k}>", (2.0, 2.0), -1.0, k, k))
        checks.append(v.phase(f"S_q(x) |{k}>", lambda x, y: np.exp(2j * np.pi * (x - 0.5)), k))
        checks.append(v.phase(f"S_q(y) |{k}>", lambda x, y: np.exp(2j * np.pi * (y - 0.5)), k))
        checks.append(v.translation(f"L_X = T(0,2) |{k}>", (0.0, 2.0), 1.0, k, 1 - k))
        checks.append(v.translation(f"L_X = -T(2,0) |{k}>", (2.0, 0.0), -1.0, k, 1 - k))
        checks.append(v.phase(f"L_Z |{k}>", lambda x, y: 2 * np.sin(np.pi * x / 2) * np.sin(np.pi * y / 2), k,
                              1.0 if k == 0 else -1.0))
    # the two logical X forms agree, and they square to the identity
    xs = [c for c in checks if c.name.startswith("L_X = T")]
    xm = [c for c in checks if c.name.startswith("L_X = -T")]
    agree = max(abs(a.eigenvalue - b.eigenvalue) for a, b in zip(xs, xm))
    square = abs(xs[0].eigenvalue * xs[1].eigenvalue - 1.0)
    checks.append(GKPCheck("L_X forms agree", float(agree), 1.0 + 0j, agree < tol))
    checks.append(GKPCheck("L_X^2 = 1", float(square), xs[0].eigenvalue * xs[1].eigenvalue, square < tol))
    return GKPReport(code.spec.name, checks)


def gkp_view_333(code: CodeConstruction | None = None, tol: float = 1e-8) -> GKPReport:
    """GKP-like stabilisers of the {3,3,3} code and the diagonal logical Z
    phase e^{i 4 pi y / (3 sqrt3)}.  A displacement form of logical X is not
    searched for."""
    code = code or build_codewords(load_entry("333-honeycomb").spec)
    if code.spec.pqr != (3, 3, 3):
        raise SpecError("gkp_view_333 needs a {3,3,3} code")
    s3 = math.sqrt(3.0)
    v = _View(code, tol)
    checks = []
    eig = []
    for k in range(3):
        checks.append(v.translation(f"identity |{k}>", (0.0, 0.0), 1.0, k, k))
        checks.append(v.translation(f"S_p1 = T(0,3sqrt3) |{k}>", (0.0, 3 * s3), 1.0, k, k))
        checks.append(v.translation(f"S_p2 = T(9/2,3sqrt3/2) |{k}>", (4.5, 1.5 * s3), 1.0, k, k))
        checks.append(v.phase(f"S_q1 |{k}>", lambda x, y: np.exp(1j * 4 * np.pi / s3 * y), k))
        checks.append(v.phase(f"S_q2 |{k}>", lambda x, y: np.exp(1j * (2 * np.pi / 3 * (x - 1) + 2 * np.pi / s3 * y)), k))
        c = v.phase(f"L_Z |{k}>", lambda x, y: np.exp(1j * 4 * np.pi / (3 * s3) * y), k, None)
        root = abs(c.eigenvalue**3 - 1.0)
        c.passed = c.passed and root < tol
        c.detail = "cube root of unity" if root < tol else "eigenvalue is not a cube root of unity"
        checks.append(c)
        eig.append(c.eigenvalue)
    spread = min(abs(eig[i] - eig[j]) for i in range(3) for j in range(i + 1, 3))
    checks.append(GKPCheck("L_Z eigenvalues distinct", float(spread), 1.0 + 0j, spread > 1.0))
    checks.append(GKPCheck("logical X by displacement", 0.0, 0j, True, "not searched"))
    return GKPReport(code.spec.name, checks)
