import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tessellation_codes.catalog import BUILTIN_NAMES
from tessellation_codes.encoder import TruncationError, build_codewords, inner_product, verify_logical_action
from tessellation_codes.geometry import Isometry, _project, SurfaceKind, SurfacePoint, polar_embedding, rotation_about
from tessellation_codes.groups import GroupElement, enumerate_ball, generator_elements, quotient_check

W3 = np.exp(2j * np.pi / 3)


def formula_check(code, k, pts, coeffs):
    """Amplitudes at ``pts`` equal ``coeffs`` times one global factor, and
    the support of codeword k inside the checked region is exactly ``pts``."""
    a = code.amplitudes_at(pts)[:, k]
    lam = a[0] / coeffs[0]
    assert abs(lam) > 0
    assert np.max(np.abs(a - lam * coeffs)) < 1e-9 * abs(lam)


def sphere_formula(t0, p0):
    e = lambda t, p: polar_embedding(SurfaceKind.SPHERE, t, p)
    c0 = [e(t0, p0), e(math.pi - t0, -p0), e(t0, math.pi + p0), e(math.pi - t0, math.pi - p0)]
    c1 = [e(t0, p0 + math.pi / 2), e(math.pi - t0, -p0 + math.pi / 2), e(t0, p0 - math.pi / 2),
          e(math.pi - t0, -math.pi / 2 - p0)]
    s = np.array([1, 1, -1, -1], dtype=complex)
    return (np.array(c0), s), (np.array(c1), s)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_generator_covariance(name, entries, codes):
    spec = entries[name].spec
    code = codes(name)
    for g, el in generator_elements(spec).items():
        rep = verify_logical_action(code, el)
        assert rep.error < 1e-8, (g, rep.error)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_gram_proportional_to_identity(name, codes):
    G = codes(name).gram()
    assert np.max(np.abs(G - G[0, 0] * np.eye(len(G)))) < 1e-9 * abs(G[0, 0])
    assert G[0, 0].real > 0


def test_cube_listing(codes):
    code = codes("224-cube")
    for k, (pts, s) in enumerate(sphere_formula(math.acos(1 / math.sqrt(3)), math.pi / 4)):
        formula_check(code, k, pts, s)
        assert len(code.codeword(k)) == 4


@settings(max_examples=30, deadline=None)
@given(t0=st.floats(0.2, 1.35), p0=st.floats(0.05, 0.75))
def test_sphere_general_seed_matches_formula(entries, t0, p0):
    spec = entries["224-cube"].spec.with_seed((repr(t0), repr(p0)))
    code = build_codewords(spec)
    for k, (pts, s) in enumerate(sphere_formula(t0, p0)):
        formula_check(code, k, pts, s)
    G = code.gram()
    assert abs(G[0, 1]) < 1e-12 and abs(G[0, 0] - G[1, 1]) < 1e-12


def flat_formula(x0, y0, k, cells=2):
    if k == 0:
        base = [(x0, y0, 1), (2 - y0, x0, 1), (y0, 2 - x0, 1), (2 - x0, 2 - y0, 1),
                (-x0, -y0, -1), (-2 + y0, -x0, -1), (-y0, -2 + x0, -1), (-2 + x0, -2 + y0, -1)]
    else:
        base = [(x0, y0 - 2, 1), (2 - y0, x0 - 2, 1), (y0, -x0, 1), (2 - x0, -y0, 1),
                (-x0, -y0 + 2, -1), (-2 + y0, -x0 + 2, -1), (-y0, x0, -1), (-2 + x0, y0, -1)]
    out = [(x + 4 * m, y + 4 * n, s) for m in range(-cells, cells + 1) for n in range(-cells, cells + 1)
           for x, y, s in base]
    P = np.array(out)
    return np.column_stack([P[:, :2], np.ones(len(P))]), P[:, 2].astype(complex)


@pytest.mark.parametrize("seed", [(0.5, 0.5), (0.3, 0.7), (0.9, 0.15)])
def test_square_lattice_matches_formula(entries, seed):
    spec = entries["244-square"].spec.with_seed(tuple(map(repr, seed)))
    code = build_codewords(spec)
    for k in range(2):
        pts, s = flat_formula(*seed, k)
        inner = np.hypot(pts[:, 0], pts[:, 1]) < code.safe_radius - 1.0
        formula_check(code, k, pts[inner], s[inner])
        sup = (np.abs(code.amps[:, k]) > 0) & (code.radii < code.safe_radius - 1.0)
        # count distinct formula points: coincident points merge only for special seeds
        assert sup.sum() == len(np.unique(np.round(pts[inner, :2], 9), axis=0))


def test_honeycomb_listing_is_conjugate(codes):
    """The stored amplitudes are the complex conjugates of the printed
    listing; both conventions give the same code up to relabelling
    w <-> w^2."""
    code = codes("333-honeycomb")
    s3 = math.sqrt(3)
    listing = [
        [(1, 0), (-0.5, 1.5 * s3), (-2, 0)],
        [(1, s3), (-0.5, -0.5 * s3), (2.5, -0.5 * s3)],
        [(-0.5, 0.5 * s3), (-2, -s3), (1, -s3)],
    ]
    coeffs = np.array([1, W3, W3 * W3])
    for k, pts in enumerate(listing):
        P = np.array([[x, y, 1.0] for x, y in pts])
        v1, v2 = np.array([0, 3 * s3]), np.array([4.5, 1.5 * s3])
        for m in range(-1, 2):
            for n in range(-1, 2):
                Q = P.copy()
                Q[:, :2] += m * v1 + n * v2
                inside = np.hypot(Q[:, 0], Q[:, 1]) < code.safe_radius - 0.5
                if inside.any():
                    formula_check(code, k, Q[inside], np.conj(coeffs)[inside])
        assert np.max(np.abs(code.amplitudes_at(P)[:, k] - code.amplitudes_at(P)[0, k] * coeffs)) > 0.5


def test_x_axis_half_turn_is_logical_z(codes):
    code = codes("224-cube")
    g = rotation_about(SurfacePoint(SurfaceKind.SPHERE, [1.0, 0, 0]), math.pi)
    M = code.action_matrix(g.M)
    Z = np.diag([1.0, -1.0])
    ph = np.vdot(Z, M) / 2
    assert abs(abs(ph) - 1) < 1e-12 and np.max(np.abs(M - ph * Z)) < 1e-12


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_identity_acts_trivially(name, codes):
    code = codes(name)
    I = np.eye(code.dim)
    el = GroupElement((), Isometry(code.kind, np.eye(3)), I)
    rep = verify_logical_action(code, el)
    assert rep.exact_error < 1e-12


@pytest.mark.parametrize("name", ["244-square", "333-honeycomb", "555-qudit", "648-clifford"])
def test_kernel_elements_are_symmetries(name, entries, codes):
    code = codes(name)
    enum = code.enumeration
    kern = sorted(enum.kernel_indices(), key=lambda i: len(enum.words[i]))[:10]
    assert kern
    if code.kind is SurfaceKind.EUCLIDEAN:
        for i in kern:
            assert code.periodicity_defect(enum.M[i]) < 1e-9
        return
    # hyperbolic kernel elements move far; compare y and g y where both are safe
    sup = (np.abs(code.amps).sum(axis=1) > 0) & (code.radii <= code.safe_radius)
    Y = code.X[sup]
    checked = 0
    for i in kern:
        gY = _project(code.kind, Y @ enum.M[i].T)
        ok = np.arccosh(np.maximum(gY[:, 0], 1.0)) <= code.safe_radius
        if ok.any():
            d = np.abs(code.amplitudes_at(gY[ok]) - code.amps[sup][ok])
            assert np.max(d) < 1e-9
            checked += int(ok.sum())
    assert checked > 0



def test_codewords_orthogonal_on_support(codes):
    c0, c1 = codes("224-cube").codewords()
    assert abs(inner_product(c0, c1)) < 1e-12
    assert inner_product(c0, c0).real > 0


def test_export_text(codes):
    code = codes("224-cube")
    lines = code.export_text().splitlines()
    assert lines[0].startswith("#") and len(lines) == 9
    kind, *rest = lines[1].split()
    assert kind == "sphere" and len(rest) == 6


def test_short_truncation_detected(entries):
    spec = entries["333-honeycomb"].spec.with_truncation(radius=1.0)
    with pytest.raises(TruncationError):
        build_codewords(spec)


def test_quotient_needed_for_orbits(entries):
    # logical image order over stabiliser order gives the expected orbit count
    spec = entries["555-qudit"].spec
    code = build_codewords(spec)
    order = quotient_check(spec, code.enumeration).image_order
    assert code.expected_classes * code.stabilizer_order == order or code.expected_classes == order
    assert len(code.transversal) == code.expected_classes
    assert enumerate_ball(spec, max_word_length=2).saturated is False
