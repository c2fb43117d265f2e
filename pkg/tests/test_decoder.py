import math

import numpy as np
import pytest

from tessellation_codes.catalog import BUILTIN_NAMES
from tessellation_codes.decoder import (DegeneratePair, Decoder, NoiseModel, decompose, default_noise,
                                        inverse_stack, log_density, monte_carlo, sample_noise,
                                        solve_isometry_from_pairs, translation)
from tessellation_codes.geometry import (SurfaceKind, SurfacePoint, _project, compose, distance_coords,
                                         inverse_matrix, isometry_defect, rotation_about)
from tessellation_codes.groups import generator_elements
from tessellation_codes.resolution import resolution

KINDS = list(SurfaceKind)


def random_point(kind, rng, dmax=2.5):
    top = min(dmax, math.pi - 0.05) if kind is SurfaceKind.SPHERE else dmax
    return SurfacePoint.polar(kind, rng.uniform(0, top), rng.uniform(-math.pi, math.pi))


def random_isometry(kind, rng):
    return compose(rotation_about(random_point(kind, rng, 1.5), rng.uniform(-math.pi, math.pi)),
                   rotation_about(random_point(kind, rng, 1.5), rng.uniform(-math.pi, math.pi)))


@pytest.fixture(scope="module")
def decoders(codes):
    cache = {}

    def get(name):
        if name not in cache:
            code = codes(name)
            dec = Decoder(code)
            cache[name] = (dec, resolution(code.spec, code, scan=False).d_x)
        return cache[name]
    return get


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip_1000(kind):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        g = random_isometry(kind, rng)
        a1, a2 = random_point(kind, rng), random_point(kind, rng)
        h = solve_isometry_from_pairs(a1, a2, SurfacePoint(kind, _project(kind, g.M @ a1.X)),
                                      SurfacePoint(kind, _project(kind, g.M @ a2.X)))
        worst = max(worst, float(np.max(np.abs(h.M - g.M))) / max(1.0, float(np.max(np.abs(g.M)))))
    assert worst < 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_identical_pairs_give_identity(kind):
    rng = np.random.default_rng(1)
    a1, a2 = random_point(kind, rng), random_point(kind, rng)
    h = solve_isometry_from_pairs(a1, a2, a1, a2)
    assert np.allclose(h.M, np.eye(3), atol=1e-12)


def test_distance_mismatch_returns_none():
    k = SurfaceKind.EUCLIDEAN
    a1, a2 = SurfacePoint(k, [0, 0, 1]), SurfacePoint(k, [1, 0, 1])
    assert solve_isometry_from_pairs(a1, a2, a1, SurfacePoint(k, [2, 0, 1])) is None


@pytest.mark.parametrize("kind", KINDS)
def test_coincident_pair_is_degenerate(kind):
    a = random_point(kind, np.random.default_rng(2))
    with pytest.raises(DegeneratePair):
        solve_isometry_from_pairs(a, a, a, a)


def test_antipodal_pair_is_degenerate():
    k = SurfaceKind.SPHERE
    a1, a2 = SurfacePoint(k, [0, 0, 1.0]), SurfacePoint(k, [0, 0, -1.0])
    with pytest.raises(DegeneratePair):
        solve_isometry_from_pairs(a1, a2, a1, a2)


@pytest.mark.parametrize("kind", KINDS)
def test_zero_strength_noise_is_identity(kind):
    rng = np.random.default_rng(3)
    for _ in range(20):
        assert np.max(np.abs(sample_noise(NoiseModel(kind), rng).M - np.eye(3))) < 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_samples_are_isometries_and_deterministic(kind):
    model = NoiseModel(kind, 0.3, 20.0)
    a = [sample_noise(model, np.random.default_rng(5)).M for _ in range(2)]
    assert np.array_equal(a[0], a[1])
    rng = np.random.default_rng(6)
    for _ in range(50):
        M = sample_noise(model, rng).M
        assert isometry_defect(kind, M) < 1e-10
        assert np.linalg.det(M) > 0


def test_mean_rotation_angle_decreases_in_kappa():
    k = SurfaceKind.SPHERE
    means = []
    for kappa in (1.0, 4.0, 16.0, 64.0):
        rng = np.random.default_rng(11)
        M = np.array([sample_noise(NoiseModel(k, 0.0, kappa), rng).M for _ in range(10000)])
        _, alpha = decompose(k, M)
        means.append(float(np.mean(alpha)))
    assert all(b < a for a, b in zip(means, means[1:]))


@pytest.mark.parametrize("kind", [SurfaceKind.EUCLIDEAN, SurfaceKind.HYPERBOLIC])
def test_decompose_inverts_construction(kind):
    from tessellation_codes.decoder import _origin_rotation
    rng = np.random.default_rng(8)
    v = rng.normal(size=(50, 2))
    a = rng.uniform(-3, 3, size=50)
    M = np.array([translation(kind, vi) @ _origin_rotation(kind, ai) for vi, ai in zip(v, a)])
    v2, a2 = decompose(kind, M)
    assert np.allclose(v2, v, atol=1e-9)
    assert np.allclose(np.angle(np.exp(1j * (a2 - a))), 0, atol=1e-9)


def test_log_density_peaks_at_identity():
    model = NoiseModel(SurfaceKind.HYPERBOLIC, 0.2, 30.0)
    rng = np.random.default_rng(4)
    M = np.array([sample_noise(model, rng).M for _ in range(100)])
    assert np.all(log_density(model, M) <= log_density(model, np.eye(3)[None])[0] + 1e-12)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_zero_noise_rate_one(name, decoders):
    dec, _ = decoders(name)
    res = monte_carlo(dec, NoiseModel(dec.kind), 100, seed=2)
    assert res.rate == 1.0


@pytest.mark.parametrize("name", ["224-cube", "244-square", "333-honeycomb", "648-clifford"])
def test_noiseless_candidates_hold_identity_and_stabilisers(name, codes):
    code = codes(name)
    if code.kind is SurfaceKind.HYPERBOLIC:
        # kernel displacements exceed the default lattice margin; widen it
        dec = Decoder(code, window_radius=1.5, lattice_radius=code.safe_radius)
    else:
        dec = Decoder(code)
    rng = np.random.default_rng(9)
    meas = dec.measure(np.eye(3), rng)
    G = dec.candidate_set(meas)
    assert np.min(np.max(np.abs(G - np.eye(3)), axis=(1, 2))) < 1e-9
    enum = dec.code.enumeration
    idx = dec.L_index
    hits = 0
    for i in enum.kernel_indices():
        img = _project(dec.kind, np.einsum("ij,nj->ni", enum.M[i], meas))
        if np.all(idx.lookup(img) >= 0):
            scale = max(1.0, float(np.max(np.abs(enum.M[i]))))
            assert np.min(np.max(np.abs(G - enum.M[i]), axis=(1, 2))) < 1e-7 * scale
            hits += 1
    if dec.kind is not SurfaceKind.SPHERE:
        assert hits > 0


@pytest.mark.parametrize("name", ["224-cube", "244-square", "435-icosahedral"])
def test_true_inverse_error_is_a_candidate(name, decoders):
    dec, dx = decoders(name)
    model = default_noise(dec, dx)
    rng = np.random.default_rng(10)
    for _ in range(30):
        E = sample_noise(model, rng).M
        if dec.displacement(E) > 0.9 * dx:
            continue
        G = dec.candidate_set(dec.measure(E, rng))
        Einv = inverse_matrix(dec.kind, E)
        assert np.min(np.max(np.abs(G - Einv), axis=(1, 2))) < 1e-7


@pytest.mark.parametrize("name", ["224-cube", "244-square", "648-clifford"])
def test_logical_operator_error_is_recorded_as_failure(name, entries, decoders):
    dec, _ = decoders(name)
    g = generator_elements(entries[name].spec)["A"]
    out = dec.decode_error(g.geo.M, NoiseModel(dec.kind, 0.05, 400.0), np.random.default_rng(0))
    assert not out.success
    assert out.failure in ("wrong-coset", "not-a-symmetry", "empty-candidates")


@pytest.mark.parametrize("name", ["224-cube", "244-square", "555-qudit"])
def test_success_restores_constellation(name, decoders):
    dec, dx = decoders(name)
    code = dec.code
    res = monte_carlo(dec, default_noise(dec, dx), 20, seed=4, max_displacement=0.9 * dx)
    for o in res.outcomes:
        assert o.success
        R = inverse_matrix(dec.kind, o.chosen_error) @ o.error
        Y = _project(dec.kind, dec.W @ R.T)
        A0 = code.amplitudes_at(dec.W)
        A1 = code.amplitudes_at(Y)
        assert np.max(np.abs(A1 - A0)) < 1e-8
        assert np.max(distance_coords(dec.kind, Y, dec.W)) >= 0


def test_rate_monotone_in_sigma(decoders):
    dec, dx = decoders("244-square")
    base = default_noise(dec, dx)
    rates = []
    n = 300
    for f in (1.0, 2.0, 4.0, 6.0, 10.0):
        rates.append(monte_carlo(dec, base.scaled(f), n, seed=21).rate)
    for a, b in zip(rates, rates[1:]):
        sd = math.sqrt(max(a * (1 - a), b * (1 - b), 1.0 / n) / n)
        assert b <= a + 2 * math.sqrt(2) * sd, rates
    assert rates[-1] < rates[0]


def test_monte_carlo_deterministic(decoders):
    dec, dx = decoders("648-clifford")
    m = default_noise(dec, dx)
    a = monte_carlo(dec, m, 15, seed=5).to_table()
    b = monte_carlo(dec, m, 15, seed=5).to_table()
    assert a == b
    assert a.splitlines()[0] == "seed,trial,sigma_t,kappa,displacement,candidates,success,failure"


def test_monte_carlo_rejects_zero_trials(decoders):
    dec, _ = decoders("224-cube")
    with pytest.raises(ValueError):
        monte_carlo(dec, NoiseModel(dec.kind), 0)


def test_lattice_radius_precondition(codes):
    code = codes("244-square")
    with pytest.raises(ValueError):
        Decoder(code, lattice_radius=code.safe_radius + 1.0)


def test_inverse_stack_matches_inverse():
    rng = np.random.default_rng(12)
    for kind in KINDS:
        M = np.array([random_isometry(kind, rng).M for _ in range(5)])
        assert np.allclose(inverse_stack(kind, M) @ M, np.eye(3), atol=1e-9)
