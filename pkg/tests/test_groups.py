from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tessellation_codes.catalog import BUILTIN_NAMES, TABLE_CODES
from tessellation_codes.codespec import SpecError
from tessellation_codes.geometry import SurfaceKind, distance_coords
from tessellation_codes.groups import (GroupError, check_identifications, element_from_word, enumerate_ball,
                                       generator_elements, generator_isometries, quotient_check, reduce_letters,
                                       relation_residual, word_letters)


@pytest.fixture(scope="module")
def enums(entries):
    return {n: enumerate_ball(entries[n].spec) for n in TABLE_CODES}


@pytest.mark.parametrize("name", TABLE_CODES)
def test_image_orders(name, entries, enums):
    e = entries[name]
    rep = quotient_check(e.spec, enums[name], expected_order=e.expected_order[0])
    assert rep.image_order == e.expected_order[0]
    assert rep.surjective and rep.is_group and rep.relations_ok and rep.ok


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_identifications_consistent(name, entries):
    assert check_identifications(entries[name].spec) < 1e-9


@pytest.mark.parametrize("pqr", [(2, 2, 4), (2, 4, 4), (3, 3, 3), (5, 5, 5), (6, 4, 8), (4, 3, 5)])
@pytest.mark.parametrize("orientation", [1, -1])
def test_geometric_generator_relations(pqr, orientation):
    g = generator_isometries(*pqr, orientation=orientation)
    A, B, C = (g[k].M for k in "ABC")
    prod = A @ B @ C if orientation == 1 else B @ A @ C
    assert np.allclose(prod, np.eye(3), atol=1e-9)
    for M, n in zip((A, B, C), pqr):
        assert np.allclose(np.linalg.matrix_power(M, n), np.eye(3), atol=1e-9)


def test_sphere_enumeration_saturates(enums):
    e = enums["224-cube"]
    assert e.saturated
    # the rotation group of the {2,2,4} tiling has order 2*2*4 / (1/2+1/2+1/4 - 1) = 8
    assert len(e) == 8


def test_unsaturated_sphere_raises(entries):
    spec = entries["224-cube"].spec.with_truncation(max_word_length=1)
    with pytest.raises(GroupError):
        enumerate_ball(spec)


@pytest.mark.parametrize("name", ["244-square", "333-honeycomb", "648-clifford"])
def test_plane_enumeration_is_distinct_and_bounded(name, enums):
    e = enums[name]
    Y = e.ref_images
    D = distance_coords(e.kind, Y[:, None, :], Y[None, :200, :])
    D[np.arange(min(200, len(Y))), np.arange(min(200, len(Y)))] = np.inf
    assert np.min(D) > 1e-6
    r = distance_coords(e.kind, Y, np.array([1.0, 0, 0]) if e.kind is SurfaceKind.HYPERBOLIC else np.array([0, 0, 1.0]))
    assert np.max(r) <= e.radius + 3.0


@pytest.mark.parametrize("name", ["244-square", "333-honeycomb", "648-clifford"])
def test_enumeration_find(name, enums):
    e = enums[name]
    rng = np.random.default_rng(3)
    for i in rng.choice(len(e), 20, replace=False):
        assert e.find(e.M[i]) == i


@pytest.mark.parametrize("name", TABLE_CODES)
@settings(max_examples=25, deadline=None)
@given(word=st.lists(st.sampled_from("AaBb"), min_size=0, max_size=8))
def test_word_map_is_a_homomorphism(name, word, entries):
    spec = entries[name].spec
    gens = generator_elements(spec)
    M = np.eye(3)
    L = np.eye(spec.dim, dtype=complex)
    for c in word:
        g = gens[c.upper()]
        if c.islower():
            g = g.inverse()
        M = M @ g.geo.M
        L = L @ g.logi
    el = element_from_word(spec, list(word))
    assert np.allclose(el.geo.M, M, atol=1e-8 * max(1.0, np.max(np.abs(M))))
    assert np.allclose(el.logi, L, atol=1e-10)


def test_letter_expansion_and_reduction():
    assert word_letters("C", 1) == ("b", "a")
    assert word_letters("C", -1) == ("a", "b")
    assert word_letters("C^-1", 1) == ("A", "B")
    assert reduce_letters(("A", "B", "b", "a", "B")) == ("B",)


@pytest.mark.parametrize("name", TABLE_CODES)
def test_declared_relations_hold(name, entries):
    spec = entries[name].spec
    for w in spec.relations:
        res, _ = relation_residual(spec, w)
        assert res < 1e-9, w


def test_bad_identifications_rejected(entries):
    spec = entries["224-cube"].spec
    bad = replace(spec, identifications=(("A", "Z"), ("B", "X"), ("C", "Z")))
    with pytest.raises(SpecError):
        check_identifications(bad)


def test_strict_relation_failure(entries):
    spec = replace(entries["244-square"].spec, relations=("A",))
    with pytest.raises(SpecError):
        quotient_check(spec, enumerate_ball(spec.with_truncation(4.0)))


def test_kernel_words_are_logically_trivial(entries, enums):
    spec = entries["244-square"].spec
    rep = quotient_check(spec, enums["244-square"])
    assert rep.kernel_words
    for w in rep.kernel_words:
        el = element_from_word(spec, w)
        assert np.allclose(el.logi, np.eye(2), atol=1e-12)
        assert not np.allclose(el.geo.M, np.eye(3), atol=1e-9)


def test_icosahedral_printed_relation(entries):
    """The relation printed for the {4,3,5} code does not hold under the
    package conventions; the form with A and B swapped holds because A^2 is
    central (-I)."""
    e = entries["435-icosahedral"]
    printed = e.printed_relations[0]
    res, _ = relation_residual(e.spec, printed)
    assert res > 1.0
    swapped, _ = relation_residual(e.spec, "A^2 B A^2 B^-1")
    assert swapped < 1e-12
    A2 = element_from_word(e.spec, "A^2").logi
    assert np.allclose(A2, -np.eye(2))


def test_hyperbolic_generator_orders_logically(entries):
    spec = entries["648-clifford"].spec
    g = generator_elements(spec)
    for k, n in zip("ABC", spec.pqr):
        P = np.linalg.matrix_power(g[k].logi, n)
        assert np.allclose(P, np.eye(2), atol=1e-12)
